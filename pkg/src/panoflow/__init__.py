"""360-degree optical flow for equirectangular panoramas via gnomonic
tangent images and global rotation pre-alignment."""

__version__ = "0.1.0"

from .backend import BackendConfig, estimate_flow
from .errors import PanoflowError
from .pipeline import PipelineConfig, run

__all__ = ["BackendConfig", "PanoflowError", "PipelineConfig", "estimate_flow", "run", "__version__"]
