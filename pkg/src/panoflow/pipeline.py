"""Three-stage 360 flow: ERP flow -> rotation, cubemap flow -> residual
rotation, icosahedron flow -> backward un-rotation.

Each stage can be switched off for ablations; when the icosahedron stage is
off, the final flow comes from a cubemap stitch against the fully aligned
target.
"""
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import metrics
from .align import align_target, estimate_rotation, unrotate_flow
from .backend import BackendConfig, make_backend
from .erp import check_erp
from .errors import ConfigError, DimensionError, StageError
from .flow360 import from_raster_flow
from .sphere import angle_of, rotvec
from .stitch import stitch_layout
from .tangent import make_layout

STAGES = ("erp", "cube", "ico")
ARMS = {
    "full": {},
    "w/o weight": {"use_blend_weights": False},
    "w/o ERP": {"stages": ("cube", "ico")},
    "w/o cubemap": {"stages": ("erp", "ico")},
    "w/o ico": {"stages": ("erp", "cube")},
}


@dataclass(frozen=True)
class PipelineConfig:
    stages: tuple = STAGES
    use_blend_weights: bool = True
    padding_cube: float = 0.25
    padding_ico: float = 0.5
    res_cube: int = None
    res_ico: int = None
    backend: str = "builtin"
    backend_cfg: BackendConfig = field(default_factory=BackendConfig)
    rotation_stride: int = 4

    def __post_init__(self):
        stages = tuple(s for s in STAGES if s in set(self.stages))
        if set(self.stages) - set(STAGES):
            raise ConfigError(f"unknown stages {sorted(set(self.stages) - set(STAGES))}")
        if not stages:
            raise ConfigError("at least one stage is required")
        if stages == ("erp",):
            raise ConfigError("the final flow needs a tangent stage (cube or ico)")
        object.__setattr__(self, "stages", stages)
        for p in (self.padding_cube, self.padding_ico):
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"padding must lie in [0, 1], got {p}")
        if self.rotation_stride < 1:
            raise ConfigError("rotation_stride must be >= 1")

    def to_dict(self):
        d = asdict(self)
        d["stages"] = list(self.stages)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "backend_cfg" in d and isinstance(d["backend_cfg"], dict):
            d["backend_cfg"] = BackendConfig(**d["backend_cfg"])
        if "stages" in d:
            d["stages"] = tuple(d["stages"])
        return cls(**d)


@dataclass
class PipelineReport:
    R_bar: np.ndarray
    R_hat: np.ndarray
    residuals: dict
    timings: dict
    config: dict

    def to_dict(self):
        return {
            "R_bar_rotvec": rotvec(self.R_bar).tolist(),
            "R_hat_rotvec": rotvec(self.R_hat).tolist(),
            "R_bar_deg": float(np.rad2deg(angle_of(self.R_bar))),
            "R_hat_deg": float(np.rad2deg(angle_of(self.R_hat))),
            "residuals": dict(self.residuals),
            "timings": dict(self.timings),
            "config": self.config,
        }


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def run(I_t, I_t1, cfg=None, backend=None):
    """Estimate the 360 flow from ``I_t`` to ``I_t1``.

    ``backend`` overrides ``cfg.backend`` with any callable
    ``(a, b, init, valid_mask) -> (h, w, 2)``.
    Returns the final flow (H, W, 2) and a :class:`PipelineReport`.
    """
    cfg = cfg or PipelineConfig()
    I_t = check_erp(I_t, "source")
    I_t1 = check_erp(I_t1, "target")
    if I_t.shape != I_t1.shape:
        raise DimensionError(f"ERP pair differs: {I_t.shape} vs {I_t1.shape}")
    H, W = I_t.shape[:2]
    backend = backend or make_backend(cfg.backend, cfg.backend_cfg)
    timings, residuals = {}, {}
    eye = np.eye(3)
    R_bar, R_hat = eye, eye
    aligned = I_t1

    if "erp" in cfg.stages:
        t0 = time.perf_counter()
        raw = _stage("erp", backend, I_t, I_t1, None, None)
        f_bar = _stage("erp", from_raster_flow, raw)
        est = _stage("erp", estimate_rotation, f_bar, cfg.rotation_stride)
        R_bar, residuals["erp"] = est.R, est.residual
        aligned = align_target(I_t1, R_bar)
        timings["erp"] = time.perf_counter() - t0

    cube = make_layout("cube", cfg.padding_cube, cfg.res_cube, W=W)
    if "cube" in cfg.stages:
        t0 = time.perf_counter()
        f_hat = _stage("cube", stitch_layout, I_t, aligned, cube, backend, cfg.use_blend_weights)
        est = _stage("cube", estimate_rotation, f_hat, cfg.rotation_stride)
        R_hat, residuals["cube"] = est.R, est.residual
        aligned = align_target(aligned, R_hat)
        timings["cube"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if "ico" in cfg.stages:
        name, layout = "ico", make_layout("icosahedron", cfg.padding_ico, cfg.res_ico, W=W)
    else:
        name, layout = "cube-final", cube
    f_tilde = _stage(name, stitch_layout, I_t, aligned, layout, backend, cfg.use_blend_weights)
    flow = unrotate_flow(f_tilde, R_bar, R_hat)
    timings[name] = time.perf_counter() - t0
    timings["total"] = float(sum(timings.values()))
    return flow, PipelineReport(R_bar, R_hat, residuals, timings, cfg.to_dict())


def arm_config(base, arm):
    """Configuration of an ablation arm derived from ``base``."""
    if arm not in ARMS:
        raise ConfigError(f"unknown ablation arm {arm!r}; choose from {list(ARMS)}")
    return replace(base, **ARMS[arm])


def baseline_erp(I_t, I_t1, backend_cfg=None, backend=None):
    """Perspective backend applied directly to the ERP pair (no tangent
    images, no rotation), wrap-normalised."""
    backend = backend or make_backend("builtin", backend_cfg)
    return from_raster_flow(backend(I_t, I_t1, None, None))


def run_ablation_suite(pairs, arms=tuple(ARMS), base=None, backend=None):
    """Per-arm metrics for each (I_t, I_t1, gt) pair, plus the per-arm mean.

    Returns ``{arm: {"pairs": [MetricsReport...], "mean": {metric: value},
    "config": dict}}``.
    """
    base = base or PipelineConfig()
    table = {}
    for arm in arms:
        cfg = arm_config(base, arm)
        reports = []
        for I_t, I_t1, gt in pairs:
            flow, _ = run(I_t, I_t1, cfg, backend)
            reports.append(metrics.evaluate(flow, gt))
        keys = [k for k in metrics.REPORT_KEYS if k != "n_pixels"]
        mean = {k: float(np.mean([getattr(r, k) for r in reports])) for k in keys}
        table[arm] = {"pairs": reports, "mean": mean, "config": cfg.to_dict()}
    return table


def format_ablation_table(table):
    cols = ("epe", "aae", "rms", "sepe", "saae", "srms")
    lines = ["arm\t" + "\t".join(c.upper() for c in cols)]
    for arm, row in table.items():
        lines.append(arm + "\t" + "\t".join(f"{row['mean'][c]:.6g}" for c in cols))
    return "\n".join(lines) + "\n"
