"""Perspective optical flow backends.

The built-in solver is a coarse-to-fine dense inverse search: translation
only patches aligned by inverse-compositional Gauss-Newton, densified by
residual-weighted averaging (no variational refinement). Any other method
can be plugged in as an external command that reads two PNGs and writes a
``.flo`` file.
"""
import shlex
import subprocess
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import convolve1d

from . import kernels
from .errors import ConfigError, DimensionError, ExternalError
from .io import read_flo, write_png

_BLUR = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass(frozen=True)
class BackendConfig:
    pyramid_factor: int = 2
    min_level_dim: int = 32
    patch_size: int = 8
    patch_stride: int = 4
    max_iters_per_patch: int = 16
    convergence_eps: float = 0.01
    densify_eps: float = 1e-3

    def __post_init__(self):
        if self.pyramid_factor != 2:
            raise ConfigError("pyramid_factor is fixed at 2")
        for name in ("min_level_dim", "patch_size", "patch_stride", "max_iters_per_patch"):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.convergence_eps <= 0 or self.densify_eps <= 0:
            raise ConfigError("convergence_eps and densify_eps must be positive")
        if self.patch_stride > self.patch_size:
            raise ConfigError("patch_stride must not exceed patch_size")
        if self.min_level_dim < self.patch_size:
            raise ConfigError("min_level_dim must be at least patch_size")

    def to_dict(self):
        return asdict(self)


def to_luma(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[:, :, 0]
    return 0.299 * img[:, :, 0] + 0.587 * img[:, :, 1] + 0.114 * img[:, :, 2]


def _downsample(img):
    out = convolve1d(convolve1d(img, _BLUR, axis=0, mode="nearest"), _BLUR, axis=1, mode="nearest")
    return out[::2, ::2]


def build_pyramid(img, min_level_dim):
    """Finest-first list of levels, halving until the next level would be
    smaller than ``min_level_dim`` on its short side."""
    levels = [img]
    while min(levels[-1].shape) // 2 >= min_level_dim:
        levels.append(_downsample(levels[-1]))
    return levels


def resize_flow(flow, shape):
    """Bilinearly resample a flow field to ``shape`` and rescale its vectors."""
    h0, w0 = flow.shape[:2]
    h1, w1 = shape
    if (h0, w0) == (h1, w1):
        return flow.copy()
    y, x = np.mgrid[0:h1, 0:w1].astype(np.float64)
    xs = (x + 0.5) * (w0 / w1) - 0.5
    ys = (y + 0.5) * (h0 / h1) - 0.5
    out = kernels.bilinear_clamp(flow, xs, ys)
    out[..., 0] *= w1 / w0
    out[..., 1] *= h1 / h0
    return out


def _patch_grid(n, ps, stride):
    pos = list(range(0, n - ps + 1, stride))
    if pos[-1] != n - ps:
        pos.append(n - ps)
    return np.array(pos, dtype=np.int64)


def _resize_mask(mask, shape):
    h0, w0 = mask.shape
    h1, w1 = shape
    ys = np.minimum(((np.arange(h1) + 0.5) * h0 / h1).astype(int), h0 - 1)
    xs = np.minimum(((np.arange(w1) + 0.5) * w0 / w1).astype(int), w0 - 1)
    return mask[np.ix_(ys, xs)]


def _solve_level(I0, I1, flow, mask, cfg):
    h, w = I0.shape
    ps = cfg.patch_size
    gy, gx = np.gradient(I0)
    ys = _patch_grid(h, ps, cfg.patch_stride)
    xs = _patch_grid(w, ps, cfg.patch_stride)
    py, px = (a.ravel() for a in np.meshgrid(ys, xs, indexing="ij"))
    c = (ps - 1) / 2.0
    init = kernels.bilinear_clamp(flow, px + c, py + c)
    if mask is None:
        valid = np.ones(px.shape[0], dtype=bool)
    else:
        jj, ii = np.meshgrid(np.arange(ps), np.arange(ps))
        valid = mask[py[:, None, None] + ii, px[:, None, None] + jj].all(axis=(1, 2))
    uv, resid = kernels.inverse_search(
        I0, gx, gy, I1, px, py, init, valid, ps, cfg.max_iters_per_patch, cfg.convergence_eps
    )
    weight = np.where(valid, 1.0 / np.maximum(cfg.densify_eps, resid), 0.0)
    acc, wsum = kernels.densify(px, py, uv, weight, ps, h, w)
    covered = wsum > 0
    out = flow.copy()
    out[covered] = acc[covered] / wsum[covered][:, None]
    return out


def estimate_flow(a, b, init=None, cfg=None, valid_mask=None):
    """Dense flow from raster ``a`` to raster ``b`` in pixels, shape (h, w, 2).

    ``init`` is an optional (h, w, 2) initial field, applied at the coarsest
    level. Patches touching pixels where ``valid_mask`` is False are skipped.
    """
    cfg = cfg or BackendConfig()
    a = to_luma(a)
    b = to_luma(b)
    if a.shape != b.shape:
        raise DimensionError(f"input rasters differ: {a.shape} vs {b.shape}")
    if min(a.shape) < cfg.patch_size:
        raise DimensionError(f"raster {a.shape} smaller than the patch size")
    if init is not None and np.shape(init) != a.shape + (2,):
        raise DimensionError(f"init flow shape {np.shape(init)} does not match {a.shape}")
    if valid_mask is not None:
        valid_mask = np.asarray(valid_mask, dtype=bool)
        if valid_mask.shape != a.shape:
            raise DimensionError("valid_mask shape does not match the inputs")
        if valid_mask.all():
            valid_mask = None
    min_dim = max(cfg.min_level_dim, cfg.patch_size)
    pa = build_pyramid(a, min_dim)
    pb = build_pyramid(b, min_dim)
    coarse = pa[-1].shape
    if init is None:
        flow = np.zeros(coarse + (2,))
    else:
        flow = resize_flow(np.asarray(init, dtype=np.float64), coarse)
    for level in range(len(pa) - 1, -1, -1):
        shape = pa[level].shape
        flow = resize_flow(flow, shape)
        mask = None if valid_mask is None else _resize_mask(valid_mask, shape)
        flow = _solve_level(pa[level], pb[level], flow, mask, cfg)
    return np.nan_to_num(flow, nan=0.0, posinf=0.0, neginf=0.0)


def estimate_flow_external(a, b, init=None, cmd_template="", timeout=300.0, scratch_dir=None):
    """Run an external flow program on ``a``/``b`` and read its ``.flo``.

    ``cmd_template`` is a shell command with ``{a}``, ``{b}`` and ``{out}``
    placeholders. ``init`` cannot be forwarded and is ignored. Each call
    works in its own fresh subdirectory of ``scratch_dir``.
    """
    if not all(k in cmd_template for k in ("{a}", "{b}", "{out}")):
        raise ConfigError("external command template needs {a}, {b} and {out} placeholders")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"input rasters differ: {a.shape} vs {b.shape}")
    with tempfile.TemporaryDirectory(prefix="panoflow-", dir=scratch_dir) as tmp:
        tmp = Path(tmp)
        pa, pb, out = tmp / "a.png", tmp / "b.png", tmp / "flow.flo"
        write_png(pa, a)
        write_png(pb, b)
        cmd = cmd_template.format(a=shlex.quote(str(pa)), b=shlex.quote(str(pb)), out=shlex.quote(str(out)))
        try:
            proc = subprocess.run(cmd, shell=True, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            raise ExternalError(f"external backend timed out after {timeout} s", stdout=str(exc.stdout or ""),
                                stderr=str(exc.stderr or "")) from exc
        if proc.returncode != 0:
            raise ExternalError(
                f"external backend exited with status {proc.returncode}: {proc.stderr.strip()[-500:]}",
                returncode=proc.returncode, stdout=proc.stdout, stderr=proc.stderr,
            )
        if not out.exists():
            raise ExternalError("external backend produced no output file", returncode=0,
                                stdout=proc.stdout, stderr=proc.stderr)
        try:
            flow = read_flo(out)
        except ValueError as exc:
            raise ExternalError(f"corrupt external output: {exc}", returncode=0) from exc
    if flow.shape[:2] != a.shape[:2]:
        raise DimensionError(f"external flow is {flow.shape[1]}x{flow.shape[0]}, inputs are {a.shape[1]}x{a.shape[0]}")
    if not np.all(np.isfinite(flow)):
        raise ExternalError("external flow contains non-finite values")
    return flow.astype(np.float64)


class BuiltinBackend:
    name = "builtin"

    def __init__(self, cfg=None):
        self.cfg = cfg or BackendConfig()

    def __call__(self, a, b, init=None, valid_mask=None):
        return estimate_flow(a, b, init, self.cfg, valid_mask)


class ExternalBackend:
    def __init__(self, cmd_template, timeout=300.0, scratch_dir=None):
        self.cmd_template = cmd_template
        self.timeout = timeout
        self.scratch_dir = scratch_dir
        self.name = f"external:{cmd_template}"

    def __call__(self, a, b, init=None, valid_mask=None):
        return estimate_flow_external(a, b, init, self.cmd_template, self.timeout, self.scratch_dir)


def make_backend(spec="builtin", cfg=None, timeout=300.0, scratch_dir=None):
    """Backend from a ``builtin`` or ``external:<command template>`` string."""
    if callable(spec):
        return spec
    if spec == "builtin":
        return BuiltinBackend(cfg)
    if isinstance(spec, str) and spec.startswith("external:"):
        return ExternalBackend(spec[len("external:"):], timeout, scratch_dir)
    raise ConfigError(f"unknown backend {spec!r}")
