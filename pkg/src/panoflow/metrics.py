"""Planar and spherical flow error metrics, interpolation error and the
polar/equatorial SEPE breakdown.

Spherical metrics compare endpoints as unit vectors, so ERP distortion and
the horizontal wrap-around never enter the error.
"""
from dataclasses import asdict, dataclass

import numpy as np

from .erp import check_erp, pixel_dirs
from .errors import DimensionError
from .flow360 import backward_warp, check_flow, endpoint_dirs, wrap_normalize
from .sphere import arc_angle_at, geodesic

POLAR_FRACTION = 0.15
REPORT_KEYS = ("epe", "aae", "rms", "sepe", "saae", "srms", "polar_sepe", "equatorial_sepe", "n_pixels")


@dataclass
class MetricsReport:
    epe: float
    aae: float
    rms: float
    sepe: float
    saae: float
    srms: float
    polar_sepe: float
    equatorial_sepe: float
    n_pixels: int

    def to_dict(self):
        return asdict(self)


def _pair(est, gt):
    est = check_flow(est, name="estimate")
    gt = check_flow(gt, name="ground truth")
    if est.shape != gt.shape:
        raise DimensionError(f"flow fields differ: {est.shape} vs {gt.shape}")
    return est, gt


def geodesic_errors(est, gt):
    """Per-pixel geodesic distance between estimated and GT endpoints."""
    est, gt = _pair(est, gt)
    return geodesic(endpoint_dirs(est), endpoint_dirs(gt))


def sepe(est, gt):
    return float(np.mean(geodesic_errors(est, gt)))


def srms(est, gt):
    return float(np.sqrt(np.mean(geodesic_errors(est, gt) ** 2)))


def saae(est, gt):
    """Mean angle at the source point between the estimated and GT arcs."""
    est, gt = _pair(est, gt)
    H, W = est.shape[:2]
    return float(np.mean(arc_angle_at(pixel_dirs(W, H), endpoint_dirs(est), endpoint_dirs(gt))))


def planar_metrics(est, gt):
    """(EPE px, AAE rad, RMS px) on wrap-normalised ERP displacements."""
    est, gt = _pair(est, gt)
    W = est.shape[1]
    eu, ev = wrap_normalize(est[..., 0], W), est[..., 1]
    gu, gv = wrap_normalize(gt[..., 0], W), gt[..., 1]
    d2 = wrap_normalize(eu - gu, W) ** 2 + (ev - gv) ** 2
    epe = float(np.mean(np.sqrt(d2)))
    rms = float(np.sqrt(np.mean(d2)))
    num = eu * gu + ev * gv + 1.0
    den = np.sqrt((eu**2 + ev**2 + 1.0) * (gu**2 + gv**2 + 1.0))
    aae = float(np.mean(np.arccos(np.clip(num / den, -1.0, 1.0))))
    return epe, aae, rms


def polar_rows(H, fraction=POLAR_FRACTION):
    """Boolean (H,) mask of the top and bottom ``fraction`` of rows."""
    n = int(round(fraction * H))
    rows = np.zeros(H, dtype=bool)
    rows[:n] = True
    rows[H - n :] = True
    return rows


def region_breakdown(est, gt, fraction=POLAR_FRACTION):
    """(polar SEPE, equatorial SEPE) over the top+bottom band and the middle."""
    err = geodesic_errors(est, gt)
    rows = polar_rows(err.shape[0], fraction)
    return float(err[rows].mean()), float(err[~rows].mean())


def interpolation_error(I_t, I_t1, f):
    """Mean and per-pixel |I_t - backward_warp(I_t1, f)|, channel-averaged."""
    I_t = check_erp(I_t, "source")
    I_t1 = check_erp(I_t1, "target")
    if I_t.shape != I_t1.shape:
        raise DimensionError(f"image pair differs: {I_t.shape} vs {I_t1.shape}")
    heat = np.abs(I_t - backward_warp(I_t1, f))
    if heat.ndim == 3:
        heat = heat.mean(axis=2)
    return float(heat.mean()), heat


def evaluate(est, gt, fraction=POLAR_FRACTION):
    """All metrics at once."""
    est, gt = _pair(est, gt)
    H, W = est.shape[:2]
    src = pixel_dirs(W, H)
    e_end = endpoint_dirs(est)
    g_end = endpoint_dirs(gt)
    err = geodesic(e_end, g_end)
    rows = polar_rows(H, fraction)
    epe, aae, rms = planar_metrics(est, gt)
    return MetricsReport(
        epe=epe,
        aae=aae,
        rms=rms,
        sepe=float(err.mean()),
        saae=float(np.mean(arc_angle_at(src, e_end, g_end))),
        srms=float(np.sqrt(np.mean(err**2))),
        polar_sepe=float(err[rows].mean()),
        equatorial_sepe=float(err[~rows].mean()),
        n_pixels=int(H * W),
    )
