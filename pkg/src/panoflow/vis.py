"""Flow colour-wheel rendering and spherical error heatmaps (uint8 RGB/gray)."""
import numpy as np

from .flow360 import check_flow
from .metrics import geodesic_errors


def make_colorwheel():
    """The Middlebury colour wheel, (55, 3) in [0, 255]."""
    RY, YG, GC, CB, BM, MR = 15, 6, 4, 11, 13, 6
    wheel = np.zeros((RY + YG + GC + CB + BM + MR, 3))
    col = 0
    wheel[col : col + RY, 0] = 255
    wheel[col : col + RY, 1] = np.floor(255 * np.arange(RY) / RY)
    col += RY
    wheel[col : col + YG, 0] = 255 - np.floor(255 * np.arange(YG) / YG)
    wheel[col : col + YG, 1] = 255
    col += YG
    wheel[col : col + GC, 1] = 255
    wheel[col : col + GC, 2] = np.floor(255 * np.arange(GC) / GC)
    col += GC
    wheel[col : col + CB, 1] = 255 - np.floor(255 * np.arange(CB) / CB)
    wheel[col : col + CB, 2] = 255
    col += CB
    wheel[col : col + BM, 2] = 255
    wheel[col : col + BM, 0] = np.floor(255 * np.arange(BM) / BM)
    col += BM
    wheel[col : col + MR, 2] = 255 - np.floor(255 * np.arange(MR) / MR)
    wheel[col : col + MR, 0] = 255
    return wheel


def flow_to_color(flow, max_mag=None):
    """Hue encodes direction, saturation encodes magnitude.

    Magnitudes are normalised by ``max_mag`` or, by default, the field's
    99th percentile so that a few seam-crossing vectors do not wash out the
    wheel. Zero flow renders white.
    """
    flow = check_flow(flow)
    u, v = flow[..., 0], flow[..., 1]
    mag = np.hypot(u, v)
    if max_mag is None:
        max_mag = float(np.percentile(mag, 99))
    scale = max_mag if max_mag > 0 else 1.0
    rad = np.clip(mag / scale, 0.0, 1.0)
    wheel = make_colorwheel()
    n = wheel.shape[0]
    a = np.arctan2(-v, -u) / np.pi
    fk = (a + 1.0) / 2.0 * (n - 1)
    k0 = np.floor(fk).astype(int)
    k1 = (k0 + 1) % n
    f = (fk - k0)[..., None]
    col = ((1 - f) * wheel[k0] + f * wheel[k1]) / 255.0
    col = 1.0 - rad[..., None] * (1.0 - col)
    return np.round(col * 255.0).astype(np.uint8)


def error_heatmap(est, gt, max_error=0.05):
    """Per-pixel geodesic endpoint error as gray levels, lighter = lower."""
    err = geodesic_errors(est, gt)
    level = 1.0 - np.clip(err / max_error, 0.0, 1.0)
    return np.round(level * 255.0).astype(np.uint8)
