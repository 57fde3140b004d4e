"""Equirectangular rasters: pixel/sphere mapping, wrap-aware sampling and
whole-image rotation.

An ERP image is a float array of shape (H, W) or (H, W, C) with H = W / 2
and samples in [0, 1]. Integer pixel coordinates address pixel centres;
column ``u`` wraps modulo W, row ``v`` does not.
"""
import numpy as np

from . import kernels
from .errors import DimensionError
from .sphere import rotate, sph_to_vec, vec_to_sph

_SNAP = 1e-9


def check_erp(img, name="image"):
    """Validate and return ``img`` as a float64 ERP array."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] not in (1, 3)):
        raise DimensionError(f"{name}: expected (H, W) or (H, W, 1|3), got {img.shape}")
    H, W = img.shape[:2]
    if W < 8 or W % 2 or H * 2 != W:
        raise DimensionError(f"{name}: ERP raster needs even W >= 8 and H = W/2, got {W}x{H}")
    if not np.all(np.isfinite(img)):
        raise DimensionError(f"{name}: non-finite samples")
    return img


def pix_to_sph(u, v, W, H):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    theta = 2.0 * np.pi * (u + 0.5) / W - np.pi
    phi = np.pi / 2.0 - np.pi * (v + 0.5) / H
    return theta, phi


def sph_to_pix(theta, phi, W, H):
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    u = (theta + np.pi) * W / (2.0 * np.pi) - 0.5
    v = (np.pi / 2.0 - phi) * H / np.pi - 0.5
    return u, v


def pix_to_vec(u, v, W, H):
    return sph_to_vec(*pix_to_sph(u, v, W, H))


def vec_to_pix(d, W, H):
    """Unit vectors to pixel coordinates with u reduced into [0, W)."""
    u, v = sph_to_pix(*vec_to_sph(d), W, H)
    return np.mod(u, W), v


def pixel_grid(W, H):
    """Integer pixel-centre coordinates ``(u, v)`` as (H, W) float arrays."""
    v, u = np.mgrid[0:H, 0:W].astype(np.float64)
    return u, v


def pixel_dirs(W, H):
    """Unit direction of every pixel centre, shape (H, W, 3)."""
    return pix_to_vec(*pixel_grid(W, H), W, H)


def _snap(x):
    r = np.round(x)
    return np.where(np.abs(x - r) < _SNAP, r, x)


def sample_bilinear(img, u, v):
    """Bilinear lookup at continuous pixel coordinates.

    Columns wrap modulo W; rows outside [0, H-1] clamp to the boundary row.
    Coordinates within 1e-9 px of a pixel centre are snapped onto it so
    that exact (grid-aligned) warps reproduce stored samples bit-for-bit.
    """
    return kernels.bilinear_wrap(img, _snap(u), _snap(v))


def rotate_image(img, R):
    """Resample ``img`` so that ``out(x) = img(P(R . P^-1(x)))``."""
    img = check_erp(img)
    H, W = img.shape[:2]
    R = np.asarray(R, dtype=np.float64)
    if np.array_equal(R, np.eye(3)):
        return img.copy()
    d = rotate(R, pixel_dirs(W, H))
    u, v = vec_to_pix(d, W, H)
    return sample_bilinear(img, u, v)
