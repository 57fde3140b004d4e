"""Per-face flow estimation on a tangent layout and photoconsistency
weighted stitching back onto the ERP grid."""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .erp import check_erp, pixel_dirs, pixel_grid, vec_to_pix
from .errors import DimensionError
from .flow360 import clamp_rows, flow_from_endpoints, wrap_normalize
from .tangent import PerspImage, TangentPatch, coverage_mask, erp_to_tangent

W_FLOOR = 1e-4


@dataclass
class FaceFlow:
    patch: TangentPatch
    flow: np.ndarray  # (res, res, 2) raster pixels
    weight: np.ndarray  # (res, res)


def _raster(x):
    return x.data if isinstance(x, PerspImage) else np.asarray(x, dtype=np.float64)


def face_weight(src, dst, flow):
    """Photoconsistency weight ``exp(-mean_c |src - warp(dst, flow)|)``.

    Pixels whose flow endpoint leaves the raster (or the valid mask) get
    ``W_FLOOR``.
    """
    a, b = _raster(src), _raster(dst)
    flow = np.asarray(flow, dtype=np.float64)
    if a.shape != b.shape or flow.shape != a.shape[:2] + (2,):
        raise DimensionError(f"face rasters differ: {a.shape}, {b.shape}, flow {flow.shape}")
    h, w = a.shape[:2]
    row, col = np.mgrid[0:h, 0:w].astype(np.float64)
    x = col + flow[..., 0]
    y = row + flow[..., 1]
    warped = kernels.bilinear_clamp(b, x, y)
    diff = np.abs(a - warped)
    if diff.ndim == 3:
        diff = diff.mean(axis=2)
    weight = np.exp(-diff)
    bad = (x < -0.5) | (x > w - 0.5) | (y < -0.5) | (y > h - 0.5)
    for img in (src, dst):
        if isinstance(img, PerspImage):
            bad |= ~img.valid_mask
    if isinstance(dst, PerspImage) and not dst.valid_mask.all():
        xi = np.clip(np.round(x), 0, w - 1).astype(int)
        yi = np.clip(np.round(y), 0, h - 1).astype(int)
        bad |= ~dst.valid_mask[yi, xi]
    weight[bad] = W_FLOOR
    return weight


def face_flow_to_erp(faceflow, W, H, dirs=None):
    """ERP contributions of one face.

    Returns flat pixel indices (N,), wrap-normalised ERP displacements
    (N, 2) and their blend weights (N,) for every ERP pixel inside the
    face's padded extent.
    """
    patch = faceflow.patch
    if dirs is None:
        dirs = pixel_dirs(W, H)
    x, y, D = patch.dir_to_plane(dirs)
    inside = patch.contains(x, y, D)
    idx = np.flatnonzero(inside)
    x, y = x.ravel()[idx], y.ravel()[idx]
    col, row = patch.plane_to_raster(x, y)
    disp = kernels.bilinear_clamp(faceflow.flow, col, row)
    w = kernels.bilinear_clamp(faceflow.weight, col, row)
    sx, sy = patch.pixel_size
    end = patch.plane_to_dir(x + disp[:, 0] * sx, y - disp[:, 1] * sy)
    u1, v1 = vec_to_pix(end, W, H)
    u0, v0 = idx % W, idx // W
    contrib = flow_from_endpoints(u0.astype(np.float64), v0.astype(np.float64), u1, v1, W, H)
    return idx, contrib, w


def stitch_face_flows(faceflows, W, H, use_weights=True, dirs=None):
    """Blend face contributions as ``sum(F_i w_i) / sum(w_i)`` per ERP pixel."""
    if dirs is None:
        dirs = pixel_dirs(W, H)
    acc = np.zeros((2, H * W))
    wsum = np.zeros(H * W)
    for ff in faceflows:
        idx, contrib, w = face_flow_to_erp(ff, W, H, dirs)
        if not use_weights:
            w = np.ones_like(w)
        wsum += np.bincount(idx, weights=w, minlength=H * W)
        acc[0] += np.bincount(idx, weights=w * contrib[:, 0], minlength=H * W)
        acc[1] += np.bincount(idx, weights=w * contrib[:, 1], minlength=H * W)
    if np.any(wsum <= 0):
        from .errors import CoverageError

        raise CoverageError(f"{int(np.sum(wsum <= 0))} ERP pixels received no face contribution")
    flow = (acc / wsum).T.reshape(H, W, 2)
    _, v0 = pixel_grid(W, H)
    flow[..., 0] = wrap_normalize(flow[..., 0], W)
    flow[..., 1] = clamp_rows(v0 + flow[..., 1], H) - v0
    return flow


def estimate_face_flows(I_t, I_target, layout, backend, use_weights=True):
    """Run ``backend`` on every tangent pair of ``layout``."""
    faces = []
    for i, patch in enumerate(layout.patches):
        src = erp_to_tangent(I_t, patch)
        dst = erp_to_tangent(I_target, patch)
        try:
            flow = np.asarray(backend(src.data, dst.data, None, src.valid_mask & dst.valid_mask), dtype=np.float64)
        except Exception as exc:
            exc.face_index = i
            if exc.args:
                exc.args = (f"face {i}: {exc.args[0]}",) + tuple(exc.args[1:])
            raise
        if flow.shape != (patch.res, patch.res, 2):
            raise DimensionError(f"face {i}: backend returned {flow.shape}, expected {(patch.res, patch.res, 2)}")
        weight = face_weight(src, dst, flow) if use_weights else np.ones(flow.shape[:2])
        faces.append(FaceFlow(patch, flow, weight))
    return faces


def stitch_layout(I_t, I_target, layout, backend, use_weights=True, return_faces=False):
    """Flow from ``I_t`` to ``I_target`` estimated per tangent face and
    stitched into one wrap-normalised ERP field."""
    I_t = check_erp(I_t, "source")
    I_target = check_erp(I_target, "target")
    if I_t.shape != I_target.shape:
        raise DimensionError(f"ERP pair differs: {I_t.shape} vs {I_target.shape}")
    H, W = I_t.shape[:2]
    dirs = pixel_dirs(W, H)
    coverage_mask(layout, W, H, dirs)
    faces = estimate_face_flows(I_t, I_target, layout, backend, use_weights)
    flow = stitch_face_flows(faces, W, H, use_weights, dirs)
    return (flow, faces) if return_faces else flow
