"""Global rotation from a 360 flow field, and the rotate-forward /
unrotate-backward operators that bracket each pipeline stage.

Convention: an estimated rotation ``R`` maps start directions to end
directions, ``q ~= R p``.
"""
from dataclasses import dataclass

import numpy as np

from .erp import pix_to_vec, pixel_dirs, rotate_image
from .errors import DegenerateError
from .flow360 import check_flow, endpoint, endpoint_dirs, flow_from_end_dirs
from .sphere import rotate


@dataclass
class RotationEstimate:
    R: np.ndarray
    residual: float  # mean squared chordal error
    n_samples: int


def kabsch(p, q, weights=None):
    """Rotation minimising ``sum w_k |R p_k - q_k|^2`` subject to det R = +1.

    ``p`` and ``q`` are (N, 3) unit vectors; no centring is applied since
    both sets live on the same sphere about the origin.
    """
    p = np.asarray(p, dtype=np.float64).reshape(-1, 3)
    q = np.asarray(q, dtype=np.float64).reshape(-1, 3)
    if p.shape[0] < 2:
        raise DegenerateError(f"need at least 2 correspondences, got {p.shape[0]}")
    w = np.ones(p.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64).ravel()
    Hm = (p * w[:, None]).T @ q
    U, S, Vt = np.linalg.svd(Hm)
    if S[1] <= 1e-12 * max(S[0], 1e-300):
        raise DegenerateError("correspondences are collinear (rank < 2)")
    V = Vt.T
    d = np.sign(np.linalg.det(V @ U.T)) or 1.0
    return V @ np.diag([1.0, 1.0, d]) @ U.T


def estimate_rotation(f, stride=4):
    """Closed-form SVD fit of the rotation taking flow start points to end points.

    Start pixels are sampled on a ``stride`` grid.
    """
    f = check_flow(f)
    H, W = f.shape[:2]
    stride = int(stride)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    v, u = np.mgrid[0:H:stride, 0:W:stride]
    u = u.ravel().astype(np.float64)
    v = v.ravel().astype(np.float64)
    if u.size < 3:
        raise DegenerateError(f"only {u.size} samples at stride {stride}")
    p = pix_to_vec(u, v, W, H)
    q = pix_to_vec(*endpoint(f, u, v), W, H)
    R = kabsch(p, q)
    resid = float(np.mean(np.sum((rotate(R, p) - q) ** 2, axis=1)))
    return RotationEstimate(R, resid, int(u.size))


def align_target(target, R):
    """Rotate the target forward so that it lines up with the source (the
    image-side operator): ``aligned(x) = target(P(R P^-1(x)))``."""
    return rotate_image(target, R)


def unrotate_flow(f_tilde, R_bar, R_hat):
    """Map endpoints of a flow measured against the doubly-aligned target
    back into the original target frame: ``e = R_bar R_hat e~``."""
    f_tilde = check_flow(f_tilde)
    R_bar = np.asarray(R_bar, dtype=np.float64)
    R_hat = np.asarray(R_hat, dtype=np.float64)
    eye = np.eye(3)
    if np.array_equal(R_bar, eye) and np.array_equal(R_hat, eye):
        return f_tilde.copy()
    e = rotate(R_bar @ R_hat, endpoint_dirs(f_tilde))
    return flow_from_end_dirs(e)


def residual_magnitude(f):
    """Geodesic length of every flow vector, (H, W) radians."""
    from .sphere import geodesic

    H, W = f.shape[:2]
    return geodesic(pixel_dirs(W, H), endpoint_dirs(f))
