"""Unit-sphere coordinates, geodesics and rotation algebra.

Axis convention: Y up, Z forward (image centre), X right. Longitude
``theta`` is measured from +Z toward +X in [-pi, pi); latitude ``phi`` is
positive toward +Y. All functions broadcast over numpy arrays; unit vectors
live in the last axis.
"""
import numpy as np

DEGENERATE_ARC = 1e-8


def sph_to_vec(theta, phi):
    """Spherical coordinates to unit vectors ``(..., 3)``."""
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    cp = np.cos(phi)
    return np.stack([cp * np.sin(theta), np.sin(phi) * np.ones_like(theta), cp * np.cos(theta)], axis=-1)


def vec_to_sph(v):
    """Unit vectors to ``(theta, phi)``; theta is 0 at the poles."""
    v = np.asarray(v, dtype=np.float64)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    # atan2 keeps full precision near the poles where arcsin does not
    phi = np.arctan2(y, np.hypot(x, z))
    pole = (x == 0.0) & (z == 0.0)
    theta = np.where(pole, 0.0, np.arctan2(x, z))
    # arctan2 returns +pi on the negative z axis; map into [-pi, pi)
    theta = np.where(theta >= np.pi, theta - 2.0 * np.pi, theta)
    return theta, phi


def normalize(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def geodesic(a, b):
    """Great-circle distance in radians, ``atan2(|a x b|, a . b)``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.sum(a * b, axis=-1)
    return np.arctan2(cross, dot)


def arc_angle_at(s, a, b):
    """Angle at vertex ``s`` between the great-circle arcs s->a and s->b.

    Zero whenever either arc is shorter than 1e-8 rad.
    """
    s = np.asarray(s, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ta = a - np.sum(a * s, axis=-1, keepdims=True) * s
    tb = b - np.sum(b * s, axis=-1, keepdims=True) * s
    na = np.linalg.norm(ta, axis=-1, keepdims=True)
    nb = np.linalg.norm(tb, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        ta = ta / na
        tb = tb / nb
        ang = np.arctan2(np.linalg.norm(np.cross(ta, tb), axis=-1), np.sum(ta * tb, axis=-1))
    degenerate = (geodesic(s, a) < DEGENERATE_ARC) | (geodesic(s, b) < DEGENERATE_ARC)
    return np.where(degenerate | ~np.isfinite(ang), 0.0, ang)


def rotate(R, v):
    """Apply rotation ``R`` to vectors ``v`` of shape (..., 3)."""
    return np.asarray(v, dtype=np.float64) @ np.asarray(R, dtype=np.float64).T


def compose(R1, R2):
    return np.asarray(R1) @ np.asarray(R2)


def transpose(R):
    return np.asarray(R).T.copy()


def angle_of(R):
    """Rotation angle of ``R`` in radians."""
    return float(np.arccos(np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)))


def rotation_between(R1, R2):
    """Angle of the relative rotation ``R1^T R2``."""
    return angle_of(np.asarray(R1).T @ np.asarray(R2))


def rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    """Rotation about +Y; increases longitude by ``a`` (a yaw to the right)."""
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def axis_angle(axis, angle):
    """Rodrigues rotation about ``axis`` by ``angle``."""
    k = normalize(axis)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def rotvec(R):
    """Axis-angle vector (axis * angle) of ``R``."""
    from scipy.spatial.transform import Rotation

    return Rotation.from_matrix(np.asarray(R, dtype=np.float64)).as_rotvec()


def is_rotation(R, tol=1e-10):
    R = np.asarray(R, dtype=np.float64)
    return (
        R.shape == (3, 3)
        and np.all(np.abs(R.T @ R - np.eye(3)) < tol)
        and abs(np.linalg.det(R) - 1.0) < tol
    )
