"""Gnomonic tangent images: projection, cube/icosahedron layouts, ERP
resampling and per-face coverage masks.

Plane coordinates are measured on the tangent plane of the unit sphere:
``x`` points east and ``y`` points north of the tangent point. A patch
raster is ``res x res`` pixels spanning ``[-half_extent, +half_extent]`` in
both axes; raster row 0 is the northern (``+y``) edge.
"""
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .erp import check_erp, pixel_dirs, sample_bilinear, vec_to_pix
from .errors import ConfigError, CoverageError, HemisphereError
from .sphere import axis_angle, normalize, rot_y, rotate, sph_to_vec, vec_to_sph

HEMISPHERE_EPS = 1e-6
CUBE_CENTERS = (
    (0.0, 0.0),
    (np.pi / 2, 0.0),
    (np.pi, 0.0),
    (-np.pi / 2, 0.0),
    (0.0, np.pi / 2),
    (0.0, -np.pi / 2),
)
DEFAULT_PADDING = {"cube": 0.25, "icosahedron": 0.5}


def gnomonic_fwd(theta, phi, theta0, phi1):
    """Project spherical coordinates onto the plane tangent at (theta0, phi1).

    Raises HemisphereError if any point is not in front of the plane.
    """
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    dlon = theta - theta0
    D = np.sin(phi1) * np.sin(phi) + np.cos(phi1) * np.cos(phi) * np.cos(dlon)
    if np.any(D <= HEMISPHERE_EPS):
        raise HemisphereError("point outside the tangent hemisphere")
    x = np.cos(phi) * np.sin(dlon) / D
    y = (np.cos(phi1) * np.sin(phi) - np.sin(phi1) * np.cos(phi) * np.cos(dlon)) / D
    return x, y


def gnomonic_inv(x, y, theta0, phi1):
    """Inverse of :func:`gnomonic_fwd`; theta is returned in [-pi, pi)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rho = np.hypot(x, y)
    c = np.arctan(rho)
    sc, cc = np.sin(c), np.cos(c)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(rho > 0, y * sc / np.where(rho > 0, rho, 1.0), 0.0)
    phi = np.arcsin(np.clip(cc * np.sin(phi1) + ratio * np.cos(phi1), -1.0, 1.0))
    theta = theta0 + np.arctan2(x * sc, rho * np.cos(phi1) * cc - y * np.sin(phi1) * sc)
    theta = np.where(rho > 0, theta, theta0)
    theta = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    return theta, phi


@dataclass(frozen=True)
class TangentPatch:
    """One tangent raster: tangent point, padded plane extent and size."""

    theta: float
    phi: float
    half_extent_x: float
    half_extent_y: float
    res: int
    padding: float = 0.0

    @property
    def center(self):
        return self.theta, self.phi

    @cached_property
    def basis(self):
        """Rows: tangent-point direction, east axis, north axis."""
        t, p = self.theta, self.phi
        c = sph_to_vec(t, p)
        e = np.array([np.cos(t), 0.0, -np.sin(t)])
        n = np.array([-np.sin(p) * np.sin(t), np.cos(p), -np.sin(p) * np.cos(t)])
        return np.stack([c, e, n])

    @property
    def pixel_size(self):
        """Plane units per raster pixel (x, y)."""
        return 2.0 * self.half_extent_x / self.res, 2.0 * self.half_extent_y / self.res

    def dir_to_plane(self, d):
        """Vector form of the gnomonic projection: returns (x, y, D)."""
        proj = np.asarray(d, dtype=np.float64) @ self.basis.T
        D = proj[..., 0]
        with np.errstate(invalid="ignore", divide="ignore"):
            return proj[..., 1] / D, proj[..., 2] / D, D

    def plane_to_dir(self, x, y):
        c, e, n = self.basis
        x = np.asarray(x, dtype=np.float64)[..., None]
        y = np.asarray(y, dtype=np.float64)[..., None]
        return normalize(c + x * e + y * n)

    def plane_to_raster(self, x, y):
        sx, sy = self.pixel_size
        return (x + self.half_extent_x) / sx - 0.5, (self.half_extent_y - y) / sy - 0.5

    def raster_to_plane(self, col, row):
        sx, sy = self.pixel_size
        return (col + 0.5) * sx - self.half_extent_x, self.half_extent_y - (row + 0.5) * sy

    def raster_grid(self):
        """Plane coordinates of all pixel centres, each (res, res)."""
        row, col = np.mgrid[0 : self.res, 0 : self.res].astype(np.float64)
        return self.raster_to_plane(col, row)

    def raster_dirs(self):
        return self.plane_to_dir(*self.raster_grid())

    def contains(self, x, y, D):
        return (D > HEMISPHERE_EPS) & (np.abs(x) <= self.half_extent_x) & (np.abs(y) <= self.half_extent_y)


@dataclass(frozen=True)
class TangentLayout:
    kind: str
    padding: float
    res: int
    base_half_extent: float
    patches: tuple = field(repr=False)

    def __len__(self):
        return len(self.patches)

    def __iter__(self):
        return iter(self.patches)


@dataclass
class PerspImage:
    data: np.ndarray
    patch: TangentPatch
    valid_mask: np.ndarray


def icosahedron():
    """Vertices (12, 3) and faces (20, 3) of the reference icosahedron.

    Built from the golden-ratio vertex list, rotated so that one vertex is
    the north pole (+Y) and the upper vertex ring sits at longitudes
    +-36, +-108 and 180 degrees, i.e. an upper edge midpoint lies on
    theta = 0. Faces are ordered by centroid latitude (north first), then
    longitude.
    """
    g = (1.0 + np.sqrt(5.0)) / 2.0
    verts = []
    for a in (-1.0, 1.0):
        for b in (-g, g):
            verts += [(0.0, a, b), (a, b, 0.0), (b, 0.0, a)]
    V = normalize(np.array(verts))
    top = V[np.argmax(V[:, 1] + 1e-3 * V[:, 2])]
    axis = np.cross(top, [0.0, 1.0, 0.0])
    V = rotate(axis_angle(axis, np.arccos(np.clip(top[1], -1, 1))), V)
    ring = V[np.abs(V[:, 1] - np.sin(np.arctan(0.5))) < 1e-9]
    th, _ = vec_to_sph(ring)
    V = rotate(rot_y(np.pi / 5 - np.min(np.mod(th, 2 * np.pi / 5))), V)
    V[np.abs(V) < 1e-15] = 0.0
    edge = np.min([np.linalg.norm(V[0] - w) for w in V[1:]])
    faces = [
        f
        for f in combinations(range(12), 3)
        if all(abs(np.linalg.norm(V[i] - V[j]) - edge) < 1e-9 for i, j in combinations(f, 2))
    ]
    cents = normalize(np.array([V[list(f)].mean(axis=0) for f in faces]))
    ct, cp = vec_to_sph(cents)
    order = np.lexsort((np.round(ct, 9), -np.round(cp, 9)))
    return V, np.array(faces)[order]


def _ico_geometry():
    V, F = icosahedron()
    cents = normalize(V[F].mean(axis=1))
    ct, cp = vec_to_sph(cents)
    patches = [TangentPatch(float(t), float(p), 1.0, 1.0, 16) for t, p in zip(ct, cp)]
    base = []
    for patch, f in zip(patches, F):
        x, y, _ = patch.dir_to_plane(V[f])
        base.append(np.max(np.hypot(x, y)))
    return ct, cp, np.array(base)


def default_res(kind, padding, W):
    """Tangent raster size matching or exceeding ERP equatorial sampling."""
    if kind == "cube":
        return max(16, int(round(W * (1.0 + padding) / 4.0)))
    if kind == "icosahedron":
        base = _ico_geometry()[2][0]
        h = np.arctan(base * (1.0 + padding))
        return max(16, int(round(W * (1.0 + padding) * h / np.pi)))
    raise ConfigError(f"unknown layout kind {kind!r}")


def make_layout(kind, padding=None, res=None, W=None):
    """Build a cube (6) or icosahedron (20) tangent layout.

    ``res`` defaults to :func:`default_res` for an ERP of width ``W``.
    """
    if kind in ("ico", "icosa"):
        kind = "icosahedron"
    if kind not in ("cube", "icosahedron"):
        raise ConfigError(f"unknown layout kind {kind!r}")
    if padding is None:
        padding = DEFAULT_PADDING[kind]
    if not 0.0 <= padding <= 1.0:
        raise ConfigError(f"padding must lie in [0, 1], got {padding}")
    if res is None:
        if W is None:
            raise ConfigError("either res or W is required")
        res = default_res(kind, padding, W)
    if int(res) != res or res < 16:
        raise ConfigError(f"tangent resolution must be an integer >= 16, got {res}")
    res = int(res)
    if kind == "cube":
        base = 1.0
        centers = CUBE_CENTERS
    else:
        ct, cp, bases = _ico_geometry()
        base = float(bases[0])
        centers = list(zip(ct.tolist(), cp.tolist()))
    he = base * (1.0 + padding)
    patches = tuple(TangentPatch(float(t), float(p), he, he, res, padding) for t, p in centers)
    return TangentLayout(kind, float(padding), res, base, patches)


def erp_to_tangent(img, patch):
    """Resample an ERP image onto a patch raster."""
    img = check_erp(img)
    H, W = img.shape[:2]
    d = patch.raster_dirs()
    _, _, D = patch.dir_to_plane(d)
    u, v = vec_to_pix(d, W, H)
    return PerspImage(sample_bilinear(img, u, v), patch, D > HEMISPHERE_EPS)


def coverage_mask(layout, W, H, dirs=None):
    """Boolean masks (n_faces, H, W): ERP pixels inside each padded patch.

    Raises CoverageError if some pixel is covered by no patch.
    """
    if dirs is None:
        dirs = pixel_dirs(W, H)
    masks = np.stack([p.contains(*p.dir_to_plane(dirs)) for p in layout.patches])
    if not masks.any(axis=0).all():
        raise CoverageError(f"{layout.kind} layout leaves {int((~masks.any(axis=0)).sum())} pixels uncovered")
    return masks
