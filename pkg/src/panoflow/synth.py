"""Synthetic ERP pairs with exact ground-truth flow.

Two procedural scenes stand in for mesh renders: a textured sphere at
infinity (rotation-only motion, closed-form GT) and the inside of a convex
axis-aligned box room (ray-cast, occlusion-free GT under any translation).
Textures are 3D value noise, optionally mixed with a smooth checker, with
a distinct colour palette per wall.
"""
from dataclasses import dataclass, field

import numpy as np

from .erp import pixel_dirs
from .errors import ConfigError, GeometryError
from .flow360 import flow_from_end_dirs
from .sphere import normalize, rot_x, rot_y, rot_z, rotate

# lattice cell sizes (metres on walls, radians on the sphere) and amplitudes
_OCTAVES_BOX = ((0.6, 0.45), (0.3, 0.25), (0.15, 0.18), (0.08, 0.12))
_OCTAVES_SPHERE = ((0.3, 0.45), (0.15, 0.25), (0.075, 0.18), (0.04, 0.12))
_CHECKER_CELL = {"box_room": 0.3, "sphere_texture": 0.15}


@dataclass
class CameraPose:
    position: np.ndarray
    orientation: np.ndarray  # camera-to-world rotation

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64).reshape(3)
        self.orientation = np.asarray(self.orientation, dtype=np.float64).reshape(3, 3)


@dataclass(frozen=True)
class SceneSpec:
    kind: str = "box_room"
    seed: int = 0
    half_size: float = 2.0
    texture: str = "value-noise"

    def __post_init__(self):
        if self.kind not in ("box_room", "sphere_texture"):
            raise ConfigError(f"unknown scene kind {self.kind!r}")
        if self.texture not in ("value-noise", "checker"):
            raise ConfigError(f"unknown texture {self.texture!r}")
        if self.half_size <= 0:
            raise ConfigError("room half-size must be positive")


@dataclass
class GroundTruthPair:
    I_t: np.ndarray
    I_t1: np.ndarray
    flow: np.ndarray
    pose_t: CameraPose
    pose_t1: CameraPose
    scene: SceneSpec = field(default_factory=SceneSpec)


class ValueNoise:
    """Seeded 3D lattice value noise with quintic interpolation."""

    def __init__(self, seed):
        rng = np.random.default_rng(seed)
        self.perm = np.concatenate([rng.permutation(256)] * 2)
        self.values = rng.random(256)

    def _hash(self, ix, iy, iz):
        p = self.perm
        return self.values[p[p[p[ix & 255] + (iy & 255)] + (iz & 255)]]

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        base = np.floor(pts)
        f = pts - base
        i = base.astype(np.int64)
        t = f * f * f * (f * (f * 6.0 - 15.0) + 10.0)
        out = 0.0
        for dx in (0, 1):
            wx = t[..., 0] if dx else 1.0 - t[..., 0]
            for dy in (0, 1):
                wy = t[..., 1] if dy else 1.0 - t[..., 1]
                for dz in (0, 1):
                    wz = t[..., 2] if dz else 1.0 - t[..., 2]
                    out = out + wx * wy * wz * self._hash(i[..., 0] + dx, i[..., 1] + dy, i[..., 2] + dz)
        return out


class Texture:
    """Colour as a function of 3D position and wall index."""

    def __init__(self, scene):
        self.scene = scene
        self.octaves = _OCTAVES_BOX if scene.kind == "box_room" else _OCTAVES_SPHERE
        self.noise = [ValueNoise(scene.seed * 7919 + k) for k in range(4)]
        rng = np.random.default_rng(scene.seed + 12345)
        self.palette = 0.45 + 0.55 * rng.random((6, 3))
        self.offsets = rng.uniform(0.0, 100.0, size=(len(self.octaves) + 3, 3))

    def _fbm(self, pts):
        total = 0.0
        amp_sum = 0.0
        for k, (cell, amp) in enumerate(self.octaves):
            total = total + amp * self.noise[0](pts / cell + self.offsets[k])
            amp_sum += amp
        return total / amp_sum

    def __call__(self, pts, base_color):
        lum = np.clip(0.5 + 2.2 * (self._fbm(pts) - 0.5), 0.0, 1.0)
        if self.scene.texture == "checker":
            c = _CHECKER_CELL[self.scene.kind]
            s = np.sin(np.pi * pts / c).prod(axis=-1)
            lum = 0.5 * lum + 0.5 * (0.5 + 0.5 * np.tanh(3.0 * s))
        chroma = np.stack(
            [self.noise[k + 1](pts / self.octaves[1][0] + self.offsets[-k - 1]) for k in range(3)], axis=-1
        )
        col = base_color * (0.2 + 0.8 * lum[..., None]) + 0.15 * (chroma - 0.5)
        return np.clip(col, 0.0, 1.0)


def _check_pose(scene, pose):
    if scene.kind == "box_room" and np.any(np.abs(pose.position) >= scene.half_size - 1e-6):
        raise GeometryError(f"camera at {pose.position} is outside the room (half-size {scene.half_size})")


def cast_box(origin, dirs, half_size):
    """First hit of rays from inside the box ``[-a, a]^3``.

    Returns hit points (..., 3), ray parameters (...) and wall ids (...) in
    0..5 (axis * 2 + positive side).
    """
    o = np.asarray(origin, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_pos = (half_size - o) / dirs
        t_neg = (-half_size - o) / dirs
    t_axis = np.where(dirs > 0, t_pos, np.where(dirs < 0, t_neg, np.inf))
    axis = np.argmin(t_axis, axis=-1)
    t = np.take_along_axis(t_axis, axis[..., None], axis=-1)[..., 0]
    hit = o + t[..., None] * dirs
    positive = np.take_along_axis(dirs, axis[..., None], axis=-1)[..., 0] > 0
    return hit, t, axis * 2 + positive


def render_erp(scene, pose, W, H=None):
    """Ray-cast an ERP image (H, W, 3) of ``scene`` from ``pose``."""
    H = W // 2 if H is None else H
    if H * 2 != W:
        raise ConfigError("ERP renders need H = W/2")
    _check_pose(scene, pose)
    tex = Texture(scene)
    d = rotate(pose.orientation, pixel_dirs(W, H))
    if scene.kind == "sphere_texture":
        mix = tex.noise[3](d / 0.8 + 3.0)[..., None]
        return tex(d, (1.0 - mix) * tex.palette[0] + mix * tex.palette[1])
    hit, _, wall = cast_box(pose.position, d, scene.half_size)
    return tex(hit, tex.palette[wall])


def gt_flow(scene, pose_t, pose_t1, W, H=None):
    """Exact flow from the render at ``pose_t`` to the render at ``pose_t1``."""
    H = W // 2 if H is None else H
    _check_pose(scene, pose_t)
    _check_pose(scene, pose_t1)
    d_world = rotate(pose_t.orientation, pixel_dirs(W, H))
    if scene.kind == "sphere_texture":
        end_world = d_world
    else:
        hit, _, _ = cast_box(pose_t.position, d_world, scene.half_size)
        end_world = normalize(hit - pose_t1.position)
    return flow_from_end_dirs(rotate(pose_t1.orientation.T, end_world))


def make_pair(scene, pose_t, pose_t1, W):
    return GroundTruthPair(
        render_erp(scene, pose_t, W),
        render_erp(scene, pose_t1, W),
        gt_flow(scene, pose_t, pose_t1, W),
        pose_t,
        pose_t1,
        scene,
    )


def euler_zyx(z, y, x):
    """Intrinsic Z-Y-X composition ``Rz(z) Ry(y) Rx(x)``."""
    return rot_z(z) @ rot_y(y) @ rot_x(x)


def rotation_pose(yaw=0.0, pitch=0.0, roll=0.0):
    """Camera orientation after yawing, then pitching, then rolling (radians)."""
    return CameraPose(np.zeros(3), rot_y(yaw) @ rot_x(pitch) @ rot_z(roll))


def camera_path(kind, scene=None, n=10, seed=0, radius=0.5, step_deg=10.0, line_step=0.2,
                box=1.0, jitter_deg=10.0):
    """Pose sequences: ``circle`` (outward facing, 10 degree steps on a 0.5 m
    circle), ``line`` (fixed orientation, 0.2 m steps along +X, centred) or
    ``random`` (uniform in a centred 1 m cube, +-10 degree Z-Y-X jitter)."""
    if n < 2:
        raise ConfigError("a camera path needs at least 2 poses")
    if kind == "circle":
        ang = np.deg2rad(step_deg) * np.arange(n)
        poses = [CameraPose([radius * np.sin(a), 0.0, radius * np.cos(a)], rot_y(a)) for a in ang]
    elif kind == "line":
        xs = (np.arange(n) - (n - 1) / 2.0) * line_step
        poses = [CameraPose([x, 0.0, 0.0], np.eye(3)) for x in xs]
    elif kind == "random":
        rng = np.random.default_rng(seed)
        pos = rng.uniform(-box / 2.0, box / 2.0, size=(n, 3))
        ang = np.deg2rad(rng.uniform(-jitter_deg, jitter_deg, size=(n, 3)))
        poses = [CameraPose(p, euler_zyx(*a)) for p, a in zip(pos, ang)]
    else:
        raise ConfigError(f"unknown camera path {kind!r}")
    if scene is not None and scene.kind == "box_room":
        extent = max(np.max(np.abs(p.position)) for p in poses)
        if extent >= scene.half_size - 1e-6:
            raise ConfigError(f"path reaches {extent:.2f} m, room half-size is {scene.half_size} m")
    return poses
