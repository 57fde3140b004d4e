"""File formats: Middlebury ``.flo``, 8-bit PNG images, pose manifests and
flat key-value reports."""
import json
from pathlib import Path

import numpy as np

from .errors import DimensionError

FLO_MAGIC = b"PIEH"


def write_flo(path, flow):
    """Write an (H, W, 2) flow field as little-endian float32 ``.flo``."""
    flow = np.asarray(flow)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise DimensionError(f"flow must be (H, W, 2), got {flow.shape}")
    H, W = flow.shape[:2]
    with open(path, "wb") as f:
        f.write(FLO_MAGIC)
        f.write(np.array([W, H], dtype="<i4").tobytes())
        f.write(np.ascontiguousarray(flow, dtype="<f4").tobytes())


def read_flo(path):
    """Read a ``.flo`` file into a float32 (H, W, 2) array."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != FLO_MAGIC:
        raise ValueError(f"{path}: not a .flo file (bad magic)")
    W, H = np.frombuffer(raw[4:12], dtype="<i4")
    if W <= 0 or H <= 0 or len(raw) != 12 + 8 * int(W) * int(H):
        raise ValueError(f"{path}: truncated or malformed .flo ({W}x{H}, {len(raw)} bytes)")
    return np.frombuffer(raw[12:], dtype="<f4").reshape(int(H), int(W), 2).copy()


def to_uint8(img):
    return np.round(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def write_png(path, img):
    from PIL import Image

    arr = to_uint8(img)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    Image.fromarray(arr).save(path, format="PNG")


def read_png(path):
    """Read an image as float64 in [0, 1]; (H, W) for gray, (H, W, 3) for color."""
    from PIL import Image

    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.float64) / 255.0
    return arr


def write_poses(path, poses):
    """One line per pose: index, position xyz, rotation as 9 row-major values."""
    lines = ["# index px py pz r00 r01 r02 r10 r11 r12 r20 r21 r22"]
    for i, pose in enumerate(poses):
        vals = [*np.asarray(pose.position, dtype=np.float64), *np.asarray(pose.orientation).ravel()]
        lines.append(f"{i} " + " ".join(repr(float(x)) for x in vals))
    Path(path).write_text("\n".join(lines) + "\n")


def read_poses(path):
    from .synth import CameraPose

    poses = []
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        vals = [float(x) for x in line.split()[1:]]
        poses.append(CameraPose(np.array(vals[:3]), np.array(vals[3:12]).reshape(3, 3)))
    return poses


def write_kv(path, mapping):
    Path(path).write_text("".join(f"{k}={_fmt(v)}\n" for k, v in mapping.items()))


def read_kv(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = float(v) if k.strip() != "n_pixels" else int(v)
    return out


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o)}")
