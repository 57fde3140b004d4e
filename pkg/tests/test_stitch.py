import numpy as np
import pytest

from conftest import exact_face_flow
from panoflow import stitch, tangent
from panoflow.backend import make_backend
from panoflow.erp import pixel_dirs, rotate_image
from panoflow.flow360 import flow_from_rotation
from panoflow.metrics import geodesic_errors, sepe
from panoflow.sphere import rot_x, rot_y


def test_face_weight_examples():
    a = np.full((8, 8, 3), 0.5)
    zero = np.zeros((8, 8, 2))
    np.testing.assert_allclose(stitch.face_weight(a, a, zero), 1.0)
    np.testing.assert_allclose(stitch.face_weight(np.ones((8, 8, 3)), np.zeros((8, 8, 3)), zero), np.exp(-1.0))
    np.testing.assert_allclose(stitch.face_weight(np.full((8, 8), 0.75), np.full((8, 8), 0.5), zero), np.exp(-0.25))


def test_face_weight_floor_outside_raster():
    a = np.zeros((8, 8))
    f = np.zeros((8, 8, 2))
    f[2, 3, 0] = 20.0
    w = stitch.face_weight(a, a, f)
    assert w[2, 3] == stitch.W_FLOOR
    assert w[2, 2] == 1.0


def test_zero_face_flow_gives_zero_contributions():
    W, H = 128, 64
    patch = tangent.TangentPatch(0.5, 0.2, 1.2, 1.2, 48)
    ff = stitch.FaceFlow(patch, np.zeros((48, 48, 2)), np.ones((48, 48)))
    idx, contrib, w = stitch.face_flow_to_erp(ff, W, H)
    assert idx.size > 0
    np.testing.assert_allclose(contrib, 0.0, atol=1e-9)


def test_no_contribution_outside_coverage():
    W, H = 128, 64
    patch = tangent.TangentPatch(0.0, 0.0, 1.0, 1.0, 32)
    ff = stitch.FaceFlow(patch, np.zeros((32, 32, 2)), np.ones((32, 32)))
    idx, _, _ = stitch.face_flow_to_erp(ff, W, H)
    mask = np.zeros(W * H, bool)
    mask[idx] = True
    x, y, D = patch.dir_to_plane(pixel_dirs(W, H))
    np.testing.assert_array_equal(mask, patch.contains(x, y, D).ravel())


@pytest.mark.parametrize("kind", ["cube", "icosahedron"])
def test_exact_rotation_flow_stitches_back(kind):
    W, H = 512, 256
    R = rot_y(np.deg2rad(4)) @ rot_x(np.deg2rad(3))
    lay = tangent.make_layout(kind, W=W)
    faces = [stitch.FaceFlow(p, exact_face_flow(p, R), np.ones((p.res, p.res))) for p in lay]
    est = stitch.stitch_face_flows(faces, W, H)
    gt = flow_from_rotation(R, W, H)
    # compare per pixel in ERP pixels with wrap-aware du
    du = np.mod(est[..., 0] - gt[..., 0] + W / 2, W) - W / 2
    assert np.max(np.hypot(du, est[..., 1] - gt[..., 1])) < 0.5


def test_blend_is_convex_combination():
    W, H = 128, 64
    lay = tangent.make_layout("cube", padding=0.5, res=48)
    rng = np.random.default_rng(0)
    faces = [stitch.FaceFlow(p, np.full((48, 48, 2), float(i)), rng.uniform(0.1, 1.0, (48, 48)))
             for i, p in enumerate(lay)]
    contribs = [stitch.face_flow_to_erp(ff, W, H) for ff in faces]
    lo = np.full(W * H, np.inf)
    hi = np.full(W * H, -np.inf)
    for idx, c, _ in contribs:
        lo[idx] = np.minimum(lo[idx], c[:, 1])
        hi[idx] = np.maximum(hi[idx], c[:, 1])
    out = stitch.stitch_face_flows(faces, W, H)[..., 1].ravel()
    # rows near the poles can be clamped, so the blend may only shrink toward zero there
    inner = (np.arange(W * H) // W > 8) & (np.arange(W * H) // W < H - 9)
    assert np.all(out[inner] >= lo[inner] - 1e-9)
    assert np.all(out[inner] <= hi[inner] + 1e-9)


def test_zero_motion_stitch(erp256):
    lay = tangent.make_layout("cube", W=256)
    f = stitch.stitch_layout(erp256, erp256, lay, make_backend("builtin"))
    mag = geodesic_errors(f, np.zeros_like(f))
    assert np.percentile(mag, 99) < 0.005


def test_pure_yaw_cube_stitch(erp512):
    W, H = 512, 256
    R = rot_y(np.deg2rad(5))
    target = rotate_image(erp512, R.T)
    lay = tangent.make_layout("cube", W=W)
    f = stitch.stitch_layout(erp512, target, lay, make_backend("builtin"))
    assert sepe(f, flow_from_rotation(R, W, H)) < 0.01


def test_unit_weight_toggle(erp256):
    lay = tangent.make_layout("cube", res=64)
    target = rotate_image(erp256, rot_y(-0.05))
    be = make_backend("builtin")
    _, faces = stitch.stitch_layout(erp256, target, lay, be, use_weights=False, return_faces=True)
    assert all(np.all(ff.weight == 1.0) for ff in faces)
    _, faces = stitch.stitch_layout(erp256, target, lay, be, use_weights=True, return_faces=True)
    assert any(np.any(ff.weight < 1.0) for ff in faces)


def test_backend_error_names_face(erp256):
    lay = tangent.make_layout("cube", res=32)
    calls = []

    def flaky(a, b, init=None, valid_mask=None):
        calls.append(1)
        if len(calls) == 3:
            raise RuntimeError("boom")
        return np.zeros(a.shape[:2] + (2,))

    with pytest.raises(RuntimeError, match="face 2: boom"):
        stitch.stitch_layout(erp256, erp256, lay, flaky)
