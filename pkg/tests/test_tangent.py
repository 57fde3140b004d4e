from itertools import combinations

import numpy as np
import pytest

from panoflow import erp, tangent
from panoflow.errors import ConfigError, HemisphereError
from panoflow.sphere import geodesic, normalize, sph_to_vec


def golden_faces():
    """Unrotated golden-ratio icosahedron: unit vertices and face triples."""
    g = (1 + 5**0.5) / 2
    V = []
    for a in (-1, 1):
        for b in (-g, g):
            V += [(0, a, b), (a, b, 0), (b, 0, a)]
    V = np.array(V, dtype=float)
    faces = [f for f in combinations(range(12), 3)
             if all(abs(np.linalg.norm(V[i] - V[j]) - 2.0) < 1e-12 for i, j in combinations(f, 2))]
    return V / np.linalg.norm(V, axis=1, keepdims=True), faces


def test_gnomonic_examples():
    assert tangent.gnomonic_fwd(0.3, -0.2, 0.3, -0.2) == pytest.approx((0.0, 0.0), abs=1e-15)
    x, y = tangent.gnomonic_fwd(np.pi / 4, 0.0, 0.0, 0.0)
    assert (x, y) == pytest.approx((1.0, 0.0), abs=1e-15)
    x, y = tangent.gnomonic_fwd(0.0, np.pi / 6, 0.0, 0.0)
    assert (x, y) == pytest.approx((0.0, np.tan(np.pi / 6)), abs=1e-15)
    assert tangent.gnomonic_inv(1.0, 0.0, 0.0, 0.0) == pytest.approx((np.pi / 4, 0.0), abs=1e-15)
    assert tangent.gnomonic_inv(0.0, 0.0, 1.1, 0.4) == pytest.approx((1.1, 0.4), abs=1e-15)


def test_gnomonic_far_hemisphere_raises():
    with pytest.raises(HemisphereError):
        tangent.gnomonic_fwd(np.pi, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("center", [(0.0, 0.0), (2.0, 0.7), (-1.0, -1.2), (0.0, np.pi / 2)])
def test_gnomonic_roundtrip_within_60_degrees(rng, center):
    t0, p1 = center
    c = sph_to_vec(t0, p1)
    d = normalize(rng.normal(size=(10_000, 3)))
    d = d[geodesic(d, c) < np.deg2rad(60)]
    from panoflow.sphere import vec_to_sph

    t, p = vec_to_sph(d)
    t2, p2 = tangent.gnomonic_inv(*tangent.gnomonic_fwd(t, p, t0, p1), t0, p1)
    assert np.max(geodesic(sph_to_vec(t2, p2), d)) < 1e-10


def test_vector_form_matches_trig_form(rng):
    patch = tangent.TangentPatch(0.8, -0.4, 1.2, 1.2, 64)
    t = rng.uniform(0.3, 1.3, 500)
    p = rng.uniform(-0.9, 0.1, 500)
    x, y = tangent.gnomonic_fwd(t, p, 0.8, -0.4)
    x2, y2, _ = patch.dir_to_plane(sph_to_vec(t, p))
    np.testing.assert_allclose(x2, x, atol=1e-12)
    np.testing.assert_allclose(y2, y, atol=1e-12)


def test_great_circle_maps_to_line(rng):
    patch = tangent.TangentPatch(-0.5, 0.3, 1.0, 1.0, 16)
    for _ in range(50):
        n = normalize(rng.normal(size=3))
        a = normalize(np.cross(n, rng.normal(size=3)))
        b = np.cross(n, a)
        s = np.linspace(0, 2 * np.pi, 400, endpoint=False)
        pts = np.cos(s)[:, None] * a + np.sin(s)[:, None] * b
        x, y, D = patch.dir_to_plane(pts)
        keep = D > 0.3
        if keep.sum() < 3:
            continue
        P = np.stack([x[keep], y[keep]], 1)[[0, keep.sum() // 2, -1]]
        e1, e2 = P[1] - P[0], P[2] - P[0]
        resid = abs(e1[0] * e2[1] - e1[1] * e2[0]) / np.linalg.norm(e2)
        assert resid < 1e-9


def test_cube_layout():
    lay = tangent.make_layout("cube", padding=0.1, res=64)
    assert len(lay) == 6
    assert all(p.half_extent_x == pytest.approx(1.1) for p in lay)
    lay0 = tangent.make_layout("cube", padding=0.0, res=64)
    assert 2 * np.arctan(lay0.patches[0].half_extent_x) == pytest.approx(np.pi / 2, abs=1e-15)
    centers = {(round(p.theta, 12), round(p.phi, 12)) for p in lay}
    assert centers == {(0.0, 0.0), (round(np.pi / 2, 12), 0.0), (round(np.pi, 12), 0.0),
                       (round(-np.pi / 2, 12), 0.0), (0.0, round(np.pi / 2, 12)), (0.0, round(-np.pi / 2, 12))}


def test_icosahedron_half_extent_oracle():
    V, faces = golden_faces()
    assert len(faces) == 20
    radii = []
    for f in faces:
        c = normalize(V[list(f)].sum(axis=0))
        # a vertex at angular distance a from the tangent point lands at radius tan(a)
        radii.append(max(np.tan(np.arccos(np.dot(c, V[i]))) for i in f))
    oracle = radii[0]
    assert np.ptp(radii) < 1e-12
    lay = tangent.make_layout("icosahedron", padding=0.0, res=64)
    assert lay.base_half_extent == pytest.approx(oracle, abs=1e-12)
    assert lay.base_half_extent == pytest.approx(0.7639320225, abs=1e-10)
    halves = [p.half_extent_x for p in lay]
    assert np.ptp(halves) < 1e-12


def test_icosahedron_orientation():
    V, F = tangent.icosahedron()
    assert len(V) == 12 and len(F) == 20
    np.testing.assert_allclose(V[np.argmax(V[:, 1])], [0, 1, 0], atol=1e-15)
    lay = tangent.make_layout("icosahedron", padding=0.0, res=16)
    # northern cap faces are centred on the upper edge midpoints, one at theta = 0
    north = [p for p in lay if p.phi > 0.9]
    assert len(north) == 5
    assert min(abs(p.theta) for p in north) < 1e-12
    # every face is congruent to the golden-ratio oracle: vertices sit on the padded square
    for patch, f in zip(lay, F):
        x, y, _ = patch.dir_to_plane(V[f])
        assert np.max(np.hypot(x, y)) == pytest.approx(lay.base_half_extent, abs=1e-12)


def test_padded_ico_extent_scales():
    lay = tangent.make_layout("ico", padding=0.5, res=32)
    assert lay.patches[3].half_extent_y == pytest.approx(1.5 * lay.base_half_extent)


@pytest.mark.parametrize("kwargs", [dict(padding=-0.1, res=32), dict(padding=1.5, res=32),
                                    dict(padding=0.2, res=8), dict(padding=0.2, res=32.5),
                                    dict(padding=0.2)])
def test_make_layout_rejects(kwargs):
    with pytest.raises(ConfigError):
        tangent.make_layout("cube", **kwargs)


def test_make_layout_rejects_unknown_kind():
    with pytest.raises(ConfigError):
        tangent.make_layout("dodecahedron", res=32)


def test_default_res():
    assert tangent.default_res("cube", 0.25, 1024) == 320
    assert tangent.default_res("icosahedron", 0.5, 1024) == 417


def test_raster_plane_roundtrip():
    patch = tangent.TangentPatch(0.1, 0.2, 1.3, 1.3, 40)
    x, y = patch.raster_grid()
    assert x[0, 0] < 0 and y[0, 0] > 0  # row 0 is the northern edge
    col, row = patch.plane_to_raster(x, y)
    np.testing.assert_allclose(col, np.arange(40)[None, :].repeat(40, 0), atol=1e-12)
    np.testing.assert_allclose(row, np.arange(40)[:, None].repeat(40, 1), atol=1e-12)


@pytest.mark.parametrize("kind, padding", [("cube", 0.0), ("cube", 0.6), ("icosahedron", 0.0), ("icosahedron", 0.5)])
def test_patch_roundtrip_inside_padded_extent(rng, kind, padding):
    lay = tangent.make_layout(kind, padding=padding, res=32)
    for patch in lay:
        x = rng.uniform(-patch.half_extent_x, patch.half_extent_x, 10_000)
        y = rng.uniform(-patch.half_extent_y, patch.half_extent_y, 10_000)
        d = patch.plane_to_dir(x, y)
        x2, y2, _ = patch.dir_to_plane(d)
        back = patch.plane_to_dir(x2, y2)
        assert np.max(geodesic(back, d)) < 1e-10


def test_erp_to_tangent_constant():
    img = np.full((64, 128, 3), 0.4)
    out = tangent.erp_to_tangent(img, tangent.TangentPatch(1.0, 0.5, 1.2, 1.2, 48))
    np.testing.assert_allclose(out.data[out.valid_mask], 0.4, atol=1e-15)


def test_erp_to_tangent_latitude_field():
    W, H = 1024, 512
    _, phi = erp.pix_to_sph(*erp.pixel_grid(W, H), W, H)
    patch = tangent.TangentPatch(0.4, 0.0, 1.0, 1.0, 256)
    out = tangent.erp_to_tangent(phi, patch)
    _, phi_exact = tangent.gnomonic_inv(*patch.raster_grid(), patch.theta, patch.phi)
    assert np.max(np.abs(out.data - phi_exact)) < 1e-3


def test_erp_to_tangent_centre_pixel(erp256):
    H, W = erp256.shape[:2]
    # pick a tangent point on a pixel centre and an odd raster so a raster pixel sits on it
    t, p = erp.pix_to_sph(40, 100, W, H)
    patch = tangent.TangentPatch(float(t), float(p), 0.5, 0.5, 31)
    out = tangent.erp_to_tangent(erp256, patch)
    np.testing.assert_allclose(out.data[15, 15], erp256[100, 40], atol=1e-9)


def brute_force_counts(layout, W, H, rows):
    counts = np.zeros((len(rows), W), dtype=int)
    for i, v in enumerate(rows):
        for u in range(W):
            t, p = erp.pix_to_sph(u, v, W, H)
            for patch in layout:
                try:
                    x, y = tangent.gnomonic_fwd(t, p, patch.theta, patch.phi)
                except HemisphereError:
                    continue
                if abs(x) <= patch.half_extent_x and abs(y) <= patch.half_extent_y:
                    counts[i, u] += 1
    return counts


def test_cube_unpadded_partition():
    W, H = 256, 128
    lay = tangent.make_layout("cube", padding=0.0, res=32)
    counts = tangent.coverage_mask(lay, W, H).sum(axis=0)
    assert counts.min() >= 1
    d = erp.pixel_dirs(W, H)
    # distance to the nearest face boundary, measured in the dominant face's plane
    m = np.sort(np.abs(d), axis=-1)
    interior = (m[..., 1] / m[..., 2]) < 1 - 1e-9
    assert np.all(counts[interior] == 1)


def test_cube_padded_overlap_brute_force():
    W, H = 128, 64
    lay = tangent.make_layout("cube", padding=0.25, res=32)
    rows = [H // 2 - 1, H // 2]
    counts = tangent.coverage_mask(lay, W, H)[:, rows].sum(axis=0)
    np.testing.assert_array_equal(counts, brute_force_counts(lay, W, H, rows))
    theta, _ = erp.pix_to_sph(np.arange(W), 0, W, H)
    # longitudes within the padded overlap of two equatorial faces
    dist = np.abs(np.mod(theta + np.pi / 4, np.pi / 2) - np.pi / 4)
    near = np.abs(dist - np.pi / 4) < np.arctan(1.25) - np.pi / 4
    assert near.any()
    assert np.all(counts[:, near] >= 2)


def test_ico_full_coverage():
    lay = tangent.make_layout("icosahedron", padding=0.1, res=32)
    masks = tangent.coverage_mask(lay, 512, 256)
    assert masks.shape == (20, 256, 512)
    assert masks.any(axis=0).all()


def test_ico_unpadded_full_coverage():
    lay = tangent.make_layout("icosahedron", padding=0.0, res=32)
    assert tangent.coverage_mask(lay, 256, 128).any(axis=0).all()


def test_coverage_error_on_broken_layout():
    from panoflow.errors import CoverageError

    lay = tangent.make_layout("cube", padding=0.0, res=32)
    broken = tangent.TangentLayout("cube", 0.0, 32, 1.0, lay.patches[:5])
    with pytest.raises(CoverageError):
        tangent.coverage_mask(broken, 64, 32)
