import numpy as np
import pytest

from panoflow import synth


def smooth_erp(W, seed=0):
    """Textured ERP raster (H, W, 3) rendered from the sphere scene."""
    scene = synth.SceneSpec("sphere_texture", seed=seed)
    return synth.render_erp(scene, synth.rotation_pose(), W)


@pytest.fixture(scope="session")
def erp256():
    return smooth_erp(256)


@pytest.fixture(scope="session")
def erp512():
    return smooth_erp(512)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_rotation(rng, max_angle):
    axis = rng.normal(size=3)
    from panoflow.sphere import axis_angle

    return axis_angle(axis, rng.uniform(0.0, max_angle))


def exact_face_flow(patch, R):
    """Raster flow of rotation ``R`` projected into ``patch``'s own plane."""
    from panoflow.sphere import rotate

    row, col = np.mgrid[0 : patch.res, 0 : patch.res].astype(np.float64)
    end = rotate(R, patch.raster_dirs())
    x, y, _ = patch.dir_to_plane(end)
    c1, r1 = patch.plane_to_raster(x, y)
    return np.stack([c1 - col, r1 - row], axis=-1)


ACCEPTANCE = []


def record_criterion(number, ok, detail):
    """Log one acceptance line; printed again in the terminal summary."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
