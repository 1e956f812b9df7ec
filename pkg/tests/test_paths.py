import numpy as np
import pytest

from ptigp.paths import LoopPath, latitude_loop, polyline


def test_latitude_loop_shape_and_closure():
    p = latitude_loop(0.7, 100)
    assert len(p) == 101
    assert p.closed
    np.testing.assert_allclose(p.points[:, 0], 0.7)
    assert p.points[-1, 1] == pytest.approx(2 * np.pi)
    assert p.tau == pytest.approx(2 * np.pi)


def test_points_are_read_only():
    p = latitude_loop(0.7, 16)
    with pytest.raises(ValueError):
        p.points[0, 0] = 1.0


def test_rejects_bad_times_and_open_loop():
    with pytest.raises(ValueError):
        LoopPath([[0, 0], [1, 1]], [0.0, 0.0])
    with pytest.raises(ValueError):
        LoopPath([[0, 0], [1, 1]], [0.0, 1.0], closed=True)
    with pytest.raises(ValueError):
        LoopPath([[0, np.nan], [1, 1]], [0.0, 1.0])


def test_spline_position_and_velocity():
    p = latitude_loop(1.0, 400, tau=4.0)
    np.testing.assert_allclose(p.position(2.0), [1.0, np.pi], atol=1e-12)
    np.testing.assert_allclose(p.velocity(1.3), [0.0, 2 * np.pi / 4.0], atol=1e-9)


def test_rescaled_and_every():
    p = latitude_loop(1.0, 40)
    q = p.rescaled(3.0)
    assert q.tau == pytest.approx(3 * p.tau)
    assert len(p.every(2)) == 21
    with pytest.raises(ValueError):
        p.every(3)


def test_prefix_is_open():
    p = latitude_loop(1.0, 40).prefix(10)
    assert len(p) == 10 and not p.closed


def test_polyline_uniform_arclength_and_closure_detection():
    sq = [[0.5, 0.0], [1.0, 0.0], [1.0, 1.0], [0.5, 1.0], [0.5, 0.0]]
    p = polyline(sq, samples=400)
    assert p.closed
    steps = np.linalg.norm(np.diff(p.points, axis=0), axis=1)
    # corners shorten a step; away from them the spacing is uniform
    assert np.median(steps) == pytest.approx(3.0 / 400, rel=1e-9)
    assert not polyline([[0.5, 0], [1.0, 0]], samples=10).closed
    with pytest.raises(ValueError):
        polyline([[0, 0], [0, 0], [1, 1]])
