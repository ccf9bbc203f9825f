import numpy as np
import pytest

from bidomain.grid import build_grid


def test_1d_trapezoid_weights():
    g = build_grid(1, 1.0, 5)
    h = 0.25
    assert g.spacing == (h,)
    np.testing.assert_allclose(g.quad_weights, [h / 2, h, h, h, h / 2])
    assert abs(g.quad_weights.sum() - 1.0) < 1e-15


def test_2d_tensor_weights():
    g = build_grid(2, (1.0, 1.0), (3, 3))
    h2 = 0.25
    w = g.quad_weights.reshape(3, 3)
    assert w[0, 0] == pytest.approx(h2 / 4)
    assert w[0, 1] == pytest.approx(h2 / 2)
    assert w[1, 1] == pytest.approx(h2)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("dim,extents,counts", [
    (1, 2.5, 17), (1, 0.3, 101), (2, (2.0, 0.5), (9, 13)),
])
def test_weights_sum_to_measure(dim, extents, counts):
    g = build_grid(dim, extents, counts)
    assert abs(g.quad_weights.sum() - g.measure) <= 1e-12 * g.measure


def test_too_few_nodes_rejected():
    with pytest.raises(ValueError, match="3 nodes"):
        build_grid(1, 1.0, 2)


def test_bad_inputs_rejected():
    with pytest.raises(ValueError):
        build_grid(3, (1, 1, 1), (4, 4, 4))
    with pytest.raises(ValueError, match="positive"):
        build_grid(1, -1.0, 5)
    with pytest.raises(ValueError, match="length"):
        build_grid(2, (1.0,), (5, 5))


def test_node_coords_and_masks():
    g = build_grid(2, (1.0, 2.0), (3, 5))
    coords = g.node_coords()
    assert coords.shape == (15, 2)
    # C-order: last axis (y) fastest
    np.testing.assert_allclose(coords[1], [0.0, 0.5])
    np.testing.assert_allclose(coords[5], [0.5, 0.0])
    assert g.boundary_axis_mask(0).sum() == 2 * 5
    assert g.boundary_mask().sum() == 15 - 3  # all but the interior column


def test_integral_and_mean():
    g = build_grid(1, 2.0, 9)
    x = g.axis_coords(0)
    # trapezoid rule is exact for linear integrands
    assert g.integral(x) == pytest.approx(2.0, abs=1e-14)
    assert g.mean(np.full(9, 3.0)) == pytest.approx(3.0, abs=1e-14)
