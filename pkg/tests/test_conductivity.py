import numpy as np
import pytest

from bidomain.conductivity import (
    ConductivityField,
    diagonal_tensors,
    isotropic_tensors,
    tensors_from_csv,
)
from bidomain.grid import build_grid


@pytest.fixture
def grid2d():
    return build_grid(2, (1.0, 1.0), (5, 5))


def test_isotropic_field_valid(grid2d):
    field = ConductivityField.create(
        grid2d, isotropic_tensors(grid2d, 1.0), isotropic_tensors(grid2d, 3.0)
    )
    assert field.ellipticity_lo == pytest.approx(1.0)
    assert field.ellipticity_hi == pytest.approx(3.0)


def test_asymmetric_tensor_rejected(grid2d):
    bad = isotropic_tensors(grid2d, 1.0)
    bad[3, 0, 1] = 0.5  # only one off-diagonal entry
    with pytest.raises(ValueError, match="symmetric"):
        ConductivityField.create(grid2d, bad, isotropic_tensors(grid2d, 1.0))


def test_ellipticity_bounds_enforced(grid2d):
    sig = isotropic_tensors(grid2d, 1.0)
    with pytest.raises(ValueError, match="ellipticity"):
        ConductivityField.create(grid2d, sig, isotropic_tensors(grid2d, 5.0), lo=1.0, hi=2.0)


def test_boundary_anisotropy_rejected(grid2d):
    sig = isotropic_tensors(grid2d, 2.0)
    sig[:, 0, 1] = sig[:, 1, 0] = 0.3  # everywhere, including the boundary
    with pytest.raises(ValueError, match="boundary"):
        ConductivityField.create(grid2d, sig, isotropic_tensors(grid2d, 2.0))


def test_interior_anisotropy_allowed(grid2d):
    sig = isotropic_tensors(grid2d, 2.0)
    interior = ~grid2d.boundary_mask()
    sig[interior, 0, 1] = sig[interior, 1, 0] = 0.3
    field = ConductivityField.create(grid2d, sig, isotropic_tensors(grid2d, 2.0))
    assert field.ellipticity_lo == pytest.approx(1.7)


def test_closed_form_eigenvalues_match_dense(grid2d, rng):
    # random symmetric 2x2 tensors; compare the closed form with eigvalsh
    n = grid2d.n_nodes
    sig = np.zeros((n, 2, 2))
    sig[:, 0, 0] = 2.0 + rng.uniform(0, 1, n)
    sig[:, 1, 1] = 2.0 + rng.uniform(0, 1, n)
    off = rng.uniform(-0.5, 0.5, n)
    off[grid2d.boundary_mask()] = 0.0
    sig[:, 0, 1] = sig[:, 1, 0] = off
    field = ConductivityField.create(grid2d, sig, sig)
    dense = np.linalg.eigvalsh(sig)
    assert field.ellipticity_lo == pytest.approx(dense.min(), abs=1e-12)
    assert field.ellipticity_hi == pytest.approx(dense.max(), abs=1e-12)


def test_diagonal_tensors():
    g = build_grid(2, (1.0, 1.0), (3, 3))
    sig = diagonal_tensors(g, (1.0, 4.0))
    assert sig[0, 0, 0] == 1.0 and sig[0, 1, 1] == 4.0 and sig[0, 0, 1] == 0.0


def test_csv_round_trip(tmp_path):
    g = build_grid(1, 1.0, 5)
    path = tmp_path / "sig.csv"
    x = g.axis_coords(0)
    values = 1.0 + 0.5 * x
    lines = ["x,s11"] + [f"{xi},{vi}" for xi, vi in zip(x, values)]
    path.write_text("\n".join(lines))
    sig = tensors_from_csv(g, path)
    np.testing.assert_allclose(sig[:, 0, 0], values)


def test_csv_coordinate_mismatch(tmp_path):
    g = build_grid(1, 1.0, 5)
    path = tmp_path / "sig.csv"
    path.write_text("x,s11\n0.0,1\n0.3,1\n0.5,1\n0.75,1\n1.0,1\n")
    with pytest.raises(ValueError, match="coordinates"):
        tensors_from_csv(g, path)
