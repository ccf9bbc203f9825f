import numpy as np
import pytest

from bidomain import kernels
from bidomain.kernels import reference

try:
    from bidomain.kernels import _rhs as compiled
except ImportError:
    compiled = None


def _random_problem(rng, n=65, m=17):
    psi = np.ascontiguousarray(rng.standard_normal((n, m)))
    lam = np.abs(rng.standard_normal(m))
    wq = np.abs(rng.standard_normal(n)) / n
    coeffs = rng.standard_normal(8)
    alpha = rng.standard_normal(m)
    beta = rng.standard_normal(m)
    s_mod = rng.standard_normal(m)
    return psi, lam, wq, coeffs, alpha, beta, s_mod


def _call(impl, args):
    m = args[4].shape[0]
    da, db = np.empty(m), np.empty(m)
    impl.modal_rhs(*args, da, db)
    return da, db


def test_reference_matches_direct_formula(rng):
    psi, lam, wq, coeffs, alpha, beta, s_mod = args = _random_problem(rng)
    da, db = _call(reference, args)
    u = psi @ alpha
    w = psi @ beta
    fc3, fc2, fc1, fw0, fw1, gc2, gc1, gw = coeffs
    f = fc3 * u**3 + fc2 * u**2 + fc1 * u + (fw0 + fw1 * u) * w
    g = gc2 * u**2 + gc1 * u + gw * w
    np.testing.assert_allclose(da, -lam * alpha - psi.T @ (wq * f) + s_mod, atol=1e-12)
    np.testing.assert_allclose(db, -psi.T @ (wq * g), atol=1e-12)


@pytest.mark.skipif(compiled is None, reason="compiled kernel unavailable")
def test_backends_agree(rng):
    for _ in range(5):
        args = _random_problem(rng)
        da_ref, db_ref = _call(reference, args)
        da_cmp, db_cmp = _call(compiled, args)
        scale = max(1.0, np.abs(da_ref).max())
        np.testing.assert_allclose(da_cmp, da_ref, atol=1e-12 * scale)
        np.testing.assert_allclose(db_cmp, db_ref, atol=1e-12 * scale)


def test_zero_reaction_is_linear_decay(rng):
    psi, lam, wq, _, alpha, beta, s_mod = _random_problem(rng)
    args = (psi, lam, wq, np.zeros(8), alpha, beta, s_mod)
    da, db = _call(kernels, args)
    np.testing.assert_allclose(da, -lam * alpha + s_mod, atol=1e-14)
    np.testing.assert_allclose(db, 0.0, atol=1e-14)


def test_active_backend_exposed():
    assert kernels.BACKEND in ("compiled", "python")
    assert callable(kernels.modal_rhs)
