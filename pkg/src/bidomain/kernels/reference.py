"""Pure-numpy implementation of the modal RHS kernel (fallback backend)."""

import numpy as np


def modal_rhs(psi, lam, wq, coeffs, alpha, beta, s_mod, dalpha, dbeta):
    """Same contract as the compiled kernel; see kernels/__init__.py."""
    u = psi @ alpha
    w = psi @ beta
    fc3, fc2, fc1, fw0, fw1, gc2, gc1, gw = coeffs
    f = ((fc3 * u + fc2) * u + fc1) * u + (fw0 + fw1 * u) * w
    g = (gc2 * u + gc1) * u + gw * w
    np.multiply(f, wq, out=f)
    np.multiply(g, wq, out=g)
    dalpha[:] = -lam * alpha + s_mod
    dalpha -= psi.T @ f
    dbeta[:] = psi.T @ g
    np.negative(dbeta, out=dbeta)
