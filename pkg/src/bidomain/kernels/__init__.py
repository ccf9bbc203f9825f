"""Modal RHS kernels: compiled core with a pure-numpy fallback.

``modal_rhs(psi, lam, wq, coeffs, alpha, beta, s_mod, dalpha, dbeta)``
evaluates, in place,

    dalpha[j] = -lam[j]*alpha[j] - sum_i wq[i]*f(u_i, w_i)*psi[i,j] + s_mod[j]
    dbeta[j]  =                  - sum_i wq[i]*g(u_i, w_i)*psi[i,j]

with the nodal fields u = psi @ alpha, w = psi @ beta and the reaction pair

    f(u, w) = coeffs[0]*u^3 + coeffs[1]*u^2 + coeffs[2]*u
              + (coeffs[3] + coeffs[4]*u)*w
    g(u, w) = coeffs[5]*u^2 + coeffs[6]*u + coeffs[7]*w

which covers the cubic excitation models and the linear test surrogates.
Set ``BIDOMAIN_PYTHON_KERNELS=1`` to force the numpy backend.
"""

import os

from bidomain.kernels import reference

if os.environ.get("BIDOMAIN_PYTHON_KERNELS", "") == "1":
    _impl = reference
    BACKEND = "python"
else:
    try:
        from bidomain.kernels import _rhs as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = reference
        BACKEND = "python"

modal_rhs = _impl.modal_rhs

__all__ = ["BACKEND", "modal_rhs", "reference"]
