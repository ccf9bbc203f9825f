# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused modal right-hand-side kernel.

Single pass over grid nodes: reconstruct the nodal fields from the modal
coefficients, evaluate the cubic reaction terms pointwise, and accumulate the
weighted projections back onto the basis.  Avoids the intermediate nodal
arrays the numpy fallback allocates.
"""


cpdef void modal_rhs(const double[:, ::1] psi,
                     const double[::1] lam,
                     const double[::1] wq,
                     const double[::1] coeffs,
                     const double[::1] alpha,
                     const double[::1] beta,
                     const double[::1] s_mod,
                     double[::1] dalpha,
                     double[::1] dbeta) noexcept nogil:
    cdef Py_ssize_t n = psi.shape[0]
    cdef Py_ssize_t m = psi.shape[1]
    cdef Py_ssize_t i, j
    cdef double u, w, p, fv, gv, fw_i, gw_i
    cdef double fc3 = coeffs[0], fc2 = coeffs[1], fc1 = coeffs[2]
    cdef double fw0 = coeffs[3], fw1 = coeffs[4]
    cdef double gc2 = coeffs[5], gc1 = coeffs[6], gw = coeffs[7]

    for j in range(m):
        dalpha[j] = -lam[j] * alpha[j] + s_mod[j]
        dbeta[j] = 0.0

    for i in range(n):
        u = 0.0
        w = 0.0
        for j in range(m):
            p = psi[i, j]
            u += p * alpha[j]
            w += p * beta[j]
        fv = ((fc3 * u + fc2) * u + fc1) * u + (fw0 + fw1 * u) * w
        gv = (gc2 * u + gc1) * u + gw * w
        fw_i = wq[i] * fv
        gw_i = wq[i] * gv
        for j in range(m):
            p = psi[i, j]
            dalpha[j] -= p * fw_i
            dbeta[j] -= p * gw_i
