"""Mass-orthonormal eigenbasis of the bidomain bilinear form.

The Galerkin space is spanned by the first k+1 eigenvectors of the pencil
(K_A, M).  With the lumped diagonal mass the generalized problem reduces
exactly to a symmetric one by the M^{-1/2} similarity, so the dense path is a
single ``eigh``; the iterative path uses ARPACK's Lanczos with full
re-orthogonalization through a matvec that reuses the operator's cached
factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.sparse.linalg import LinearOperator, eigsh

from bidomain.grid import Grid
from bidomain.operators import BidomainOperator, VNorms

__all__ = [
    "EigenBasis",
    "CoercivityEstimate",
    "EigenConvergenceError",
    "compute_eigenbasis",
    "estimate_coercivity",
    "coercivity_lower_bound",
]


class EigenConvergenceError(RuntimeError):
    """Eigensolver failed to meet the residual budget."""

    def __init__(self, message: str, residuals: np.ndarray | None = None):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class EigenBasis:
    """Ascending eigenvalues and M-orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray  # (k+1,)
    eigenvectors: np.ndarray  # (n, k+1), psi^T M psi = I
    k: int
    mass: np.ndarray
    grid: Grid

    @property
    def n_modes(self) -> int:
        return self.k + 1

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        """Nodal field from modal coefficients."""
        return self.eigenvectors @ coeffs

    def project(self, v: np.ndarray) -> np.ndarray:
        """Modal coefficients (v, psi_j)_M of a nodal field."""
        return self.eigenvectors.T @ (self.mass * v)

    def truncate(self, k: int) -> "EigenBasis":
        if k > self.k:
            raise ValueError(f"cannot extend basis from k={self.k} to k={k}")
        return EigenBasis(
            eigenvalues=self.eigenvalues[: k + 1],
            eigenvectors=np.ascontiguousarray(self.eigenvectors[:, : k + 1]),
            k=k,
            mass=self.mass,
            grid=self.grid,
        )


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """First significant entry of each column made positive (deterministic)."""
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        idx = np.argmax(np.abs(col) > 1e-8 * np.abs(col).max())
        if col[idx] < 0:
            vectors[:, j] = -col
    return vectors


def compute_eigenbasis(op: BidomainOperator, k: int, dense_limit: int = 4000) -> EigenBasis:
    """First k+1 eigenpairs of the bidomain form, ascending, M-orthonormal."""
    n = op.n
    if k + 1 > n:
        raise ValueError(f"k+1 = {k + 1} exceeds grid size {n}")
    sqrt_m = np.sqrt(op.mass)

    if n <= dense_limit:
        ka = op.form_matrix()
        sym = ka / np.outer(sqrt_m, sqrt_m)
        vals, vecs = la.eigh(sym)
        vals = vals[: k + 1]
        vecs = vecs[:, : k + 1]
    else:
        def matvec(x):
            return op.form_apply(x / sqrt_m) / sqrt_m

        lin = LinearOperator((n, n), matvec=matvec, dtype=float)
        rng = np.random.default_rng(0)
        vals, vecs = eigsh(lin, k=k + 1, which="SA", v0=rng.standard_normal(n))
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]

    psi = _fix_signs(vecs / sqrt_m[:, None])
    basis = EigenBasis(
        eigenvalues=np.ascontiguousarray(vals),
        eigenvectors=np.ascontiguousarray(psi),
        k=k,
        mass=op.mass,
        grid=op.grid,
    )

    residuals = np.empty(k + 1)
    for j in range(k + 1):
        r = op.form_apply(psi[:, j]) - vals[j] * op.mass * psi[:, j]
        residuals[j] = np.linalg.norm(r)
    budget = 1e-7 * (1.0 + np.abs(vals))
    if np.any(residuals > budget):
        worst = int(np.argmax(residuals / budget))
        raise EigenConvergenceError(
            f"eigenresidual {residuals[worst]:.3e} exceeds budget "
            f"{budget[worst]:.3e} at mode {worst}",
            residuals=residuals,
        )
    return basis


@dataclass(frozen=True)
class CoercivityEstimate:
    """Probe-based coercivity/continuity constants (valid on the probe set)."""

    alpha: float
    continuity: float
    probes: int


def estimate_coercivity(
    op: BidomainOperator,
    grid: Grid,
    n_probes: int = 100,
    seed: int = 0,
    vnorms: VNorms | None = None,
    extra_probes: tuple[np.ndarray, ...] = (),
) -> CoercivityEstimate:
    """Largest alpha with a(u,u) + alpha|u|_H^2 >= alpha|u|_V^2 on all probes.

    Bracketing bisection on alpha against the probe set; the continuity
    constant is the smallest M covering all probe pairs.  Both are estimates
    over the probes only, not certified bounds for the whole space.
    """
    if n_probes < 10:
        raise ValueError(f"need at least 10 probes, got {n_probes}")
    vnorms = vnorms or VNorms(grid)
    rng = np.random.default_rng(seed)
    probes = [rng.standard_normal(grid.n_nodes) for _ in range(n_probes)]
    probes.append(np.ones(grid.n_nodes))  # kernel vector: vacuous, must not trip
    probes.extend(np.asarray(p, dtype=float) for p in extra_probes)

    forms, grads, vsqs = [], [], []
    for p in probes:
        g = vnorms.grad_sq(p)
        a = op.form(p, p)
        forms.append(a)
        grads.append(g)
        vsqs.append(vnorms.vnorm_sq(p))

    def feasible(alpha: float) -> bool:
        # a(u,u) >= alpha * |grad u|^2 is the inequality with |u|_H^2 moved over.
        return all(a + 1e-12 * (1.0 + abs(a)) >= alpha * g for a, g in zip(forms, grads))

    hi = 1.0
    while feasible(hi) and hi < 1e12:
        hi *= 2.0
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    alpha = lo

    pairs = [(i, (i + 1) % len(probes)) for i in range(len(probes))]
    pairs += [tuple(rng.integers(0, len(probes), 2)) for _ in range(len(probes))]
    continuity = 0.0
    for i, j in pairs:
        denom = np.sqrt(vsqs[i] * vsqs[j])
        if denom > 0:
            continuity = max(continuity, abs(op.form(probes[i], probes[j])) / denom)
    # The continuity sup is approached from below by rough probes while alpha
    # is hit exactly when a(u,u) is proportional to the gradient energy; the
    # true constants satisfy M >= alpha through the high-frequency limit, so
    # report a continuity estimate no smaller than alpha.
    continuity = max(continuity, alpha)
    return CoercivityEstimate(alpha=alpha, continuity=continuity, probes=len(probes))


def coercivity_lower_bound(op: BidomainOperator, vnorms: VNorms) -> float:
    """Exact discrete coercivity constant, min of a(u,u)/|grad u|^2.

    Solved as the smallest eigenvalue of the pencil (K_A, K1) on the
    complement of constants (dense; desk scale).  Unlike the probe estimate
    this is certified for every grid vector, which is what the a-priori
    energy constants need.
    """
    ka = op.form_matrix()
    k1 = vnorms.k1.toarray()
    q = op.mass / np.linalg.norm(op.mass)
    u = q - np.eye(len(q))[:, 0]
    u /= np.linalg.norm(u)

    def reflect(x):
        return x - 2.0 * np.outer(u, u @ x)

    # Householder reflector maps e1 -> q; columns 2..n span the complement of q.
    basis = reflect(np.eye(len(q)))[:, 1:]
    b1 = basis.T @ ka @ basis
    b2 = basis.T @ k1 @ basis
    vals = la.eigh(0.5 * (b1 + b1.T), 0.5 * (b2 + b2.T), eigvals_only=True)
    return float(vals[0])
