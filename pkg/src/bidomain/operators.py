"""Discrete elliptic operators and the composed bidomain operator.

Assembly discretizes u -> -div(sigma grad u) with the natural zero-flux
closure on a uniform tensor grid.  The ``stiffness`` matrix stored here is the
bilinear-form matrix: ``u @ K @ v`` equals the corner-quadrature of
``sigma grad u . grad v`` over the cells, which makes it symmetric, positive
semidefinite, and exactly zero on constants.  The nodal (strong) action of the
operator is ``K v / mass``; at a 1D boundary node this reproduces the
reflective ghost-node finite-difference row.

The composed operator applies A = A_i (A_i + A_e)^{-1} A_e P_av through one
cached factorization of the (singular) sum, regularized by a mean-zero
constraint row rather than a dense rank-one update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from bidomain.conductivity import isotropic_tensors
from bidomain.grid import Grid

__all__ = [
    "DiscreteOperator",
    "BidomainOperator",
    "VNorms",
    "assemble_elliptic",
    "mean_zero_project",
    "modified_source",
    "recover_potentials",
    "conservation_defect",
]


@dataclass(frozen=True)
class DiscreteOperator:
    """Sparse bilinear-form matrix plus the lumped (diagonal) mass."""

    stiffness: sp.csr_matrix
    mass: np.ndarray  # diagonal entries, = grid.quad_weights
    kind: str

    @property
    def n(self) -> int:
        return self.stiffness.shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Nodal operator action M^{-1} K v (the evolution-equation form)."""
        return (self.stiffness @ v) / self.mass

    def form(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(u @ (self.stiffness @ v))


def _assemble_1d(grid: Grid, tensors: np.ndarray) -> sp.csr_matrix:
    n = grid.counts[0]
    h = grid.spacing[0]
    s = tensors[:, 0, 0]
    c = 0.5 * (s[:-1] + s[1:]) / h  # cell conductivity / h
    i = np.arange(n - 1)
    rows = np.concatenate([i, i + 1, i, i + 1])
    cols = np.concatenate([i, i + 1, i + 1, i])
    vals = np.concatenate([c, c, -c, -c])
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def _assemble_2d(grid: Grid, tensors: np.ndarray) -> sp.csr_matrix:
    nx, ny = grid.counts
    hx, hy = grid.spacing
    n = nx * ny

    ix, iy = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    a = (ix * ny + iy).ravel()          # (ix,   iy)
    b = ((ix + 1) * ny + iy).ravel()    # (ix+1, iy)
    c = (ix * ny + iy + 1).ravel()      # (ix,   iy+1)
    d = ((ix + 1) * ny + iy + 1).ravel()

    sc = 0.25 * (tensors[a] + tensors[b] + tensors[c] + tensors[d])
    s11, s12, s22 = sc[:, 0, 0], sc[:, 0, 1], sc[:, 1, 1]
    wc = 0.25 * hx * hy  # corner quadrature weight per cell

    rows, cols, vals = [], [], []

    def add(r, co, v):
        rows.append(r)
        cols.append(co)
        vals.append(v)

    # Corner gradients use the two cell edges incident to that corner, so each
    # corner sees an SPD local form and constants stay in the kernel.
    corners = [
        ((b, a), (c, a)),  # at A: x-edge B-A, y-edge C-A
        ((b, a), (d, b)),  # at B
        ((d, c), (c, a)),  # at C
        ((d, c), (d, b)),  # at D
    ]
    cxx = wc * s11 / hx**2
    cyy = wc * s22 / hy**2
    cxy = wc * s12 / (hx * hy)
    for (xp, xm), (yp, ym) in corners:
        add(xp, xp, cxx), add(xm, xm, cxx), add(xp, xm, -cxx), add(xm, xp, -cxx)
        add(yp, yp, cyy), add(ym, ym, cyy), add(yp, ym, -cyy), add(ym, yp, -cyy)
        for (p, q), sign in [
            ((xp, yp), 1.0), ((xp, ym), -1.0), ((xm, yp), -1.0), ((xm, ym), 1.0),
        ]:
            add(p, q, sign * cxy)
            add(q, p, sign * cxy)

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def assemble_elliptic(grid: Grid, tensors: np.ndarray, kind: str = "elliptic") -> DiscreteOperator:
    """Assemble the zero-flux elliptic form for a per-node tensor field."""
    tensors = np.asarray(tensors, dtype=float)
    expected = (grid.n_nodes, grid.dimension, grid.dimension)
    if tensors.shape != expected:
        raise ValueError(f"tensor field shape {tensors.shape}, expected {expected}")
    if grid.dimension == 1:
        stiffness = _assemble_1d(grid, tensors)
    else:
        stiffness = _assemble_2d(grid, tensors)
    return DiscreteOperator(stiffness=stiffness, mass=grid.quad_weights, kind=kind)


def mean_zero_project(v: np.ndarray, grid: Grid) -> np.ndarray:
    """Remove the quadrature mean: P_av v = v - (1/|Omega|) int v."""
    v = np.asarray(v, dtype=float)
    if v.shape != (grid.n_nodes,):
        raise ValueError(f"vector length {v.shape} does not match grid ({grid.n_nodes})")
    return v - grid.mean(v)


class BidomainOperator:
    """A = A_i (A_i + A_e)^{-1} A_e P_av with a cached sum factorization.

    The inverse of the sum is realized on the mean-zero complement by one LU
    factorization of the bordered system [[K_i+K_e, q], [q^T, 0]] with q the
    quadrature weights; the constraint row pins the weighted mean of the
    solution to zero and absorbs (projects away) any mean in the load.
    """

    def __init__(self, ai: DiscreteOperator, ae: DiscreteOperator, grid: Grid):
        if ai.n != ae.n or ai.n != grid.n_nodes:
            raise ValueError("operator/grid size mismatch")
        self.ai = ai
        self.ae = ae
        self.grid = grid
        self.mass = grid.quad_weights
        ksum = (ai.stiffness + ae.stiffness).tocsr()
        q = sp.csc_matrix(self.mass.reshape(-1, 1))
        bordered = sp.bmat([[ksum, q], [q.T, None]], format="csc")
        try:
            self._lu = splu(bordered)
        except RuntimeError as exc:
            raise RuntimeError(
                "factorization of (A_i + A_e) failed; check ellipticity "
                f"and assembly ({exc})"
            ) from exc

    @property
    def n(self) -> int:
        return self.grid.n_nodes

    def solve_sum(self, b: np.ndarray) -> np.ndarray:
        """Solve (K_i + K_e) z = b with weighted-mean-zero z.

        A load with nonzero total is implicitly replaced by its mean-zero
        projection (the multiplier row absorbs the mean).
        """
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            rhs = np.concatenate([b, [0.0]])
            return self._lu.solve(rhs)[:-1]
        rhs = np.vstack([b, np.zeros((1, b.shape[1]))])
        return self._lu.solve(rhs)[:-1]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Nodal action A v; the result has quadrature mean zero."""
        v0 = mean_zero_project(v, self.grid)
        z = self.solve_sum(self.ae.stiffness @ v0)
        return (self.ai.stiffness @ z) / self.mass

    def form_apply(self, v: np.ndarray) -> np.ndarray:
        """Load-vector action K_A v = M A v (no mass division)."""
        v0 = mean_zero_project(v, self.grid)
        z = self.solve_sum(self.ae.stiffness @ v0)
        return self.ai.stiffness @ z

    def form(self, u: np.ndarray, v: np.ndarray) -> float:
        """The bidomain bilinear form a(u, v)."""
        return float(u @ self.form_apply(v))

    def form_matrix(self) -> np.ndarray:
        """Dense bilinear-form matrix K_A = K_e - K_e (K_i+K_e)^{-1} K_e.

        Symmetrized to scrub factorization round-off; intended for the dense
        eigensolver path at desk scale.
        """
        ke = self.ae.stiffness.toarray()
        z = self.solve_sum(ke)
        ka = ke - ke @ z
        return 0.5 * (ka + ka.T)


def conservation_defect(s_i: np.ndarray, s_e: np.ndarray, grid: Grid) -> float:
    """Total current int (s_i + s_e); zero under conservation of currents."""
    return grid.integral(s_i + s_e)


def modified_source(s_i: np.ndarray, s_e: np.ndarray, op: BidomainOperator) -> np.ndarray:
    """Reduced forcing s = s_i - A_i (A_i + A_e)^{-1} (s_i + s_e).

    A non-conserving pair (nonzero total current) is projected to mean zero
    before the solve; use ``conservation_defect`` to surface the dropped mean.
    """
    total = mean_zero_project(s_i + s_e, op.grid)
    z = op.solve_sum(op.mass * total)
    return s_i - (op.ai.stiffness @ z) / op.mass


def recover_potentials(
    u: np.ndarray, s_i: np.ndarray, s_e: np.ndarray, op: BidomainOperator
) -> tuple[np.ndarray, np.ndarray]:
    """Recover (u_i, u_e) from the transmembrane potential and the sources."""
    total = mean_zero_project(s_i + s_e, op.grid)
    b = op.mass * total - op.ai.stiffness @ mean_zero_project(u, op.grid)
    u_e = op.solve_sum(b)
    return u + u_e, u_e


class VNorms:
    """Discrete H^1/L^2/L^4 norms and the dual norm via the Riesz solve.

    The gradient seminorm is realized through the unit-coefficient stiffness
    K1, so ``vnorm_sq(u) = u M u + u K1 u``.  The dual norm solves the Riesz
    problem once per evaluation: ``dual_sq(s) = (Ms) . (K1+M)^{-1} (Ms)``.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        self.mass = grid.quad_weights
        self.k1 = assemble_elliptic(grid, isotropic_tensors(grid, 1.0), kind="unit").stiffness
        self._riesz = splu((self.k1 + sp.diags(self.mass)).tocsc())

    def l2_sq(self, v: np.ndarray) -> float:
        return float(self.mass @ (v * v))

    def l4_pow4(self, v: np.ndarray) -> float:
        return float(self.mass @ (v**4))

    def grad_sq(self, v: np.ndarray) -> float:
        return float(v @ (self.k1 @ v))

    def vnorm_sq(self, v: np.ndarray) -> float:
        return self.l2_sq(v) + self.grad_sq(v)

    def riesz(self, s: np.ndarray) -> np.ndarray:
        """Representer z with (z, v)_V = (s, v)_M for all grid vectors v."""
        return self._riesz.solve(self.mass * s)

    def dual_sq(self, s: np.ndarray) -> float:
        return float((self.mass * s) @ self.riesz(s))
