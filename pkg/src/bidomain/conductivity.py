"""Per-node conductivity tensor fields and their admissibility checks.

Both tissue compartments carry a symmetric positive-definite tensor at every
node.  Admissibility means uniform ellipticity within declared bounds and, at
boundary nodes, tensors that map the outward axis direction to a multiple of
itself (the discrete form of the co-normal/normal equivalence the model
assumes).  On an axis-aligned box that condition is: off-diagonal entries
vanish at boundary nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bidomain.grid import Grid

__all__ = [
    "ConductivityField",
    "isotropic_tensors",
    "diagonal_tensors",
    "tensors_from_csv",
]


def _tensor_eig_bounds(tensors: np.ndarray) -> tuple[float, float]:
    """Extreme eigenvalues over a (n, d, d) symmetric tensor field.

    Uses the closed form for d <= 2, which doubles as the testable contract.
    """
    d = tensors.shape[1]
    if d == 1:
        vals = tensors[:, 0, 0]
        return float(vals.min()), float(vals.max())
    a = tensors[:, 0, 0]
    b = tensors[:, 1, 1]
    c = tensors[:, 0, 1]
    half_trace = 0.5 * (a + b)
    radius = np.sqrt(0.25 * (a - b) ** 2 + c**2)
    return float((half_trace - radius).min()), float((half_trace + radius).max())


def _validate_tensors(grid: Grid, tensors: np.ndarray, lo: float, hi: float, name: str):
    n, d = grid.n_nodes, grid.dimension
    if tensors.shape != (n, d, d):
        raise ValueError(f"{name}: expected shape {(n, d, d)}, got {tensors.shape}")
    asym = np.abs(tensors - np.transpose(tensors, (0, 2, 1))).max()
    if asym > 1e-12 * max(1.0, np.abs(tensors).max()):
        raise ValueError(f"{name}: tensors not symmetric (max asymmetry {asym:.3e})")
    emin, emax = _tensor_eig_bounds(tensors)
    if emin < lo - 1e-12 or emax > hi + 1e-12:
        raise ValueError(
            f"{name}: eigenvalues [{emin:.6g}, {emax:.6g}] escape "
            f"the declared ellipticity range [{lo:.6g}, {hi:.6g}]"
        )
    if d == 2:
        for axis in range(2):
            mask = grid.boundary_axis_mask(axis)
            off = np.abs(tensors[mask, 0, 1]).max() if mask.any() else 0.0
            if off > 1e-12 * max(1.0, np.abs(tensors).max()):
                raise ValueError(
                    f"{name}: boundary nodes on axis {axis} carry off-diagonal "
                    f"entries (max {off:.3e}); the zero-flux closure requires "
                    "axis-aligned tensors on the boundary"
                )


@dataclass(frozen=True)
class ConductivityField:
    """Intra- and extracellular tensor fields with ellipticity bounds."""

    sigma_i: np.ndarray  # (n, d, d)
    sigma_e: np.ndarray  # (n, d, d)
    ellipticity_lo: float
    ellipticity_hi: float

    @classmethod
    def create(cls, grid: Grid, sigma_i: np.ndarray, sigma_e: np.ndarray,
               lo: float | None = None, hi: float | None = None) -> "ConductivityField":
        """Validate and wrap two tensor fields; bounds default to the spectra."""
        sigma_i = np.asarray(sigma_i, dtype=float)
        sigma_e = np.asarray(sigma_e, dtype=float)
        if lo is None or hi is None:
            lo_i, hi_i = _tensor_eig_bounds(sigma_i)
            lo_e, hi_e = _tensor_eig_bounds(sigma_e)
            lo = min(lo_i, lo_e) if lo is None else lo
            hi = max(hi_i, hi_e) if hi is None else hi
        if not (0.0 < lo <= hi):
            raise ValueError(f"need 0 < lo <= hi, got lo={lo}, hi={hi}")
        _validate_tensors(grid, sigma_i, lo, hi, "sigma_i")
        _validate_tensors(grid, sigma_e, lo, hi, "sigma_e")
        return cls(sigma_i, sigma_e, float(lo), float(hi))


def isotropic_tensors(grid: Grid, value: float) -> np.ndarray:
    """Constant isotropic tensor field value * I at every node."""
    d = grid.dimension
    return np.broadcast_to(value * np.eye(d), (grid.n_nodes, d, d)).copy()


def diagonal_tensors(grid: Grid, diag) -> np.ndarray:
    """Constant diagonal tensor field from per-axis values."""
    d = grid.dimension
    diag = np.atleast_1d(np.asarray(diag, dtype=float))
    if diag.shape != (d,):
        raise ValueError(f"expected {d} diagonal values, got {diag.shape}")
    return np.broadcast_to(np.diag(diag), (grid.n_nodes, d, d)).copy()


def tensors_from_csv(grid: Grid, path) -> np.ndarray:
    """Load a per-node tensor field from CSV.

    Columns: ``x,s11`` in 1D or ``x,y,s11,s12,s22`` in 2D, one row per node in
    grid node order; coordinates are checked against the grid.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n, d = grid.n_nodes, grid.dimension
    ncols = d + (1 if d == 1 else 3)
    if data.shape != (n, ncols):
        raise ValueError(
            f"{path}: expected {n} rows x {ncols} columns, got {data.shape}"
        )
    coords = grid.node_coords()
    if np.abs(data[:, :d] - coords).max() > 1e-9 * max(grid.extents):
        raise ValueError(f"{path}: node coordinates do not match the grid")
    tensors = np.zeros((n, d, d))
    if d == 1:
        tensors[:, 0, 0] = data[:, 1]
    else:
        tensors[:, 0, 0] = data[:, 2]
        tensors[:, 0, 1] = tensors[:, 1, 0] = data[:, 3]
        tensors[:, 1, 1] = data[:, 4]
    return tensors
