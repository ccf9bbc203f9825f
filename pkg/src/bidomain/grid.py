"""Uniform tensor-product meshes with trapezoid quadrature.

The grid is the discrete stand-in for the rectangular tissue domain: nodes
carry trapezoid quadrature weights (half weight per touching boundary axis),
so nodal sums against the weights reproduce integrals to second order and the
diagonal of the weights acts as a lumped mass matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Grid", "build_grid"]


@dataclass(frozen=True)
class Grid:
    """1D or 2D uniform mesh; nodes ordered C-style (last axis fastest)."""

    dimension: int
    extents: tuple[float, ...]
    counts: tuple[int, ...]
    spacing: tuple[float, ...]
    quad_weights: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.counts))

    @property
    def measure(self) -> float:
        """Domain measure |Omega| = product of extents."""
        return float(np.prod(self.extents))

    def axis_coords(self, axis: int) -> np.ndarray:
        return np.linspace(0.0, self.extents[axis], self.counts[axis])

    def node_coords(self) -> np.ndarray:
        """All node coordinates, shape (n_nodes, dimension)."""
        axes = [self.axis_coords(d) for d in range(self.dimension)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def boundary_axis_mask(self, axis: int) -> np.ndarray:
        """Boolean mask of nodes lying on either face normal to `axis`."""
        idx = np.indices(self.counts)[axis].ravel()
        return (idx == 0) | (idx == self.counts[axis] - 1)

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_nodes, dtype=bool)
        for d in range(self.dimension):
            mask |= self.boundary_axis_mask(d)
        return mask

    def integral(self, v: np.ndarray) -> float:
        return float(self.quad_weights @ v)

    def mean(self, v: np.ndarray) -> float:
        return self.integral(v) / self.measure


def _axis_weights(count: int, h: float) -> np.ndarray:
    w = np.full(count, h)
    w[0] = w[-1] = 0.5 * h
    return w


def build_grid(dimension: int, extents, counts) -> Grid:
    """Build a uniform grid with trapezoid quadrature weights.

    Scalars are accepted for 1D convenience.  Each axis needs at least three
    nodes so the second-order interior stencil exists.
    """
    if dimension not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {dimension}")
    extents = tuple(float(e) for e in np.atleast_1d(extents))
    counts = tuple(int(c) for c in np.atleast_1d(counts))
    if len(extents) != dimension or len(counts) != dimension:
        raise ValueError(
            f"extents/counts must have length {dimension}, "
            f"got {len(extents)} and {len(counts)}"
        )
    if any(e <= 0 for e in extents):
        raise ValueError(f"extents must be positive, got {extents}")
    if any(c < 3 for c in counts):
        raise ValueError(f"need at least 3 nodes per axis, got {counts}")

    spacing = tuple(e / (c - 1) for e, c in zip(extents, counts))
    weights = _axis_weights(counts[0], spacing[0])
    for d in range(1, dimension):
        weights = np.multiply.outer(weights, _axis_weights(counts[d], spacing[d]))
    return Grid(
        dimension=dimension,
        extents=extents,
        counts=counts,
        spacing=spacing,
        quad_weights=np.ascontiguousarray(weights.ravel()),
    )
