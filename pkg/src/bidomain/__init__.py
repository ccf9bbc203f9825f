"""Discrete bidomain operators, Galerkin dynamics, and periodic orbits.

The package builds the spatial discretization of the two-conductivity cardiac
tissue model, the eigenbasis of its composed elliptic operator, the cubic
excitation models with machine-checkable dissipation certificates, and a
period-map fixed-point solver whose a-priori ball is certified numerically.
"""

from bidomain.conductivity import ConductivityField
from bidomain.dynamics import Forcing, GalerkinSystem, ModalState, Trajectory, integrate
from bidomain.eigenbasis import EigenBasis, compute_eigenbasis
from bidomain.grid import Grid, build_grid
from bidomain.ionic import AssumptionCertificate, IonicModel, Reaction, derive_certificate
from bidomain.operators import BidomainOperator, VNorms, assemble_elliptic
from bidomain.periodic import a_priori_radius, poincare_map, solve_periodic

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Grid", "build_grid", "ConductivityField",
    "BidomainOperator", "VNorms", "assemble_elliptic",
    "EigenBasis", "compute_eigenbasis",
    "IonicModel", "Reaction", "AssumptionCertificate", "derive_certificate",
    "ModalState", "Forcing", "GalerkinSystem", "Trajectory", "integrate",
    "poincare_map", "a_priori_radius", "solve_periodic",
]
