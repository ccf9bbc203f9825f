"""Period map, a-priori ball, and fixed-point search for periodic orbits.

The period-T flow map S of the modal system is evaluated by the adaptive
integrator; its fixed points are T-periodic solutions.  The a-priori radius R
is the self-mapping radius the energy estimate guarantees, so sampling the
ball of radius R and checking that S maps it inside validates the whole
constant pipeline, independent of whether the fixed-point iteration is used.

Fixed points are found by Picard iteration x <- S(x), optionally with a
limited-memory residual extrapolation (Anderson-style), and with a damped
fallback for near-neutral modes.  Everything is measured in the weighted norm
sqrt(r |a|^2 + |b|^2), the norm the energy estimate actually controls; the
additively weighted ball r|a| + |b| <= R differs from it only by equivalent
norm factors (sqrt(min(r,1)) to sqrt(2 max(r,1))) and is not used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from bidomain.dynamics import (
    EnergyConstants,
    Forcing,
    GalerkinSystem,
    ModalState,
    Trajectory,
    integrate,
)

__all__ = [
    "PeriodicSolveReport",
    "BallTestReport",
    "PicardDivergenceError",
    "poincare_map",
    "a_priori_radius",
    "ball_invariance_test",
    "solve_periodic",
    "sample_weighted_ball",
]


class PicardDivergenceError(RuntimeError):
    """Iterates escaped the divergence guard; history attached."""

    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = history


def poincare_map(
    system: GalerkinSystem,
    state: ModalState,
    tol: float = 1e-10,
    scheme: str = "dopri5",
) -> ModalState:
    """One application of the period map: integrate over [t, t + T]."""
    T = system.forcing.period
    traj = integrate(system, state, state.time + T, tol=tol, scheme=scheme, n_samples=2)
    end = traj.final_state
    # re-base as initial data at the same phase (the forcing is T-periodic)
    return ModalState(end.alpha, end.beta, state.time)


def a_priori_radius(forcing: Forcing, constants: EnergyConstants, r: float | None = None) -> float:
    """Radius of the ball the period map provably maps into itself.

    R^2 = int_0^T e^{-C21 (T-tau)} (C22 |s(tau)|^2 + C23) dtau / (1 - e^{-C21 T}),
    in the weighted norm with the certificate weight r (recorded, the formula
    itself does not depend on it).
    """
    del r
    c21, c22, c23 = constants.C21, constants.C22, constants.C23
    if c21 <= 0:
        raise ValueError("C21 must be positive (coercivity constants invalid)")
    T = forcing.period

    def integrand(tau):
        return math.exp(-c21 * (T - tau)) * (c22 * forcing.dual_norm_sq(tau) + c23)

    edges = [0.0, *forcing.quad_points(0.0, T), T]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(integrand, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
        total += val
    return math.sqrt(total / (1.0 - math.exp(-c21 * T)))


def sample_weighted_ball(
    rng: np.random.Generator,
    n_modes: int,
    radius: float,
    r_weight: float,
    n_samples: int,
    surface_fraction: float = 0.5,
) -> list[ModalState]:
    """States with weighted norm == R (surface) or <= R (interior)."""
    states = []
    n_surface = int(round(surface_fraction * n_samples))
    for i in range(n_samples):
        g = rng.standard_normal(2 * n_modes)
        g /= np.linalg.norm(g)
        if i >= n_surface:
            g *= rng.uniform() ** (1.0 / (2 * n_modes))
        alpha = radius * g[:n_modes] / math.sqrt(r_weight)
        beta = radius * g[n_modes:]
        states.append(ModalState(alpha, beta))
    return states


@dataclass(frozen=True)
class BallTestReport:
    radius: float
    max_image_norm: float
    image_norms: np.ndarray
    passed: bool


def ball_invariance_test(
    system: GalerkinSystem,
    radius: float,
    n_samples: int,
    r_weight: float,
    tol_factor: float = 1e-3,
    integrator_tol: float = 1e-10,
    scheme: str = "dopri5",
    seed: int = 0,
) -> BallTestReport:
    """Map sampled ball states through S and compare image norms against R."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    states = sample_weighted_ball(rng, system.m, radius, r_weight, n_samples)
    norms = np.empty(n_samples)
    for i, x in enumerate(states):
        image = poincare_map(system, x, tol=integrator_tol, scheme=scheme)
        norms[i] = image.weighted_norm(r_weight)
    max_norm = float(norms.max())
    return BallTestReport(
        radius=radius,
        max_image_norm=max_norm,
        image_norms=norms,
        passed=max_norm <= radius * (1.0 + tol_factor),
    )


def _extrapolate(xs: list[np.ndarray], gs: list[np.ndarray]) -> np.ndarray | None:
    """Limited-memory residual extrapolation over the stored iterate window.

    Least-squares combination of the residuals f_i = g_i - x_i; falls back to
    plain iteration (returns None) when the residual differences are too
    ill-conditioned to trust.
    """
    n = len(xs)
    if n < 2:
        return None
    f = [g - x for g, x in zip(gs, xs)]
    df = np.column_stack([f[i + 1] - f[i] for i in range(n - 1)])
    dg = np.column_stack([gs[i + 1] - gs[i] for i in range(n - 1)])
    theta, *_ = np.linalg.lstsq(df, f[-1], rcond=1e-12)
    if not np.all(np.isfinite(theta)) or np.linalg.norm(theta) > 1e6:
        return None
    return gs[-1] - dg @ theta


@dataclass
class PeriodicSolveReport:
    fixed_point: ModalState
    residual: float
    iterations: int
    converged: bool
    radius: float | None
    r_weight: float
    residual_history: list[float] = field(default_factory=list)
    in_ball_history: list[float] = field(default_factory=list)
    trajectory: Trajectory | None = None


def solve_periodic(
    system: GalerkinSystem,
    x0: ModalState | None = None,
    tol: float = 1e-8,
    max_iter: int = 500,
    accel: str = "none",
    accel_window: int = 5,
    r_weight: float = 1.0,
    radius: float | None = None,
    ball_guard: bool = False,
    integrator_tol: float | None = None,
    scheme: str = "dopri5",
    n_samples: int = 129,
    stall_patience: int = 50,
) -> PeriodicSolveReport:
    """Fixed point of the period map by (accelerated/damped) Picard iteration.

    Starts at the origin unless given x0.  With ``ball_guard`` the start must
    lie inside the radius and acceleration is disabled so the invariance
    guarantee applies to every iterate.  Divergence (weighted norm beyond
    10 radius) aborts with the iterate history; residual stalls longer than
    ``stall_patience`` iterations switch to damped iteration with a halving
    relaxation weight.  On success the report carries one full period sampled
    from the fixed point.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if accel not in ("none", "extrapolation"):
        raise ValueError(f"unknown acceleration {accel!r}")
    m = system.m
    x = (x0 or ModalState.zero(m)).copy()
    x.time = 0.0
    integrator_tol = integrator_tol if integrator_tol is not None else min(1e-10, tol * 1e-2)

    def wnorm(vec: np.ndarray) -> float:
        return math.sqrt(r_weight * float(vec[:m] @ vec[:m]) + float(vec[m:] @ vec[m:]))

    if ball_guard:
        if radius is None:
            raise ValueError("ball_guard requires a radius")
        start_norm = wnorm(x.packed())
        if start_norm > radius * (1.0 + 1e-12):
            raise ValueError(
                f"ball-guarded start lies outside the ball "
                f"({start_norm:.6g} > {radius:.6g})"
            )
        accel = "none"

    use_accel = accel == "extrapolation"
    xs: list[np.ndarray] = []
    gs: list[np.ndarray] = []
    residuals: list[float] = []
    norms: list[float] = []
    best: tuple[float, np.ndarray] | None = None
    damping = 1.0
    stall = 0

    xv = x.packed()
    for it in range(1, max_iter + 1):
        state = ModalState(xv[:m], xv[m:], 0.0)
        image = poincare_map(system, state, tol=integrator_tol, scheme=scheme)
        gv = image.packed()
        res = wnorm(gv - xv)
        residuals.append(res)
        norms.append(wnorm(xv))

        if radius is not None and wnorm(gv) > 10.0 * radius:
            raise PicardDivergenceError(
                f"iterate norm {wnorm(gv):.6g} exceeded 10 R = {10 * radius:.6g} "
                f"at iteration {it}; no periodic balance at this radius",
                history=norms,
            )

        if best is None or res < best[0]:
            if best is None or res < best[0] * (1.0 - 1e-3):
                stall = 0  # meaningful progress; infinitesimal drift is a stall
            else:
                stall += 1
            best = (res, gv.copy())
        else:
            stall += 1
        if stall >= stall_patience:
            damping = max(damping * 0.5, 1.0 / 64.0)
            stall = 0

        if res <= tol:
            xv = gv
            break

        if use_accel:
            xs.append(xv.copy())
            gs.append(gv.copy())
            if len(xs) > accel_window + 1:
                xs.pop(0)
                gs.pop(0)
            accelerated = _extrapolate(xs, gs)
            xv = accelerated if accelerated is not None else gv
        elif damping < 1.0:
            xv = (1.0 - damping) * xv + damping * gv
        else:
            xv = gv

    converged = bool(residuals and residuals[-1] <= tol)
    if not converged and best is not None:
        xv = best[1]
    fixed = ModalState(xv[:m].copy(), xv[m:].copy(), 0.0)

    trajectory = None
    if converged:
        trajectory = integrate(
            system, fixed.copy(), system.forcing.period,
            tol=integrator_tol, scheme=scheme, n_samples=n_samples,
        )
    return PeriodicSolveReport(
        fixed_point=fixed,
        residual=residuals[-1] if residuals else math.inf,
        iterations=len(residuals),
        converged=converged,
        radius=radius,
        r_weight=r_weight,
        residual_history=residuals,
        in_ball_history=norms,
        trajectory=trajectory,
    )
