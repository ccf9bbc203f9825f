import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm

from bidomain.dynamics import (
    EnergyConstants,
    Forcing,
    GalerkinSystem,
    ModalState,
)
from bidomain.eigenbasis import EigenBasis
from bidomain.grid import build_grid
from bidomain.ionic import Reaction
from bidomain.periodic import (
    PicardDivergenceError,
    a_priori_radius,
    ball_invariance_test,
    poincare_map,
    sample_weighted_ball,
    solve_periodic,
)


def synthetic_basis(eigenvalues, n_nodes=33):
    """Orthonormal basis with prescribed eigenvalues on a real grid.

    The periodic solver only consumes (psi, lambda, mass), so tests may pair
    a genuine grid with hand-picked spectra.
    """
    g = build_grid(1, 1.0, n_nodes)
    mass = g.quad_weights
    m = len(eigenvalues)
    psi = np.eye(n_nodes)[:, :m] / np.sqrt(mass[:m])
    return EigenBasis(
        eigenvalues=np.asarray(eigenvalues, dtype=float),
        eigenvectors=np.ascontiguousarray(psi), k=m - 1, mass=mass, grid=g,
    )


@pytest.fixture(scope="module")
def lin_basis():
    return synthetic_basis([1.0, 2.0, 3.5, 5.0])


def test_linear_autonomous_equilibrium(lin_basis):
    # constant forcing: the equilibrium s_j / lambda_j is a fixed point
    T = 3.0
    table = np.array([[0.0, 1.0], [T / 2, 1.0]])
    s = np.array([0.4, -0.3, 0.2, 0.1])
    forcing = Forcing.from_modal(lin_basis, s, "csv", T, shape_table=table)
    system = GalerkinSystem(lin_basis, Reaction.zero(), forcing)
    star = ModalState(s / lin_basis.eigenvalues, np.zeros(4))
    image = poincare_map(system, star, tol=1e-11)
    assert np.abs(image.alpha - star.alpha).max() <= 1e-10
    assert np.abs(image.beta).max() <= 1e-12


def test_linear_map_difference_is_exponential(lin_basis, rng):
    T = 2.0
    forcing = Forcing.from_modal(lin_basis, np.array([0.1, 0.2, 0.0, -0.1]), "sin", T)
    system = GalerkinSystem(lin_basis, Reaction.zero(), forcing)
    decay = np.exp(-lin_basis.eigenvalues * T)
    for _ in range(3):
        x = ModalState(rng.standard_normal(4), rng.standard_normal(4))
        y = ModalState(rng.standard_normal(4), rng.standard_normal(4))
        sx = poincare_map(system, x, tol=1e-11)
        sy = poincare_map(system, y, tol=1e-11)
        np.testing.assert_allclose(
            sx.alpha - sy.alpha, decay * (x.alpha - y.alpha), atol=1e-10)
        np.testing.assert_allclose(sx.beta - sy.beta, x.beta - y.beta, atol=1e-12)


def test_map_fixes_origin_without_forcing(basis65, fhn, grid65):
    forcing = Forcing.zero(17, 10.0, n_nodes=grid65.n_nodes)
    system = GalerkinSystem(basis65, fhn, forcing)
    image = poincare_map(system, ModalState.zero(17), tol=1e-10)
    assert np.abs(image.packed()).max() == 0.0


def test_map_determinism(basis65, fhn, grid65, rng):
    forcing = Forcing.zero(17, 10.0, n_nodes=grid65.n_nodes)
    system = GalerkinSystem(basis65, fhn, forcing)
    x = ModalState(0.1 * rng.standard_normal(17), 0.1 * rng.standard_normal(17))
    s1 = poincare_map(system, x.copy(), tol=1e-10)
    s2 = poincare_map(system, x.copy(), tol=1e-10)
    np.testing.assert_array_equal(s1.packed(), s2.packed())


def _const_dual_forcing(basis, vnorms, period):
    """Forcing whose dual norm is identically one (constant temporal shape)."""
    profile = np.cos(np.pi * basis.grid.axis_coords(0))
    scale = math.sqrt(vnorms.dual_sq(profile))
    table = np.array([[0.0, 1.0], [period / 2, 1.0]])
    return Forcing.from_modal(basis, basis.project(profile / scale), "csv",
                              period, vnorms=vnorms, shape_table=table)


def test_radius_unit_case(basis65, vnorms65):
    forcing = _const_dual_forcing(basis65, vnorms65, 10.0)
    cons = EnergyConstants(C21=1.0, C22=1.0, C23=0.0, r=1.0, alpha=1.0, details={})
    assert a_priori_radius(forcing, cons) == pytest.approx(1.0, abs=1e-10)


def test_radius_pure_offset(basis65, grid65, vnorms65):
    forcing = Forcing.zero(17, 10.0, n_nodes=grid65.n_nodes, vnorms=vnorms65)
    cons = EnergyConstants(C21=0.3, C22=1.0, C23=0.7, r=1.0, alpha=1.0, details={})
    assert a_priori_radius(forcing, cons) == pytest.approx(
        math.sqrt(0.7 / 0.3), abs=1e-10)


def test_radius_scales_with_c22(basis65, vnorms65):
    forcing = _const_dual_forcing(basis65, vnorms65, 10.0)
    r1 = a_priori_radius(forcing, EnergyConstants(C21=1.0, C22=1.0, C23=0.0,
                                                  r=1.0, alpha=1.0, details={}))
    r2 = a_priori_radius(forcing, EnergyConstants(C21=1.0, C22=2.0, C23=0.0,
                                                  r=1.0, alpha=1.0, details={}))
    assert r2**2 == pytest.approx(2.0 * r1**2, rel=1e-10)


def test_radius_requires_positive_decay(basis65, vnorms65):
    forcing = _const_dual_forcing(basis65, vnorms65, 10.0)
    with pytest.raises(ValueError):
        EnergyConstants(C21=-1.0, C22=1.0, C23=0.0, r=1.0, alpha=1.0, details={})
    bogus = EnergyConstants(C21=1.0, C22=1.0, C23=0.0, r=1.0, alpha=1.0, details={})
    object.__setattr__(bogus, "C21", 0.0)
    with pytest.raises(ValueError, match="C21"):
        a_priori_radius(forcing, bogus)


def test_sample_weighted_ball_norms(rng):
    r_weight = 2.5
    states = sample_weighted_ball(rng, 6, 3.0, r_weight, 40, surface_fraction=0.5)
    norms = np.array([s.weighted_norm(r_weight) for s in states])
    np.testing.assert_allclose(norms[:20], 3.0, rtol=1e-12)
    assert np.all(norms[20:] <= 3.0 + 1e-12)


def test_picard_linear_surrogate_closed_form(lin_basis):
    T = 3.0
    lam = lin_basis.eigenvalues
    s = np.array([0.5, -0.4, 0.3, 0.2])
    forcing = Forcing.from_modal(lin_basis, s, "sin", T)
    system = GalerkinSystem(lin_basis, Reaction.zero(), forcing)
    report = solve_periodic(system, tol=1e-12, max_iter=200, integrator_tol=1e-12)
    assert report.converged

    omega = 2 * math.pi / T
    star = np.empty(4)
    for j in range(4):
        integral, _ = quad(lambda tau: math.exp(-lam[j] * (T - tau)) * s[j]
                           * math.sin(omega * tau), 0, T, epsabs=1e-14, epsrel=1e-13)
        star[j] = integral / (1.0 - math.exp(-lam[j] * T))
    np.testing.assert_allclose(report.fixed_point.alpha, star, atol=1e-10)

    # geometric contraction at the slowest mode's rate
    res = np.array(report.residual_history[1:6])
    ratios = res[1:] / res[:-1]
    assert ratios.max() <= math.exp(-lam.min() * T) * 1.5


def test_picard_trivial_periodic_solution(basis65, fhn, grid65):
    forcing = Forcing.zero(17, 10.0, n_nodes=grid65.n_nodes)
    system = GalerkinSystem(basis65, fhn, forcing)
    report = solve_periodic(system, tol=1e-10, max_iter=10)
    assert report.converged and report.iterations == 1
    assert np.abs(report.fixed_point.packed()).max() == 0.0


def test_linearized_coupled_system_closed_form(lin_basis):
    # f = u + w, g = -eps(k u - w): per mode a genuine 2x2 periodic system,
    # solved independently by matrix variation of constants
    T = 3.0
    eps, k = 0.5, 2.0
    reaction = Reaction(fc1=1.0, fw0=1.0, gc1=-eps * k, gw=eps)
    s = np.array([0.5, -0.4, 0.3, 0.2])
    forcing = Forcing.from_modal(lin_basis, s, "sin", T)
    system = GalerkinSystem(lin_basis, reaction, forcing)
    report = solve_periodic(system, tol=1e-12, max_iter=400, integrator_tol=1e-12)
    assert report.converged

    omega = 2 * math.pi / T
    for j in range(4):
        A = np.array([[-(lin_basis.eigenvalues[j] + 1.0), -1.0], [eps * k, -eps]])
        flow = expm(A * T)

        def source_integral(row):
            def integrand(tau):
                vec = expm(A * (T - tau)) @ np.array([s[j] * math.sin(omega * tau), 0.0])
                return vec[row]
            val, _ = quad(integrand, 0, T, epsabs=1e-13, epsrel=1e-12, limit=200)
            return val

        rhs = np.array([source_integral(0), source_integral(1)])
        star = np.linalg.solve(np.eye(2) - flow, rhs)
        assert report.fixed_point.alpha[j] == pytest.approx(star[0], abs=1e-9)
        assert report.fixed_point.beta[j] == pytest.approx(star[1], abs=1e-9)


def test_neutral_mode_divergence_detected():
    # lambda_0 = 0 with a nonzero-mean source has no periodic balance:
    # alpha_0 drifts linearly and the guard must abort with history
    basis = synthetic_basis([0.0, 1.0, 2.0])
    T = 2.0
    table = np.array([[0.0, 1.0], [T / 2, 1.0]])
    forcing = Forcing.from_modal(basis, np.array([0.5, 0.1, 0.1]), "csv", T,
                                 shape_table=table)
    system = GalerkinSystem(basis, Reaction.zero(), forcing)
    with pytest.raises(PicardDivergenceError) as exc:
        solve_periodic(system, tol=1e-10, max_iter=500, radius=1.0)
    assert len(exc.value.history) >= 1


def test_ball_guard_requires_inside_start(lin_basis):
    forcing = Forcing.from_modal(lin_basis, np.array([0.1, 0, 0, 0]), "sin", 2.0)
    system = GalerkinSystem(lin_basis, Reaction.zero(), forcing)
    outside = ModalState(np.full(4, 10.0), np.zeros(4))
    with pytest.raises(ValueError, match="outside"):
        solve_periodic(system, x0=outside, radius=1.0, ball_guard=True)
    with pytest.raises(ValueError, match="radius"):
        solve_periodic(system, ball_guard=True)


def test_ball_guarded_iterates_confined(lin_basis):
    T = 2.0
    forcing = Forcing.from_modal(lin_basis, np.array([0.3, 0.1, 0.0, 0.0]), "sin", T)
    system = GalerkinSystem(lin_basis, Reaction.zero(), forcing)
    # for the decoupled linear system the map is a contraction toward the
    # periodic point; any ball centered suitably works, use a generous one
    report = solve_periodic(system, tol=1e-10, max_iter=300, radius=5.0,
                            ball_guard=True)
    assert report.converged
    assert max(report.in_ball_history) <= 5.0


def test_damped_fallback_handles_rotation():
    # a neutral rotating pair stalls plain iteration; damping must converge it
    basis = synthetic_basis([0.0, 1.0])
    T = 10.0
    forcing = Forcing.zero(2, T, n_nodes=basis.grid.n_nodes)
    rotation = Reaction(fw0=1.0, gc1=-1.0)  # alpha' = -beta, beta' = alpha on mode 0
    system = GalerkinSystem(basis, rotation, forcing)
    x0 = ModalState(np.array([1.0, 0.0]), np.array([0.5, 0.0]))
    report = solve_periodic(system, x0=x0, tol=1e-9, max_iter=400,
                            integrator_tol=1e-11, stall_patience=5)
    assert report.converged
    assert np.abs(report.fixed_point.packed()).max() <= 1e-8


def test_extrapolation_accelerates(basis65, fhn, op65, grid65, vnorms65):
    profile = np.cos(np.pi * grid65.axis_coords(0))
    forcing = Forcing.from_components(basis65, op65, profile, -profile, "sin",
                                      10.0, vnorms=vnorms65)
    system = GalerkinSystem(basis65, fhn, forcing)
    plain = solve_periodic(system, tol=1e-8, max_iter=500, integrator_tol=1e-10)
    accel = solve_periodic(system, tol=1e-8, max_iter=500, accel="extrapolation",
                           integrator_tol=1e-10)
    assert plain.converged and accel.converged
    assert accel.iterations < plain.iterations
    np.testing.assert_allclose(accel.fixed_point.packed(),
                               plain.fixed_point.packed(), atol=1e-6)


def test_report_on_exhaustion(lin_basis):
    forcing = Forcing.from_modal(lin_basis, np.array([0.5, 0, 0, 0]), "sin", 3.0)
    system = GalerkinSystem(lin_basis, Reaction.zero(), forcing)
    report = solve_periodic(system, tol=1e-15, max_iter=3)
    assert not report.converged
    assert report.iterations == 3
    assert report.trajectory is None
    assert math.isfinite(report.residual)


def test_ball_invariance_linear(lin_basis):
    # pure decay with weak forcing: images must shrink well inside the ball
    forcing = Forcing.from_modal(lin_basis, np.array([0.01, 0, 0, 0]), "sin", 3.0)
    system = GalerkinSystem(lin_basis, Reaction.zero(), forcing)
    report = ball_invariance_test(system, radius=1.0, n_samples=8, r_weight=1.0,
                                  integrator_tol=1e-9, seed=5)
    assert report.passed
    assert report.max_image_norm < 1.0
