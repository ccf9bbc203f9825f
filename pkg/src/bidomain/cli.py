"""Command-line entry point: config-driven runs with deterministic artifacts.

Subcommands: assemble, eigens, check-assumptions, solve-ivp, solve-periodic,
verify-energy, verify-uniqueness, convergence, emit-plots.  Every run writes
its artifacts plus a ``report.txt`` (config echo, versions, timings, checks)
into the output directory and exits 0 iff all asserted checks pass.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from functools import cached_property

import numpy as np

from bidomain.config import ConfigError, RunConfig, echo_config, parse_config
from bidomain.conductivity import ConductivityField, isotropic_tensors, tensors_from_csv
from bidomain.dynamics import (
    Forcing,
    GalerkinSystem,
    ModalState,
    energy_dissipation_check,
    gronwall_bound,
    integrate,
    propagate_constants,
    uniform_bound_check,
)
from bidomain.eigenbasis import coercivity_lower_bound, compute_eigenbasis, estimate_coercivity
from bidomain.grid import build_grid
from bidomain.ionic import (
    IonicModel,
    derive_certificate,
    one_sided_lipschitz,
    verify_certificate,
    verify_growth,
)
from bidomain.operators import BidomainOperator, VNorms, assemble_elliptic
from bidomain.periodic import (
    PicardDivergenceError,
    a_priori_radius,
    sample_weighted_ball,
    solve_periodic,
)
from bidomain.reporting import (
    CheckLog,
    PhaseTimer,
    ensure_dir,
    fmt_float,
    read_csv,
    write_csv,
    write_report,
)
from bidomain.verification import (
    convergence_study,
    energy_budget,
    uniqueness_test,
)

SUBCOMMANDS = (
    "assemble", "eigens", "check-assumptions", "solve-ivp", "solve-periodic",
    "verify-energy", "verify-uniqueness", "convergence", "emit-plots",
)


def _profile_from_csv(grid, path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    d = grid.dimension
    if data.shape != (grid.n_nodes, d + 1):
        raise ConfigError(f"{path}: expected {grid.n_nodes} rows x {d + 1} columns")
    coords = grid.node_coords()
    if np.abs(data[:, :d] - coords).max() > 1e-9 * max(grid.extents):
        raise ConfigError(f"{path}: node coordinates do not match the grid")
    return data[:, d]


def write_state_csv(path, state: ModalState) -> None:
    rows = [(j, state.alpha[j], state.beta[j]) for j in range(len(state.alpha))]
    write_csv(path, ["j", "alpha", "beta"], rows)


def load_state_csv(path, n_modes: int) -> ModalState:
    _, data = read_csv(path)
    if data.shape[0] != n_modes:
        raise ConfigError(f"{path}: state has {data.shape[0]} modes, expected {n_modes}")
    return ModalState(data[:, 1].copy(), data[:, 2].copy(), 0.0)


class RunContext:
    """Lazily assembled pipeline shared by the subcommands."""

    def __init__(self, cfg: RunConfig, seed: int, timer: PhaseTimer, base_dir: str = "."):
        self.cfg = cfg
        self.seed = seed
        self.timer = timer
        self.base_dir = base_dir

    def _path(self, p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    @cached_property
    def grid(self):
        return build_grid(self.cfg.grid.dimension, self.cfg.grid.extents, self.cfg.grid.counts)

    @cached_property
    def conductivity(self) -> ConductivityField:
        c = self.cfg.conductivity
        if c.csv_i:
            sig_i = tensors_from_csv(self.grid, self._path(c.csv_i))
        else:
            sig_i = isotropic_tensors(self.grid, c.sigma_i)
        if c.csv_e:
            sig_e = tensors_from_csv(self.grid, self._path(c.csv_e))
        else:
            sig_e = isotropic_tensors(self.grid, c.sigma_e)
        return ConductivityField.create(self.grid, sig_i, sig_e)

    @cached_property
    def operator(self) -> BidomainOperator:
        self.timer.start("assemble")
        cond = self.conductivity
        ai = assemble_elliptic(self.grid, cond.sigma_i, "intra")
        ae = assemble_elliptic(self.grid, cond.sigma_e, "extra")
        op = BidomainOperator(ai, ae, self.grid)
        self.timer.stop()
        return op

    @cached_property
    def vnorms(self) -> VNorms:
        return VNorms(self.grid)

    @cached_property
    def basis(self):
        self.timer.start("eigenbasis")
        basis = compute_eigenbasis(self.operator, self.cfg.solver.k)
        self.timer.stop()
        return basis

    @cached_property
    def model(self) -> IonicModel:
        m = self.cfg.model
        return IonicModel(variant=m.variant, a=m.a, eps=m.eps, k=m.k, b=m.b, d=m.d)

    @cached_property
    def certificate(self):
        return derive_certificate(self.model)

    @cached_property
    def alpha_exact(self) -> float:
        self.timer.start("coercivity")
        alpha = coercivity_lower_bound(self.operator, self.vnorms)
        self.timer.stop()
        return alpha

    @cached_property
    def constants(self):
        return propagate_constants(self.certificate, self.alpha_exact, self.grid.measure)

    @cached_property
    def forcing(self) -> Forcing:
        f = self.cfg.forcing
        table = None
        if f.shape == "csv":
            table = np.loadtxt(self._path(f.shape_csv), delimiter=",", skiprows=1, ndmin=2)
        if f.kind == "modal":
            coeffs = np.zeros(self.basis.n_modes)
            coeffs[f.mode_index] = 1.0
            return Forcing.from_modal(
                self.basis, coeffs, f.shape, f.period,
                amplitude=f.amplitude, vnorms=self.vnorms, shape_table=table,
            )
        prof_i = _profile_from_csv(self.grid, self._path(f.profile_csv_i))
        prof_e = _profile_from_csv(self.grid, self._path(f.profile_csv_e))
        return Forcing.from_components(
            self.basis, self.operator, prof_i, prof_e, f.shape, f.period,
            amplitude=f.amplitude, vnorms=self.vnorms, shape_table=table,
        )

    @cached_property
    def system(self) -> GalerkinSystem:
        return GalerkinSystem(self.basis, self.model, self.forcing)

    @cached_property
    def radius(self) -> float:
        return a_priori_radius(self.forcing, self.constants)

    @property
    def integrator_tol(self) -> float:
        s = self.cfg.solver
        return s.integrator_tol if s.integrator_tol is not None else min(1e-10, s.tol * 1e-2)

    def probe_nodes(self) -> tuple[int, ...]:
        nodes = self.cfg.output.probe_nodes
        if nodes:
            return nodes
        n = self.grid.n_nodes
        return (n // 4, n // 2)


def _orbit_rows(traj, r_weight):
    energies = traj.energies(r_weight)
    for i, t in enumerate(traj.times):
        yield (t, *traj.alphas[i], *traj.betas[i], energies[i])


def _orbit_header(m):
    return ["t"] + [f"alpha_{j}" for j in range(m)] + [f"beta_{j}" for j in range(m)] + ["energy"]


def cmd_assemble(ctx: RunContext, outdir: str, checks: CheckLog) -> list[str]:
    op = ctx.operator
    grid = ctx.grid
    rng = np.random.default_rng(ctx.seed)
    rows = []
    for name, dop in (("intra", op.ai), ("extra", op.ae)):
        K = dop.stiffness
        scale = max(1.0, abs(K).max())
        asym = abs(K - K.T).max()
        rowsum = np.abs(K @ np.ones(grid.n_nodes)).max()
        psd_min = min(
            float(v @ (K @ v)) / float(v @ v)
            for v in rng.standard_normal((100, grid.n_nodes))
        )
        rows += [
            (f"{name}_nnz", K.nnz),
            (f"{name}_symmetry_defect", asym),
            (f"{name}_max_row_sum", rowsum),
            (f"{name}_min_rayleigh", psd_min),
        ]
        checks.add(f"{name}_symmetric", asym <= 1e-12 * scale, f"defect {asym:.3e}")
        checks.add(f"{name}_row_sums_zero", rowsum <= 1e-10 * scale, f"max {rowsum:.3e}")
        checks.add(f"{name}_psd", psd_min >= -1e-10, f"min Rayleigh {psd_min:.3e}")

    sym_defect = 0.0
    for _ in range(20):
        u = rng.standard_normal(grid.n_nodes)
        v = rng.standard_normal(grid.n_nodes)
        diff = abs(op.form(u, v) - op.form(v, u))
        sym_defect = max(sym_defect, diff / (np.linalg.norm(u) * np.linalg.norm(v)))
    checks.add("bidomain_form_symmetric", sym_defect <= 1e-10, f"defect {sym_defect:.3e}")
    rows.append(("bidomain_form_symmetry_defect", sym_defect))

    est = estimate_coercivity(op, grid, 100, seed=ctx.seed, vnorms=ctx.vnorms)
    alpha = ctx.alpha_exact
    checks.add("coercive", alpha > 0, f"alpha {alpha:.6g}")
    rows += [
        ("coercivity_exact", alpha),
        ("coercivity_probe", est.alpha),
        ("continuity_probe", est.continuity),
        ("forcing_conservation_defect", ctx.forcing.conservation_defect),
    ]
    write_csv(os.path.join(outdir, "operator_summary.csv"), ["name", "value"], rows)
    return ["operator_summary.csv"]


def cmd_eigens(ctx: RunContext, outdir: str, checks: CheckLog) -> list[str]:
    basis = ctx.basis
    write_csv(
        os.path.join(outdir, "eigens.csv"), ["j", "lambda"],
        [(j, basis.eigenvalues[j]) for j in range(basis.n_modes)],
    )
    artifacts = ["eigens.csv"]
    if ctx.cfg.output.eigenvectors:
        coords = ctx.grid.node_coords()
        header = [f"x{d}" for d in range(ctx.grid.dimension)] + [
            f"psi_{j}" for j in range(basis.n_modes)
        ]
        rows = np.hstack([coords, basis.eigenvectors])
        write_csv(os.path.join(outdir, "eigenvectors.csv"), header, rows)
        artifacts.append("eigenvectors.csv")

    gram = basis.eigenvectors.T @ (basis.mass[:, None] * basis.eigenvectors)
    orth = np.abs(gram - np.eye(basis.n_modes)).max()
    checks.add("lambda0_zero", abs(basis.eigenvalues[0]) <= 1e-8,
               f"lambda0 {basis.eigenvalues[0]:.3e}")
    checks.add("mass_orthonormal", orth <= 1e-8, f"defect {orth:.3e}")
    checks.add("eigenvalues_ascending", bool(np.all(np.diff(basis.eigenvalues) >= -1e-12)))
    return artifacts


def cmd_check_assumptions(ctx: RunContext, outdir: str, checks: CheckLog) -> list[str]:
    model = ctx.model
    cert = ctx.certificate
    rows = [
        ("r", cert.r), ("p", cert.p), ("C0", cert.C0), ("C1", cert.C1),
        ("C2", cert.C2), ("C3", cert.C3), ("C4", cert.C4), ("C5", cert.C5),
    ]
    rows += sorted(cert.derivation.items())
    write_csv(os.path.join(outdir, "certificate.csv"), ["name", "value"], rows)

    report = verify_certificate(model, cert)
    growth = verify_growth(model, cert)
    ver_rows = [
        ("lower_bound_min_margin", report.min_margin),
        ("lower_bound_critical_min", report.critical_min),
        ("C3_lattice", growth.C3_min), ("C4_lattice", growth.C4_min),
        ("C5_lattice", growth.C5_min), ("C6", growth.C6), ("C7", growth.C7),
    ]
    checks.add("lower_bound_certificate", report.passed, f"min margin {report.min_margin:.6g}")
    checks.add("growth_constants", growth.passed,
               f"lattice C3..C5 = {growth.C3_min:.4g}, {growth.C4_min:.4g}, {growth.C5_min:.4g}")
    if model.variant == "fitzhugh_nagumo":
        lam_f = one_sided_lipschitz(model)
        ver_rows.append(("lambda_f", lam_f))
        checks.add("one_sided_lipschitz", lam_f >= 0, f"lambda_f {lam_f:.6g}")
    write_csv(os.path.join(outdir, "assumption_report.csv"), ["name", "value"], ver_rows)
    return ["certificate.csv", "assumption_report.csv"]


def cmd_solve_ivp(ctx: RunContext, outdir: str, checks: CheckLog,
                  state_path: str | None) -> list[str]:
    s = ctx.cfg.solver
    system = ctx.system
    state0 = (
        load_state_csv(state_path, ctx.basis.n_modes)
        if state_path else ModalState.zero(ctx.basis.n_modes)
    )
    t1 = s.t1 if s.t1 is not None else ctx.forcing.period
    ctx.timer.start("integrate")
    traj = integrate(system, state0, t1, tol=ctx.integrator_tol,
                     scheme=s.scheme, n_samples=s.n_samples)
    ctx.timer.stop()

    r = ctx.certificate.r
    energies = traj.energies(r)
    slack_col = np.zeros(len(traj.times))
    dissip_ok = True
    if len(traj.times) >= 32:
        rep = energy_dissipation_check(traj, ctx.basis, ctx.model, ctx.forcing,
                                       ctx.constants, ctx.vnorms)
        slack_col[1:-1] = rep.slack
        slack_col[0], slack_col[-1] = rep.slack[0], rep.slack[-1]
        dissip_ok = rep.passed
        checks.add("dissipation_slack_nonnegative", rep.passed,
                   f"min slack {rep.min_slack:.6g}")
    header = _orbit_header(ctx.basis.n_modes) + ["slack"]
    rows = [
        (t, *traj.alphas[i], *traj.betas[i], energies[i], slack_col[i])
        for i, t in enumerate(traj.times)
    ]
    write_csv(os.path.join(outdir, "trajectory.csv"), header, rows)
    checks.add("integration_completed", True,
               f"{traj.stats.steps} steps, {traj.stats.rejected} rejected")
    return ["trajectory.csv"]


def cmd_solve_periodic(ctx: RunContext, outdir: str, checks: CheckLog) -> list[str]:
    s = ctx.cfg.solver
    ctx.timer.start("radius")
    radius = ctx.radius
    ctx.timer.stop()
    ctx.timer.start("picard")
    report = solve_periodic(
        ctx.system, tol=s.tol, max_iter=s.max_iter, accel=s.accel,
        accel_window=s.accel_window, r_weight=ctx.certificate.r, radius=radius,
        integrator_tol=ctx.integrator_tol, scheme=s.scheme, n_samples=s.n_samples,
    )
    ctx.timer.stop()

    write_csv(
        os.path.join(outdir, "residuals.csv"), ["iteration", "residual", "norm"],
        [(i + 1, res, norm) for i, (res, norm) in
         enumerate(zip(report.residual_history, report.in_ball_history))],
    )
    write_state_csv(os.path.join(outdir, "fixed_point.csv"), report.fixed_point)
    artifacts = ["residuals.csv", "fixed_point.csv"]

    checks.add("picard_converged", report.converged,
               f"residual {report.residual:.3e} after {report.iterations} iterations")
    if report.trajectory is not None:
        traj = report.trajectory
        write_csv(os.path.join(outdir, "orbit.csv"),
                  _orbit_header(ctx.basis.n_modes), _orbit_rows(traj, ctx.certificate.r))
        artifacts.append("orbit.csv")
        start = traj.state(0)
        end = traj.final_state
        defect = math.sqrt(
            ctx.certificate.r * float((end.alpha - start.alpha) @ (end.alpha - start.alpha))
            + float((end.beta - start.beta) @ (end.beta - start.beta))
        )
        checks.add("periodicity_defect", defect <= 10 * s.tol, f"defect {defect:.3e}")
        checks.add("in_ball", max(report.in_ball_history) <= radius * (1 + 1e-9),
                   f"max iterate norm {max(report.in_ball_history):.6g} vs R {radius:.6g}")
        if ctx.cfg.output.plots:
            artifacts += _emit_plots(ctx, outdir)
    return artifacts


def cmd_verify_energy(ctx: RunContext, outdir: str, checks: CheckLog,
                      state_path: str | None) -> list[str]:
    s = ctx.cfg.solver
    if state_path:
        fixed = load_state_csv(state_path, ctx.basis.n_modes)
    else:
        rep = solve_periodic(ctx.system, tol=s.tol, max_iter=s.max_iter,
                             r_weight=ctx.certificate.r,
                             integrator_tol=ctx.integrator_tol, n_samples=s.n_samples)
        if not rep.converged:
            checks.add("periodic_solve", False, f"residual {rep.residual:.3e}")
            return []
        fixed = rep.fixed_point
    n_samples = max(s.n_samples, 65)
    ctx.timer.start("orbit")
    traj = integrate(ctx.system, fixed, ctx.forcing.period,
                     tol=ctx.integrator_tol, scheme=s.scheme, n_samples=n_samples)
    ctx.timer.stop()

    ident = energy_budget(traj, ctx.basis, ctx.model, ctx.forcing)
    dissip = energy_dissipation_check(traj, ctx.basis, ctx.model, ctx.forcing,
                                      ctx.constants, ctx.vnorms)
    budget = uniform_bound_check(traj, ctx.basis, ctx.forcing, ctx.constants, ctx.vnorms)

    write_csv(os.path.join(outdir, "energy_identity.csv"), ["t", "slack"],
              zip(ident.times, ident.slack))
    write_csv(os.path.join(outdir, "dissipation.csv"), ["t", "slack"],
              zip(dissip.times, dissip.slack))
    write_csv(os.path.join(outdir, "period_budget.csv"), ["name", "value"],
              [(k, v) for k, v in budget.items() if k != "passed"])

    e_scale = 1.0 + float(traj.energies(1.0).max())
    ident_budget = max(1e-8, 1e4 * ctx.integrator_tol) * e_scale + 20.0 * ident.quadrature_error
    checks.add("energy_identity", ident.max_abs_slack <= ident_budget,
               f"max |slack| {ident.max_abs_slack:.3e} vs budget {ident_budget:.3e}")
    checks.add("dissipation_inequality", dissip.passed, f"min slack {dissip.min_slack:.6g}")
    checks.add("period_energy_budget", budget["passed"],
               f"lhs {budget['lhs']:.6g} <= rhs {budget['rhs']:.6g}")
    return ["energy_identity.csv", "dissipation.csv", "period_budget.csv"]


def cmd_verify_uniqueness(ctx: RunContext, outdir: str, checks: CheckLog) -> list[str]:
    s = ctx.cfg.solver
    horizon = s.horizon if s.horizon is not None else ctx.forcing.period
    rng = np.random.default_rng(ctx.seed)
    # anywhere inside B_R qualifies; moderate norms keep the runs fast
    starts = sample_weighted_ball(rng, ctx.basis.n_modes, min(ctx.radius, 2.0),
                                  ctx.certificate.r, 5, surface_fraction=0.0)
    all_rows = []
    summary = []
    all_pass = True
    tol_a = max(ctx.integrator_tol, 1e-10)
    for idx, x0 in enumerate(starts):
        rep = uniqueness_test(ctx.basis, ctx.model, ctx.forcing, x0,
                              tolA=tol_a, tolB=s.tol_b, horizon=horizon)
        all_pass &= rep.passed
        summary.append((idx, rep.gronwall_rate, rep.rate_bound, int(rep.passed)))
        all_rows += [(idx, t, d) for t, d in zip(rep.times, rep.difference_norms)]
    write_csv(os.path.join(outdir, "uniqueness.csv"), ["start", "t", "difference_sq"], all_rows)
    write_csv(os.path.join(outdir, "uniqueness_summary.csv"),
              ["start", "fitted_rate", "rate_bound", "passed"], summary)
    checks.add("uniqueness_envelopes", all_pass,
               f"rates {[f'{r:.3g}' for _, r, _, _ in summary]}")
    return ["uniqueness.csv", "uniqueness_summary.csv"]


def cmd_convergence(ctx: RunContext, outdir: str, checks: CheckLog) -> list[str]:
    s = ctx.cfg.solver
    f = ctx.cfg.forcing

    def forcing_factory(basis):
        if f.kind == "modal":
            coeffs = np.zeros(basis.n_modes)
            coeffs[min(f.mode_index, basis.n_modes - 1)] = 1.0
            return Forcing.from_modal(basis, coeffs, f.shape, f.period,
                                      amplitude=f.amplitude, vnorms=ctx.vnorms)
        prof_i = _profile_from_csv(ctx.grid, ctx._path(f.profile_csv_i))
        prof_e = _profile_from_csv(ctx.grid, ctx._path(f.profile_csv_e))
        return Forcing.from_components(basis, ctx.operator, prof_i, prof_e,
                                       f.shape, f.period, amplitude=f.amplitude,
                                       vnorms=ctx.vnorms)

    ctx.timer.start("convergence")
    report = convergence_study(
        ctx.operator, ctx.model, forcing_factory, s.k_list, s.tol, ctx.vnorms,
        solver_kwargs={
            "max_iter": s.max_iter, "accel": s.accel,
            "accel_window": s.accel_window, "integrator_tol": ctx.integrator_tol,
        },
    )
    ctx.timer.stop()
    rows = [
        (report.k_list[i], report.k_list[i + 1], report.increments[i])
        for i in range(len(report.increments))
    ]
    write_csv(os.path.join(outdir, "convergence.csv"),
              ["k_from", "k_to", "increment"], rows)
    checks.add("increments_decreasing", report.monotone,
               "increments " + ", ".join(f"{v:.3e}" for v in report.increments))
    return ["convergence.csv"]


def _emit_plots(ctx: RunContext, outdir: str) -> list[str]:
    from bidomain import plots

    artifacts = []
    res_path = os.path.join(outdir, "residuals.csv")
    if os.path.exists(res_path):
        _, data = read_csv(res_path)
        plots.plot_residual_history(os.path.join(outdir, "residual_history.svg"), data[:, 1])
        artifacts.append("residual_history.svg")
    orbit_path = os.path.join(outdir, "orbit.csv")
    if os.path.exists(orbit_path):
        header, data = read_csv(orbit_path)
        m = ctx.basis.n_modes
        times = data[:, 0]
        alphas = data[:, 1:1 + m]
        nodes = ctx.probe_nodes()
        traces = [alphas @ ctx.basis.eigenvectors[node] for node in nodes]
        plots.plot_probe_traces(os.path.join(outdir, "u_probes.svg"), times, traces,
                                [f"node {node}" for node in nodes])
        artifacts.append("u_probes.svg")
        energies = data[:, 1 + 2 * m]
        bounds = [gronwall_bound(energies[0], ctx.forcing, ctx.constants, max(t, 1e-12))
                  for t in times - times[0]]
        plots.plot_energy_vs_bound(os.path.join(outdir, "energy_vs_bound.svg"),
                                   times, energies, bounds)
        artifacts.append("energy_vs_bound.svg")
    return artifacts


def cmd_emit_plots(ctx: RunContext, outdir: str, checks: CheckLog) -> list[str]:
    artifacts = _emit_plots(ctx, outdir)
    checks.add("plots_emitted", bool(artifacts), f"{len(artifacts)} files")
    return artifacts


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bidomain",
        description="Discrete bidomain operators and periodic-solution search",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI config path")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=0, help="RNG seed for probe sampling")
        p.add_argument("--quiet", action="store_true")
        if name in ("solve-ivp", "verify-energy"):
            p.add_argument("--state", default=None, help="initial/fixed-point state CSV")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    outdir = ensure_dir(args.out or cfg.output.directory)
    timer = PhaseTimer()
    checks = CheckLog()
    ctx = RunContext(cfg, args.seed, timer,
                     base_dir=os.path.dirname(os.path.abspath(args.config)))

    handlers = {
        "assemble": lambda: cmd_assemble(ctx, outdir, checks),
        "eigens": lambda: cmd_eigens(ctx, outdir, checks),
        "check-assumptions": lambda: cmd_check_assumptions(ctx, outdir, checks),
        "solve-ivp": lambda: cmd_solve_ivp(ctx, outdir, checks, args.state),
        "solve-periodic": lambda: cmd_solve_periodic(ctx, outdir, checks),
        "verify-energy": lambda: cmd_verify_energy(ctx, outdir, checks, args.state),
        "verify-uniqueness": lambda: cmd_verify_uniqueness(ctx, outdir, checks),
        "convergence": lambda: cmd_convergence(ctx, outdir, checks),
        "emit-plots": lambda: cmd_emit_plots(ctx, outdir, checks),
    }
    try:
        artifacts = handlers[args.command]()
    except PicardDivergenceError as exc:
        checks.add("solver", False, f"divergence: {exc}")
        artifacts = []
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    timer.stop()

    extra = {"artifacts": ", ".join(artifacts) if artifacts else "(none)"}
    if "forcing" in ctx.__dict__:
        extra["forcing_conservation_defect"] = fmt_float(ctx.forcing.conservation_defect)
    write_report(os.path.join(outdir, "report.txt"), args.command, echo_config(cfg),
                 checks, timer, args.seed, extra)
    if not args.quiet:
        for line in checks.lines():
            print(line)
        print(f"artifacts in {outdir}")
    return 0 if checks.all_passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
