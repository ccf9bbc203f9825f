"""Cubic excitation models and their structural lower-bound certificates.

Three two-variable reaction pairs are supported, all of the split form
``f(u, w) = f1(u) + f2(u) w`` and ``g(u, w) = g1(u) + g2 w``:

* FitzHugh--Nagumo:   f = u(u-a)(u-1) + w,        g = -eps (k u - w)
* Rogers--McCulloch:  f = b u(u-a)(u-1) + u w,    g = -eps (k u - w)
* Aliev--Panfilov:    f = b u(u-a)(u-1) + u w,    g = eps (k u (u-1-d) + w)

A certificate is a constant tuple (r, C0, C1, C2) with

    C0 + C1 u^4 + C2 w^2  <=  r f(u,w) u + g(u,w) w    for all (u, w),

derived symbolically through explicit Young splits, plus quartic/linear growth
constants C3..C5 for |f1|, |f2|, |g1|.  The dissipation constants of the
energy estimates are propagated from these certificates, so their validity is
load-bearing: ``verify_certificate`` sweeps a lattice and the closed-form
critical curve as an independent check.

For the recovery equation the common (theta, gamma, eta) parametrization
specializes under FitzHugh--Nagumo to theta = 1, gamma = eps, eta = eps*k;
there is no separate runtime knob for it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "VARIANTS",
    "IonicModel",
    "Reaction",
    "AssumptionCertificate",
    "CertificateReport",
    "GrowthReport",
    "CertificateInfeasibleError",
    "UnsupportedModelError",
    "eval_f",
    "eval_g",
    "derive_certificate",
    "verify_certificate",
    "verify_growth",
    "one_sided_lipschitz",
]

VARIANTS = ("fitzhugh_nagumo", "rogers_mcculloch", "aliev_panfilov")


class CertificateInfeasibleError(ValueError):
    """No positive certificate constants exist for these parameters."""


class UnsupportedModelError(ValueError):
    """Operation restricted to a subset of the model variants."""


@dataclass(frozen=True)
class Reaction:
    """Polynomial coefficient bundle consumed by the RHS kernels.

    f(u, w) = fc3 u^3 + fc2 u^2 + fc1 u + (fw0 + fw1 u) w
    g(u, w) = gc2 u^2 + gc1 u + gw w
    """

    fc3: float = 0.0
    fc2: float = 0.0
    fc1: float = 0.0
    fw0: float = 0.0
    fw1: float = 0.0
    gc2: float = 0.0
    gc1: float = 0.0
    gw: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.fc3, self.fc2, self.fc1, self.fw0, self.fw1,
             self.gc2, self.gc1, self.gw]
        )

    def f1(self, u):
        return ((self.fc3 * u + self.fc2) * u + self.fc1) * u

    def f2(self, u):
        return self.fw0 + self.fw1 * u

    def g1(self, u):
        return (self.gc2 * u + self.gc1) * u

    @property
    def g2(self) -> float:
        return self.gw

    def f(self, u, w):
        return self.f1(u) + self.f2(u) * w

    def g(self, u, w):
        return self.g1(u) + self.gw * w

    @classmethod
    def zero(cls) -> "Reaction":
        return cls()


@dataclass(frozen=True)
class IonicModel:
    """One of the three cubic excitation models with validated parameters."""

    variant: str
    a: float
    eps: float
    k: float = 1.0
    b: float = 1.0
    d: float = 0.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"parameter a must lie in (0, 1), got {self.a}")
        if self.eps <= 0 or self.k <= 0 or self.b <= 0:
            raise ValueError(
                f"parameters b, k, eps must be positive, got "
                f"b={self.b}, k={self.k}, eps={self.eps}"
            )
        if self.variant == "aliev_panfilov":
            if not 0.0 < self.d < 1.0:
                raise ValueError(f"parameter d must lie in (0, 1), got {self.d}")
            if self.b <= self.k:
                raise CertificateInfeasibleError(
                    f"aliev_panfilov requires b > k (got b={self.b}, k={self.k}); "
                    "no dissipative lower bound exists otherwise"
                )

    def reaction(self) -> Reaction:
        a, b, k, eps, d = self.a, self.b, self.k, self.eps, self.d
        if self.variant == "fitzhugh_nagumo":
            return Reaction(fc3=1.0, fc2=-(a + 1.0), fc1=a, fw0=1.0,
                            gc1=-eps * k, gw=eps)
        if self.variant == "rogers_mcculloch":
            return Reaction(fc3=b, fc2=-b * (a + 1.0), fc1=b * a, fw1=1.0,
                            gc1=-eps * k, gw=eps)
        return Reaction(fc3=b, fc2=-b * (a + 1.0), fc1=b * a, fw1=1.0,
                        gc2=eps * k, gc1=-eps * k * (1.0 + d), gw=eps)

    def f(self, u, w):
        return self.reaction().f(u, w)

    def g(self, u, w):
        return self.reaction().g(u, w)


def eval_f(model: IonicModel, u, w):
    """Pointwise f(u, w); accepts scalars or arrays."""
    return model.f(u, w)


def eval_g(model: IonicModel, u, w):
    """Pointwise g(u, w); accepts scalars or arrays."""
    return model.g(u, w)


# ---------------------------------------------------------------------------
# Young-inequality helpers: each returns the optimal additive constant K in
# |term| <= delta u^4 [+ eta w^2] + K, minimized over the split point.
# ---------------------------------------------------------------------------

def _young_cubic(delta: float, c: float) -> float:
    """|c u^3| <= delta u^4 + K with K = 27 c^4 / (256 delta^3)."""
    return 27.0 * abs(c) ** 4 / (256.0 * delta**3)


def _young_quadratic(delta: float, c: float) -> float:
    """|c u^2| <= delta u^4 + K with K = c^2 / (4 delta)."""
    return c * c / (4.0 * delta)


def _young_linear(delta: float, c: float) -> float:
    """|c u| <= delta u^4 + K with K = (3/4) |c|^{4/3} / (4 delta)^{1/3}."""
    return 0.75 * abs(c) ** (4.0 / 3.0) / (4.0 * delta) ** (1.0 / 3.0)


def _young_mixed(delta: float, eta: float, c: float) -> float:
    """|c u w| <= delta u^4 + eta w^2 + K with K = c^4 / (64 eta^2 delta)."""
    return abs(c) ** 4 / (64.0 * eta**2 * delta)


@dataclass(frozen=True)
class AssumptionCertificate:
    """Dissipativity and growth constants for one model instance."""

    r: float
    p: int
    C0: float
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    derivation: dict = field(default_factory=dict)


def _fhn_certificate(model: IonicModel) -> AssumptionCertificate:
    a, k, eps = model.a, model.k, model.eps
    delta = 0.125  # four quartic losses of 1/8 leave the u^4 coefficient at 1/2
    eta = 0.25 * eps
    c11 = _young_cubic(delta, a + 1.0)
    c12 = _young_quadratic(delta, a)
    c13 = _young_mixed(delta, eta, 1.0)
    c14 = _young_mixed(delta, eta, eps * k)
    return AssumptionCertificate(
        r=1.0,
        p=4,
        C0=-(c11 + c12 + c13 + c14),
        C1=0.5,
        C2=0.5 * eps,
        C3=2.0 + 2.0 * a,
        C4=1.0,
        C5=0.5 * eps * k,
        derivation={
            "delta_u4": delta, "eta_w2": eta,
            "c11": c11, "c12": c12, "c13": c13, "c14": c14,
        },
    )


def _cubic_family_certificate(model: IonicModel) -> AssumptionCertificate:
    """Rogers--McCulloch / Aliev--Panfilov share the u^2 w coupling split.

    The coupling |m u^2 w| <= (C^2/2) u^4 + (m^2 / 2C^2) w^2 must leave both

        c_1 = r b - C^2/2 > 0      and      c_2 = eps - m^2 / (2 C^2) > 0,

    where m = r (RMC) or m = r + eps*k (AP).  For AP the feasible r-interval
    has endpoint product (eps*k)^2, so r = eps*k (its geometric mean) is
    admissible exactly when b > k, and C^2 is placed at the geometric mean of
    its own feasible interval.  For RMC any r < 4 eps b works; r = 2 eps b
    with the same C^2 placement keeps both margins a fixed fraction of their
    caps.
    """
    a, b, k, eps, d = model.a, model.b, model.k, model.eps, model.d
    ap = model.variant == "aliev_panfilov"
    r = eps * k if ap else 2.0 * eps * b
    mix = r + eps * k if ap else r
    csq_lo = mix * mix / (2.0 * eps)  # c_2 > 0 needs C^2 above this
    csq_hi = 2.0 * r * b              # c_1 > 0 needs C^2 below this
    if csq_lo >= csq_hi:
        raise CertificateInfeasibleError(
            f"{model.variant}: no admissible coupling split "
            f"(C^2 range [{csq_lo:.6g}, {csq_hi:.6g}] empty)"
        )
    csq = np.sqrt(csq_lo * csq_hi)
    c1 = r * b - 0.5 * csq
    c2 = eps - mix * mix / (2.0 * csq)
    if c1 <= 0 or c2 <= 0:
        raise CertificateInfeasibleError(
            f"{model.variant}: split constants not positive (c1={c1:.6g}, c2={c2:.6g})"
        )

    delta = c1 / 6.0
    eta = 0.5 * c2
    c3 = _young_cubic(delta, r * b * (a + 1.0))
    c4 = _young_quadratic(delta, r * b * a)
    cross = eps * k * (1.0 + d) if ap else eps * k
    c5 = _young_mixed(delta, eta, cross)
    tag = "3" if ap else "2"
    growth_c5 = 0.5 * eps * k * (3.0 + d) if ap else 0.5 * eps * k
    return AssumptionCertificate(
        r=float(r),
        p=4,
        C0=-(c3 + c4 + c5),
        C1=0.5 * c1,
        C2=0.5 * c2,
        C3=b * (2.0 + 2.0 * a),
        C4=1.0,
        C5=growth_c5,
        derivation={
            "C_sq": float(csq), "delta_u4": delta, "eta_w2": eta,
            f"c{tag}1": float(c1), f"c{tag}2": float(c2),
            f"c{tag}3": c3, f"c{tag}4": c4, f"c{tag}5": c5,
        },
    )


def derive_certificate(model: IonicModel) -> AssumptionCertificate:
    """Symbolically derived certificate; every constant is reproducible."""
    if model.variant == "fitzhugh_nagumo":
        return _fhn_certificate(model)
    return _cubic_family_certificate(model)


@dataclass(frozen=True)
class CertificateReport:
    min_margin: float
    argmin: tuple[float, float]
    lattice: tuple[float, float, float]  # (lo, hi, step)
    critical_min: float
    passed: bool


def _margin_pieces(model: IonicModel, cert: AssumptionCertificate):
    """Margin as A(u) + B(u) w + c_w w^2 with c_w = g2 - C2."""
    rx = model.reaction()
    r = cert.r

    def a_part(u):
        return r * rx.f1(u) * u - (cert.C0 + cert.C1 * u**4)

    def b_part(u):
        return r * rx.f2(u) * u + rx.g1(u)

    return a_part, b_part, rx.g2 - cert.C2


def verify_certificate(
    model: IonicModel,
    cert: AssumptionCertificate,
    lo: float = -50.0,
    hi: float = 50.0,
    step: float = 0.05,
) -> CertificateReport:
    """Sweep the margin r f u + g w - (C0 + C1 u^4 + C2 w^2) over a lattice.

    The lattice must cover at least [-20, 20]^2.  Because lattices can miss
    thin violations, the margin is additionally minimized in closed form over
    w for every u on the axis and checked at the real critical points of the
    resulting quartic.
    """
    if lo > -20.0 or hi < 20.0:
        raise ValueError(f"lattice [{lo}, {hi}] must cover [-20, 20]")
    u_axis = np.arange(lo, hi + 0.5 * step, step)
    min_margin = np.inf
    argmin = (0.0, 0.0)
    for chunk in np.array_split(u_axis, max(1, len(u_axis) // 200)):
        u = chunk[:, None]
        w = u_axis[None, :]
        margin = (
            cert.r * model.f(u, w) * u + model.g(u, w) * w
            - (cert.C0 + cert.C1 * u**4 + cert.C2 * w**2)
        )
        idx = np.unravel_index(np.argmin(margin), margin.shape)
        if margin[idx] < min_margin:
            min_margin = float(margin[idx])
            argmin = (float(u[idx[0], 0]), float(w[0, idx[1]]))

    a_part, b_part, c_w = _margin_pieces(model, cert)
    # min over w at fixed u: quadratic with positive leading coefficient.
    crit_candidates = list(np.array([lo, hi]))
    # margin_min(u) = A(u) - B(u)^2/(4 c_w) is a quartic; take its stationary u.
    rx = model.reaction()
    a_poly = np.array([
        -cert.C1 + cert.r * rx.fc3, cert.r * rx.fc2, cert.r * rx.fc1, 0.0, -cert.C0,
    ])
    b_poly = np.array([rx.fw1 * cert.r + rx.gc2, rx.fw0 * cert.r + rx.gc1, 0.0])
    marg_poly = np.polysub(a_poly, np.polymul(b_poly, b_poly) / (4.0 * c_w))
    roots = np.roots(np.polyder(marg_poly))
    crit_candidates.extend(float(z.real) for z in roots if abs(z.imag) < 1e-10)
    crit_min = np.inf
    for u in crit_candidates:
        if lo <= u <= hi:
            w_star = -b_part(u) / (2.0 * c_w)
            w_star = min(max(w_star, lo), hi)
            m = (
                cert.r * model.f(u, w_star) * u + model.g(u, w_star) * w_star
                - (cert.C0 + cert.C1 * u**4 + cert.C2 * w_star**2)
            )
            crit_min = min(crit_min, float(m))

    overall = min(min_margin, crit_min)
    tol = 1e-9 * max(1.0, abs(cert.C0))
    return CertificateReport(
        min_margin=overall,
        argmin=argmin,
        lattice=(lo, hi, step),
        critical_min=float(crit_min),
        passed=overall >= -tol,
    )


@dataclass(frozen=True)
class GrowthReport:
    C3_min: float
    C4_min: float
    C5_min: float
    C6: float
    C7: float
    symbolic: tuple[float, float, float]
    passed: bool


def verify_growth(
    model: IonicModel,
    cert: AssumptionCertificate,
    lo: float = -50.0,
    hi: float = 50.0,
    step: float = 0.05,
) -> GrowthReport:
    """Lattice-minimal growth constants and the integrated-bound constants.

    C3..C5 are the smallest lattice-feasible constants in
    |f1| <= C3 (1+|u|^3), |f2| <= C4 (1+|u|), |g1| <= C5 (1+u^2); C6 and C7
    bound the L^{4/3} and L^2 norms of f and g through the standard power
    splits, assembled from the lattice-minimal constants.
    """
    if lo > -20.0 or hi < 20.0:
        raise ValueError(f"lattice [{lo}, {hi}] must cover [-20, 20]")
    rx = model.reaction()
    u = np.arange(lo, hi + 0.5 * step, step)
    c3 = float(np.max(np.abs(rx.f1(u)) / (1.0 + np.abs(u) ** 3)))
    c4 = float(np.max(np.abs(rx.f2(u)) / (1.0 + np.abs(u))))
    c5 = float(np.max(np.abs(rx.g1(u)) / (1.0 + u**2)))
    # |f|^{4/3} <= 2^{1/3}[C3^{4/3}(1+|u|^3)^{4/3} + C4^{4/3}((1+|u|)|w|)^{4/3}]
    # with (1+|u|^3)^{4/3} <= 2^{1/3}(1+u^4) and the 3 / (3/2) Young split
    # ((1+|u|)|w|)^{4/3} <= (1+|u|)^4/3 + (2/3)w^2 <= (8/3)(1+u^4) + (2/3)w^2.
    cbrt2 = 2.0 ** (1.0 / 3.0)
    c6_u = cbrt2 * (cbrt2 * c3 ** (4.0 / 3.0) + (8.0 / 3.0) * c4 ** (4.0 / 3.0))
    c6_w = cbrt2 * (2.0 / 3.0) * c4 ** (4.0 / 3.0)
    c6 = max(c6_u, c6_w)
    # g^2 <= 2 C5^2 (1+u^2)^2 + 2 g2^2 w^2 <= 4 C5^2 (1+u^4) + 2 g2^2 w^2.
    c7 = max(4.0 * c5 * c5, 2.0 * rx.g2 * rx.g2)
    passed = c3 <= cert.C3 + 1e-12 and c4 <= cert.C4 + 1e-12 and c5 <= cert.C5 + 1e-12
    return GrowthReport(
        C3_min=c3, C4_min=c4, C5_min=c5, C6=float(c6), C7=float(c7),
        symbolic=(cert.C3, cert.C4, cert.C5), passed=passed,
    )


def one_sided_lipschitz(model: IonicModel, lattice: np.ndarray | None = None) -> float:
    """Smallest lam with (f1(x)-f1(y))/(x-y) >= -lam for the cubic branch.

    Closed form: f1'(u) = 3u^2 - 2(a+1)u + a is minimized at u* = (a+1)/3,
    giving lam = max(0, (a+1)^2/3 - a).  Only the FitzHugh--Nagumo branch is
    supported (its f2 does not couple u into the one-sided bound).  An
    optional lattice cross-checks the bound on finite difference quotients.
    """
    if model.variant != "fitzhugh_nagumo":
        raise UnsupportedModelError(
            f"one-sided Lipschitz bound is defined for fitzhugh_nagumo only, "
            f"got {model.variant!r}"
        )
    a = model.a
    lam = max(0.0, (a + 1.0) ** 2 / 3.0 - a)
    if lattice is not None:
        rx = model.reaction()
        x, y = np.meshgrid(lattice, lattice)
        mask = np.abs(x - y) > 1e-12
        quotients = (rx.f1(x[mask]) - rx.f1(y[mask])) / (x[mask] - y[mask])
        worst = float(quotients.min())
        if worst < -lam - 1e-9:
            raise AssertionError(
                f"lattice quotient {worst:.12g} violates the closed form -{lam:.12g}"
            )
    return lam
