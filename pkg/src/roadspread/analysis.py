"""Studies built on the speed solver.

Large road diffusivity asymptotics, comparison of continuous road-to-field
kernels against the Dirac one, the small-width derivative of the field return
for self-similar kernels, and perturbation of a Dirac field-to-road exchange
by a small continuous part.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect

from .bvp import GridControl, psi2_bvp_p, psi2_closed_limit_p, psi2_p
from .dispersion import (
    CurveProblem,
    SearchControl,
    SpeedResult,
    bisect_speed,
    check_inequality_chain,
    problem_gap,
    spreading_speed,
)
from .errors import DomainError, KernelError, SolverError
from .model import Kernel, ModelSpec, Params, limit_spec, mix_with_atom, mollify

# grids for the perturbative studies: the extrapolated profile removes the
# h^2 bias of the atom row, which is comparable to the effects measured here
PERTURBATION_CONTROL = SearchControl(c_rtol=1e-11, grid=GridControl(extrapolate=True))


def _write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(header))
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _require_unit_normalization(params: Params, what: str) -> None:
    if params.d != 1.0 or params.nu_bar != 1.0:
        raise KernelError(
            f"{what} is defined for d = nu_bar = 1; got d = {params.d}, nu_bar = {params.nu_bar}. "
            "Rescale y by sqrt(d) and time so that both equal 1."
        )


# -- large D ------------------------------------------------------------------

def cinf_problem(d: float, growth: float, mu_bar: float, spec: ModelSpec,
                 control: SearchControl) -> CurveProblem:
    """Rescaled curves: road ``lam c - lam^2 + mu_bar`` against the field return at ``P = lam c - f'(0)``."""

    def window(c):
        return growth / c, 0.5 * (c + math.sqrt(c * c + 4.0 * mu_bar))

    def road(c, lam):
        return lam * c - lam * lam + mu_bar

    def field_curve(c, lam):
        return psi2_p(d, lam * c - growth, spec, control.grid, control.method)

    return CurveProblem(window, road, field_curve, mu_bar)


def c_infinity(d: float, growth: float, mu_bar: float, nu_kernel: Kernel, mu_kernel: Kernel,
               control: SearchControl | None = None) -> float:
    """Limit of ``c*(D) / sqrt(D)`` as ``D -> infinity``.

    The window ``(f'(0)/c, lam1_plus)`` is empty for ``c <= f'(0)/sqrt(f'(0) + mu_bar)``
    and the road curve exceeds ``mu_bar`` at its left edge for ``c > sqrt(f'(0))``,
    which gives the initial bracket.
    """
    control = control or SearchControl()
    if not growth > 0:
        raise DomainError("growth must be positive")
    spec = ModelSpec(nu=nu_kernel, mu=mu_kernel)
    if abs(mu_kernel.mass() - mu_bar) > 1e-8 * max(1.0, mu_bar):
        raise KernelError("mu kernel mass does not match mu_bar")
    problem = cinf_problem(d, growth, mu_bar, spec, control)
    floor = growth / math.sqrt(growth + mu_bar)
    c_lo = floor * (1.0 + 1e-9)
    rep = problem_gap(problem, c_lo, control)
    if rep.gap <= 0:
        raise SolverError("large-D curves already meet at the degenerate window")
    c_hi = math.sqrt(growth) * (1.0 + 1e-6)
    while problem_gap(problem, c_hi, control).gap >= 0:
        c_lo, c_hi = c_hi, 2.0 * c_hi
        if c_hi > 1e6 * math.sqrt(growth):
            raise SolverError("large-D bracket expansion failed")
    c_lo, c_hi, final, _ = bisect_speed(problem, c_lo, c_hi, control)
    return final.c


def cinf_chain(c_inf: float, growth: float, mu_bar: float) -> tuple[float, float]:
    """Slacks of ``c <= f'(0)/c <= (c + sqrt(c^2 + 4 mu_bar)) / 2``."""
    mid = growth / c_inf
    return mid - c_inf, 0.5 * (c_inf + math.sqrt(c_inf * c_inf + 4.0 * mu_bar)) - mid


@dataclass
class AsymptoticReport:
    """Speeds along a ladder of road diffusivities and their rescaled limit."""

    d_values: list
    c_star: list
    ratio: list
    c_inf: float
    growth: float
    chain_ok: list
    cinf_slacks: tuple

    @property
    def distances(self) -> list:
        return [abs(r - self.c_inf) for r in self.ratio]

    def converging(self) -> bool:
        dist = self.distances
        return all(b < a for a, b in zip(dist, dist[1:]))

    def rows(self):
        return [(float(D), float(c), float(r), float(abs(r - self.c_inf)))
                for D, c, r in zip(self.d_values, self.c_star, self.ratio)]

    def to_csv(self, path) -> None:
        _write_csv(path, ["big_d", "c_star", "ratio", "distance_to_c_inf"], self.rows())

    def to_record(self) -> dict:
        return {"c_inf": self.c_inf, "growth": self.growth, "final_gap_rel": self.distances[-1] / self.c_inf,
                "converging": self.converging(), "cinf_slack_low": self.cinf_slacks[0],
                "cinf_slack_high": self.cinf_slacks[1], "chain_ok": all(self.chain_ok)}


def sweep_D(params: Params, d_ladder: Sequence[float], spec: ModelSpec,
            control: SearchControl | None = None, workers: int = 1) -> AsymptoticReport:
    """Speeds for each ``D`` in an ascending ladder above ``2d`` plus ``c_inf``."""
    control = control or SearchControl()
    ladder = [float(x) for x in d_ladder]
    if not ladder or any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("D ladder must be non-empty and strictly ascending")
    if ladder[0] <= 2.0 * params.d:
        raise DomainError("every D in the ladder must exceed 2d")

    def one(D):
        p = replace(params, big_d=D)
        r = spreading_speed(p, spec, control)
        return r, check_inequality_chain(r, p).ok

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(one, ladder))
    else:
        results = [one(D) for D in ladder]
    cs = [r.c_star for r, _ in results]
    cinf = c_infinity(params.d, params.growth, params.mu_bar, spec.nu, spec.mu, control)
    return AsymptoticReport(ladder, cs, [c / math.sqrt(D) for c, D in zip(cs, ladder)], cinf,
                            params.growth, [ok for _, ok in results],
                            cinf_chain(cinf, params.growth, params.mu_bar))


# -- continuous road-to-field kernels ------------------------------------------

@dataclass
class CompareReport:
    """Speeds for several continuous ``mu`` against the Dirac speed ``c*_0``."""

    names: list
    c_star: list
    c_star_0: float
    eps_ladder: list
    c_star_mollified: list
    tol: float

    @property
    def max_excess(self) -> float:
        return max(c - self.c_star_0 for c in self.c_star)

    def supremum_holds(self) -> bool:
        return self.max_excess <= self.tol

    def mollified_increasing(self) -> bool:
        seq = self.c_star_mollified
        return all(b > a for a, b in zip(seq, seq[1:])) and all(c <= self.c_star_0 + self.tol for c in seq)

    def rows(self):
        out = [(n, float(c), float(c - self.c_star_0)) for n, c in zip(self.names, self.c_star)]
        out += [(f"mollified_eps={e:g}", float(c), float(c - self.c_star_0))
                for e, c in zip(self.eps_ladder, self.c_star_mollified)]
        return out

    def to_csv(self, path) -> None:
        _write_csv(path, ["kernel", "c_star", "c_star_minus_c_star_0"], self.rows())

    def to_record(self) -> dict:
        return {"c_star_0": self.c_star_0, "max_excess": self.max_excess,
                "supremum_holds": self.supremum_holds(), "mollified_increasing": self.mollified_increasing()}


def rpsl2_compare(params: Params, mu_list: Mapping[str, Kernel] | Sequence[Kernel],
                  eps_ladder: Sequence[float] = (0.4, 0.2, 0.1), mollify_base: Kernel | None = None,
                  control: SearchControl | None = None, tol: float = 1e-8) -> CompareReport:
    """Compare speeds for continuous road-to-field kernels with the Dirac case.

    ``nu`` is the Dirac atom of weight ``nu_bar``. The mollified ladder
    concentrates ``mollify_base`` (default: the first kernel).
    """
    control = control or SearchControl()
    if not isinstance(mu_list, Mapping):
        mu_list = {f"mu{i}": k for i, k in enumerate(mu_list)}
    nu = Kernel(atom=params.nu_bar)
    for name, k in mu_list.items():
        if k.has_atom or not k.has_cont:
            raise KernelError(f"{name}: road-to-field kernel must be purely continuous")
        if abs(k.mass() - params.mu_bar) > 1e-8 * max(1.0, params.mu_bar):
            raise KernelError(f"{name}: mass {k.mass():.12g} differs from mu_bar {params.mu_bar:.12g}")
    c0 = spreading_speed(params, limit_spec(params), control).c_star
    names = list(mu_list)
    cs = [spreading_speed(params, ModelSpec(nu, mu_list[n]), control).c_star for n in names]
    base = mollify_base or mu_list[names[0]]
    moll = [spreading_speed(params, ModelSpec(nu, mollify(base, e)), control).c_star for e in eps_ladder]
    return CompareReport(names, cs, c0, list(eps_ladder), moll, tol)


def mollified_speeds(params: Params, nu_base: Kernel, mu_base: Kernel, eps_ladder: Sequence[float],
                     control: SearchControl | None = None) -> tuple[list, float]:
    """Speeds with both kernels concentrated by each ``eps`` and the Dirac speed."""
    control = control or SearchControl()
    c_lim = spreading_speed(params, limit_spec(params), control).c_star
    cs = [spreading_speed(params, ModelSpec(mollify(nu_base, e), mollify(mu_base, e)), control).c_star
          for e in eps_ladder]
    return cs, c_lim


# -- perturbation indicator --------------------------------------------------

def g_indicator(alpha: float, y):
    """``1 - exp(-a|y|) - (1 - exp(-2a|y|)) / (1 + 2a)``."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    ay = alpha * np.abs(np.asarray(y, dtype=float))
    return -np.expm1(-ay) + np.expm1(-2.0 * ay) / (1.0 + 2.0 * alpha)


def y_threshold(alpha: float) -> float:
    """Positive root of ``g(alpha, .)``; ``g < 0`` between 0 and the root."""
    if not 0.0 < alpha < 0.5:
        raise DomainError(f"alpha = {alpha!r}: g has no positive root for alpha >= 1/2 (g >= 0)")
    # second-order expansion of g around 0 locates the root roughly
    guess = 2.0 * (1.0 - 2.0 * alpha) / (alpha * (3.0 - 2.0 * alpha))
    lo = 1e-3 * guess
    hi = guess
    while g_indicator(alpha, hi) <= 0:
        hi *= 2.0
    while g_indicator(alpha, lo) >= 0:
        lo *= 0.5
    return float(bisect(lambda y: float(g_indicator(alpha, y)), lo, hi, xtol=1e-15, rtol=1e-14, maxiter=500))


def m1(growth: float) -> float:
    """Threshold on ``D`` below which an enhancing perturbation exists."""
    if not growth > 0:
        raise DomainError("growth must be positive")
    inv = 1.0 / growth
    return 2.0 + 0.5 * inv + 0.5 * math.sqrt(12.0 + inv * inv + 7.0 * inv)


def g_weighted_integral(alpha: float, upsilon: Kernel) -> float:
    """``int upsilon(y) g(alpha, y) dy`` over the whole line."""
    r = upsilon.support_radius
    if r == 0.0:
        return 0.0
    val, _ = quad(lambda y: float(upsilon.cont(y)) * float(g_indicator(alpha, y)), 0.0, r,
                  epsabs=0.0, epsrel=1e-12, limit=200)
    return 2.0 * val


# -- self-similar concentration ----------------------------------------------

def _check_unit_support(nu_kernel: Kernel) -> None:
    if nu_kernel.has_atom:
        raise KernelError("kernel must be purely continuous")
    if nu_kernel.support_radius > 1.0 + 1e-12:
        raise KernelError("kernel support exceeds [-1, 1]; rescale it first")


def i0_integral(mu_bar: float, nu_bar: float, p_value: float, nu_kernel: Kernel) -> float:
    """``mu_bar int_0^1 ((int_{-z}^z nu) / (nu_bar + 2 sqrt(P)) - 1) z nu(z) dz`` with ``d = 1``."""
    _check_unit_support(nu_kernel)
    if not p_value > 0:
        raise DomainError("P must be positive")
    if not nu_kernel.has_cont:
        return 0.0
    if abs(nu_kernel.mass() - nu_bar) > 1e-8 * max(1.0, nu_bar):
        raise KernelError("kernel mass does not match nu_bar")
    denom = nu_bar + 2.0 * math.sqrt(p_value)

    def integrand(z):
        return (2.0 * float(nu_kernel.cumulative(z)) / denom - 1.0) * z * float(nu_kernel.cont(z))

    val, _ = quad(integrand, 0.0, nu_kernel.support_radius, epsabs=0.0, epsrel=1e-13, limit=200)
    return mu_bar * val


def inner_layer_slope(mu_bar: float, nu_bar: float, p_value: float, nu_kernel: Kernel) -> float:
    """Leading-order ``d Psi2 / d eps`` at ``eps = 0`` from matched inner/outer expansions (``d = 1``).

    With ``a = sqrt(P)``, ``A = mu_bar / (nu_bar + 2a)``, ``m = int_0^R z nu``
    and ``Q = (1/2) int int_{[0,R]^2} |s - t| nu(s) nu(t)``:

        d Psi2 / d eps = -4 a A (a m - Q) / (nu_bar + 2a).

    The inner profile varies at order ``eps`` across the kernel support, and
    its average against ``nu`` enters the outer amplitude; the term ``Q``
    carries that contribution.
    """
    _check_unit_support(nu_kernel)
    if not p_value > 0:
        raise DomainError("P must be positive")
    if not nu_kernel.has_cont:
        return 0.0
    r = nu_kernel.support_radius
    a = math.sqrt(p_value)
    amp = mu_bar / (nu_bar + 2.0 * a)
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    moment, _ = quad(lambda z: z * float(nu_kernel.cont(z)), 0.0, r, **opts)

    def inner(x):
        return quad(lambda s: float(nu_kernel.cumulative(s)), 0.0, x, **opts)[0]

    q, _ = quad(lambda x: float(nu_kernel.cont(x)) * inner(x), 0.0, r, **opts)
    return -4.0 * a * amp * (a * moment - q) / (nu_bar + 2.0 * a)


def _extrapolate_to_zero(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Polynomial (Neville) extrapolation of ``ys(xs)`` to ``x = 0``."""
    p = list(ys)
    n = len(xs)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i])
    return p[0]


@dataclass
class SelfSimilarReport:
    """Small-width derivative of the field return for a concentrating kernel."""

    p_value: float
    eps_ladder: list
    psi2_eps: list
    psi2_0: float
    quotients: list
    fd_derivative: float
    closed_form: float
    i0: float
    inner_layer: float
    low_order: bool

    @property
    def rel_diff_closed(self) -> float:
        return abs(self.fd_derivative - self.closed_form) / abs(self.closed_form)

    @property
    def rel_diff_inner(self) -> float:
        return abs(self.fd_derivative - self.inner_layer) / max(abs(self.inner_layer), 1e-300)

    def agrees(self, rtol: float = 0.05) -> bool:
        return self.rel_diff_closed <= rtol

    def both_positive(self) -> bool:
        return self.fd_derivative > 0 and self.closed_form > 0

    def rows(self):
        return [(float(e), float(v), float(q)) for e, v, q in zip(self.eps_ladder, self.psi2_eps, self.quotients)]

    def to_csv(self, path) -> None:
        _write_csv(path, ["eps", "psi2", "difference_quotient"], self.rows())

    def to_record(self) -> dict:
        return {"p_value": self.p_value, "psi2_0": self.psi2_0, "fd_derivative": self.fd_derivative,
                "closed_form": self.closed_form, "i0": self.i0, "inner_layer": self.inner_layer,
                "low_order": self.low_order, "agrees_closed_form": self.agrees(),
                "both_positive": self.both_positive()}


def dpsi2_deps_selfsimilar(params: Params, c: float, lam: float, base_nu: Kernel,
                           eps_ladder: Sequence[float] = (0.08, 0.04, 0.02, 0.01),
                           grid: GridControl | None = None, p_value: float | None = None) -> SelfSimilarReport:
    """``d Psi2 / d eps`` at ``eps = 0`` for ``nu_eps = nu(y / eps) / eps`` and a Dirac ``mu``.

    Difference quotients ``(Psi2(eps) - Psi2(0)) / eps`` on the ladder are
    extrapolated to ``eps = 0``. Also returned: the closed form
    ``-2 sqrt(P) I0 / (nu_bar + 2 sqrt(P))`` and the inner-layer expansion of
    :func:`inner_layer_slope`. Pass ``p_value`` to bypass ``(c, lam)``.
    """
    _require_unit_normalization(params, "the self-similar derivative")
    _check_unit_support(base_nu)
    grid = grid or GridControl(extrapolate=True)
    ladder = [float(e) for e in eps_ladder]
    if not ladder or any(not 0 < e <= 0.5 for e in ladder) or any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("eps ladder must be strictly descending within (0, 0.5]")
    if p_value is None:
        from .bvp import admissible_lambda
        from .bvp import p_value as pv

        p = pv(params, c, admissible_lambda(params, c, lam))
    else:
        p = float(p_value)
    mu = Kernel(atom=params.mu_bar)
    psi0 = psi2_closed_limit_p(1.0, p, params.mu_bar, params.nu_bar)
    vals = [psi2_bvp_p(1.0, p, ModelSpec(mollify(base_nu, e), mu), grid) for e in ladder]
    quots = [(v - psi0) / e for v, e in zip(vals, ladder)]
    fd = quots[0] if len(ladder) == 1 else _extrapolate_to_zero(ladder, quots)
    i0 = i0_integral(params.mu_bar, params.nu_bar, p, base_nu)
    closed = -2.0 * math.sqrt(p) * i0 / (params.nu_bar + 2.0 * math.sqrt(p))
    inner = inner_layer_slope(params.mu_bar, params.nu_bar, p, base_nu)
    return SelfSimilarReport(p, ladder, vals, psi0, quots, fd, closed, i0, inner, len(ladder) == 1)


def selfsimilar_speeds(params: Params, base_nu: Kernel, eps_ladder: Sequence[float],
                       control: SearchControl | None = None) -> tuple[list, float]:
    """Speeds for ``nu_eps`` (concentrated ``base_nu``) with a Dirac ``mu``, and the Dirac speed."""
    control = control or PERTURBATION_CONTROL
    mu = Kernel(atom=params.mu_bar)
    c0 = spreading_speed(params, limit_spec(params), control).c_star
    cs = [spreading_speed(params, ModelSpec(mollify(base_nu, e), mu), control).c_star for e in eps_ladder]
    return cs, c0


# -- Dirac plus small continuous part --------------------------------------------

def alpha_star(params: Params, control: SearchControl | None = None) -> tuple[float, SpeedResult]:
    """``sqrt(P(lam*))`` at the tangency of the Dirac-exchange model."""
    res = spreading_speed(params, limit_spec(params), control or SearchControl())
    if res.lambda_star is None:
        raise DomainError("no tangency: D <= 2d gives c* = c_KPP")
    lam = res.lambda_star
    p = res.c_star * lam - params.d * lam * lam - params.growth
    return math.sqrt(p / params.d), res


@dataclass(frozen=True)
class PerturbedSpeed:
    c_star_eps: float
    c_star_0: float
    delta: float


def perturbed_speed(params: Params, upsilon: Kernel, eps: float,
                    control: SearchControl | None = None, c_star_0: float | None = None) -> PerturbedSpeed:
    """Speed with ``nu = (1 - eps) delta_0 + eps upsilon`` against the Dirac speed."""
    _require_unit_normalization(params, "the mixture perturbation")
    control = control or PERTURBATION_CONTROL
    if not 0.0 <= eps < 1.0:
        raise DomainError("eps must lie in [0, 1)")
    nu = mix_with_atom(upsilon, eps)
    spec = ModelSpec(nu=nu, mu=Kernel(atom=params.mu_bar))
    if c_star_0 is None:
        c_star_0 = spreading_speed(params, limit_spec(params), control).c_star
    c_eps = spreading_speed(params, spec, control).c_star
    return PerturbedSpeed(c_eps, c_star_0, c_eps - c_star_0)


@dataclass
class PerturbationReport:
    """Sign of the speed change along an ``eps`` ladder."""

    eps_ladder: list
    c_star_eps: list
    c_star_0: float
    deltas: list
    sign: str
    regime: str
    alpha_star: float
    m1: float
    g_integral: float
    extra: dict = field(default_factory=dict)

    def rows(self):
        return [(float(e), float(c), float(dl)) for e, c, dl in zip(self.eps_ladder, self.c_star_eps, self.deltas)]

    def to_csv(self, path) -> None:
        _write_csv(path, ["eps", "c_star_eps", "delta"], self.rows())

    def to_record(self) -> dict:
        return {"c_star_0": self.c_star_0, "sign": self.sign, "regime": self.regime,
                "alpha_star": self.alpha_star, "m1": self.m1, "g_integral": self.g_integral,
                **self.extra}


def perturbation_study(params: Params, upsilon: Kernel, eps_ladder: Sequence[float] = (0.1, 0.05, 0.02),
                       control: SearchControl | None = None) -> PerturbationReport:
    """Run :func:`perturbed_speed` on a ladder and classify the sign.

    The sign is read from the two smallest ``eps``; disagreement is reported
    as ``inconclusive``.
    """
    control = control or PERTURBATION_CONTROL
    a_star, base = alpha_star(params, control)
    runs = [perturbed_speed(params, upsilon, e, control, base.c_star) for e in eps_ladder]
    deltas = [r.delta for r in runs]
    order = sorted(range(len(deltas)), key=lambda i: eps_ladder[i])[:2]
    last = [deltas[i] for i in order]
    if all(x > 0 for x in last):
        sign, regime = "positive", "enhanced"
    elif all(x < 0 for x in last):
        sign, regime = "negative", "suppressed"
    else:
        sign, regime = "inconclusive", "inconclusive"
    return PerturbationReport(list(eps_ladder), [r.c_star_eps for r in runs], base.c_star, deltas, sign,
                              regime, a_star, m1(params.growth), g_weighted_integral(a_star, upsilon))
