"""Spreading speed as the first speed where the two dispersion curves touch.

For each ``c`` the gap ``min_lam (Psi2 - Psi1)`` over the admissible window is
found by golden-section search (the difference is strictly convex in ``lam``).
The gap is positive below the spreading speed and nonpositive above it, so
``c*`` is bracketed by doubling an offset from ``c_KPP`` and then bisected.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .bvp import GridControl, lambda_window, p_value, psi1, psi2_p
from .errors import DomainError, SolverError
from .model import ModelSpec, Params

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SearchControl:
    """Tolerances of the gap minimization and the speed bisection."""

    c_rtol: float = 1e-8
    golden_rtol: float = 1e-10
    golden_maxiter: int = 200
    delta0: float = 1e-6
    max_factor: float = 1e6
    clamp_margin: float = 1e-6
    method: str = "auto"
    grid: GridControl = field(default_factory=GridControl)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GapReport:
    """Minimum of ``Psi2 - Psi1`` over the clamped window at speed ``c``."""

    c: float
    gap: float
    lambda_argmin: float
    endpoint_cross: bool
    interior_gap: float
    n_evals: int


@dataclass
class SpeedResult:
    """Spreading speed and the metadata of its computation."""

    c_star: float
    lambda_star: float | None
    psi_star: float | None
    bracket: tuple[float, float]
    kind: str
    params: Params
    analytic: bool = False
    threshold_degenerate: bool = False
    n_gap_evals: int = 0
    method: str = "auto"
    grid: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        """Flat JSON-ready record."""
        rec = {
            "c_star": self.c_star,
            "lambda_star": self.lambda_star,
            "psi_star": self.psi_star,
            "bracket_lo": self.bracket[0],
            "bracket_hi": self.bracket[1],
            "kind": self.kind,
            "analytic": self.analytic,
            "threshold_degenerate": self.threshold_degenerate,
            "n_gap_evals": self.n_gap_evals,
            "method": self.method,
        }
        rec.update({f"param_{k}": v for k, v in self.params.to_dict().items()})
        rec.update({f"grid_{k}": v for k, v in self.grid.items()})
        return rec


@dataclass(frozen=True)
class CurveProblem:
    """Abstract pair of dispersion curves over a speed-dependent window.

    ``window(c)`` returns the open ``lam`` interval, ``road(c, lam)`` and
    ``field(c, lam)`` the two curve values, and ``edge_level`` the common
    value the field curve reaches at the window edges.
    """

    window: Callable[[float], tuple[float, float]]
    road: Callable[[float, float], float]
    field: Callable[[float, float], float]
    edge_level: float


def finite_d_problem(params: Params, spec: ModelSpec, control: SearchControl) -> CurveProblem:
    def window(c):
        w = lambda_window(params, c)
        return w.lo, w.hi

    def field_curve(c, lam):
        return psi2_p(params.d, p_value(params, c, lam), spec, control.grid, control.method)

    return CurveProblem(window, lambda c, lam: psi1(params, c, lam), field_curve, params.mu_bar)


def golden_min(f: Callable[[float], float], a: float, b: float, rtol: float = 1e-10,
               maxiter: int = 200) -> tuple[float, float, int]:
    """Golden-section minimization of a unimodal ``f`` on ``[a, b]``.

    Returns ``(x, f(x), n_evals)`` for the best point seen.
    """
    tol = rtol * (b - a)
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    n = 2
    for _ in range(maxiter):
        if b - a <= tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)
        n += 1
    return (x1, f1, n) if f1 <= f2 else (x2, f2, n)


def problem_gap(problem: CurveProblem, c: float, control: SearchControl) -> GapReport:
    lo, hi = problem.window(c)
    a = lo + control.clamp_margin * (hi - lo)
    b = hi - control.clamp_margin * (hi - lo)
    if not a < b:
        raise DomainError(f"window at c = {c!r} is degenerate")

    def diff(lam):
        return problem.field(c, lam) - problem.road(c, lam)

    lam, val, n = golden_min(diff, a, b, control.golden_rtol, control.golden_maxiter)
    cross = problem.road(c, a) >= problem.edge_level or problem.road(c, b) >= problem.edge_level
    gap = min(val, -_EPS) if cross else val
    return GapReport(c, gap, lam, cross, val, n)


def gap(params: Params, spec: ModelSpec, c: float, control: SearchControl | None = None) -> GapReport:
    """Minimum over the admissible window of ``Psi2 - Psi1`` at speed ``c``."""
    control = control or SearchControl()
    return problem_gap(finite_d_problem(params, spec, control), c, control)


def bisect_speed(problem: CurveProblem, c_lo: float, c_hi: float, control: SearchControl,
                 n_evals: int = 0) -> tuple[float, float, GapReport, int]:
    """Bisect ``gap(c) = 0`` given ``gap(c_lo) > 0 >= gap(c_hi)``."""
    while c_hi - c_lo > control.c_rtol * abs(c_hi):
        mid = 0.5 * (c_lo + c_hi)
        rep = problem_gap(problem, mid, control)
        n_evals += rep.n_evals
        if rep.gap > 0:
            c_lo = mid
        else:
            c_hi = mid
    final = problem_gap(problem, 0.5 * (c_lo + c_hi), control)
    return c_lo, c_hi, final, n_evals + final.n_evals


def spreading_speed(params: Params, spec: ModelSpec, control: SearchControl | None = None) -> SpeedResult:
    """Spreading speed ``c*`` of the road-field system.

    ``D <= 2d`` returns ``c_KPP`` without any solve. Otherwise the gap is
    bracketed from ``c_KPP (1 + delta0)`` by doubling the offset and then
    bisected to ``c_rtol``.
    """
    control = control or SearchControl()
    spec.check_masses(params)
    ck = params.c_kpp()
    common = dict(kind=spec.kind, params=params, method=control.method, grid=control.grid.to_dict())
    if params.big_d <= 2.0 * params.d:
        return SpeedResult(ck, None, None, (ck, ck), analytic=True, **common)
    problem = finite_d_problem(params, spec, control)
    offset = control.delta0
    c_lo = ck * (1.0 + offset)
    rep = problem_gap(problem, c_lo, control)
    n = rep.n_evals
    if rep.gap <= 0:
        # the curves already meet at the first probe: c* - c_KPP is below resolution
        return SpeedResult(ck, rep.lambda_argmin, None, (ck, c_lo), threshold_degenerate=True,
                           n_gap_evals=n, **common)
    while True:
        offset *= 2.0
        c_hi = ck * (1.0 + offset)
        if c_hi > ck * control.max_factor:
            raise SolverError("speed bracket expansion exceeded c_KPP * max_factor; check the solver setup")
        rep = problem_gap(problem, c_hi, control)
        n += rep.n_evals
        if rep.gap < 0:
            break
        c_lo = c_hi
    c_lo, c_hi, final, n = bisect_speed(problem, c_lo, c_hi, control, n)
    lam = final.lambda_argmin
    return SpeedResult(final.c, lam, float(psi1(params, final.c, lam)), (c_lo, c_hi),
                       n_gap_evals=n, **common)


@dataclass
class CurveTable:
    """Samples of both dispersion curves across the window at one speed."""

    c: float
    lam: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray

    def rows(self):
        return list(zip(self.lam.tolist(), self.psi1.tolist(), self.psi2.tolist()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "psi1", "psi2"])
            for row in self.rows():
                w.writerow([f"{v:.17g}" for v in row])


def curve_sample(params: Params, spec: ModelSpec, c: float, n: int,
                 control: SearchControl | None = None, margin: float | None = None) -> CurveTable:
    """``n`` evenly spaced ``lam`` across the window shrunk by ``margin``."""
    control = control or SearchControl()
    if n < 2:
        raise ValueError("curve_sample needs n >= 2")
    margin = control.clamp_margin if margin is None else margin
    win = lambda_window(params, c)
    a, b = win.clamped(margin)
    lam = np.linspace(a, b, n)
    p1 = psi1(params, c, lam)
    p2 = np.array([psi2_p(params.d, p_value(params, c, x), spec, control.grid, control.method) for x in lam])
    return CurveTable(c, lam, p1, p2)


@dataclass(frozen=True)
class ChainCheck:
    """Slacks of ``c/D <= lam2_minus(c) <= lam1_plus(c)`` at the reported speed."""

    ok: bool
    slack_low: float
    slack_high: float
    c_over_d: float
    lam2_minus: float
    lam1_plus: float


def check_inequality_chain(result: SpeedResult, params: Params, tol: float = 1e-9) -> ChainCheck:
    """Evaluate ``c*/D <= lam2_minus(c*) <= (c* + sqrt(c*^2 + 4 D mu_bar)) / (2D)``."""
    c = result.c_star
    ck = params.c_kpp()
    root = math.sqrt(max(c * c - ck * ck, 0.0))
    lam2m = (c - root) / (2.0 * params.d)
    lam1p = (c + math.sqrt(c * c + 4.0 * params.big_d * params.mu_bar)) / (2.0 * params.big_d)
    s1 = lam2m - c / params.big_d
    s2 = lam1p - lam2m
    return ChainCheck(s1 >= -tol and s2 >= -tol, s1, s2, c / params.big_d, lam2m, lam1p)
