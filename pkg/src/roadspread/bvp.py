"""Exponential profiles of the exchange ODE and the two dispersion functions.

For a decay exponent ``lam`` and frame speed ``c`` the field profile solves

    -d phi'' + (P + nu(y)) phi = mu(y),    P = lam c - d lam^2 - f'(0) > 0,

on the whole line. ``psi1`` is the road side ``-D lam^2 + c lam + mu_bar`` and
``psi2`` the field return ``int nu phi``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import _backend
from .errors import DomainError, KernelError, SolverError
from .model import Kernel, ModelSpec, Params


@dataclass(frozen=True)
class LambdaWindow:
    """Open interval of admissible decay exponents at a given speed."""

    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def clamped(self, margin: float) -> tuple[float, float]:
        """Window shrunk by ``margin`` times its width at both ends."""
        w = self.width
        return self.lo + margin * w, self.hi - margin * w


@dataclass(frozen=True)
class GridControl:
    """Resolution controls for the profile solver.

    By default the spacing is set from the decay length and the smallest
    kernel support (``points_per_decay`` nodes per ``sqrt(d/P)`` and
    ``points_per_support`` per support radius, both times ``refine``) and
    the grid is aligned so that support edges are nodes. Setting
    ``n_intervals`` instead uses that many intervals on ``[-L, L]`` with
    ``L = support_radius + tail_decays * sqrt(d/P)``.

    ``extrapolate`` combines the solution on ``h`` and ``h/2`` to cancel
    the leading ``h^2`` error term of ``psi2``.
    """

    n_intervals: int | None = None
    points_per_decay: int = 1024
    points_per_support: int = 512
    refine: float = 1.0
    tail_decays: float = 14.0
    max_tail_points: int = 2048
    extrapolate: bool = False
    residual_tol: float = 1e-8
    clamp_margin: float = 1e-6

    def refined(self, factor: float) -> "GridControl":
        from dataclasses import replace

        if self.n_intervals is not None:
            return replace(self, n_intervals=int(round(self.n_intervals * factor)))
        return replace(self, refine=self.refine * factor)

    def to_dict(self) -> dict:
        from dataclasses import asdict

        return asdict(self)


@dataclass
class ProfileSolution:
    """Discrete profile on a uniform symmetric grid with ``y = 0`` a node."""

    ygrid: np.ndarray
    phi: np.ndarray
    lam: float
    c: float
    p_value: float
    trunc_len: float
    residual: float
    h: float

    @property
    def center_index(self) -> int:
        return self.ygrid.size // 2

    @property
    def phi0(self) -> float:
        return float(self.phi[self.center_index])

    def to_csv(self, path) -> None:
        """Write two columns ``y, phi`` with full precision."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y", "phi"])
            for y, p in zip(self.ygrid, self.phi):
                w.writerow([f"{y:.17g}", f"{p:.17g}"])


# -- elementary functions ---------------------------------------------------

def p_value(params: Params, c: float, lam: float) -> float:
    """``lam c - d lam^2 - f'(0)``."""
    return lam * c - params.d * lam * lam - params.growth


def psi1(params: Params, c: float, lam):
    """Road-side dispersion function ``-D lam^2 + c lam + mu_bar``."""
    return -params.big_d * lam * lam + c * lam + params.mu_bar


def lambda_window(params: Params, c: float) -> LambdaWindow:
    """Interval where ``P(lam) > 0``; empty (an error) for ``c <= c_KPP``."""
    ck = params.c_kpp()
    if not c > ck:
        raise DomainError(f"no exponential profile exists for c = {c!r} <= c_KPP = {ck!r}")
    # c^2 - c_kpp^2 factored to keep precision just above threshold
    root = math.sqrt((c - ck) * (c + ck))
    hi = (c + root) / (2.0 * params.d)
    # product of the roots is f'(0)/d; avoids cancellation in c - root
    lo = params.growth / (params.d * hi)
    return LambdaWindow(lo, hi)


def admissible_lambda(params: Params, c: float, lam: float, margin: float = 1e-6) -> float:
    """Check ``lam`` lies strictly inside the window and clamp it off the edges."""
    win = lambda_window(params, c)
    if not (win.lo < lam < win.hi):
        raise DomainError(f"lambda = {lam!r} outside the open window ({win.lo!r}, {win.hi!r})")
    a, b = win.clamped(margin)
    return min(max(lam, a), b)


def psi2_closed_limit(params: Params, c: float, lam: float) -> float:
    """Field return for Dirac exchanges: ``nu mu / (nu + 2 sqrt(d P))``."""
    p = p_value(params, c, lam)
    return psi2_closed_limit_p(params.d, p, params.mu_bar, params.nu_bar)


def psi2_closed_limit_p(d: float, p: float, mu_bar: float, nu_bar: float) -> float:
    if not p > 0:
        raise DomainError(f"P = {p!r} must be positive")
    return nu_bar * mu_bar / (nu_bar + 2.0 * math.sqrt(d * p))


_SERIES_FLAT = np.array([1.0 / math.factorial(k + 1) for k in range(12)])
_SERIES_DOWN = np.array([1.0 / math.factorial(k + 2) for k in range(12)])


def _ramp_weights(x):
    """``int_0^1 e^{-xs} ds`` and ``int_0^1 (1 - s) e^{-xs} ds``, stable for small ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    flat = np.empty_like(x)
    down = np.empty_like(x)
    small = x < 0.1
    big = ~small
    xb = x[big]
    flat[big] = -np.expm1(-xb) / xb
    down[big] = (np.expm1(-xb) + xb) / (xb * xb)
    # power series in -x for the cancelling range
    powers = (-x[small])[:, None] ** np.arange(12)
    flat[small] = powers @ _SERIES_FLAT
    down[small] = powers @ _SERIES_DOWN
    return flat, down


def damped_half_integral(mu_kernel: Kernel, kappa: float) -> float:
    """``int_0^inf exp(-kappa z) mu(z) dz``, exact for every kernel shape."""
    r = mu_kernel.support_radius
    if r == 0.0:
        return 0.0
    amp = mu_kernel.amplitude
    x = kappa * r
    if mu_kernel.shape == "boxcar":
        return amp * r * float(_ramp_weights(x)[0][0])
    if mu_kernel.shape == "triangle":
        return amp * r * float(_ramp_weights(x)[1][0])
    if mu_kernel.shape == "raised_cosine":
        w = math.pi / r
        cos_part = kappa * (1.0 + math.exp(-x)) / (kappa * kappa + w * w)
        return 0.5 * amp * (r * float(_ramp_weights(x)[0][0]) + cos_part)
    # table: exact integral of the piecewise-linear interpolant
    vals = np.asarray(mu_kernel.values)
    h = r / (vals.size - 1)
    z0 = h * np.arange(vals.size - 1)
    flat, down = _ramp_weights(np.full(z0.size, kappa * h))
    rise = flat - down
    seg = h * np.exp(-kappa * z0) * (vals[:-1] * down + vals[1:] * rise)
    return amp * float(seg.sum())


def damped_half_integral_quad(mu_kernel: Kernel, kappa: float) -> float:
    """Adaptive-quadrature version of :func:`damped_half_integral` (reference)."""
    r = mu_kernel.support_radius
    if r == 0.0:
        return 0.0
    pts = None
    if mu_kernel.shape == "table" and len(mu_kernel.values) > 2:
        pts = list(np.linspace(0.0, r, len(mu_kernel.values))[1:-1])
    val, _ = quad(lambda z: math.exp(-kappa * z) * float(mu_kernel.cont(z)), 0.0, r,
                  points=pts, limit=max(200, 4 * len(pts or [])), epsabs=0.0, epsrel=1e-13)
    return val


def psi2_closed_rpsl2(params: Params, c: float, lam: float, mu_kernel: Kernel) -> float:
    """Field return for a Dirac ``nu`` and a continuous ``mu``."""
    return psi2_closed_rpsl2_p(params.d, p_value(params, c, lam), params.nu_bar, mu_kernel)


def psi2_closed_rpsl2_p(d: float, p: float, nu_bar: float, mu_kernel: Kernel) -> float:
    if mu_kernel.has_atom:
        raise KernelError("the continuous-mu closed form needs mu without atom")
    if not p > 0:
        raise DomainError(f"P = {p!r} must be positive")
    root = math.sqrt(d * p)
    return 2.0 * nu_bar / (nu_bar + 2.0 * root) * damped_half_integral(mu_kernel, math.sqrt(p / d))


# -- discrete solver ---------------------------------------------------------

def _grid(d: float, p: float, spec: ModelSpec, grid: GridControl) -> tuple[float, int]:
    """Return spacing ``h`` and half node count ``n`` (grid is ``h * [-n..n]``)."""
    kappa = math.sqrt(p / d)
    radii = [r for r in (spec.nu.support_radius, spec.mu.support_radius) if r > 0]
    big_r = max(radii, default=0.0)
    if grid.n_intervals is not None:
        n = max(1, int(grid.n_intervals) // 2)
        return (big_r + grid.tail_decays / kappa) / n, n
    h = 1.0 / (kappa * grid.points_per_decay * grid.refine)
    if radii:
        r_min = min(radii)
        h = min(h, r_min / (grid.points_per_support * grid.refine))
        h = r_min / math.ceil(r_min / h - 1e-9)
    n_support = int(math.ceil(big_r / h - 1e-9))
    n_tail = int(min(math.ceil(grid.tail_decays / (kappa * h)), grid.max_tail_points * grid.refine))
    return h, n_support + max(n_tail, 1)


def _solve_on(d: float, p: float, spec: ModelSpec, h: float, n: int, tol: float):
    y = h * np.arange(-n, n + 1, dtype=float)
    nu = spec.nu.sample(y, h)
    mu = spec.mu.sample(y, h)
    off = d / (h * h)
    diag = 2.0 * off + p + nu
    rhs = mu.copy()
    diag[n] += spec.nu.atom / h
    rhs[n] += spec.mu.atom / h
    # exact discrete decay: phi_{i+1} = r phi_i beyond the kernel support
    q = p * h * h / (2.0 * d)
    r = 1.0 / (1.0 + q + math.sqrt(q * q + 2.0 * q))
    diag[0] -= r * off
    diag[-1] -= r * off
    sub = np.full(y.size, -off)
    phi = _backend.tridiag_solve(sub, diag, sub, rhs)
    res = diag * phi - rhs
    res[1:] -= off * phi[:-1]
    res[:-1] -= off * phi[1:]
    scale = max(float(np.max(np.abs(diag * phi))), float(np.max(np.abs(rhs))), 1e-300)
    residual = float(np.max(np.abs(res))) / scale
    if not np.all(np.isfinite(phi)) or residual > tol:
        raise SolverError(f"profile solve inaccurate: relative residual {residual:.3e}")
    return y, phi, nu, residual


def solve_profile_p(d: float, p: float, spec: ModelSpec, grid: GridControl | None = None,
                    lam: float = float("nan"), c: float = float("nan")) -> ProfileSolution:
    """Solve the exchange ODE for a given coercivity value ``P > 0``."""
    grid = grid or GridControl()
    if not (math.isfinite(p) and p > 0):
        raise DomainError(f"P = {p!r} must be positive")
    h, n = _grid(d, p, spec, grid)
    y, phi, _, residual = _solve_on(d, p, spec, h, n, grid.residual_tol)
    return ProfileSolution(y, phi, lam, c, p, float(n * h), residual, h)


def solve_profile(params: Params, c: float, lam: float, spec: ModelSpec,
                  grid: GridControl | None = None) -> ProfileSolution:
    """Solve the exchange ODE at ``(lam, c)``; ``lam`` is clamped off the window edges."""
    grid = grid or GridControl()
    lam = admissible_lambda(params, c, lam, grid.clamp_margin)
    return solve_profile_p(params.d, p_value(params, c, lam), spec, grid, lam, c)


def _return(spec: ModelSpec, sol_y, phi, nu, n) -> float:
    return spec.nu.atom * float(phi[n]) + float(np.trapezoid(nu * phi, sol_y))


def psi2_bvp_p(d: float, p: float, spec: ModelSpec, grid: GridControl | None = None) -> float:
    """``nu_atom phi(0) + trapezoid(nu_cont phi)`` from the discrete profile."""
    grid = grid or GridControl()
    if not (math.isfinite(p) and p > 0):
        raise DomainError(f"P = {p!r} must be positive")
    h, n = _grid(d, p, spec, grid)
    y, phi, nu, _ = _solve_on(d, p, spec, h, n, grid.residual_tol)
    val = _return(spec, y, phi, nu, n)
    if grid.extrapolate:
        y2, phi2, nu2, _ = _solve_on(d, p, spec, 0.5 * h, 2 * n, grid.residual_tol)
        val = (4.0 * _return(spec, y2, phi2, nu2, 2 * n) - val) / 3.0
    return val


def closed_form_available(spec: ModelSpec) -> bool:
    return spec.kind in ("Limit", "SemiLimitMuNonlocal")


def psi2_p(d: float, p: float, spec: ModelSpec, grid: GridControl | None = None,
           method: str = "auto") -> float:
    """Field return at coercivity ``P``.

    ``method="auto"`` uses the closed form when one exists (Dirac ``nu`` with
    Dirac or continuous ``mu``) and the discrete solver otherwise;
    ``"bvp"`` and ``"closed"`` force a route.
    """
    if method not in ("auto", "bvp", "closed"):
        raise ValueError(f"unknown method {method!r}")
    if method == "bvp" or (method == "auto" and not closed_form_available(spec)):
        return psi2_bvp_p(d, p, spec, grid)
    kind = spec.kind
    if kind == "Limit":
        return psi2_closed_limit_p(d, p, spec.mu.atom, spec.nu.atom)
    if kind == "SemiLimitMuNonlocal":
        return psi2_closed_rpsl2_p(d, p, spec.nu.atom, spec.mu)
    raise KernelError(f"no closed form for kind {kind}")


def psi2(params: Params, c: float, lam: float, spec: ModelSpec,
         grid: GridControl | None = None, method: str = "auto") -> float:
    """Field return ``Psi2(lam; c)`` for the given exchange kernels."""
    grid = grid or GridControl()
    lam = admissible_lambda(params, c, lam, grid.clamp_margin)
    return psi2_p(params.d, p_value(params, c, lam), spec, grid, method)


def half_line_slope(d: float, p: float, nu_kernel: Kernel, boundary_value: float,
                    grid: GridControl | None = None) -> float:
    """One-sided slope ``phi'(0+)`` of the decaying solution with ``phi(0) = M``.

    Solves ``-d phi'' + (P + nu) phi = 0`` on ``y > 0`` with the Dirichlet
    value ``boundary_value`` at 0 and a decaying tail.
    """
    grid = grid or GridControl()
    if not p > 0:
        raise DomainError(f"P = {p!r} must be positive")
    spec = ModelSpec(nu=nu_kernel.continuous_part(), mu=Kernel.zero())
    h, n = _grid(d, p, spec, grid)
    y = h * np.arange(1, n + 1, dtype=float)
    off = d / (h * h)
    diag = 2.0 * off + p + nu_kernel.sample(y, h)
    rhs = np.zeros(n)
    rhs[0] = off * boundary_value
    q = p * h * h / (2.0 * d)
    diag[-1] -= off / (1.0 + q + math.sqrt(q * q + 2.0 * q))
    sub = np.full(n, -off)
    phi = _backend.tridiag_solve(sub, diag, sub, rhs)
    return (-3.0 * boundary_value + 4.0 * phi[0] - phi[1]) / (2.0 * h)
