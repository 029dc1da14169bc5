"""Finite-difference simulation of the road-field system and its stationary state.

The road ``u(t, x)`` and field ``v(t, x, y)`` are advanced by forward Euler
with zero-flux outer boundaries. Solutions with even initial data stay even
in ``x``, so only ``x >= 0`` is stored with a mirror condition at ``x = 0``.
Exchange enters through three arrays on the ``y`` grid: ``src`` (road to
field rate per row), ``sink`` (field to road rate per row) and ``gather``
(weights collecting the field into the road).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import DomainError, SolverError
from .model import ModelSpec, Params

SIM_KINDS = ("Limit", "FullNonlocal")


@dataclass(frozen=True)
class InitialData:
    """Compactly supported cosine bumps centred at ``x = 0`` (and ``y = 0`` for the field)."""

    road_amplitude: float = 0.0
    field_amplitude: float = 0.5
    radius_x: float = 4.0
    radius_y: float = 2.0

    def __post_init__(self):
        if self.road_amplitude < 0 or self.field_amplitude < 0:
            raise DomainError("initial amplitudes must be nonnegative")
        if self.radius_x <= 0 or self.radius_y <= 0:
            raise DomainError("initial radii must be positive")

    @staticmethod
    def _bump(s):
        return np.where(np.abs(s) < 1.0, 0.5 * (1.0 + np.cos(np.pi * np.clip(s, -1.0, 1.0))), 0.0)

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        bx = self._bump(x / self.radius_x)
        by = self._bump(y / self.radius_y)
        return self.road_amplitude * bx, self.field_amplitude * by[:, None] * bx[None, :]

    def to_dict(self) -> dict:
        return {"road_amplitude": self.road_amplitude, "field_amplitude": self.field_amplitude,
                "radius_x": self.radius_x, "radius_y": self.radius_y}


@dataclass(frozen=True)
class ExchangeArrays:
    """Per-row exchange rates on the ``y`` grid."""

    src: np.ndarray
    sink: np.ndarray
    gather: np.ndarray


def y_grid(ly: float, ny: int) -> tuple[np.ndarray, float]:
    if ny < 3 or ny % 2 == 0:
        raise DomainError("ny must be odd (y = 0 is a grid row) and at least 3")
    y = np.linspace(-ly, ly, ny)
    return y, y[1] - y[0]


def exchange_arrays(params: Params, spec: ModelSpec, y: np.ndarray, hy: float) -> ExchangeArrays:
    """Discrete exchange terms; Dirac atoms act on the ``y = 0`` row as a flux jump."""
    kind = spec.kind
    if kind not in SIM_KINDS:
        raise DomainError(f"the simulator supports {SIM_KINDS}, not {kind}")
    spec.check_masses(params)
    ny = y.size
    if kind == "Limit":
        j0 = ny // 2
        src = np.zeros(ny)
        sink = np.zeros(ny)
        gather = np.zeros(ny)
        src[j0] = spec.mu.atom / hy
        sink[j0] = spec.nu.atom / hy
        gather[j0] = spec.nu.atom
        return ExchangeArrays(src, sink, gather)
    if spec.support_radius >= y[-1] - hy:
        raise DomainError("field half-width must exceed the kernel support by at least one row")
    src = spec.mu.sample(y, hy)
    sink = spec.nu.sample(y, hy)
    return ExchangeArrays(src, sink, hy * sink)


def apriori_bound(params: Params, spec: ModelSpec, y: np.ndarray, hy: float) -> float:
    """Smallest ``K`` with ``f(K) <= K (nu(y) - (nu_bar/mu_bar) mu(y))`` on the grid, ``f = g s(1-s)``."""
    ex = exchange_arrays(params, spec, y, hy)
    # f(s) <= s w  <=>  g (1 - s) <= w  <=>  s >= 1 - w / g
    w = ex.sink - params.nu_bar / params.mu_bar * ex.src
    return max(1.0, 1.0 - float(w.min()) / params.growth)


@dataclass
class StationaryState:
    """x-independent positive equilibrium ``(U_s, V_s(y))``."""

    ygrid: np.ndarray
    v: np.ndarray
    u: float
    steps: int
    residual: float

    def to_csv(self, path, header: str = "") -> None:
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(header)
            w = csv.writer(fh)
            w.writerow(["y", "v"])
            for a, b in zip(self.ygrid, self.v):
                w.writerow([f"{a:.17g}", f"{b:.17g}"])


def _lap_y(v: np.ndarray, hy: float) -> np.ndarray:
    out = np.empty_like(v)
    out[1:-1] = v[:-2] - 2.0 * v[1:-1] + v[2:]
    out[0] = 2.0 * (v[1] - v[0])
    out[-1] = 2.0 * (v[-2] - v[-1])
    return out / (hy * hy)


def _lap_y_matrix(ny: int, hy: float) -> np.ndarray:
    a = np.diag(np.full(ny, -2.0)) + np.diag(np.ones(ny - 1), 1) + np.diag(np.ones(ny - 1), -1)
    a[0, 1] = a[-1, -2] = 2.0
    return a / (hy * hy)


def stationary_state(params: Params, spec: ModelSpec, ly: float = 10.0, ny: int = 201,
                     tol: float = 1e-10, max_steps: int = 2_000_000) -> StationaryState:
    """Positive ``x``-independent equilibrium on the ``y`` grid.

    The road value is slaved to the field (``mu_bar U = int nu V``), which
    removes the slow road relaxation when the exchange is weak. The reduced
    field equation is marched from ``V = 0.5`` until its time derivative is
    below ``1e-6`` and then polished by Newton's method until the sup norm
    of the residual is below ``tol``.
    """
    y, hy = y_grid(ly, ny)
    ex = exchange_arrays(params, spec, y, hy)
    k = apriori_bound(params, spec, y, hy)
    g = params.growth
    coupling = ex.src[:, None] * ex.gather[None, :] / params.mu_bar
    feed = float(np.max(np.abs(coupling).sum(axis=1)))
    dt = 0.9 / (2.0 * params.d / hy**2 + ex.sink.max() + feed + g * max(1.0, 2.0 * k - 1.0))

    def rhs(v):
        return params.d * _lap_y(v, hy) + g * v * (1.0 - v) + coupling @ v - ex.sink * v

    v = np.full(ny, 0.5)
    rate = np.inf
    step = 0
    march_tol = max(tol, 1e-6)
    for step in range(1, max_steps + 1):
        dv = rhs(v)
        v = v + dt * dv
        if step % 16 == 0:
            rate = float(np.max(np.abs(dv)))
            if rate < march_tol:
                break
    else:
        raise SolverError(f"stationary march did not settle in {max_steps} steps (rate {rate:.3e})")
    lap = params.d * _lap_y_matrix(ny, hy)
    for _ in range(50):
        res = rhs(v)
        rate = float(np.max(np.abs(res)))
        if rate < tol:
            break
        jac = lap + np.diag(g * (1.0 - 2.0 * v) - ex.sink) + coupling
        v = v - np.linalg.solve(jac, res)
        step += 1
    else:
        raise SolverError(f"stationary Newton polish did not converge (residual {rate:.3e})")
    if v.min() <= 0:
        raise SolverError("stationary iteration left the positive cone")
    u = float(ex.gather @ v) / params.mu_bar
    return StationaryState(y, v, u, step, rate)


@dataclass(frozen=True)
class SimConfig:
    """Grid, time stepping and initial data for :func:`simulate`.

    ``x`` covers ``[0, lx]`` (mirror at 0, representing ``[-lx, lx]``) with
    ``nx`` nodes; ``y`` covers ``[-ly, ly]`` with an odd ``ny``. ``dt=None``
    picks the largest stable step. With ``stop_at_boundary`` the run ends
    once the road front comes within ``10 hx`` of ``lx``; turn it off for
    equilibrium studies on small boxes.
    """

    params: Params
    spec: ModelSpec
    lx: float = 300.0
    ly: float = 10.0
    nx: int = 1200
    ny: int = 201
    t_end: float = 50.0
    dt: float | None = None
    initial: InitialData = field(default_factory=InitialData)
    snapshot_stride: int = 0
    trace_interval: float | None = None
    theta: float = 0.1
    stop_at_boundary: bool = True

    @property
    def hx(self) -> float:
        return self.lx / (self.nx - 1)

    @property
    def hy(self) -> float:
        return 2.0 * self.ly / (self.ny - 1)

    def grids(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linspace(0.0, self.lx, self.nx), y_grid(self.ly, self.ny)[0]

    def max_dt(self) -> float:
        """Largest admissible step.

        ``0.9`` times the minimum of the road and field diffusion limits, the
        reaction/exchange limit, and the two monotonicity limits that keep the
        update order preserving (diagonal coefficient nonnegative).
        """
        p = self.params
        x, y = self.grids()
        ex = exchange_arrays(p, self.spec, y, self.hy)
        hx, hy = self.hx, self.hy
        _, v0 = self.initial.evaluate(x, y)
        v_sup = max(1.0, float(v0.max()), apriori_bound(p, self.spec, y, hy))
        nu_max = float(ex.sink.max())
        limits = [
            hx * hx / (2.0 * p.big_d),
            1.0 / (2.0 * p.d * (1.0 / hx**2 + 1.0 / hy**2)),
            1.0 / (p.growth + nu_max),
            1.0 / (2.0 * p.big_d / hx**2 + p.mu_bar),
            1.0 / (2.0 * p.d / hx**2 + 2.0 * p.d / hy**2 + nu_max + p.growth * max(0.0, 2.0 * v_sup - 1.0)),
        ]
        return 0.9 * min(limits)

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "spec": self.spec.to_dict(), "lx": self.lx, "ly": self.ly,
                "nx": self.nx, "ny": self.ny, "t_end": self.t_end, "dt": self.dt,
                "initial": self.initial.to_dict(), "snapshot_stride": self.snapshot_stride,
                "trace_interval": self.trace_interval, "theta": self.theta,
                "stop_at_boundary": self.stop_at_boundary}

    def header(self) -> str:
        return "# config: " + json.dumps(self.to_dict(), sort_keys=True) + "\n"


def recommended_lx(c_est: float, t_end: float, init_radius: float, hx: float) -> float:
    """Domain half-length that keeps the front away from the boundary."""
    return 1.5 * c_est * t_end + init_radius + 10.0 * hx


@dataclass
class SpeedFit:
    speed: float
    r2: float
    accepted: bool
    diagnostic: str
    n_samples: int
    drift: float = 0.0


def _slope(t, x) -> float:
    return float(np.polyfit(t, x, 1)[0])


def estimate_speed(times, positions, window_fraction: float = 0.5, min_r2: float = 0.99,
                   max_drift: float = 0.05) -> SpeedFit:
    """Least-squares slope of front position against time over the trailing window.

    The fit is accepted when ``R^2 >= min_r2`` and the slopes of the two
    halves of the window differ by at most ``max_drift`` relative. ``R^2``
    alone misses sublinear growth such as ``sqrt(t)``, which is close to a
    line on ``[T/2, T]``.
    """
    t = np.asarray(times, dtype=float)
    x = np.asarray(positions, dtype=float)
    keep = np.isfinite(x)
    t, x = t[keep], x[keep]
    if t.size == 0:
        raise ValueError("empty front trace")
    start = t[-1] - window_fraction * (t[-1] - t[0])
    sel = t >= start
    if sel.sum() < 10:
        raise ValueError(f"need at least 10 samples in the fit window, got {int(sel.sum())}")
    tw, xw = t[sel], x[sel]
    slope, icpt = np.polyfit(tw, xw, 1)
    resid = xw - (slope * tw + icpt)
    ss_tot = float(np.sum((xw - xw.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    half = tw.size // 2
    s_early, s_late = _slope(tw[:half], xw[:half]), _slope(tw[half:], xw[half:])
    drift = float(abs(s_late - s_early) / max(abs(slope), 1e-300))
    notes = []
    if r2 < min_r2:
        notes.append(f"R^2 = {r2:.4f} below {min_r2}")
    if not drift <= max_drift:
        notes.append(f"slope drift {drift:.3f} across the window exceeds {max_drift}")
    diag = "not yet ballistic: " + "; ".join(notes) if notes else ""
    return SpeedFit(float(slope), r2, not notes, diag, int(sel.sum()), drift)


@dataclass
class FrontTrace:
    """Front positions ``x_f(t) = max{x : u >= theta U_s}`` and the fitted speed."""

    times: np.ndarray
    positions: np.ndarray
    theta: float
    level: float
    fit: SpeedFit | None = None

    @property
    def speed(self) -> float | None:
        return self.fit.speed if self.fit is not None else None

    @property
    def r2(self) -> float | None:
        return self.fit.r2 if self.fit is not None else None

    def to_csv(self, path, header: str = "") -> None:
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(header)
            w = csv.writer(fh)
            w.writerow(["t", "x_f"])
            for a, b in zip(self.times, self.positions):
                w.writerow([f"{a:.17g}", f"{b:.17g}"])


def front_position(x: np.ndarray, u: np.ndarray, level: float) -> float:
    """Rightmost crossing of ``level`` by ``u``, linearly interpolated; ``nan`` if none."""
    above = np.nonzero(u >= level)[0]
    if above.size == 0:
        return float("nan")
    i = int(above[-1])
    if i == x.size - 1:
        return float(x[-1])
    return float(x[i] + (x[i + 1] - x[i]) * (u[i] - level) / (u[i] - u[i + 1]))


@dataclass
class SimResult:
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    t: float
    steps: int
    dt: float
    snapshot_times: list
    u_snapshots: list
    v_snapshots: list
    trace: FrontTrace
    stationary: StationaryState
    warnings: list
    config: SimConfig

    def road_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.config.header())
            w = csv.writer(fh)
            w.writerow(["x", "u"])
            for a, b in zip(self.x, self.u):
                w.writerow([f"{a:.17g}", f"{b:.17g}"])

    def field_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.config.header())
            w = csv.writer(fh)
            w.writerow(["x", "y", "v"])
            for j, yy in enumerate(self.y):
                for i, xx in enumerate(self.x):
                    w.writerow([f"{xx:.17g}", f"{yy:.17g}", f"{self.v[j, i]:.17g}"])


def simulate(config: SimConfig, stationary: StationaryState | None = None, fit: bool = True) -> SimResult:
    """Integrate the road-field system forward in time and track the road front."""
    p = config.params
    if config.nx < 3:
        raise DomainError("nx must be at least 3")
    x, y = config.grids()
    hx, hy = config.hx, config.hy
    ex = exchange_arrays(p, config.spec, y, hy)
    dt_max = config.max_dt()
    dt = dt_max if config.dt is None else float(config.dt)
    if not 0 < dt <= dt_max * (1.0 + 1e-12):
        raise DomainError(f"dt = {dt!r} violates the stability bound {dt_max!r}")
    if stationary is None:
        stationary = stationary_state(p, config.spec, config.ly, config.ny)
    u, v = config.initial.evaluate(x, y)
    u = np.ascontiguousarray(u, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    u2, v2 = np.empty_like(u), np.empty_like(v)
    n_steps = int(math.ceil(config.t_end / dt - 1e-9))
    interval = config.trace_interval or config.t_end / 400.0
    trace_every = max(1, int(round(interval / dt)))
    level = config.theta * stationary.u
    times, fronts, notes = [], [], []
    snap_t, snap_u, snap_v = [0.0], [u.copy()], [v.copy()]
    boundary = config.lx - 10.0 * hx
    step = 0
    for step in range(1, n_steps + 1):
        _backend.euler_step(u, v, u2, v2, ex.src, ex.sink, ex.gather, hx, hy, dt,
                            p.big_d, p.d, p.mu_bar, p.growth)
        u, u2 = u2, u
        v, v2 = v2, v
        if step % trace_every == 0 or step == n_steps:
            xf = front_position(x, u, level)
            times.append(step * dt)
            fronts.append(xf)
            if config.stop_at_boundary and xf >= boundary:
                msg = f"front reached {xf:.3f} within 10 hx of the boundary at t = {step * dt:.3f}; trace truncated"
                warnings.warn(msg, RuntimeWarning, stacklevel=2)
                notes.append(msg)
                break
        if config.snapshot_stride and step % config.snapshot_stride == 0:
            snap_t.append(step * dt)
            snap_u.append(u.copy())
            snap_v.append(v.copy())
    if snap_t[-1] != step * dt:
        snap_t.append(step * dt)
        snap_u.append(u.copy())
        snap_v.append(v.copy())
    trace = FrontTrace(np.array(times), np.array(fronts), config.theta, level)
    if fit:
        try:
            trace.fit = estimate_speed(trace.times, trace.positions)
        except ValueError as exc:
            notes.append(f"speed fit skipped: {exc}")
    return SimResult(x, y, u, v, step * dt, step, dt, snap_t, snap_u, snap_v, trace, stationary, notes, config)
