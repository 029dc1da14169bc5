"""Model constants and exchange kernels.

An exchange kernel is an optional Dirac atom at ``y = 0`` plus an even,
nonnegative, compactly supported continuous part. Continuous parts are stored
as a shape name, a support radius and an amplitude; tables carry their own
uniform half-grid samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import DomainError, KernelError

SHAPES = ("boxcar", "triangle", "raised_cosine", "table")
KINDS = ("Limit", "FullNonlocal", "SemiLimitNuNonlocal", "SemiLimitMuNonlocal", "Mixture")

# kernel grid for mass quadrature of closed-form shapes: support_radius / 256
HALF_GRID_INTERVALS = 256


@dataclass(frozen=True)
class Params:
    """Scalar model constants.

    Parameters
    ----------
    d : float
        Field diffusivity.
    big_d : float
        Road diffusivity ``D``.
    growth : float
        Linearized growth rate ``f'(0)``.
    mu_bar : float
        Total road-to-field exchange rate.
    nu_bar : float
        Total field-to-road exchange rate.
    """

    d: float = 1.0
    big_d: float = 1.0
    growth: float = 1.0
    mu_bar: float = 1.0
    nu_bar: float = 1.0

    def __post_init__(self):
        for name in ("d", "big_d", "growth", "mu_bar", "nu_bar"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float, np.floating, np.integer)) and math.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be a finite positive number, got {val!r}")
            object.__setattr__(self, name, float(val))

    def c_kpp(self) -> float:
        """Field-only KPP speed ``2 sqrt(d f'(0))``."""
        return 2.0 * math.sqrt(self.d * self.growth)

    def with_(self, **changes) -> "Params":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"d": self.d, "big_d": self.big_d, "growth": self.growth,
                "mu_bar": self.mu_bar, "nu_bar": self.nu_bar}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Params":
        return cls(**{k: data[k] for k in ("d", "big_d", "growth", "mu_bar", "nu_bar") if k in data})


# Base profiles on s = |y| / R in [0, 1]; zero for s > 1. Each comes with its
# antiderivative F(s) = int_0^s base and its integral F(1).
def _base(shape: str, s: np.ndarray) -> np.ndarray:
    inside = s <= 1.0
    if shape == "boxcar":
        out = np.ones_like(s)
    elif shape == "triangle":
        out = 1.0 - s
    elif shape == "raised_cosine":
        out = 0.5 * (1.0 + np.cos(np.pi * np.minimum(s, 1.0)))
    else:
        raise KernelError(f"unknown shape {shape!r}")
    return np.where(inside, out, 0.0)


def _base_antideriv(shape: str, s: np.ndarray) -> np.ndarray:
    s = np.minimum(s, 1.0)
    if shape == "boxcar":
        return s
    if shape == "triangle":
        return s - 0.5 * s * s
    if shape == "raised_cosine":
        return 0.5 * (s + np.sin(np.pi * s) / np.pi)
    raise KernelError(f"unknown shape {shape!r}")


_BASE_AREA = {"boxcar": 1.0, "triangle": 0.5, "raised_cosine": 0.5}


@dataclass(frozen=True)
class Kernel:
    """Exchange distribution: Dirac atom at zero plus an even continuous part.

    The continuous part is ``amplitude * base(|y| / halfwidth)`` where ``base``
    is a named profile on ``[0, 1]`` or, for ``shape="table"``, linear
    interpolation of ``values`` on a uniform grid of ``[0, 1]``. It vanishes
    for ``|y| > halfwidth``.
    """

    atom: float = 0.0
    shape: str | None = None
    halfwidth: float = 0.0
    amplitude: float = 0.0
    values: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.atom) and self.atom >= 0):
            raise KernelError(f"atom weight must be finite and nonnegative, got {self.atom!r}")
        object.__setattr__(self, "atom", float(self.atom))
        if self.shape is None:
            if self.amplitude != 0.0 or self.values is not None:
                raise KernelError("amplitude or values given without a shape")
            object.__setattr__(self, "halfwidth", 0.0)
            return
        if self.shape not in SHAPES:
            raise KernelError(f"unknown shape {self.shape!r}; expected one of {SHAPES}")
        if not (math.isfinite(self.halfwidth) and self.halfwidth > 0):
            raise KernelError(f"halfwidth must be positive, got {self.halfwidth!r}")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise KernelError(f"amplitude must be nonnegative, got {self.amplitude!r}")
        object.__setattr__(self, "halfwidth", float(self.halfwidth))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        if self.shape == "table":
            if self.values is None or len(self.values) < 2:
                raise KernelError("table kernels need at least two samples")
            vals = tuple(float(v) for v in self.values)
            if any(not math.isfinite(v) for v in vals):
                raise KernelError("table samples must be finite")
            if min(vals) < 0:
                raise KernelError("table samples must be nonnegative")
            object.__setattr__(self, "values", vals)
        elif self.values is not None:
            raise KernelError("values are only accepted for shape='table'")

    # -- structure -------------------------------------------------------
    @property
    def has_cont(self) -> bool:
        return self.shape is not None and self.amplitude > 0

    @property
    def has_atom(self) -> bool:
        return self.atom > 0

    @property
    def is_zero(self) -> bool:
        return not self.has_atom and not self.has_cont

    @property
    def support_radius(self) -> float:
        """Smallest ``R`` with the continuous part zero outside ``[-R, R]``."""
        return self.halfwidth if self.has_cont else 0.0

    @property
    def height(self) -> float:
        """Value of the continuous part at ``y = 0``."""
        return self.amplitude * (self.values[0] if self.shape == "table" else 1.0)

    peak = height

    # -- evaluation ------------------------------------------------------
    def _unit(self, s: np.ndarray) -> np.ndarray:
        if self.shape == "table":
            tab = np.asarray(self.values)
            grid = np.linspace(0.0, 1.0, tab.size)
            return np.where(s <= 1.0, np.interp(s, grid, tab), 0.0)
        return _base(self.shape, s)

    def _unit_antideriv(self, s: np.ndarray) -> np.ndarray:
        if self.shape != "table":
            return _base_antideriv(self.shape, s)
        tab = np.asarray(self.values)
        h = 1.0 / (tab.size - 1)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * h * (tab[1:] + tab[:-1]))))
        s = np.minimum(s, 1.0)
        k = np.minimum((s / h).astype(int), tab.size - 2)
        t = s - k * h
        slope = (tab[k + 1] - tab[k]) / h
        return cum[k] + tab[k] * t + 0.5 * slope * t * t

    def cont(self, y) -> np.ndarray:
        """Continuous part evaluated pointwise (closed at the support edge)."""
        y = np.abs(np.asarray(y, dtype=float))
        if not self.has_cont:
            return np.zeros_like(y)
        return self.amplitude * self._unit(y / self.halfwidth)

    def cumulative(self, z) -> np.ndarray:
        """Exact ``int_0^z cont`` for ``z >= 0`` (odd extension for ``z < 0``)."""
        z = np.asarray(z, dtype=float)
        if not self.has_cont:
            return np.zeros_like(z)
        r = self.halfwidth
        return np.sign(z) * self.amplitude * r * self._unit_antideriv(np.abs(z) / r)

    def sample(self, y, h: float) -> np.ndarray:
        """Cell averages of the continuous part over ``[y - h/2, y + h/2]``.

        Exact for every shape, so a support edge falling on a node receives
        the mean of its one-sided limits and one falling inside a cell its
        area fraction.
        """
        y = np.asarray(y, dtype=float)
        if not self.has_cont:
            return np.zeros_like(y)
        return (self.cumulative(y + 0.5 * h) - self.cumulative(y - 0.5 * h)) / h

    def half_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """The stored uniform half-grid ``y >= 0`` and continuous samples on it."""
        if not self.has_cont:
            return np.zeros(1), np.zeros(1)
        n = len(self.values) - 1 if self.shape == "table" else HALF_GRID_INTERVALS
        y = np.linspace(0.0, self.halfwidth, n + 1)
        return y, self.cont(y)

    def cont_mass(self) -> float:
        """Trapezoid integral of the continuous part on its own half-grid."""
        if not self.has_cont:
            return 0.0
        y, k = self.half_grid()
        return 2.0 * float(np.trapezoid(k, y))

    def mass(self) -> float:
        """``atom + int cont`` (trapezoid on the stored grid)."""
        return self.atom + self.cont_mass()

    def cont_max(self) -> float:
        return float(self.half_grid()[1].max()) if self.has_cont else 0.0

    # -- transforms ------------------------------------------------------
    def scaled(self, factor: float) -> "Kernel":
        """Multiply the whole kernel (atom and continuous part) by ``factor``."""
        if factor < 0:
            raise KernelError("scale factor must be nonnegative")
        return replace(self, atom=self.atom * factor, amplitude=self.amplitude * factor)

    def continuous_part(self) -> "Kernel":
        return replace(self, atom=0.0)

    def to_table(self, n: int = HALF_GRID_INTERVALS) -> "Kernel":
        """Sampled-table equivalent of the continuous part on ``n`` intervals."""
        if not self.has_cont:
            return self
        y = np.linspace(0.0, self.halfwidth, n + 1)
        return Kernel(atom=self.atom, shape="table", halfwidth=self.halfwidth,
                      amplitude=1.0, values=tuple(self.cont(y)))

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        out = {"atom": self.atom}
        if self.shape is not None:
            out.update(shape=self.shape, halfwidth=self.halfwidth, amplitude=self.amplitude)
            if self.values is not None:
                out["values"] = list(self.values)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "Kernel":
        vals = data.get("values")
        return cls(atom=data.get("atom", 0.0), shape=data.get("shape"),
                   halfwidth=data.get("halfwidth", 0.0), amplitude=data.get("amplitude", 0.0),
                   values=tuple(vals) if vals is not None else None)

    @classmethod
    def zero(cls) -> "Kernel":
        """The designated zero kernel (no atom, no continuous part)."""
        return cls()


def _table_half(y, values, halfwidth):
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1 or vals.size < 2:
        raise KernelError("table values must be a 1-D sequence of length >= 2")
    if np.any(vals < 0):
        raise KernelError("table samples must be nonnegative")
    if y is None:
        if halfwidth is None:
            raise KernelError("table kernels need either y samples or a halfwidth")
        return vals, float(halfwidth)
    y = np.asarray(y, dtype=float)
    if y.shape != vals.shape:
        raise KernelError("table y and values must have the same length")
    step = np.diff(y)
    if np.any(step <= 0) or not np.allclose(step, step[0], rtol=1e-9, atol=0):
        raise KernelError("table grid must be uniform and increasing")
    if y[0] < 0:
        # full symmetric table: check evenness, keep y >= 0
        if not np.allclose(y, -y[::-1], rtol=0, atol=1e-12 * max(1.0, abs(y[-1]))):
            raise KernelError("full table grid must be symmetric about 0")
        if not np.allclose(vals, vals[::-1], rtol=1e-12, atol=1e-300):
            raise KernelError("table kernel is not even: k(y) != k(-y)")
        mid = y.size // 2
        if y.size % 2 == 0 or abs(y[mid]) > 1e-12 * abs(y[-1]):
            raise KernelError("full table grid must contain y = 0 as a node")
        return vals[mid:], float(y[-1])
    if abs(y[0]) > 1e-12 * abs(y[-1]):
        raise KernelError("half table grid must start at y = 0")
    return vals, float(y[-1])


def make_kernel(shape, mass: float, **shape_params) -> Kernel:
    """Build a kernel of the given shape normalized to a target mass.

    Parameters
    ----------
    shape : str or mapping
        ``"atom"``, ``"boxcar"``, ``"triangle"``, ``"raised_cosine"`` or
        ``"table"``; a mapping ``{"shape": ..., **params}`` is also accepted.
    mass : float
        Target total mass, must be positive.
    **shape_params
        ``halfwidth`` for the closed forms; ``values`` with either ``y`` (half
        grid starting at 0 or a symmetric full grid) or ``halfwidth`` for
        tables.

    Returns
    -------
    Kernel
        Closed forms are normalized analytically, tables by rescaling.
    """
    if isinstance(shape, Mapping):
        shape_params = {**{k: v for k, v in shape.items() if k != "shape"}, **shape_params}
        shape = shape["shape"]
    if not (math.isfinite(mass) and mass > 0):
        raise KernelError(f"target mass must be positive, got {mass!r}")
    if shape == "atom":
        return Kernel(atom=mass)
    if shape == "table":
        vals, hw = _table_half(shape_params.get("y"), shape_params["values"], shape_params.get("halfwidth"))
        if not hw > 0:
            raise KernelError("table support radius must be positive")
        proto = Kernel(shape="table", halfwidth=hw, amplitude=1.0, values=tuple(vals))
        m = proto.cont_mass()
        if m <= 0:
            raise KernelError("table has zero mass and cannot be normalized")
        return replace(proto, amplitude=mass / m)
    if shape not in _BASE_AREA:
        raise KernelError(f"unknown shape {shape!r}")
    hw = shape_params.get("halfwidth")
    if hw is None or not hw > 0:
        raise KernelError(f"{shape} needs a positive halfwidth")
    amp = mass / (2.0 * hw * _BASE_AREA[shape])
    return Kernel(shape=shape, halfwidth=float(hw), amplitude=amp)


def mollify(k: Kernel, eps: float) -> Kernel:
    """Concentrate ``k``: ``y -> k(y / eps) / eps``. Mass is preserved."""
    if k.has_atom:
        raise KernelError("mollify needs a kernel without atom")
    if not (math.isfinite(eps) and eps > 0):
        raise DomainError(f"eps must be positive, got {eps!r}")
    if not k.has_cont:
        return k
    return replace(k, halfwidth=k.halfwidth * eps, amplitude=k.amplitude / eps)


def mix_with_atom(upsilon: Kernel, eps: float, tol: float = 1e-8) -> Kernel:
    """Return ``(1 - eps) delta_0 + eps * upsilon`` for a unit-mass ``upsilon``."""
    if upsilon.has_atom:
        raise KernelError("upsilon must not carry an atom")
    if not (0.0 <= eps <= 1.0):
        raise DomainError(f"eps must lie in [0, 1], got {eps!r}")
    if abs(upsilon.mass() - 1.0) > tol:
        raise KernelError(f"upsilon must have mass 1, got {upsilon.mass():.12g}")
    cont = upsilon.scaled(eps)
    if eps == 0.0:
        return Kernel(atom=1.0)
    return replace(cont, atom=1.0 - eps)


@dataclass(frozen=True)
class ModelSpec:
    """Pair of exchange kernels: ``nu`` (field to road) and ``mu`` (road to field)."""

    nu: Kernel
    mu: Kernel

    @property
    def kind(self) -> str:
        """Model tag derived from the kernels.

        A zero kernel counts as purely continuous. Combinations without a
        dedicated name (mixed ``mu``, or mixed ``nu`` paired with a
        continuous ``mu``) are tagged ``Mixture``.
        """
        nu_atom, nu_cont = self.nu.has_atom, self.nu.has_cont
        mu_atom, mu_cont = self.mu.has_atom, self.mu.has_cont
        nu_pure_atom = nu_atom and not nu_cont
        mu_pure_atom = mu_atom and not mu_cont
        if nu_pure_atom and mu_pure_atom:
            return "Limit"
        if not nu_atom and not mu_atom:
            return "FullNonlocal"
        if mu_pure_atom and not nu_atom:
            return "SemiLimitNuNonlocal"
        if nu_pure_atom and not mu_atom:
            return "SemiLimitMuNonlocal"
        return "Mixture"

    @property
    def support_radius(self) -> float:
        return max(self.nu.support_radius, self.mu.support_radius)

    def check_masses(self, params: Params, rtol: float = 1e-8) -> None:
        """Raise ``KernelError`` unless the kernel masses match ``params``."""
        for name, k, target in (("nu", self.nu, params.nu_bar), ("mu", self.mu, params.mu_bar)):
            m = k.mass()
            if abs(m - target) > rtol * max(1.0, target):
                raise KernelError(f"mass({name}) = {m:.12g} does not match {target:.12g}")

    def to_dict(self) -> dict:
        return {"nu": self.nu.to_dict(), "mu": self.mu.to_dict(), "kind": self.kind}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ModelSpec":
        return cls(nu=Kernel.from_dict(data["nu"]), mu=Kernel.from_dict(data["mu"]))


def limit_spec(params: Params) -> ModelSpec:
    """Both exchanges concentrated on the road (Dirac atoms)."""
    return ModelSpec(nu=Kernel(atom=params.nu_bar), mu=Kernel(atom=params.mu_bar))


def nonlocal_spec(params: Params, shape: str = "boxcar", halfwidth: float = 1.0,
                  mu_shape: str | None = None, mu_halfwidth: float | None = None) -> ModelSpec:
    """Both exchanges spread over the field with closed-form kernels."""
    return ModelSpec(
        nu=make_kernel(shape, params.nu_bar, halfwidth=halfwidth),
        mu=make_kernel(mu_shape or shape, params.mu_bar, halfwidth=mu_halfwidth or halfwidth),
    )
