"""Problem definition, unit system, confining potentials and radial grids.

Everything inside the package works in natural units: lengths in ``a*``,
energies in ``E*``, fields in ``B*`` (hbar = e* = m* = B* = 1).  Physical
units only appear at the CLI boundary through :func:`to_natural` and
:func:`from_natural`.

The constant spectrum shift ``C B`` of the one-body Hamiltonian is not
represented: with ``gamma = 0`` the kinetic zero point already sits at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline


class ModelError(ValueError):
    """Invalid model input (units, grid or potential parameters)."""


@dataclass(frozen=True)
class Material:
    """Conversion factors from natural to physical units.

    a_star is in nm, E_star in meV and B_star in tesla per natural unit.
    """

    name: str
    a_star: float
    E_star: float
    B_star: float

    def __post_init__(self):
        for label in ("a_star", "E_star", "B_star"):
            if not getattr(self, label) > 0:
                raise ModelError(f"{label} must be strictly positive")


# Round values quoted for GaAs (m* = 0.067 m_e, eps = 12.4).
GAAS = Material("GaAs", a_star=10.0, E_star=12.0, B_star=7.0)

MATERIALS = {"GaAs": GAAS}

UNIT_TAGS = ("nm", "meV", "tesla", "per-m2")


def _unit_factor(unit: str, material: Material) -> float:
    # natural value = physical value / factor
    if unit == "nm":
        return material.a_star
    if unit == "meV":
        return material.E_star
    if unit == "tesla":
        return material.B_star
    if unit in ("per-m2", "per-m²"):
        a_m = material.a_star * 1e-9
        return 1.0 / a_m**2
    raise ModelError(f"unknown unit tag {unit!r}; expected one of {UNIT_TAGS}")


def to_natural(value, unit: str, material: Material = GAAS):
    """Convert a physical quantity to natural units.

    Densities (``per-m2``) convert with ``a_star**-2``: a density of one
    electron per ``a*^2`` is ``a_star**-2`` per m^2.
    """
    factor = _unit_factor(unit, material)
    return np.asarray(value, dtype=float) / factor if np.ndim(value) else float(value) / factor


def from_natural(value, unit: str, material: Material = GAAS):
    """Exact inverse of :func:`to_natural`."""
    factor = _unit_factor(unit, material)
    return np.asarray(value, dtype=float) * factor if np.ndim(value) else float(value) * factor


# ---------------------------------------------------------------------------
# Potentials


@dataclass(frozen=True)
class PotentialSpec:
    """Radial confining profile ``v(r) >= 0``; the trap is ``V = K v``.

    Use the constructors :meth:`quadratic`, :meth:`homogeneous` and
    :meth:`tabulated`.
    """

    kind: str
    degree: float = 2.0
    table_r: Optional[tuple] = None
    table_v: Optional[tuple] = None
    _spline: Optional[CubicSpline] = field(default=None, repr=False, compare=False)

    @classmethod
    def quadratic(cls) -> "PotentialSpec":
        return cls("quadratic", degree=2.0)

    @classmethod
    def homogeneous(cls, degree: float) -> "PotentialSpec":
        if degree < 1:
            raise ModelError("homogeneous potentials need degree s >= 1")
        return cls("homogeneous", degree=float(degree))

    @classmethod
    def tabulated(cls, r: Sequence[float], v: Sequence[float],
                  growth_radius: Optional[float] = None) -> "PotentialSpec":
        r = np.asarray(r, dtype=float)
        v = np.asarray(v, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 4:
            raise ModelError("tabulated potential needs matching 1-D arrays (>= 4 points)")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise ModelError("tabulated radii must start at 0 and increase")
        if np.any(v < 0):
            raise ModelError("potential profile must be nonnegative")
        r_grow = r[len(r) // 2] if growth_radius is None else growth_radius
        tail = v[r >= r_grow]
        if tail.size < 2 or np.any(np.diff(tail) <= 0):
            raise ModelError("tabulated profile must grow monotonically beyond the growth radius")
        spline = CubicSpline(r, v, bc_type=((1, 0.0), "not-a-knot"))
        return cls("tabulated", degree=float("nan"), table_r=tuple(r), table_v=tuple(v),
                   _spline=spline)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "quadratic":
            return r * r
        if self.kind == "homogeneous":
            return r ** self.degree
        return self._tabulated(r, 0)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "quadratic":
            return 2.0 * r
        if self.kind == "homogeneous":
            s = self.degree
            return s * r ** (s - 1.0)
        return self._tabulated(r, 1)

    def _tabulated(self, r, nu):
        rt = np.asarray(self.table_r)
        vt = np.asarray(self.table_v)
        inside = r <= rt[-1]
        out = np.empty_like(r)
        out[inside] = self._spline(r[inside], nu)
        # linear continuation of the last slope keeps v growing
        slope = (vt[-1] - vt[-2]) / (rt[-1] - rt[-2])
        if nu == 0:
            out[~inside] = vt[-1] + slope * (r[~inside] - rt[-1])
        else:
            out[~inside] = slope
        return out

    def is_homogeneous(self) -> bool:
        return self.kind in ("quadratic", "homogeneous")


@dataclass(frozen=True)
class DotParams:
    """Physical problem instance in natural units."""

    n_electrons: int
    b_field: float = 0.0
    coupling: float = 1.0
    gamma: float = 0.0
    potential: PotentialSpec = field(default_factory=PotentialSpec.quadratic)

    def __post_init__(self):
        if int(self.n_electrons) != self.n_electrons or self.n_electrons < 1:
            raise ModelError("n_electrons must be a positive integer")
        if not self.coupling > 0:
            raise ModelError("coupling K must be positive")
        if not self.b_field >= 0:
            raise ModelError("b_field must be nonnegative")

    def trap(self, r):
        return self.coupling * self.potential.value(r)

    def trap_derivative(self, r):
        return self.coupling * self.potential.derivative(r)

    def replace(self, **changes) -> "DotParams":
        data = dict(n_electrons=self.n_electrons, b_field=self.b_field,
                    coupling=self.coupling, gamma=self.gamma, potential=self.potential)
        data.update(changes)
        return DotParams(**data)


# ---------------------------------------------------------------------------
# Radial grids


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Radial nodes ``0 = r_0 < ... < r_M`` with weights for ``int f dx``.

    The ``2 pi r`` measure is folded into ``weights``.  The rule is the
    trapezoid rule in the mapping coordinate with end corrections, so it is
    exact for constants on every grid shape and fourth order for smooth
    radial integrands.  All weights are positive.
    """

    nodes: np.ndarray
    weights: np.ndarray
    spacing: str = "uniform"

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def r(self) -> np.ndarray:
        return self.nodes

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def same_as(self, other: "RadialGrid") -> bool:
        return other is self or (other.size == self.size
                                 and np.array_equal(other.nodes, self.nodes)
                                 and np.array_equal(other.weights, self.weights))


def _mapped_weights(h: float, g: np.ndarray, dg: np.ndarray, dg0: float) -> np.ndarray:
    """Weights for ``int_0^R f(r) 2 pi r dr`` with ``r = g(u)``, ``u`` uniform.

    ``F(u) = 2 pi g g' f(g(u))`` is odd in ``u`` for radial ``f`` and an odd
    map ``g``; the Euler-Maclaurin terms at ``u = 0`` are then expressed
    through ``f(0)`` and ``F(h)``.  The outer end uses Gregory's correction
    with differences up to third order.
    """
    m = g.size
    meas = 2.0 * np.pi * g * dg
    c = np.ones(m)
    c[0] = 0.0
    c[-4:] = np.array([739.0, 633.0, 897.0, 251.0]) / 720.0
    c[1] -= 1.0 / 120.0
    w = h * c * meas
    w[0] = (11.0 / 120.0) * h * h * 2.0 * np.pi * dg0 * dg0
    return w


def build_grid(r_max: float, m: int = 2000, spacing: str = "uniform",
               grading: float = 0.25) -> RadialGrid:
    """Radial grid with ``m`` nodes on ``[0, r_max]``.

    ``spacing='graded'`` uses ``r = R u sqrt(a + (1-a) u^2)`` which is
    ``1/sqrt(a)`` times denser near the origin than at the edge; the
    product ``r dr/du`` stays a cubic in ``u`` so constants integrate exactly.
    """
    if not r_max > 0:
        raise ModelError("r_max must be positive")
    if int(m) != m or m < 16:
        raise ModelError("a radial grid needs at least 16 nodes")
    m = int(m)
    u = np.linspace(0.0, 1.0, m)
    h = u[1] - u[0]
    if spacing == "uniform":
        g = r_max * u
        dg = np.full(m, r_max)
        dg0 = r_max
    elif spacing == "graded":
        a = float(grading)
        if not 0 < a <= 1:
            raise ModelError("grading must lie in (0, 1]")
        s = np.sqrt(a + (1.0 - a) * u * u)
        g = r_max * u * s
        dg = r_max * (s + (1.0 - a) * u * u / s)
        dg0 = r_max * math.sqrt(a)
    else:
        raise ModelError(f"unknown spacing {spacing!r}")
    g[-1] = r_max
    w = _mapped_weights(h, g, dg, dg0)
    return RadialGrid(nodes=g, weights=w, spacing=spacing)


def classical_radius(n_electrons: float, coupling: float,
                     potential: Optional[PotentialSpec] = None) -> float:
    """Support radius estimate of the classical minimizer.

    Exact for the quadratic trap, ``(3 pi N / 8 K)^(1/3)``.  Other profiles
    use the radius where ``K v(R) R = 3 pi N / 8``, which reduces to the same
    formula for ``v = r^2``.
    """
    target = 3.0 * math.pi * n_electrons / 8.0
    if potential is None or potential.kind == "quadratic":
        return (target / coupling) ** (1.0 / 3.0)
    f = lambda r: coupling * float(potential.value(np.array([r]))[0]) * r - target
    lo, hi = 1e-6, 1.0
    while f(hi) < 0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return hi


def default_grid(params: DotParams, m: int = 2000, spacing: str = "uniform",
                 factor: float = 3.0) -> RadialGrid:
    """Grid reaching ``factor`` times the classical support radius."""
    radius = classical_radius(params.n_electrons, params.coupling, params.potential)
    return build_grid(factor * radius, m, spacing)


@dataclass(frozen=True, eq=False)
class RadialDensity:
    """Nonnegative radial density sampled on a grid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise ModelError("density values do not match the grid")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ModelError("density values must be finite and nonnegative")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    @property
    def mass(self) -> float:
        return self.grid.integrate(self.values)

    def l1_distance(self, other: "RadialDensity") -> float:
        if not self.grid.same_as(other.grid):
            raise ModelError("densities live on different grids")
        return self.grid.integrate(np.abs(self.values - other.values))

    @classmethod
    def from_function(cls, grid: RadialGrid, func: Callable) -> "RadialDensity":
        return cls(grid, np.asarray(func(grid.nodes), dtype=float))
