"""Thomas-Fermi, magnetic Thomas-Fermi and classical density functionals.

All three functionals share the form

    E[rho] = int j(rho) + int V rho + D(rho, rho)

minimized over ``rho >= 0`` with ``int rho = N``.  The kinetic density is
``j = pi rho^2`` (TF), the piecewise-linear ``j_B`` (MTF) or zero
(classical).  MTF at ``B = 0`` is routed through the TF kinetic density,
so the two agree bitwise.

The minimizer uses accelerated proximal gradient steps with the exact
proximal map of ``j`` (no smoothing of the corners of ``j_B``), the mass
constraint being enforced inside every step by a scalar root find on the
multiplier ``mu``.  A primal-dual active-set polish then solves the
variational conditions exactly on the discrete problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .coulomb2d import RadialKernelTable, build_kernel
from .model import (DotParams, ModelError, RadialDensity, RadialGrid, build_grid,
                    classical_radius, default_grid)

TWO_PI = 2.0 * math.pi
KINDS = ("TF", "MTF", "classical")


class SolverError(RuntimeError):
    """Solver failure: non-convergence or an unbracketed transition search."""


def _check_kind(kind: str) -> str:
    table = {"tf": "TF", "mtf": "MTF", "classical": "classical", "c": "classical"}
    try:
        return table[kind.lower()]
    except (KeyError, AttributeError):
        raise ModelError(f"unknown functional kind {kind!r}; expected one of {KINDS}") from None


# ---------------------------------------------------------------------------
# Kinetic densities


@dataclass(frozen=True)
class KineticDensity:
    """Kinetic energy density of the selected functional.

    ``mode`` is ``'step'`` for ``j_B`` with ``B > 0``, ``'tf'`` for
    ``pi rho^2`` and ``'zero'`` for the classical functional.
    """

    mode: str
    b_field: float = 0.0

    @classmethod
    def for_kind(cls, kind: str, b_field: float = 0.0) -> "KineticDensity":
        kind = _check_kind(kind)
        if kind == "classical":
            return cls("zero")
        if kind == "TF" or b_field == 0.0:
            return cls("tf")
        return cls("step", float(b_field))

    @property
    def plateau(self) -> float:
        """Landau level capacity ``B / 2 pi``."""
        return self.b_field / TWO_PI

    def value(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.mode == "zero":
            return np.zeros_like(rho)
        if self.mode == "tf":
            return math.pi * rho * rho
        b, c = self.b_field, self.plateau
        k = np.floor(rho / c)
        return b * c * k * (k - 1.0) / 2.0 + k * b * (rho - k * c)

    def slope_interval(self, rho, kink_tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
        """Subdifferential ``[lo, hi]`` for ``rho > 0``."""
        rho = np.asarray(rho, dtype=float)
        if self.mode == "zero":
            z = np.zeros_like(rho)
            return z, z.copy()
        if self.mode == "tf":
            s = TWO_PI * rho
            return s, s.copy()
        b, c = self.b_field, self.plateau
        n = np.rint(rho / c)
        at_kink = (np.abs(rho - n * c) <= kink_tol * c) & (n >= 1)
        step = b * np.floor(rho / c)
        lo = np.where(at_kink, (n - 1.0) * b, step)
        hi = np.where(at_kink, n * b, step)
        return lo, hi

    def prox(self, z, t: float):
        """``argmin_{x >= 0} (x - z)^2 / (2 t) + j(x)`` elementwise."""
        z = np.asarray(z, dtype=float)
        if self.mode == "zero":
            return np.maximum(z, 0.0)
        if self.mode == "tf":
            return np.maximum(z, 0.0) / (1.0 + TWO_PI * t)
        b, c = self.b_field, self.plateau
        period = c + t * b
        zp = np.maximum(z, 0.0)
        k = np.floor(zp / period)
        rem = zp - k * period
        return np.where(rem < c, zp - t * k * b, (k + 1.0) * c)


def evaluate_functional(kind: str, rho, params: DotParams,
                        kernel: RadialKernelTable) -> float:
    """Energy of ``rho`` under the TF, MTF or classical functional."""
    kind = _check_kind(kind)
    _check_gamma(params)
    values = rho.values if isinstance(rho, RadialDensity) else np.asarray(rho, dtype=float)
    grid = kernel.grid
    kin = KineticDensity.for_kind(kind, params.b_field)
    phi = kernel.apply(values)
    return _energy(values, phi, kin, params.trap(grid.nodes), grid.weights)


def _energy(x, phi, kin, v, w) -> float:
    return float(np.dot(w, kin.value(x) + v * x + 0.5 * x * phi))


def _check_gamma(params: DotParams):
    if params.gamma != 0.0:
        raise ModelError("gamma != 0 kinetic densities are not supported")


# ---------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class Domain:
    """Radial interval with a label ``incompressible``, ``compressible`` or ``vacuum``."""

    r_start: float
    r_end: float
    label: str
    level: int = 0

    def __str__(self):
        if self.label == "incompressible":
            return f"incompressible({self.level})"
        return self.label


@dataclass(frozen=True)
class Tolerances:
    """Solver controls.  ``kkt`` is relative to ``|mu|``."""

    kkt: float = 1e-6
    fixed_point: float = 1e-9
    max_iter: int = 20000
    polish: bool = True
    polish_iter: int = 60
    first_polish: int = 100


@dataclass(frozen=True, eq=False)
class MinimizationResult:
    kind: str
    params: DotParams
    density: RadialDensity
    energy: float
    chemical_potential: float
    kkt_max_violation: float
    iterations: int
    converged: bool
    domains: Tuple[Domain, ...] = ()
    energy_history: Tuple[float, ...] = field(default=(), repr=False)
    mass_history: Tuple[float, ...] = field(default=(), repr=False)
    polished: bool = False

    @property
    def grid(self) -> RadialGrid:
        return self.density.grid


@dataclass(frozen=True, eq=False)
class KKTReport:
    """Per-node distance of ``mu - V - Phi`` to the admissible set."""

    residual: np.ndarray
    violation: np.ndarray
    max_violation: float
    relative: float
    chemical_potential: float


# ---------------------------------------------------------------------------
# Minimization


def _mass_projection(z, t, kin, w, n, mu_hint=None):
    """Prox of ``t j`` with the mass constraint; returns ``(x, mu)``.

    ``x(mu) = prox(z + t mu)`` is continuous and nondecreasing in ``mu``.
    """
    mass = lambda mu: float(np.dot(w, kin.prox(z + t * mu, t))) - n
    # below lo every node is clamped to zero
    lo = -float(np.max(z)) / t
    step = max(1.0, abs(lo))
    hi = lo + step
    if mu_hint is not None and mu_hint > lo:
        if mass(mu_hint) < 0:
            lo = mu_hint
            hi = mu_hint + step
        else:
            hi = mu_hint
    while mass(hi) < 0:
        lo, hi = hi, hi + step
        step *= 2.0
    mu = brentq(mass, lo, hi, xtol=1e-15 * max(1.0, abs(hi)), rtol=1e-15, maxiter=400)
    return kin.prox(z + t * mu, t), mu


def _initial_density(params: DotParams, grid: RadialGrid) -> np.ndarray:
    radius = min(classical_radius(params.n_electrons, params.coupling, params.potential),
                 grid.r_max)
    x = np.sqrt(np.clip(1.0 - (grid.nodes / radius) ** 2, 0.0, None))
    return x * params.n_electrons / grid.integrate(x)


def minimize(kind: str, params: DotParams, grid: Optional[RadialGrid] = None,
             kernel: Optional[RadialKernelTable] = None,
             tolerances: Optional[Tolerances] = None,
             initial: Optional[np.ndarray] = None) -> MinimizationResult:
    """Minimize the selected functional under ``int rho = N``.

    Parameters
    ----------
    kind : {'TF', 'MTF', 'classical'}
    params : DotParams
    grid, kernel : optional
        Default grid reaches three classical radii with 2000 nodes.
    tolerances : Tolerances, optional
    initial : array, optional
        Starting density; it is projected onto the constraint set first.
    """
    kind = _check_kind(kind)
    _check_gamma(params)
    tol = tolerances or Tolerances()
    if kernel is None:
        grid = grid or default_grid(params)
        kernel = build_kernel(grid)
    elif grid is not None and not grid.same_as(kernel.grid):
        raise ModelError("grid and kernel table disagree")
    grid = kernel.grid
    w = grid.weights
    n = float(params.n_electrons)
    v = params.trap(grid.nodes)
    kin = KineticDensity.for_kind(kind, params.b_field)
    t = 0.99 / kernel.lipschitz

    x0 = _initial_density(params, grid) if initial is None else np.asarray(initial, float)
    x, mu = _mass_projection(x0, t, kin, w, n)
    phi_x = kernel.apply(x)
    e_x = _energy(x, phi_x, kin, v, w)
    y, phi_y = x, phi_x
    x_prev, phi_prev = x, phi_x
    tk = 1.0
    energies = [e_x]
    masses = [float(np.dot(w, x)) - n]
    scale = math.sqrt(n * float(np.max(x)))
    checkpoint = tol.first_polish
    polished = False
    iterations = 0
    for iterations in range(1, tol.max_iter + 1):
        z, mu = _mass_projection(y - t * (v + phi_y), t, kin, w, n, mu)
        phi_z = kernel.apply(z)
        e_z = _energy(z, phi_z, kin, v, w)
        step = math.sqrt(float(np.dot(w, (z - y) ** 2)))
        x_prev, phi_prev = x, phi_x
        if e_z <= e_x:
            x, phi_x, e_x = z, phi_z, e_z
            tk1 = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
            beta = (tk - 1.0) / tk1
            y = x + beta * (x - x_prev)
            phi_y = phi_x + beta * (phi_x - phi_prev)
            tk = tk1
        else:
            # adaptive restart keeps the iterates monotone
            y, phi_y, tk = x, phi_x, 1.0
        energies.append(e_x)
        masses.append(float(np.dot(w, x)) - n)
        done = step <= tol.fixed_point * scale
        if tol.polish and (done or iterations >= checkpoint):
            checkpoint *= 2
            out = _active_set_polish(x, mu, kin, kernel, v, n, tol.polish_iter)
            if out is not None:
                xp, mup = out
                phi_p = kernel.apply(xp)
                e_p = _energy(xp, phi_p, kin, v, w)
                if e_p <= e_x + 1e-12 * abs(e_x):
                    x, mu, phi_x, e_x = xp, mup, phi_p, e_p
                    energies.append(e_x)
                    masses.append(float(np.dot(w, x)) - n)
                    polished = True
                    break
        if done:
            break

    density = RadialDensity(grid, x)
    report = _kkt(x, mu, kin, kernel, v)
    converged = report.relative <= tol.kkt
    domains: Tuple[Domain, ...] = ()
    if kin.mode == "step":
        domains = tuple(_domains(grid.nodes, x, params.b_field, 0.02,
                                 _vacuum_threshold(n, grid)))
    return MinimizationResult(kind=kind, params=params, density=density, energy=e_x,
                              chemical_potential=float(mu),
                              kkt_max_violation=report.max_violation,
                              iterations=iterations, converged=converged, domains=domains,
                              energy_history=tuple(energies), mass_history=tuple(masses),
                              polished=polished)


def _active_set_polish(x, mu, kin, kernel, v, n, max_iter):
    """Solve the discrete variational conditions on a fixed node partition.

    Nodes are vacuum (``rho = 0``), locked at a plateau ``k B / 2 pi`` or
    free inside a linear piece of ``j``.  Free nodes obey the linear
    equation ``slope + V + Phi = mu``; the partition is updated from the
    violated conditions until it is self-consistent.  Returns ``None`` if
    no consistent partition is reached.
    """
    k = kernel.matrix
    wp = kernel.radial_weights
    w = kernel.grid.weights
    m = x.size
    step_mode = kin.mode == "step"
    c = kin.plateau if step_mode else 1.0
    b = kin.b_field
    # level: segment index for free nodes, plateau index for locked nodes
    if step_mode:
        level = np.floor(x / c + 1e-9).astype(int)
        locked = (np.abs(x - np.rint(x / c) * c) <= 1e-9 * c) & (x > 0)
        level[locked] = np.rint(x[locked] / c).astype(int)
    else:
        level = np.zeros(m, dtype=int)
        locked = np.zeros(m, dtype=bool)
    vacuum = x <= 0.0
    seen = set()
    for _ in range(max_iter):
        key = (vacuum.tobytes(), locked.tobytes(), level.tobytes())
        if key in seen:
            return None
        seen.add(key)
        free = ~(vacuum | locked)
        fixed = np.where(locked, level * c, 0.0)
        idx = np.flatnonzero(free)
        if idx.size == 0:
            return None
        slope = level[idx] * b if step_mode else np.zeros(idx.size)
        hdiag = TWO_PI if kin.mode == "tf" else 0.0
        wf = wp[idx]
        a = wf[:, None] * k[np.ix_(idx, idx)] * wf[None, :]
        a[np.diag_indices_from(a)] += hdiag * wf
        rhs = -wf * (slope + v[idx] + k[idx] @ (wp * fixed))
        big = np.zeros((idx.size + 1, idx.size + 1))
        big[:-1, :-1] = a
        big[:-1, -1] = -wf
        big[-1, :-1] = -wf
        sol = np.linalg.solve(big, np.append(rhs, -(n - float(np.dot(w, fixed))) / TWO_PI))
        xf, mu_new = sol[:-1], sol[-1]
        xn = fixed.copy()
        xn[idx] = xf
        q = mu_new - v - k @ (wp * xn)
        slack = 1e-10 * max(abs(mu_new), 1.0)
        changed = False
        # free nodes leaving their linear piece
        if step_mode:
            lo_edge = level[idx] * c
            hi_edge = (level[idx] + 1) * c
        else:
            lo_edge = np.zeros(idx.size)
            hi_edge = np.full(idx.size, np.inf)
        below = xf < lo_edge - 1e-12 * c
        above = xf > hi_edge + 1e-12 * c
        if np.any(below | above):
            changed = True
            for j, i in enumerate(idx):
                if below[j]:
                    if level[i] == 0:
                        vacuum[i] = True
                    else:
                        locked[i] = True
                elif above[j]:
                    locked[i] = True
                    level[i] += 1
        # locked nodes whose multiplier left the admissible interval
        if step_mode:
            for i in np.flatnonzero(locked):
                if q[i] > level[i] * b + slack:
                    locked[i] = False
                elif q[i] < (level[i] - 1) * b - slack:
                    locked[i] = False
                    level[i] -= 1
                else:
                    continue
                changed = True
        for i in np.flatnonzero(vacuum):
            if q[i] > slack:
                vacuum[i] = False
                level[i] = 0
                changed = True
        if not changed:
            return np.maximum(xn, 0.0), float(mu_new)
    return None


def _kkt(x, mu, kin, kernel, v) -> KKTReport:
    q = mu - v - kernel.apply(x)
    lo, hi = kin.slope_interval(x)
    zero = x <= 0.0
    lo = np.where(zero, -np.inf, lo)
    hi = np.where(zero, 0.0, hi)
    viol = np.maximum(np.maximum(lo - q, q - hi), 0.0)
    mx = float(np.max(viol))
    return KKTReport(residual=q, violation=viol, max_violation=mx,
                     relative=mx / max(abs(mu), 1e-300), chemical_potential=float(mu))


def kkt_report(result, params: Optional[DotParams] = None,
               kernel: Optional[RadialKernelTable] = None, kind: Optional[str] = None,
               chemical_potential: Optional[float] = None) -> KKTReport:
    """Variational-condition diagnostics.

    ``result`` is a :class:`MinimizationResult` or a :class:`RadialDensity`;
    for a bare density pass ``kind`` and ``chemical_potential``.  The
    multiplier is taken from the result unless given.
    """
    if isinstance(result, MinimizationResult):
        params = params or result.params
        kind = kind or result.kind
        density = result.density
        mu = result.chemical_potential if chemical_potential is None else chemical_potential
    else:
        density = result
        if kind is None or chemical_potential is None or params is None:
            raise ModelError("bare densities need params, kind and chemical_potential")
        mu = chemical_potential
    if kernel is None:
        kernel = build_kernel(density.grid)
    kin = KineticDensity.for_kind(kind, params.b_field)
    return _kkt(density.values, float(mu), kin, kernel, params.trap(kernel.grid.nodes))


def effective_potential(result: MinimizationResult,
                        kernel: Optional[RadialKernelTable] = None) -> np.ndarray:
    """``V + rho * |x|^-1`` at the grid nodes."""
    kernel = kernel or build_kernel(result.grid)
    return result.params.trap(kernel.grid.nodes) + kernel.apply(result.density.values)


# ---------------------------------------------------------------------------
# Domains


def _vacuum_threshold(n: float, grid: RadialGrid) -> float:
    return 1e-10 * n / (math.pi * grid.r_max ** 2)


def node_labels(r, rho, b_field: float, tol: float, vacuum: float) -> List[Tuple[str, int]]:
    c = b_field / TWO_PI
    out = []
    for value in rho:
        if value <= vacuum:
            out.append(("vacuum", 0))
            continue
        k = int(round(value / c))
        if k >= 1 and abs(value - k * c) <= tol * c:
            out.append(("incompressible", k))
        else:
            out.append(("compressible", 0))
    return out


def _domains(r, rho, b_field, tol, vacuum) -> List[Domain]:
    labels = node_labels(r, rho, b_field, tol, vacuum)
    out: List[Domain] = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            out.append(Domain(float(r[start]), float(r[i - 1]), *labels[start]))
            start = i
    return out


def classify_domains(result, b_field: Optional[float] = None, tol: float = 0.02,
                     vacuum: Optional[float] = None) -> List[Domain]:
    """Label maximal radial intervals as incompressible(k), compressible or vacuum."""
    density = result.density if isinstance(result, MinimizationResult) else result
    if b_field is None:
        b_field = result.params.b_field
    if not b_field > 0:
        raise ModelError("domain classification needs B > 0")
    grid = density.grid
    if vacuum is None:
        n = result.params.n_electrons if isinstance(result, MinimizationResult) else density.mass
        vacuum = _vacuum_threshold(n, grid)
    return _domains(grid.nodes, density.values, b_field, tol, vacuum)


# ---------------------------------------------------------------------------
# Quadratic-trap closed forms


@dataclass(frozen=True, eq=False)
class ClosedForm:
    density: RadialDensity
    energy: float
    chemical_potential: float
    radius: float
    lam: float


def classical_quadratic_closed_form(n_electrons: float, coupling: float,
                                    grid: Optional[RadialGrid] = None,
                                    potential=None) -> ClosedForm:
    """Classical minimizer for ``V = K r^2``: a half-ellipsoid of radius ``lam^-1/2``."""
    if potential is not None and potential.kind != "quadratic":
        raise ModelError("the closed form exists only for the quadratic trap")
    n, k = float(n_electrons), float(coupling)
    lam = (8.0 * k / (3.0 * math.pi * n)) ** (2.0 / 3.0)
    radius = lam ** -0.5
    if grid is None:
        grid = build_grid(3.0 * radius, 2000)
    r = grid.nodes
    values = 1.5 / math.pi * n * lam * np.sqrt(np.clip(1.0 - lam * r * r, 0.0, None))
    mu = 3.0 * math.pi * n / (4.0 * radius)
    energy = 9.0 * math.pi * n * n / (20.0 * radius)
    return ClosedForm(RadialDensity(grid, values), energy, mu, radius, lam)


@dataclass(frozen=True)
class Threshold:
    criterion: float
    printed: float

    @property
    def ratio(self) -> float:
        return self.criterion / self.printed


def lll_threshold(n_electrons: float, coupling: float) -> Threshold:
    """Smallest ``B`` with ``j_B(rho^C(0)) = 0``, i.e. ``B = 2 pi rho^C(0)``.

    The alternative constant ``6 / (3^(2/3) pi^(5/3)) K^(2/3) N^(1/3)`` is
    reported alongside; it is smaller by a factor ``2 pi``.
    """
    n, k = float(n_electrons), float(coupling)
    lam = (8.0 * k / (3.0 * math.pi * n)) ** (2.0 / 3.0)
    printed = 6.0 / (3.0 ** (2.0 / 3.0) * math.pi ** (5.0 / 3.0)) * k ** (2.0 / 3.0) * n ** (1.0 / 3.0)
    return Threshold(criterion=3.0 * n * lam, printed=printed)


# ---------------------------------------------------------------------------
# Scaling and limits


@dataclass(frozen=True)
class ScalingReport:
    energy_discrepancy: float
    density_discrepancy: float
    energy_n: float
    energy_one: float


def scaling_check(n_electrons: int, b_field: float, coupling: float, kind: str,
                  grid: Optional[RadialGrid] = None, tolerances: Optional[Tolerances] = None,
                  potential=None) -> ScalingReport:
    """Compare ``E(N, B, K)`` with ``N^2 E(1, B/N, K/N)`` on one grid."""
    n = int(n_electrons)
    base = DotParams(n, b_field, coupling)
    if potential is not None:
        base = base.replace(potential=potential)
    grid = grid or default_grid(base)
    kernel = build_kernel(grid)
    full = minimize(kind, base, kernel=kernel, tolerances=tolerances)
    if n == 1:
        return ScalingReport(0.0, 0.0, full.energy, full.energy)
    one = minimize(kind, base.replace(n_electrons=1, b_field=b_field / n, coupling=coupling / n),
                   kernel=kernel, tolerances=tolerances)
    de = abs(full.energy - n * n * one.energy) / abs(full.energy)
    dl = grid.integrate(np.abs(full.density.values - n * one.density.values)) / n
    return ScalingReport(de, dl, full.energy, n * n * one.energy)


@dataclass(frozen=True)
class SweepRow:
    b_field: float
    energy: float
    limit_energy: float
    energy_gap: float
    l1_distance: float


def limit_sweep(direction: str, params: DotParams, schedule: Sequence[float],
                grid: Optional[RadialGrid] = None,
                tolerances: Optional[Tolerances] = None) -> List[SweepRow]:
    """MTF energies along a field schedule against the TF or classical limit.

    ``direction`` is ``'B->0'`` (limit TF) or ``'B->inf'`` (limit classical).
    The energy gap is relative; the density distance is the plain L1 norm.
    """
    sched = np.asarray(schedule, dtype=float)
    if sched.size == 0 or np.any(sched < 0):
        raise ModelError("the field schedule must be nonempty and nonnegative")
    d = np.diff(sched)
    if not (np.all(d >= 0) or np.all(d <= 0)):
        raise ModelError("the field schedule must be monotone")
    direction = direction.replace(" ", "").lower()
    if direction in ("b->0", "b0", "zero"):
        limit_kind = "TF"
    elif direction in ("b->inf", "b->infinity", "binf", "inf"):
        limit_kind = "classical"
    else:
        raise ModelError(f"unknown limit direction {direction!r}")
    grid = grid or default_grid(params)
    kernel = build_kernel(grid)
    limit = minimize(limit_kind, params, kernel=kernel, tolerances=tolerances)
    rows = []
    for b in sched:
        res = minimize("MTF", params.replace(b_field=float(b)), kernel=kernel,
                       tolerances=tolerances)
        gap = abs(res.energy - limit.energy) / abs(limit.energy)
        rows.append(SweepRow(float(b), res.energy, limit.energy, gap,
                             res.density.l1_distance(limit.density)))
    return rows


def empirical_transition(params: DotParams, b_lo: float, b_hi: float,
                         kernel: Optional[RadialKernelTable] = None, rtol: float = 1e-3,
                         tolerances: Optional[Tolerances] = None) -> float:
    """Smallest field where the MTF and classical minimizers coincide.

    Bisection on ``B`` between ``b_lo`` (minimizers differ) and ``b_hi``
    (minimizers agree to ``1e-8 N`` in L1).
    """
    kernel = kernel or build_kernel(default_grid(params))
    classical = minimize("classical", params, kernel=kernel, tolerances=tolerances)
    limit = 1e-8 * params.n_electrons

    def coincides(b):
        res = minimize("MTF", params.replace(b_field=b), kernel=kernel, tolerances=tolerances)
        return res.density.l1_distance(classical.density) <= limit

    if coincides(b_lo) or not coincides(b_hi):
        raise SolverError("transition field is not bracketed")
    while b_hi - b_lo > rtol * b_hi:
        mid = 0.5 * (b_lo + b_hi)
        if coincides(mid):
            b_hi = mid
        else:
            b_lo = mid
    return 0.5 * (b_lo + b_hi)
