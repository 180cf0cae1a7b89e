"""Classical point-charge configurations in a radial trap.

The energy of ``N`` unit charges at planar positions ``x_i`` is

    E[x] = sum_i K v(|x_i|) + sum_{i<j} |x_i - x_j|^-1.

Minimization is local (quasi-Newton from several seeds); the returned
configuration is the best local minimum found, not a certified global one.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ._backend import kernels
from .model import DotParams, ModelError, classical_radius


class SingularConfiguration(ModelError):
    """Two charges coincide."""


@dataclass(frozen=True, eq=False)
class PointConfiguration:
    positions: np.ndarray
    energy: float
    gradient_norm: float
    multistart_rank: int = 0
    start_index: int = 0
    iterations: int = 0
    converged: bool = True

    def pair_distances(self) -> np.ndarray:
        x = self.positions
        i, j = np.triu_indices(len(x), 1)
        return np.hypot(*(x[i] - x[j]).T)


@dataclass(frozen=True, eq=False)
class PointSearch:
    best: PointConfiguration
    minima: Tuple[PointConfiguration, ...] = field(default=())

    @property
    def energy(self) -> float:
        return self.best.energy


def energy_of_configuration(points, params: DotParams) -> Tuple[float, np.ndarray]:
    """Energy and analytic gradient of a configuration of shape ``(N, 2)``."""
    x = np.ascontiguousarray(points, dtype=float).reshape(-1, 2)
    if x.shape[0] > 1 and kernels.min_pair_distance(x) <= 0.0:
        raise SingularConfiguration("coincident charges")
    r = np.hypot(x[:, 0], x[:, 1])
    e_trap = float(np.sum(params.trap(r)))
    if params.potential.kind == "quadratic":
        g_trap = 2.0 * params.coupling * x
    else:
        dv = params.trap_derivative(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            g_trap = np.where(r[:, None] > 0, (dv / r)[:, None] * x, 0.0)
    e_pair, g_pair = kernels.pair_energy_grad(x)
    return e_trap + e_pair, g_trap + g_pair


def _bfgs(x0, params, gtol, max_iter):
    """Quasi-Newton descent with Armijo backtracking and capped steps.

    Each trial step is shortened so no charge moves more than half the
    current minimal pair distance.  Stops at stationarity or when the
    energy no longer decreases measurably.
    """
    n = x0.size
    x = x0.copy()
    f, g = energy_of_configuration(x, params)
    g = g.ravel()
    h = np.eye(n) / max(1.0, float(np.linalg.norm(g)))
    it = 0
    for it in range(1, max_iter + 1):
        if float(np.max(np.abs(g))) <= gtol * max(1.0, abs(f)):
            break
        p = -h @ g
        if float(p @ g) >= 0:
            h = np.eye(n)
            p = -g
        alpha = min(1.0, _step_cap(x, p))
        slope = float(p @ g)
        while True:
            xn = x + alpha * p
            fn, gn = energy_of_configuration(xn, params)
            if fn <= f + 1e-4 * alpha * slope or alpha < 1e-12:
                break
            alpha *= 0.5
        if fn >= f:
            break
        gn = gn.ravel()
        s = xn - x
        yv = gn - g
        sy = float(s @ yv)
        if sy > 1e-300:
            rho = 1.0 / sy
            hy = h @ yv
            h = h + (rho * rho * float(yv @ hy) + rho) * np.outer(s, s) \
                - rho * (np.outer(hy, s) + np.outer(s, hy))
        x, f, g = xn, fn, gn
    return x, f, g, it


def _step_cap(x, p):
    pts = np.ascontiguousarray(x.reshape(-1, 2))
    if len(pts) < 2:
        return np.inf
    move = float(np.max(np.hypot(p[0::2], p[1::2])))
    return 0.5 * kernels.min_pair_distance(pts) / move if move > 0 else np.inf


def _newton_finish(x, params, gtol, max_iter=30):
    """Newton steps on the gradient with a difference Hessian.

    Used after the quasi-Newton phase; judging progress by the gradient
    avoids energy round-off near the minimum.  The rotational zero mode is
    handled by the least-squares solve.
    """
    f, g = energy_of_configuration(x, params)
    g = g.ravel()
    for _ in range(max_iter):
        scale = gtol * max(1.0, abs(f))
        if float(np.max(np.abs(g))) <= scale:
            break
        eps = 1e-6 * max(1e-3, float(np.max(np.abs(x))))
        hess = np.empty((x.size, x.size))
        for k in range(x.size):
            e = np.zeros(x.size)
            e[k] = eps
            gp = energy_of_configuration(x + e, params)[1].ravel()
            gm = energy_of_configuration(x - e, params)[1].ravel()
            hess[:, k] = (gp - gm) / (2.0 * eps)
        hess = 0.5 * (hess + hess.T)
        p = np.linalg.lstsq(hess, -g, rcond=1e-10)[0]
        alpha = min(1.0, _step_cap(x, p))
        improved = False
        while alpha > 1e-6:
            fn, gn = energy_of_configuration(x + alpha * p, params)
            gn = gn.ravel()
            if np.linalg.norm(gn) < np.linalg.norm(g):
                x, f, g = x + alpha * p, fn, gn
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break
    return x, f, g


def _seed(n: int, radius: float, rng: np.random.Generator, ring: bool) -> np.ndarray:
    if n == 1:
        return rng.normal(scale=0.1 * radius, size=(1, 2))
    if not ring:
        r = radius * np.sqrt(rng.uniform(size=n))
        phi = rng.uniform(0.0, 2.0 * math.pi, size=n)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    # shells with occupation proportional to radius, centre gets the remainder
    shells = max(1, int(round(math.sqrt(n / 3.0))))
    radii = radius * (np.arange(1, shells + 1) - 0.3) / shells
    counts = np.floor(n * radii / radii.sum()).astype(int)
    counts[-1] += n - counts.sum()
    pts = []
    for rad, cnt in zip(radii, counts):
        if cnt <= 0:
            continue
        phase = rng.uniform(0.0, 2.0 * math.pi)
        phi = phase + 2.0 * math.pi * np.arange(cnt) / cnt
        pts.append(np.column_stack([rad * np.cos(phi), rad * np.sin(phi)]))
    x = np.vstack(pts)
    return x + rng.normal(scale=1e-3 * radius, size=x.shape)


def minimize_points(n_electrons: int, params: DotParams, multistart: int = 8, seed: int = 0,
                    gtol: float = 1e-10, max_iter: int = 5000,
                    workers: int = 1) -> PointSearch:
    """Best local minimum of the point-charge energy over several starts.

    Starts alternate between ring-shell and uniform random seeds drawn from
    ``numpy.random.default_rng(seed)``.  The reduction to the best result is
    an ordered fold over ``(energy, start index)``, so the output does not
    depend on ``workers``.
    """
    n = int(n_electrons)
    if n < 1:
        raise ModelError("N must be at least 1")
    if multistart < 1:
        raise ModelError("need at least one start")
    radius = classical_radius(n, params.coupling, params.potential)
    rng = np.random.default_rng(seed)
    starts = [_seed(n, radius, np.random.default_rng(s), ring=(i % 2 == 0))
              for i, s in enumerate(rng.integers(0, 2 ** 63 - 1, size=multistart))]

    def run(i):
        x, f, g, its = _bfgs(starts[i].ravel(), params, gtol, max_iter)
        x, f, g = _newton_finish(x, params, gtol)
        ok = float(np.max(np.abs(g))) <= gtol * max(1.0, abs(f))
        return PointConfiguration(x.reshape(-1, 2), float(f), float(np.max(np.abs(g))),
                                  start_index=i, iterations=its, converged=ok)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            found = list(pool.map(run, range(multistart)))
    else:
        found = [run(i) for i in range(multistart)]
    order = sorted(range(len(found)), key=lambda i: (found[i].energy, i))
    ranked = []
    for rank, i in enumerate(order):
        c = found[i]
        ranked.append(PointConfiguration(c.positions, c.energy, c.gradient_norm, rank,
                                         c.start_index, c.iterations, c.converged))
    good = [c for c in ranked if c.converged]
    if not good:
        raise ModelError("no start reached stationarity")
    return PointSearch(best=good[0], minima=tuple(ranked))


@dataclass(frozen=True)
class GapReport:
    n_electrons: int
    classical_energy: float
    point_energy: float

    @property
    def gap(self) -> float:
        return self.classical_energy - self.point_energy

    @property
    def normalized_gap(self) -> float:
        return self.gap / self.n_electrons ** 1.5


def gap_to_classical(n_electrons: int, coupling: float, multistart: int = 6, seed: int = 0,
                     classical_energy: Optional[float] = None) -> GapReport:
    """``E^C - E^P`` for the quadratic trap; ``E^C`` from the closed form by default."""
    n = int(n_electrons)
    if classical_energy is None:
        radius = classical_radius(n, coupling)
        classical_energy = 9.0 * math.pi * n * n / (20.0 * radius)
    params = DotParams(n, 0.0, coupling)
    best = minimize_points(n, params, multistart=multistart, seed=seed).best
    return GapReport(n, float(classical_energy), best.energy)


def fit_gap_constant(reports: List[GapReport]) -> Tuple[float, float]:
    """Mean normalized gap and the largest relative deviation from it."""
    vals = np.array([r.normalized_gap for r in reports])
    mean = float(vals.mean())
    return mean, float(np.max(np.abs(vals - mean)) / abs(mean))
