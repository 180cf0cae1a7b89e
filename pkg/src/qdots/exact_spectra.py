"""Closed-form and semi-analytic spectra of few-electron dots.

Conventions: the one-body orbital Hamiltonian is
``1/2 (i grad - A)^2 + 1/2 w^2 r^2`` with the orientation of ``A`` chosen so
that the paramagnetic term contributes ``-l B / 2`` in the angular
momentum ``l`` sector.  The relative Hamiltonian of two electrons is
``(i grad - A/2)^2 + w^2 r^2 / 4 + W`` with the same orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.special import gammaln

from .model import ModelError, RadialDensity, RadialGrid, build_grid


class SpectrumError(ValueError):
    """Invalid spectral problem (degenerate trap, unstable interaction)."""


@dataclass(frozen=True)
class SpectrumLine:
    """One level: quantum numbers ``(k, l)`` and its energy."""

    k: int
    l: int
    energy: float

    @property
    def angular_momentum(self) -> int:
        return self.l

    @property
    def fdl_index(self) -> int:
        return fdl_index(self.k, self.l)

    def as_dict(self) -> dict:
        return {"k": self.k, "l": self.l, "energy": self.energy,
                "angular_momentum": self.l, "fdl_index": self.fdl_index}


# ---------------------------------------------------------------------------
# One-body levels


def omega_big(b_field: float, omega: float) -> float:
    """Effective frequency ``(B^2/4 + w^2)^(1/2)``."""
    if b_field < 0 or omega < 0:
        raise SpectrumError("B and omega must be nonnegative")
    if b_field == 0 and omega == 0:
        raise SpectrumError("B = omega = 0 has no discrete spectrum")
    return math.sqrt(0.25 * b_field * b_field + omega * omega)


def fock_darwin_energy(k: int, l: int, b_field: float, omega: float) -> float:
    """``(2k + |l| + 1) Omega - l B / 2``."""
    if k < 0 or int(k) != k or int(l) != l:
        raise SpectrumError("k must be a nonnegative integer and l an integer")
    big = omega_big(b_field, omega)
    return (2 * k + abs(l) + 1) * big - 0.5 * l * b_field


def fdl_index(k: int, l: int) -> int:
    """Fock-Darwin level index ``k + (|l| - l)/2``."""
    if k < 0:
        raise SpectrumError("k must be nonnegative")
    return int(k) + (abs(int(l)) - int(l)) // 2


def landau_energy(n: int, b_field: float) -> float:
    if b_field <= 0:
        raise SpectrumError("Landau levels need B > 0")
    if n < 0:
        raise SpectrumError("n must be nonnegative")
    return (n + 0.5) * b_field


def landau_degeneracy_density(b_field: float) -> float:
    """States per unit area in one Landau level, ``B / 2 pi``."""
    if b_field <= 0:
        raise SpectrumError("Landau levels need B > 0")
    return b_field / (2.0 * math.pi)


def assoc_laguerre(k: int, alpha: float, x):
    """``L_k^alpha(x)`` by upward recurrence in ``k``."""
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev
    cur = 1.0 + alpha - x
    for j in range(1, k):
        prev, cur = cur, ((2 * j + 1 + alpha - x) * cur - (j + alpha) * prev) / (j + 1)
    return cur


def fock_darwin_orbital(k: int, l: int, big_omega: float) -> Callable:
    """Normalized radial part ``f(r)`` of the ``(k, l)`` orbital.

    ``psi(x) = f(r) exp(i l phi)`` with ``int |psi|^2 dx = 1``.
    """
    if k < 0 or big_omega <= 0:
        raise SpectrumError("need k >= 0 and Omega > 0")
    a = abs(int(l))
    log_norm = 0.5 * ((a + 1) * math.log(big_omega) + gammaln(k + 1) - gammaln(k + a + 1)
                      - math.log(math.pi))
    norm = math.exp(log_norm)

    def radial(r):
        r = np.asarray(r, dtype=float)
        x = big_omega * r * r
        return norm * r ** a * np.exp(-0.5 * x) * assoc_laguerre(k, a, x)

    return radial


def fock_darwin_spectrum(b_field: float, omega: float, count: int) -> List[SpectrumLine]:
    """The ``count`` lowest one-body levels, sorted by ``(energy, k, l)``."""
    if omega <= 0:
        raise SpectrumError("a finite level list needs omega > 0 (Landau levels are infinitely degenerate)")
    if count < 1:
        return []
    big = omega_big(b_field, omega)
    cap = 2.0 * big
    while True:
        lines = []
        # E(0, l) grows with |l| on both sides, and E grows with k
        for sign in (1, -1):
            l = 0 if sign == 1 else -1
            while True:
                e0 = fock_darwin_energy(0, l, b_field, omega)
                if e0 > cap:
                    break
                k = 0
                while True:
                    e = fock_darwin_energy(k, l, b_field, omega)
                    if e > cap:
                        break
                    lines.append(SpectrumLine(k, l, e))
                    k += 1
                l += sign
        if len(lines) >= count:
            lines.sort(key=lambda s: (s.energy, s.k, s.l))
            return lines[:count]
        cap *= 2.0


def cm_spectrum(n_electrons: int, b_field: float, omega: float, count: int) -> List[SpectrumLine]:
    """Centre-of-mass levels of ``N`` electrons in the quadratic trap.

    The centre of mass carries charge ``N`` and mass ``N``, so its cyclotron
    frequency ``N B / N`` and trap frequency equal the one-body values.
    """
    if n_electrons < 1:
        raise SpectrumError("N must be at least 1")
    charge_over_mass = float(n_electrons) / float(n_electrons)
    return fock_darwin_spectrum(charge_over_mass * b_field, omega, count)


# ---------------------------------------------------------------------------
# Maximum density droplet


@dataclass(frozen=True, eq=False)
class MddState:
    n_electrons: int
    b_field: float
    density: RadialDensity

    @property
    def total_angular_momentum(self) -> int:
        return self.n_electrons * (self.n_electrons - 1) // 2


def lll_orbital_density(l: int, b_field: float, r):
    """``|psi_{0,l}|^2`` in the lowest Landau level (``Omega = B/2``)."""
    r = np.asarray(r, dtype=float)
    x = 0.5 * b_field * r * r
    with np.errstate(divide="ignore"):
        logx = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), -np.inf)
    if l == 0:
        power = np.exp(-x)
    else:
        power = np.where(x > 0, np.exp(l * logx - gammaln(l + 1) - x), 0.0)
    return b_field / (2.0 * math.pi) * power


def lll_grid(n_orbitals: int, b_field: float, m: int = 2000) -> RadialGrid:
    """Grid wide enough that orbitals ``l < n_orbitals`` have negligible tails."""
    x_max = n_orbitals + 12.0 * math.sqrt(n_orbitals) + 40.0
    return build_grid(math.sqrt(2.0 * x_max / b_field), m)


def mdd_state(n_electrons: int, b_field: float, grid: Optional[RadialGrid] = None) -> MddState:
    """Fully polarized droplet occupying ``l = 0 .. N-1`` of the lowest level."""
    if n_electrons < 1 or b_field <= 0:
        raise SpectrumError("need N >= 1 and B > 0")
    grid = grid or lll_grid(n_electrons, b_field)
    rho = sum(lll_orbital_density(l, b_field, grid.nodes) for l in range(n_electrons))
    return MddState(int(n_electrons), float(b_field), RadialDensity(grid, rho))


# ---------------------------------------------------------------------------
# Two electrons with Coulomb repulsion: polynomial solutions


@dataclass(frozen=True)
class TautSolution:
    """Polynomial eigenfunction of the relative two-electron problem.

    ``psi = exp(i m phi) exp(-rho^2/2) rho^|m| P(rho)``, ``rho = (Omega/2)^(1/2) r``.
    """

    n: int
    m: int
    omega_big: float
    omega: float
    b_field: float
    e_prime: float
    energy: float
    coefficients: Tuple[float, ...]

    @property
    def nodes(self) -> int:
        """Number of positive roots of ``P``."""
        roots = np.roots(self.coefficients[::-1])
        real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots))].real
        return int(np.sum(real > 0))


def taut_coefficients(n_max: int, m: int, big_omega: float, e_prime: float) -> np.ndarray:
    """Series coefficients ``a_0 .. a_{n_max}`` with ``a_0 = 1``.

    ``j (j + 2|m|) a_j = a_{j-1} / s + (2j + 2|m| - 2 - E'/2) a_{j-2}``,
    with ``s = (Omega/2)^(1/2)`` and ``E = Omega E'/4 - m B/2``.
    """
    a = abs(int(m))
    s = math.sqrt(0.5 * big_omega)
    out = np.zeros(n_max + 1)
    out[0] = 1.0
    for j in range(1, n_max + 1):
        val = out[j - 1] / s
        if j >= 2:
            val += (2 * j + 2 * a - 2 - 0.5 * e_prime) * out[j - 2]
        out[j] = val / (j * (j + 2 * a))
    return out


def taut_e_prime(n: int, m: int) -> float:
    """Energy parameter forced by termination at degree ``n``: ``4(n + |m| + 1)``."""
    return 4.0 * (n + abs(int(m)) + 1)


def _termination(n, m, big_omega):
    return taut_coefficients(n + 1, m, big_omega, taut_e_prime(n, m))[n + 1]


def taut_find_solutions(n: int, m: int, omega: float,
                        search: Tuple[float, float] = (1e-3, 10.0),
                        samples: int = 4000, diagnostics: Optional[list] = None
                        ) -> List[TautSolution]:
    """Polynomial solutions of degree ``n`` in the ``m`` sector at fixed ``omega``.

    The termination condition ``a_{n+1}(Omega) = 0`` is scanned for sign
    changes on a log grid over ``search`` and each bracket is bisected to
    ``1e-12``.  Roots with ``Omega < omega`` admit no real field and are
    dropped; a note is appended to ``diagnostics`` if given.
    """
    if n < 1:
        raise SpectrumError("polynomial degree n must be at least 1")
    lo, hi = search
    if not 0 < lo < hi:
        raise SpectrumError("search interval must be positive and increasing")
    if omega < 0:
        raise SpectrumError("omega must be nonnegative")
    grid = np.geomspace(lo, hi, samples)
    vals = np.array([_termination(n, m, g) for g in grid])
    out = []
    e_prime = taut_e_prime(n, m)
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        a, b = grid[i], grid[i + 1]
        fa = vals[i]
        while b - a > 1e-12 * b:
            mid = 0.5 * (a + b)
            fm = _termination(n, m, mid)
            if np.sign(fm) == np.sign(fa):
                a, fa = mid, fm
            else:
                b = mid
        big = 0.5 * (a + b)
        if big < omega:
            if diagnostics is not None:
                diagnostics.append(f"root Omega={big:.12g} < omega={omega:g} has no real B; excluded")
            continue
        b_field = 2.0 * math.sqrt(big * big - omega * omega)
        energy = 0.25 * big * e_prime - 0.5 * m * b_field
        coef = taut_coefficients(n, m, big, e_prime)
        out.append(TautSolution(n, int(m), big, omega, b_field, e_prime, energy, tuple(coef)))
    return out


def taut_radial(sol: TautSolution, r):
    """Radial factor ``u(r)`` with its first and second derivatives."""
    s = math.sqrt(0.5 * sol.omega_big)
    a = abs(sol.m)
    rho = s * np.asarray(r, dtype=float)
    c = np.array(sol.coefficients)
    p = np.polynomial.Polynomial(c)
    dp, ddp = p.deriv(1), p.deriv(2)
    g = np.exp(-0.5 * rho * rho) * rho ** a
    # derivatives of g = exp(-rho^2/2) rho^a
    with np.errstate(divide="ignore", invalid="ignore"):
        dg = g * np.where(rho > 0, a / rho - rho, -rho if a == 0 else 0.0)
        ddg = g * np.where(rho > 0, (a / rho - rho) ** 2 - a / rho ** 2 - 1.0, -1.0)
    u = g * p(rho)
    du = dg * p(rho) + g * dp(rho)
    ddu = ddg * p(rho) + 2.0 * dg * dp(rho) + g * ddp(rho)
    return u, s * du, s * s * ddu


def taut_residual(sol: TautSolution, grid: RadialGrid) -> float:
    """Relative grid-norm residual of the radial eigenvalue equation."""
    r = grid.nodes[1:]
    u, du, ddu = taut_radial(sol, r)
    eps = sol.energy + 0.5 * sol.m * sol.b_field
    lhs = (-ddu - du / r + sol.m ** 2 * u / r ** 2
           + 0.25 * sol.omega_big ** 2 * r * r * u + u / r)
    w = grid.weights[1:]
    return float(math.sqrt(np.dot(w, (lhs - eps * u) ** 2) / np.dot(w, (eps * u) ** 2)))


# ---------------------------------------------------------------------------
# Inverse-square and harmonic interactions


def inverse_square_spectrum(n: int, m: int, alpha: float, b_field: float, omega: float) -> float:
    """Relative-motion level for ``W = alpha / r^2``: ``[2n + mu + 1] Omega - m B / 2``."""
    if alpha < 0:
        raise SpectrumError("alpha < 0 (attractive singular core) is not supported")
    if n < 0:
        raise SpectrumError("n must be nonnegative")
    big = omega_big(b_field, omega)
    mu = math.sqrt(m * m + alpha)
    return (2 * n + mu + 1) * big - 0.5 * m * b_field


def harmonic_interaction_energy(n_electrons: int, b_field: float, omega: float,
                                beta: float, w0: float) -> float:
    """Closed-form ground energy for the pair interaction ``2 W0 - beta |x|^2 / 2``.

    Evaluates ``Omega + (N-1)(N-2)/2 Omega_0 - N(N+1) B / 4 + N(N-1) W0``
    with ``Omega_0 = (Omega^2 - N beta^2)^(1/2)`` exactly as the formula is
    commonly quoted; compare with :func:`harmonic_pair_energies` at ``N = 2``.
    """
    n = int(n_electrons)
    if n < 2:
        raise SpectrumError("the formula needs N >= 2")
    if omega < math.sqrt(n) * beta:
        raise SpectrumError("unstable trap: omega < N^(1/2) beta")
    big = omega_big(b_field, omega)
    big0 = math.sqrt(big * big - n * beta * beta)
    return big + 0.5 * (n - 1) * (n - 2) * big0 - 0.25 * n * (n + 1) * b_field + n * (n - 1) * w0


def harmonic_pair_energies(b_field: float, omega: float, beta: float, w0: float) -> dict:
    """Two-electron energies by separating centre of mass and relative motion.

    Includes the Zeeman-like shift ``-B/2`` per electron (``gamma = 0``).
    The relative oscillator has ``Omega_rel = (Omega^2 - 2 beta)^(1/2)``;
    the singlet occupies ``m = 0`` and the polarized triplet ``m = 1``.
    """
    big = omega_big(b_field, omega)
    if big * big - 2.0 * beta <= 0:
        raise SpectrumError("unstable relative oscillator")
    rel = math.sqrt(big * big - 2.0 * beta)
    singlet = big + rel + 2.0 * w0 - b_field
    polarized = big + 2.0 * rel - 0.5 * b_field + 2.0 * w0 - b_field
    return {"singlet": singlet, "polarized": polarized, "ground": min(singlet, polarized),
            "omega_rel": rel}
