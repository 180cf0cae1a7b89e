"""Radial reduction of the three-dimensional Coulomb kernel ``|x - y|^-1``.

For radial densities in the plane the angular integral of the kernel is

    G(r, s) = int_0^{2 pi} (r^2 + s^2 - 2 r s cos t)^(-1/2) dt
            = 2 pi / AGM(r + s, |r - s|),

a complete elliptic integral of the first kind evaluated through the
arithmetic-geometric mean.  The potential of a density on a
:class:`~qdots.model.RadialGrid` is then ``Phi = k @ (w' * rho)`` with
``w' = w / (2 pi)`` the radial weights without the angular factor.

The table is dense, so memory is ``O(M^2)``: 32 MB at ``M = 2000``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse.linalg import eigsh

from ._backend import kernels
from .model import ModelError, RadialDensity, RadialGrid

TWO_PI = 2.0 * math.pi


def agm(a, b):
    """Arithmetic-geometric mean, elementwise, to machine precision."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    a = a.astype(float)
    b = b.astype(float)
    for _ in range(64):
        if np.all(np.abs(a - b) <= 1e-15 * np.abs(a)):
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return 0.5 * (a + b)


def ellipk(k):
    """Complete elliptic integral of the first kind, modulus ``k`` (not ``m``)."""
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore"):
        return 0.5 * np.pi / agm(1.0, np.sqrt(1.0 - k * k))


def ellipe(k):
    """Complete elliptic integral of the second kind, modulus ``k``.

    Uses ``E = K (1 - sum_n 2^(n-1) c_n^2)`` along the AGM sequence;
    ``E(1) = 1`` is returned exactly.
    """
    scalar = np.ndim(k) == 0
    k = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.ones_like(k)
    inner = np.abs(k) < 1.0
    kk = k[inner]
    a = np.ones_like(kk)
    b = np.sqrt(1.0 - kk * kk)
    c = kk.copy()
    acc = 0.5 * c * c
    scale = 0.5
    for _ in range(64):
        if np.all(np.abs(c) <= 1e-17):
            break
        a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
        scale *= 2.0
        acc += scale * c * c
    out[inner] = 0.5 * np.pi / a * (1.0 - acc)
    return float(out[0]) if scalar else out


def angular_kernel(r, s):
    """Angular integral ``G(r, s)`` of ``|x - y|^-1``; singular at ``r = s``."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        return TWO_PI / agm(r + s, np.abs(r - s))


def disc_potential(r, radius: float):
    """Potential of the unit-density disc of the given radius at ``r <= radius``.

    ``U(r) = 4 R E(r / R)``; equals ``2 pi R`` at the centre and ``4 R``
    on the rim.
    """
    r = np.asarray(r, dtype=float)
    return 4.0 * radius * np.asarray(ellipe(r / radius)).reshape(r.shape)


def cell_average(r: float, h: float, n: int = 48) -> float:
    """Area-weighted mean of ``G(r, .)`` over the cell ``[r - h/2, r + h/2]``.

    The logarithmic singularity ``-(2/r) ln|r - s|`` is integrated in
    closed form; the bounded remainder uses Gauss-Legendre after an
    ``s = r +- (h/2) t^2`` substitution on each side.
    """
    if not h > 0:
        raise ModelError("cell width must be positive")
    lo = max(0.0, r - 0.5 * h)
    hi = r + 0.5 * h
    area = 0.5 * (hi * hi - lo * lo)
    t, wt = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (t + 1.0)
    wt = 0.5 * wt
    if r <= 0.0:
        # G(0, s) s = 2 pi
        return TWO_PI * (hi - lo) / area
    total = 0.0
    coef = 2.0 / r
    for side, length in ((-1.0, r - lo), (1.0, hi - r)):
        if length <= 0.0:
            continue
        s = r + side * length * t * t
        jac = 2.0 * length * t
        g = np.asarray(angular_kernel(r, s)) * s
        # singular part subtracted with the exact local coefficient
        sing = -coef * r * np.log(np.abs(s - r))
        total += float(np.dot(wt, (g - sing) * jac))
        total += -coef * r * (length * math.log(length) - length)
    return total / area


@dataclass(frozen=True, eq=False)
class RadialKernelTable:
    """Symmetric table ``k_ij`` of angular kernel averages on a grid.

    ``diagonal`` records how the singular diagonal was regularized:
    ``'disc'`` fixes each ``k_ii`` so that every row integrates a constant
    density exactly (matching the uniform-disc potential), ``'cell'`` uses
    the analytic local cell average of the log singularity.
    """

    grid: RadialGrid
    matrix: np.ndarray
    diagonal: str

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def radial_weights(self) -> np.ndarray:
        return self.grid.weights / TWO_PI

    @cached_property
    def lipschitz(self) -> float:
        """Largest eigenvalue of ``rho -> k (w' rho)`` in the weighted metric."""
        sw = np.sqrt(self.radial_weights)
        sym = sw[:, None] * self.matrix * sw[None, :]
        top = eigsh(sym, k=1, which="LA", return_eigenvectors=False, tol=1e-10)
        return float(top[0])

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Potential ``k @ (w' * values)`` for raw node values."""
        return self.matrix @ (self.radial_weights * values)


def build_kernel(grid: RadialGrid, diagonal: str = "disc") -> RadialKernelTable:
    """Assemble the dense kernel table for ``grid``."""
    r = np.ascontiguousarray(grid.nodes, dtype=float)
    k = kernels.kernel_offdiag(r)
    wp = grid.weights / TWO_PI
    if diagonal == "disc":
        u = disc_potential(r, grid.r_max)
        k[np.diag_indices_from(k)] = (u - k @ wp) / wp
    elif diagonal == "cell":
        h = np.empty_like(r)
        h[1:-1] = 0.5 * (r[2:] - r[:-2])
        h[0] = r[1] - r[0]
        h[-1] = r[-1] - r[-2]
        k[np.diag_indices_from(k)] = [cell_average(ri, hi) for ri, hi in zip(r, h)]
    else:
        raise ModelError(f"unknown diagonal rule {diagonal!r}")
    return RadialKernelTable(grid=grid, matrix=k, diagonal=diagonal)


def _values(rho, table: RadialKernelTable) -> np.ndarray:
    if isinstance(rho, RadialDensity):
        if not rho.grid.same_as(table.grid):
            raise ModelError("density and kernel table live on different grids")
        return rho.values
    values = np.asarray(rho, dtype=float)
    if values.shape != table.grid.nodes.shape:
        raise ModelError("density values do not match the kernel grid")
    return values


def coulomb_potential(rho, table: RadialKernelTable) -> np.ndarray:
    """Values of ``rho * |x|^-1`` at the grid nodes."""
    return table.apply(_values(rho, table))


def coulomb_energy(rho, table: RadialKernelTable) -> float:
    """``D(rho, rho) = 1/2 int int rho(x) rho(y) / |x - y|``."""
    values = _values(rho, table)
    return 0.5 * table.grid.integrate(values * table.apply(values))


def coulomb_pair(rho, sigma, table: RadialKernelTable) -> float:
    """Bilinear form ``D(rho, sigma)``."""
    a = _values(rho, table)
    b = _values(sigma, table)
    return 0.5 * table.grid.integrate(a * table.apply(b))
