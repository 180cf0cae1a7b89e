"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` function by function and are used when the
compiled extension is unavailable or ``QDOTS_PURE_PYTHON=1`` is set.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def _agm(a, b):
    a = np.array(a, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    for _ in range(64):
        if np.all(np.abs(a - b) <= 1e-15 * a):
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return 0.5 * (a + b)


def kernel_offdiag(r):
    """Angular Coulomb average ``2 pi / AGM(r + r', |r - r'|)``; zero diagonal."""
    r = np.asarray(r, dtype=float)
    m = r.size
    out = np.zeros((m, m))
    for i in range(1, m):
        # lower triangle row by row keeps memory at O(M)
        s = r[:i]
        out[i, :i] = TWO_PI / _agm(r[i] + s, r[i] - s)
    out += out.T
    return out


def exchange_moments(r, deltas, n_theta=64):
    """Tables ``int_0^{2pi} (cos(d t) - 1) / |x - y| dt`` for each ``d``.

    The integrand is bounded, so plain Gauss-Legendre on ``[0, pi]`` works.
    """
    r = np.asarray(r, dtype=float)
    deltas = np.asarray(deltas, dtype=np.int64)
    t, wt = np.polynomial.legendre.leggauss(int(n_theta))
    theta = 0.5 * np.pi * (t + 1.0)
    wt = wt * np.pi  # half-interval factor times the doubling over [pi, 2 pi]
    m = r.size
    out = np.zeros((deltas.size, m, m))
    rr = r[:, None] * r[None, :]
    sq = r[:, None] ** 2 + r[None, :] ** 2
    for th, w in zip(theta, wt):
        dist = np.sqrt(np.maximum(sq - 2.0 * rr * np.cos(th), 0.0))
        inv = np.divide(w, dist, out=np.zeros_like(dist), where=dist > 0)
        for a, d in enumerate(deltas):
            out[a] += (np.cos(d * th) - 1.0) * inv
    return out


def pair_energy_grad(x):
    """Coulomb energy ``sum_{i<j} 1/|x_i - x_j|`` and its gradient."""
    x = np.asarray(x, dtype=float)
    diff = x[:, None, :] - x[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, 1.0)
    inv = 1.0 / np.sqrt(d2)
    np.fill_diagonal(inv, 0.0)
    energy = 0.5 * inv.sum()
    grad = -np.einsum("ij,ijk->ik", inv ** 3, diff)
    return float(energy), grad


def min_pair_distance(x):
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 2:
        return np.inf
    diff = x[:, None, :] - x[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, np.inf)
    return float(np.sqrt(d2.min()))
