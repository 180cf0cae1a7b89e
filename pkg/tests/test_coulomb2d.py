import math

import numpy as np
import pytest
import scipy.special as sps
from scipy import integrate
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qdots.coulomb2d import (agm, angular_kernel, build_kernel, cell_average, coulomb_energy,
                             coulomb_pair, coulomb_potential, disc_potential, ellipe, ellipk)
from qdots.model import ModelError, RadialDensity, build_grid


def test_elliptic_against_scipy():
    k = np.linspace(0.0, 0.999, 200)
    assert np.allclose(ellipk(k), sps.ellipk(k * k), rtol=1e-14)
    assert np.allclose(ellipe(k), sps.ellipe(k * k), rtol=1e-12)
    assert ellipe(1.0) == 1.0
    assert agm(1.0, 1.0) == 1.0


def test_angular_kernel_symmetric_and_origin():
    assert angular_kernel(0.0, 2.0) == pytest.approx(math.pi)
    assert angular_kernel(1.3, 0.4) == angular_kernel(0.4, 1.3)
    # direct angular quadrature
    f = lambda t: 1.0 / math.sqrt(1.3 ** 2 + 0.4 ** 2 - 2 * 1.3 * 0.4 * math.cos(t))
    ref, _ = integrate.quad(f, 0.0, 2 * math.pi, epsabs=1e-13)
    assert angular_kernel(1.3, 0.4) == pytest.approx(ref, rel=1e-12)


def test_disc_potential_values():
    assert disc_potential(0.0, 2.0) == pytest.approx(2 * math.pi * 2.0)
    assert disc_potential(2.0, 2.0) == pytest.approx(8.0)


@pytest.mark.parametrize("r,h", [(1.0, 0.01), (1.0, 0.1), (0.3, 0.05), (0.02, 0.04)])
def test_cell_average_against_quadrature(r, h):
    assert cell_average(r, h) == pytest.approx(oracles.cell_average_oracle(r, h), rel=1e-11)


def test_cell_average_rejects_bad_width():
    with pytest.raises(ModelError):
        cell_average(1.0, 0.0)


def test_gaussian_self_energy():
    g = build_grid(8.0, 2000)
    table = build_kernel(g)
    rho = RadialDensity.from_function(g, lambda r: np.exp(-r * r) / math.pi)
    assert coulomb_energy(rho, table) == pytest.approx(oracles.gaussian_self_energy(), rel=1e-8)


def test_uniform_disc_energy():
    # D of the unit-density disc of radius R is 8 pi R^3 / 3
    g = build_grid(1.5, 1000)
    table = build_kernel(g)
    assert coulomb_energy(np.ones(g.size), table) == pytest.approx(8 * math.pi * 1.5 ** 3 / 3,
                                                                   rel=1e-6)
    assert np.allclose(coulomb_potential(np.ones(g.size), table), disc_potential(g.nodes, 1.5),
                       rtol=1e-12)


def test_disc_diagonal_converges_faster_than_cell():
    errs = {}
    for diag in ("disc", "cell"):
        e = []
        for m in (200, 400):
            g = build_grid(8.0, m)
            rho = np.exp(-g.nodes ** 2) / math.pi
            e.append(abs(coulomb_energy(rho, build_kernel(g, diag)) - oracles.gaussian_self_energy()))
        errs[diag] = e
    assert errs["disc"][1] < errs["cell"][1]
    assert errs["disc"][0] / errs["disc"][1] > 8


def test_kernel_table_properties():
    g = build_grid(3.0, 300)
    table = build_kernel(g)
    assert np.array_equal(table.matrix, table.matrix.T) or \
        np.allclose(table.matrix, table.matrix.T, rtol=1e-14)
    assert table.lipschitz > 0
    with pytest.raises(ModelError):
        build_kernel(g, "midpoint")
    with pytest.raises(ModelError):
        coulomb_energy(np.ones(10), table)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=6, max_size=6))
def test_coulomb_energy_positive_and_symmetric(coeffs):
    g = build_grid(4.0, 200)
    table = build_kernel(g)
    basis = [np.exp(-(g.nodes - c) ** 2) for c in (0.0, 0.5, 1.0, 1.5, 2.0, 2.5)]
    rho = sum(a * b for a, b in zip(coeffs, basis))
    sigma = basis[2]
    assert coulomb_energy(rho, table) >= 0.0
    assert coulomb_pair(rho, sigma, table) == pytest.approx(coulomb_pair(sigma, rho, table),
                                                            rel=1e-10, abs=1e-14)
