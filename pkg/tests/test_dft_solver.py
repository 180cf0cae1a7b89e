import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qdots.coulomb2d import build_kernel
from qdots.dft_solver import (KineticDensity, SolverError, Tolerances,
                              classical_quadratic_closed_form, classify_domains,
                              effective_potential, evaluate_functional, kkt_report,
                              limit_sweep, lll_threshold, minimize, scaling_check)
from qdots.model import (DotParams, ModelError, PotentialSpec, RadialDensity, build_grid,
                         default_grid)


@pytest.fixture(scope="module")
def setup50():
    params = DotParams(50, 0.0, 1.0)
    kernel = build_kernel(default_grid(params))
    return params, kernel


# --- kinetic density -------------------------------------------------------

def test_jb_values_and_slopes():
    b = 1.3
    kin = KineticDensity.for_kind("MTF", b)
    c = b / (2 * math.pi)
    assert kin.value(np.array([0.0]))[0] == 0.0
    assert kin.value(np.array([3 * c]))[0] == pytest.approx(3 * b * b / (2 * math.pi))
    lo, hi = kin.slope_interval(np.array([2 * c, 2.5 * c]))
    assert (lo[0], hi[0]) == pytest.approx((b, 2 * b))
    assert lo[1] == hi[1] == pytest.approx(2 * b)


@given(st.floats(0.0, 20.0))
def test_jb_is_integral_of_slope(rho):
    b = 0.7
    kin = KineticDensity.for_kind("MTF", b)
    c = b / (2 * math.pi)
    n = math.floor(rho / c)
    # piecewise-linear integral of B floor(2 pi s / B)
    expected = b * c * n * (n - 1) / 2 + n * b * (rho - n * c)
    assert kin.value(np.array([rho]))[0] == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_jb_tends_to_tf():
    rho = np.array([0.1, 0.5, 2.0])
    for b in (1e-2, 1e-4):
        jb = KineticDensity.for_kind("MTF", b).value(rho)
        assert np.allclose(jb, math.pi * rho ** 2, rtol=10 * b)
    assert KineticDensity.for_kind("MTF", 0.0).mode == "tf"


@given(st.floats(-5, 5), st.floats(1e-3, 2.0))
def test_prox_is_minimizer(z, t):
    kin = KineticDensity.for_kind("MTF", 0.9)
    x = float(kin.prox(np.array([z]), t)[0])
    obj = lambda y: (y - z) ** 2 / (2 * t) + float(kin.value(np.array([y]))[0])
    ys = np.linspace(0, max(5.0, abs(z)) + 1, 20001)
    best = min(obj(y) for y in ys)
    assert x >= 0
    assert obj(x) <= best + 1e-9


# --- functional ------------------------------------------------------------

def test_functional_zero_density(setup50):
    params, kernel = setup50
    zero = np.zeros(kernel.grid.size)
    for kind in ("TF", "MTF", "classical"):
        assert evaluate_functional(kind, zero, params, kernel) == 0.0


def test_mtf_equals_classical_below_first_level(setup50):
    params, kernel = setup50
    b = 50.0
    rho = np.full(kernel.grid.size, 0.5 * b / (2 * math.pi))
    p = params.replace(b_field=b)
    assert evaluate_functional("MTF", rho, p, kernel) == evaluate_functional("classical", rho, p,
                                                                             kernel)


def test_gamma_rejected(setup50):
    params, kernel = setup50
    with pytest.raises(ModelError):
        evaluate_functional("MTF", np.zeros(kernel.grid.size), params.replace(gamma=0.1), kernel)
    with pytest.raises(ModelError):
        minimize("bogus", params, kernel=kernel)


# --- minimization ------------------------------------------------------------

def test_classical_closed_form(setup50):
    params, kernel = setup50
    res = minimize("classical", params, kernel=kernel)
    cf = classical_quadratic_closed_form(50, 1.0, grid=kernel.grid)
    assert res.converged
    assert res.density.l1_distance(cf.density) <= 0.01 * 50
    assert res.energy == pytest.approx(cf.energy, rel=1e-3)
    assert res.chemical_potential == pytest.approx(cf.chemical_potential, rel=1e-3)
    assert res.density.mass == pytest.approx(50, rel=1e-10)


def test_closed_form_examples():
    n, k = 7.0, 2.0
    cf = classical_quadratic_closed_form(n, k)
    lam = (8 * k / (3 * math.pi * n)) ** (2 / 3)
    assert cf.density.values[0] == pytest.approx(1.5 / math.pi * n * lam)
    assert oracles.disc_normalization(n, lam) == pytest.approx(n, rel=1e-15)
    # the square-root edge limits grid quadrature to order h^1.5
    errs = [abs(classical_quadratic_closed_form(n, k, grid=build_grid(3 * cf.radius, m))
                .density.mass - n) for m in (1000, 4000)]
    assert errs[1] <= 1e-4 * n
    assert math.log(errs[0] / errs[1], 4) == pytest.approx(1.5, abs=0.2)
    assert cf.radius == pytest.approx(lam ** -0.5)
    edge = RadialDensity(cf.density.grid, cf.density.values)
    assert np.all(edge.values[cf.density.grid.nodes >= cf.radius] == 0.0)
    with pytest.raises(ModelError):
        classical_quadratic_closed_form(1, 1, potential=PotentialSpec.homogeneous(3))


def test_kkt_closed_form_and_perturbation(setup50):
    params, kernel = setup50
    cf = classical_quadratic_closed_form(50, 1.0, grid=kernel.grid)
    rep = kkt_report(cf.density, params, kernel, kind="classical",
                     chemical_potential=cf.chemical_potential)
    assert rep.max_violation <= 5e-3 * cf.chemical_potential
    r = kernel.grid.nodes
    bump = cf.density.values * (1 + 0.05 * np.exp(-((r - 0.5 * cf.radius) / (0.1 * cf.radius)) ** 2))
    bump *= 50 / kernel.grid.integrate(bump)
    bad = kkt_report(RadialDensity(kernel.grid, bump), params, kernel, kind="classical",
                     chemical_potential=cf.chemical_potential)
    assert bad.relative > Tolerances().kkt
    assert bad.relative > 1e3 * kkt_report(minimize("classical", params, kernel=kernel)).relative


def test_mtf_zero_field_is_tf(setup50):
    params, kernel = setup50
    a = minimize("MTF", params, kernel=kernel)
    b = minimize("TF", params, kernel=kernel)
    assert a.energy == b.energy
    assert np.array_equal(a.density.values, b.density.values)


def test_threshold_examples():
    thr = lll_threshold(1, 3 * math.pi / 8)
    assert thr.criterion == pytest.approx(3.0, rel=1e-14)
    assert lll_threshold(20, 1.0).criterion / lll_threshold(10, 1.0).criterion == \
        pytest.approx(2 ** (1 / 3), rel=1e-12)
    assert thr.ratio == pytest.approx(2 * math.pi, rel=1e-12)


def test_threshold_regimes(setup50):
    params, kernel = setup50
    thr = lll_threshold(50, 1.0).criterion
    classical = minimize("classical", params, kernel=kernel)
    high = minimize("MTF", params.replace(b_field=1.05 * thr), kernel=kernel)
    assert high.density.l1_distance(classical.density) <= 0.01 * 50
    assert [str(d) for d in classify_domains(high)][:1] == ["compressible"]
    low = minimize("MTF", params.replace(b_field=0.8 * thr), kernel=kernel)
    assert str(classify_domains(low)[0]) == "incompressible(1)"
    with pytest.raises(ModelError):
        classify_domains(minimize("TF", params, kernel=kernel))


def test_effective_potential(setup50):
    params, kernel = setup50
    thr = lll_threshold(50, 1.0).criterion
    res = minimize("MTF", params.replace(b_field=0.8 * thr), kernel=kernel)
    veff = effective_potential(res, kernel)
    doms = classify_domains(res)
    r = kernel.grid.nodes
    mu = res.chemical_potential
    comp = [d for d in doms if d.label == "compressible"][0]
    inside = (r >= comp.r_start) & (r <= comp.r_end)
    assert np.max(np.abs(veff[inside] - mu)) <= 5e-3 * mu
    plateau = doms[0]
    on = (r >= plateau.r_start) & (r <= plateau.r_end)
    assert np.ptp(veff[on]) > 5e-3 * mu
    # far field approaches the trap
    assert veff[-1] / params.trap(r[-1]) == pytest.approx(1.0, rel=0.1)


def test_compact_support(setup50):
    params, kernel = setup50
    res = minimize("MTF", params.replace(b_field=3.0), kernel=kernel)
    outer = kernel.grid.nodes >= 0.9 * kernel.grid.r_max
    assert np.all(res.density.values[outer] <= 1e-12)


def test_scaling_examples():
    assert scaling_check(1, 2.0, 1.0, "MTF").energy_discrepancy == 0.0
    rep = scaling_check(20, 10.0, 5.0, "MTF")
    assert rep.energy_discrepancy <= 2e-6
    for kind in ("TF", "classical"):
        assert scaling_check(20, 0.0, 5.0, kind).energy_discrepancy <= 2e-6


def test_limit_sweeps(setup50):
    params, kernel = setup50
    thr = lll_threshold(50, 1.0).criterion
    down = limit_sweep("B->0", params, [4.0, 2.0, 1.0, 0.5, 0.25, 0.0], grid=kernel.grid)
    gaps = [r.energy_gap for r in down]
    assert all(a >= b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] == 0.0
    up = limit_sweep("B->inf", params, [0.5 * thr, 1.1 * thr, 2 * thr], grid=kernel.grid)
    assert up[0].energy_gap > 0
    assert up[1].energy_gap == 0.0 and up[2].energy_gap == 0.0
    with pytest.raises(ModelError):
        limit_sweep("B->inf", params, [1.0, 3.0, 2.0])
    with pytest.raises(ModelError):
        limit_sweep("sideways", params, [1.0])


def test_nonconvergence_is_flagged(setup50):
    params, kernel = setup50
    res = minimize("MTF", params.replace(b_field=3.0), kernel=kernel,
                   tolerances=Tolerances(max_iter=3, polish=False))
    assert not res.converged


def test_homogeneous_potential_runs():
    params = DotParams(10, 1.0, 1.0, potential=PotentialSpec.homogeneous(3))
    res = minimize("MTF", params)
    assert res.converged
    assert res.density.mass == pytest.approx(10, rel=1e-10)


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(["TF", "MTF", "classical"]), st.floats(0.05, 0.95), st.integers(0, 10 ** 6))
def test_convexity_probe(kind, t, seed):
    params = DotParams(10, 1.5, 1.0)
    kernel = _small_kernel()
    rng = np.random.default_rng(seed)
    a, c = rng.uniform(0, 2, size=(2, kernel.grid.size))
    fa = evaluate_functional(kind, a, params, kernel)
    fc = evaluate_functional(kind, c, params, kernel)
    fm = evaluate_functional(kind, t * a + (1 - t) * c, params, kernel)
    assert fm <= t * fa + (1 - t) * fc + 1e-12 * (abs(fa) + abs(fc))


_CACHE = {}


def _small_kernel():
    if "k" not in _CACHE:
        _CACHE["k"] = build_kernel(default_grid(DotParams(10, 0.0, 1.0), m=300))
    return _CACHE["k"]


@settings(max_examples=6, deadline=None)
@given(st.floats(0.0, 8.0), st.sampled_from(["TF", "MTF", "classical"]))
def test_solver_invariants(b, kind):
    params = DotParams(10, b, 1.0)
    kernel = _small_kernel()
    res = minimize(kind, params, kernel=kernel)
    g = np.exp(-kernel.grid.nodes)
    other = minimize(kind, params, kernel=kernel, initial=g)
    assert res.converged and other.converged
    assert res.density.l1_distance(other.density) <= 2e-6 * 10
    assert max(abs(m) for m in res.mass_history) <= 1e-10 * 10
    hist = np.array(res.energy_history)
    assert np.all(np.diff(hist) <= 1e-12 * np.abs(hist[1:]))
    assert np.all(res.density.values >= 0)
