"""Acceptance criteria 1-14.

Each test records one PASS/FAIL line (printed and repeated in the pytest
terminal summary) before asserting.  Run on its own with

    pytest tests/test_acceptance.py -v
"""

import json
import math
import time

import numpy as np
import pytest

import oracles
from qdots import cli, dft_solver, exact_spectra, point_charges, verify
from qdots.coulomb2d import build_kernel
from qdots.dft_solver import (classical_quadratic_closed_form, empirical_transition,
                              evaluate_functional, lll_threshold, minimize, scaling_check)
from qdots.model import DotParams, default_grid, from_natural, to_natural

# configurations exercised by the property suite (criterion 14)
FIG1_K = to_natural(1.7, "meV") / 4.0
SHIPPED = [("classical", 50, 0.0, 1.0), ("TF", 50, 0.0, 1.0), ("MTF", 50, 0.0, 1.0),
           ("MTF", 50, 5.0, 1.0), ("MTF", 50, 10.4, 1.0), ("MTF", 20, 2.0, 1.0)] + \
          [("MTF", 50, to_natural(b, "tesla"), FIG1_K) for b in (8.0, 7.0, 2.0)]


def test_criterion_01_fock_darwin(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240101)
    worst = 0.0
    for _ in range(200):
        k = int(rng.integers(0, 4))
        l = int(rng.integers(-4, 5))
        b = float(rng.uniform(0.0, 3.0))
        w = float(rng.uniform(0.3, 2.0))
        ref = oracles.fock_darwin_oracle(l, b, w, count=k + 1)[k]
        got = exact_spectra.fock_darwin_energy(k, l, b, w)
        worst = max(worst, abs(got - ref) / abs(ref))
    landau_exact = all(
        exact_spectra.fock_darwin_energy(k, l, b, 0.0)
        == exact_spectra.landau_energy(exact_spectra.fdl_index(k, l), b)
        for k in range(4) for l in range(-5, 6) for b in (0.5, 1.0, 2.0, 4.0, 0.25))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and landau_exact and elapsed < 60
    record(1, ok, f"worst rel err {worst:.2e}, Landau reduction exact={landau_exact}, "
                  f"{elapsed:.1f} s")
    assert ok


def test_criterion_02_kohn(record):
    ref = exact_spectra.cm_spectrum(1, 1.3, 0.7, 30)
    same = all(exact_spectra.cm_spectrum(n, 1.3, 0.7, 30) == ref for n in (2, 10, 50))
    record(2, same, "cm_spectrum identical for N in {1, 2, 10, 50}")
    assert same


def test_criterion_03_taut(record):
    t0 = time.perf_counter()
    omega = 0.05
    rows = []
    ok = True
    for n, m in [(1, 0), (2, 0), (1, 1), (2, 1)]:
        sols = exact_spectra.taut_find_solutions(n, m, omega)
        ok &= len(sols) >= 1
        for s in sols:
            levels = oracles.relative_oracle(m, s.b_field, omega, lambda r: 1.0 / r,
                                             count=s.nodes + 1)
            ref = levels[s.nodes]
            err = abs(s.energy - ref) / abs(ref)
            ok &= err <= 1e-4
            rows.append(f"({n},{m}) Omega={s.omega_big:.6g} E={s.energy:.6g} rel {err:.1e}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    record(3, ok, "; ".join(rows) + f"; {elapsed:.1f} s")
    assert ok


def test_criterion_04_inverse_square(record):
    worst0 = 0.0
    for n in range(4):
        for m in range(-3, 4):
            for b, w in [(0.0, 1.0), (1.5, 0.5), (3.0, 2.0)]:
                a = exact_spectra.inverse_square_spectrum(n, m, 0.0, b, w)
                f = exact_spectra.fock_darwin_energy(n, m, b, w)
                worst0 = max(worst0, abs(a - f) / abs(f))
    b, w = 1.0, 1.0
    got = exact_spectra.inverse_square_spectrum(0, 0, 1.0, b, w)
    ref = oracles.relative_oracle(0, b, w, lambda r: 1.0 / (r * r), count=1)[0]
    err1 = abs(got - ref) / abs(ref)
    ok = worst0 <= 1e-12 and err1 <= 1e-5
    record(4, ok, f"alpha=0 vs Fock-Darwin {worst0:.1e}; alpha=1 ground rel err {err1:.1e}")
    assert ok


def test_criterion_05_harmonic(record):
    b, w, beta, w0 = 1.0, 1.0, 0.2, 0.1
    formula = exact_spectra.harmonic_interaction_energy(2, b, w, beta, w0)
    pair = exact_spectra.harmonic_pair_energies(b, w, beta, w0)
    singlet, polarized = oracles.harmonic_two_body(b, w, beta, w0)
    oracle_ground = min(singlet, polarized)
    agree_oracle = math.isclose(pair["ground"], oracle_ground, rel_tol=1e-12)
    offset = formula - oracle_ground
    detail = (f"formula {formula:.12g}, separation oracle {oracle_ground:.12g}, "
              f"offset {offset:+.12g} (2 Omega_rel = {2 * pair['omega_rel']:.12g})")
    record(5, agree_oracle, detail)
    assert agree_oracle


def test_criterion_06_classical(record):
    t0 = time.perf_counter()
    n, k = 50, 1.0
    params = DotParams(n, 0.0, k)
    grid = default_grid(params, m=2000)
    res = minimize("classical", params, grid=grid)
    cf = classical_quadratic_closed_form(n, k, grid=grid)
    l1 = res.density.l1_distance(cf.density) / n
    de = abs(res.energy - cf.energy) / cf.energy
    kkt = res.kkt_max_violation / cf.chemical_potential
    elapsed = time.perf_counter() - t0
    ok = l1 <= 0.01 and de <= 1e-3 and kkt <= 5e-3 and elapsed < 120
    record(6, ok, f"L1/N {l1:.1e}, energy rel {de:.1e}, KKT/mu {kkt:.1e}, {elapsed:.1f} s")
    assert ok


def test_criterion_07_mtf_limits(record):
    n, k = 50, 1.0
    params = DotParams(n, 0.0, k)
    kernel = build_kernel(default_grid(params))
    tf = minimize("TF", params, kernel=kernel)
    mtf0 = minimize("MTF", params, kernel=kernel)
    same_tf = tf.energy == mtf0.energy and np.array_equal(tf.density.values, mtf0.density.values)
    thr = lll_threshold(n, k)
    classical = minimize("classical", params, kernel=kernel)
    high = minimize("MTF", params.replace(b_field=1.05 * thr.criterion), kernel=kernel)
    l1 = high.density.l1_distance(classical.density) / n
    de = abs(high.energy - classical.energy) / abs(classical.energy)
    b_emp = empirical_transition(params, 0.5 * thr.criterion, 2.0 * thr.criterion, kernel=kernel)
    rel = abs(b_emp - thr.criterion) / thr.criterion
    ok = same_tf and l1 <= 0.01 and de <= 1e-3 and rel <= 0.1
    record(7, ok, f"B=0 identical to TF={same_tf}; 1.05x threshold L1/N {l1:.1e}, "
                  f"energy {de:.1e}; empirical {b_emp:.5g} vs 3N lambda {thr.criterion:.5g} "
                  f"({rel:.1e}); printed constant {thr.printed:.5g}, ratio {thr.ratio:.6f} "
                  f"(2 pi = {2 * math.pi:.6f})")
    assert ok


def test_criterion_08_scaling(record):
    worst = 0.0
    for n, b, k in [(10, 5.0, 3.0), (20, 10.0, 5.0), (40, 0.0, 8.0)]:
        for kind in ("MTF", "TF", "classical"):
            worst = max(worst, scaling_check(n, b, k, kind).energy_discrepancy)
    ok = worst <= 1e-4
    record(8, ok, f"worst |E(N,B,K) - N^2 E(1,B/N,K/N)|/|E| = {worst:.1e}")
    assert ok


def _read_csv_rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return lines[0].split(","), [l.split(",") for l in lines[1:]]


def test_criterion_09_figure1(record, tmp_path):
    t0 = time.perf_counter()
    code = cli.main(["figure1", "--output", str(tmp_path)])
    elapsed = time.perf_counter() - t0
    text = (tmp_path / "figure1_summary.json").read_text()
    summary = json.loads("".join(l for l in text.splitlines(True) if not l.startswith("#")))
    prof = {p["b_tesla"]: p for p in summary["profiles"]}
    no_ring_8 = not any(d.startswith("incompressible") for d in prof[8.0]["domains"])
    centre_7 = prof[7.0]["domains"][0] == "incompressible(1)"
    _, rows7 = _read_csv_rows(tmp_path / "figure1_B7T.csv")
    plateau = from_natural(to_natural(7.0, "tesla") / (2 * math.pi), "per-m2") / 1e14
    centre_value = abs(float(rows7[0][1]) - plateau) / plateau <= 0.02
    doms2 = [d for d in prof[2.0]["domains"] if d != "vacuum"]
    rings = sum(d.startswith("incompressible") for d in doms2)
    alternating = all(doms2[i].startswith("incompressible") != doms2[i + 1].startswith("incompressible")
                      for i in range(len(doms2) - 1))
    params = DotParams(50, 0.0, FIG1_K)
    tf = minimize("TF", params, grid=default_grid(params))
    _, rows0 = _read_csv_rows(tmp_path / "figure1_B0T.csv")
    rho0 = np.array([float(r[1]) for r in rows0])
    tf_rho = from_natural(tf.density.values, "per-m2") / 1e14
    matches_tf = np.array_equal(rho0, tf_rho)
    ok = (code == 0 and no_ring_8 and centre_7 and centre_value and rings >= 2 and alternating
          and matches_tf and elapsed < 600)
    record(9, ok, f"8 T {prof[8.0]['domains']}; 7 T {prof[7.0]['domains']}; 2 T {rings} "
                  f"incompressible rings alternating={alternating}; 0 T equals TF={matches_tf}; "
                  f"threshold {summary['threshold_tesla']:.3f} T; {elapsed:.1f} s")
    assert ok


def test_criterion_10_point_charges(record):
    k = 1.3
    pair = point_charges.minimize_points(2, DotParams(2, 0.0, k), multistart=4).best
    radii = np.hypot(*pair.positions.T)
    r_ok = np.max(np.abs(radii - (8 * k) ** (-1 / 3))) / (8 * k) ** (-1 / 3) <= 1e-6
    e_ok = abs(pair.energy - 1.5 * k ** (1 / 3)) / (1.5 * k ** (1 / 3)) <= 1e-6
    tri = point_charges.minimize_points(3, DotParams(3, 0.0, 1.0), multistart=4).best
    d = tri.pair_distances()
    tri_ok = (d.max() - d.min()) / d.mean() <= 1e-6
    reports = [point_charges.gap_to_classical(n, float(n)) for n in (10, 20, 40, 80)]
    b_mean, spread = point_charges.fit_gap_constant(reports)
    b_fit = max(r.normalized_gap for r in reports)
    law = all(r.point_energy >= r.classical_energy - b_fit * r.n_electrons ** 1.5 for r in reports)
    ok = r_ok and e_ok and tri_ok and law and spread <= 0.25
    record(10, ok, f"N=2 radius/energy ok={r_ok and e_ok}; N=3 equilateral spread "
                   f"{(d.max() - d.min()) / d.mean():.1e}; b mean {b_mean:.4f}, "
                   f"max deviation {spread:.1%}")
    assert ok


def test_criterion_11_exchange(record):
    t0 = time.perf_counter()
    states = [verify.SlaterLLLState((0,), 1.0)]
    states += [verify.SlaterLLLState.mdd(n, b) for n in range(2, 7) for b in (0.5, 1.0, 2.0)]
    rng = np.random.default_rng(11)
    for i in range(20):
        occ = tuple(sorted(rng.choice(10, size=3, replace=False).tolist()))
        states.append(verify.SlaterLLLState(occ, (0.5, 2.0)[i % 2]))
    reports = [verify.exchange_inequality_check(s) for s in states]
    ok = all(r.passed and not r.inconclusive and r.lhs <= r.parameters["direct"] + 1e-12
             for r in reports)
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 600
    record(11, ok, f"{len(reports)} states, min margin {min(r.margin for r in reports):.3g}, "
                   f"N=1 lhs {reports[0].lhs:.1e}; {elapsed:.1f} s")
    assert ok


def test_criterion_12_lieb_thirring(record):
    t0 = time.perf_counter()
    reports = []
    for u0 in (1.0, 5.0):
        for b in (0.5, 1.0, 2.0):
            for lam in (0.25, 0.5, 0.75):
                reports.append(verify.lieb_thirring_check(verify.gaussian_well(u0), b, lam, n=64))
    repulsive = verify.lieb_thirring_check(lambda r: -np.exp(-r * r), 1.0, 0.5, n=64)
    ok = all(r.passed and not r.inconclusive for r in reports)
    ok &= repulsive.lhs == 0.0 and repulsive.rhs == 0.0 and repulsive.passed
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 600
    worst = max(r.lhs / r.rhs for r in reports)
    record(12, ok, f"{len(reports)} wells, largest lhs/rhs {worst:.3f}; U<=0 gives "
                   f"{repulsive.lhs} <= {repulsive.rhs}; {elapsed:.1f} s")
    assert ok


def test_criterion_13_blocks(record):
    reps = [verify.lll_block_structure(2, 5), verify.lll_block_structure(3, 7)]
    ok = all(r.passed and r.mdd_sector_dimension == 1 for r in reps)
    cross = max(r.max_cross_sector for r in reps)
    record(13, ok, f"MDD sector dimensions {[r.mdd_sector_dimension for r in reps]}, "
                   f"max cross-sector element {cross:.1e}")
    assert ok


def _property_suite(kind, n, b, k):
    params = DotParams(n, b, k)
    kernel = build_kernel(default_grid(params))
    grid = kernel.grid
    res = minimize(kind, params, kernel=kernel)
    # a different start: a Gaussian of the same mass
    g = np.exp(-(grid.nodes / (0.5 * grid.r_max)) ** 2)
    other = minimize(kind, params, kernel=kernel, initial=g * n / grid.integrate(g))
    unique = res.density.l1_distance(other.density) <= 1e-6 * n and \
        abs(res.energy - other.energy) <= 1e-9 * abs(res.energy)
    mass = max(abs(m) for m in res.mass_history) <= 1e-9 * n
    hist = np.array(res.energy_history)
    descent = bool(np.all(np.diff(hist) <= 1e-12 * np.abs(hist[1:])))
    rng = np.random.default_rng(n)
    convex = True
    for _ in range(5):
        a = rng.uniform(size=grid.size) * res.density.values.max()
        c = rng.uniform(size=grid.size) * res.density.values.max()
        t = rng.uniform()
        fa, fc = (evaluate_functional(kind, x, params, kernel) for x in (a, c))
        fm = evaluate_functional(kind, t * a + (1 - t) * c, params, kernel)
        convex &= fm <= t * fa + (1 - t) * fc + 1e-12 * (abs(fa) + abs(fc))
    return {"unique": unique, "mass": mass, "descent": descent, "convex": bool(convex)}


def test_criterion_14_properties(record, tmp_path):
    results = {cfg: _property_suite(*cfg) for cfg in SHIPPED}
    failing = [(cfg, name) for cfg, r in results.items() for name, v in r.items() if not v]
    a = point_charges.minimize_points(12, DotParams(12, 0.0, 1.0), multistart=4, seed=7)
    b = point_charges.minimize_points(12, DotParams(12, 0.0, 1.0), multistart=4, seed=7)
    seeded = np.array_equal(a.best.positions, b.best.positions) and a.energy == b.energy
    outs = []
    path = tmp_path / "solve.csv"
    for _ in range(2):
        cli.main(["solve", "--N", "20", "--K", "1", "--B", "2", "--output", str(path)])
        outs.append(path.read_bytes())
    byte_identical = outs[0] == outs[1]
    ok = not failing and seeded and byte_identical
    record(14, ok, f"{len(SHIPPED)} configurations x (convexity, uniqueness, mass, descent); "
                   f"failures {failing}; seeded point charges identical={seeded}; "
                   f"CLI byte-identical={byte_identical}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
