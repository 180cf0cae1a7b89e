"""Command-line frontend.

Every run is described by a flat configuration (JSON file via ``--config``,
validated against ``schema/run_config.json``) whose keys can be overridden by
``--kebab-case`` flags.  Quantities may carry a unit suffix (``1.7meV``,
``7T``); bare numbers are read in the system chosen by ``--units``.  Output
files start with ``#`` lines echoing the resolved configuration in natural
units.

Exit codes: 0 success, 1 a verification check failed, 2 invalid input,
3 solver non-convergence, 4 inconclusive verification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import jsonschema
import numpy as np

from . import dft_solver, exact_spectra, point_charges, verify
from .coulomb2d import build_kernel
from .dft_solver import SolverError, Tolerances
from .exact_spectra import SpectrumError
from .model import MATERIALS, DotParams, ModelError, default_grid, from_natural, to_natural

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_SOLVER, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4

COMMANDS = ("spectrum", "taut", "exact-n", "solve", "point-charges", "domains", "figure1",
            "scaling-check", "limit-sweep", "verify")

DEFAULTS = {
    "kind": "MTF", "which": "all", "units": "natural", "material": "GaAs",
    "n_electrons": 2, "b_field": 0.0, "coupling": 1.0, "omega": 1.0, "beta": 0.0, "w0": 0.0,
    "k_ref_nm": None, "k_range": "0..3", "l_range": "-3..3", "n": 1, "m": 0, "count": 10,
    "grid_m": 2000, "grid_factor": 3.0, "kkt_tol": 1e-6, "max_iter": 20000,
    "multistart": 8, "direction": "B->inf", "schedule": None, "b_list": "8,7,2,0",
    "lam": 0.5, "u0": 1.0, "occupied": None, "l_max": None, "lattice_n": 64, "workers": 4,
    "output": None, "format": None, "seed": 0,
}

FIGURE1_DEFAULTS = {"n_electrons": 50, "coupling": "1.7meV", "k_ref_nm": 20.0,
                    "units": "physical", "output": "figure1"}

# flag aliases in the physicists' notation
ALIASES = {"n_electrons": ["--N"], "b_field": ["--B"], "coupling": ["--K"],
           "k_range": ["--k"], "l_range": ["--l"]}

FIELD_TYPES = {
    "n_electrons": int, "n": int, "m": int, "count": int, "grid_m": int, "max_iter": int,
    "multistart": int, "l_max": int, "lattice_n": int, "workers": int, "seed": int,
    "beta": float, "w0": float, "k_ref_nm": float, "grid_factor": float, "kkt_tol": float,
    "lam": float, "u0": float,
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$")
_SUFFIX = {"t": "tesla", "tesla": "tesla", "mev": "meV", "nm": "nm"}


class ValidationError(ValueError):
    """Invalid configuration; reported on one line with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


# ---------------------------------------------------------------------------
# Configuration


def load_schema() -> dict:
    text = resources.files("qdots").joinpath("schema/run_config.json").read_text()
    return json.loads(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qdots", description="Two-dimensional quantum dot spectra, density "
                "functionals, point charges and inequality checks.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON run configuration")
    for key in DEFAULTS:
        flags = ["--" + key.replace("_", "-")] + ALIASES.get(key, [])
        p.add_argument(*flags, dest=key, default=None)
    return p


def _parse_quantity(value, unit: str, units: str, material) -> float:
    """Natural value of a number with an optional unit suffix."""
    if isinstance(value, (int, float)):
        num, suffix = float(value), ""
    else:
        match = _QUANTITY.match(str(value))
        if not match:
            raise ValidationError(f"cannot parse quantity {value!r}")
        num, suffix = float(match.group(1)), match.group(2).lower()
    if suffix:
        if _SUFFIX.get(suffix) != unit:
            raise ValidationError(f"unit {suffix!r} does not fit a quantity in {unit}")
        return float(to_natural(num, unit, material))
    if units == "physical":
        return float(to_natural(num, unit, material))
    return num


def _int_range(text: str) -> range:
    match = re.match(r"^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$", str(text))
    if not match:
        raise ValidationError(f"expected a range like 0..3, got {text!r}")
    lo, hi = int(match.group(1)), int(match.group(2))
    if hi < lo:
        raise ValidationError(f"empty range {text!r}")
    return range(lo, hi + 1)


def _float_list(text: str) -> List[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def resolve_config(argv: Optional[Sequence[str]] = None) -> dict:
    """Merge defaults, config file and flags; validate; convert to natural units."""
    args = build_parser().parse_args(argv)
    raw = dict(DEFAULTS)
    if args.command == "figure1":
        raw.update(FIGURE1_DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config: {exc}") from None
        raw.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key)
        if value is not None:
            try:
                raw[key] = FIELD_TYPES[key](value) if key in FIELD_TYPES else value
            except ValueError:
                raise ValidationError(f"--{key.replace('_', '-')}: bad value {value!r}") from None
    raw["command"] = args.command
    doc = {k: v for k, v in raw.items() if v is not None}
    try:
        jsonschema.validate(doc, load_schema())
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "config"
        raise ValidationError(f"{path}: {exc.message}") from None
    if raw["material"] not in MATERIALS:
        raise ValidationError(f"unknown material {raw['material']!r}")
    material = MATERIALS[raw["material"]]
    units = raw["units"]
    cfg = dict(raw)
    cfg["b_field"] = _parse_quantity(raw["b_field"], "tesla", units, material)
    cfg["omega"] = _parse_quantity(raw["omega"], "meV", units, material)
    k_energy = _parse_quantity(raw["coupling"], "meV", units, material)
    # K is the trap energy at the reference radius; a* unless stated
    ref = 1.0 if raw["k_ref_nm"] is None else raw["k_ref_nm"] / material.a_star
    cfg["coupling"] = k_energy / (ref * ref)
    cfg["k_ref_nm"] = material.a_star if raw["k_ref_nm"] is None else float(raw["k_ref_nm"])
    if raw["schedule"] is not None:
        vals = _float_list(raw["schedule"])
        if units == "physical":
            vals = [float(to_natural(b, "tesla", material)) for b in vals]
        cfg["schedule"] = vals
    cfg["b_list"] = [float(to_natural(b, "tesla", material)) for b in _float_list(raw["b_list"])]
    cfg["input_units"] = units
    cfg["units"] = "natural"
    if cfg["format"] is None:
        cfg["format"] = "csv" if args.command in ("solve", "figure1", "limit-sweep") else "json"
    return cfg


def header_lines(cfg: dict) -> List[str]:
    material = MATERIALS[cfg["material"]]
    return [
        f"# qdots {cfg['command']}",
        "# config (natural units): " + json.dumps(cfg, sort_keys=True),
        f"# natural units: a*={material.a_star!r} nm, E*={material.E_star!r} meV, "
        f"B*={material.B_star!r} T; K is the trap energy at r={cfg['k_ref_nm']!r} nm",
    ]


def _params(cfg: dict) -> DotParams:
    return DotParams(cfg["n_electrons"], cfg["b_field"], cfg["coupling"])


def _tolerances(cfg: dict) -> Tolerances:
    return Tolerances(kkt=cfg["kkt_tol"], max_iter=cfg["max_iter"])


def _grid(cfg: dict, params: DotParams):
    return default_grid(params, m=cfg["grid_m"], factor=cfg["grid_factor"])


# ---------------------------------------------------------------------------
# Output


def _num(x: float) -> str:
    return repr(float(x))


def render_csv(cfg: dict, columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    for line in header_lines(cfg):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def render_json(cfg: dict, payload) -> str:
    return "\n".join(header_lines(cfg)) + "\n" + json.dumps(payload, indent=2, sort_keys=True,
                                                            default=_jsonable) + "\n"


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _emit(cfg: dict, text: str, stream) -> None:
    if cfg["output"]:
        Path(cfg["output"]).write_text(text)
    else:
        stream.write(text)


def _table(cfg: dict, columns, rows, stream) -> None:
    if cfg["format"] == "json":
        payload = [dict(zip(columns, row)) for row in rows]
        _emit(cfg, render_json(cfg, payload), stream)
    else:
        _emit(cfg, render_csv(cfg, columns, rows), stream)


# ---------------------------------------------------------------------------
# Commands


def cmd_spectrum(cfg, stream) -> int:
    ks, ls = _int_range(cfg["k_range"]), _int_range(cfg["l_range"])
    b, w = cfg["b_field"], cfg["omega"]
    exact_spectra.omega_big(b, w)
    lines = [exact_spectra.SpectrumLine(k, l, exact_spectra.fock_darwin_energy(k, l, b, w))
             for k in ks for l in ls]
    lines.sort(key=lambda s: (s.energy, s.k, s.l))
    _emit(cfg, render_json(cfg, [s.as_dict() for s in lines]), stream)
    return EXIT_OK


def cmd_taut(cfg, stream) -> int:
    sols = exact_spectra.taut_find_solutions(cfg["n"], cfg["m"], cfg["omega"])
    payload = [{"n": s.n, "m": s.m, "omega_big": s.omega_big, "omega": s.omega,
                "b_field": s.b_field, "e_prime": s.e_prime, "energy": s.energy,
                "nodes": s.nodes, "coefficients": list(s.coefficients)} for s in sols]
    _emit(cfg, render_json(cfg, payload), stream)
    return EXIT_OK


def cmd_exact_n(cfg, stream) -> int:
    n, b, w = cfg["n_electrons"], cfg["b_field"], cfg["omega"]
    payload = {"cm_spectrum": [s.as_dict() for s in exact_spectra.cm_spectrum(n, b, w,
                                                                                cfg["count"])]}
    if b > 0:
        state = exact_spectra.mdd_state(n, b)
        payload["mdd"] = {"total_angular_momentum": state.total_angular_momentum,
                          "mass": state.density.mass}
    if cfg["beta"] > 0 and n >= 2:
        payload["harmonic_formula"] = exact_spectra.harmonic_interaction_energy(
            n, b, w, cfg["beta"], cfg["w0"])
        if n == 2:
            payload["harmonic_pair"] = exact_spectra.harmonic_pair_energies(
                b, w, cfg["beta"], cfg["w0"])
    _emit(cfg, render_json(cfg, payload), stream)
    return EXIT_OK


def _profile_rows(result, material, with_domains=False):
    grid = result.grid
    kernel = build_kernel(grid)
    veff = dft_solver.effective_potential(result, kernel)
    rows = []
    labels = None
    if with_domains:
        vac = dft_solver._vacuum_threshold(result.params.n_electrons, grid)
        if result.params.b_field > 0:
            labels = [lab if lab != "incompressible" else f"incompressible({k})"
                      for lab, k in dft_solver.node_labels(grid.nodes, result.density.values,
                                                           result.params.b_field, 0.02, vac)]
        else:
            labels = ["compressible" if v > vac else "vacuum" for v in result.density.values]
    for i, (r, rho, v) in enumerate(zip(grid.nodes, result.density.values, veff)):
        row = [float(from_natural(r, "nm", material)), float(from_natural(rho, "per-m2", material)),
               float(from_natural(v, "meV", material))]
        if labels is not None:
            row[1] = row[1] / 1e14
            row.append(labels[i])
        rows.append(row)
    return rows


def _solve(cfg, params, kind=None):
    res = dft_solver.minimize(kind or cfg["kind"], params, grid=_grid(cfg, params),
                              tolerances=_tolerances(cfg))
    if not res.converged:
        raise SolverError(f"{res.kind} solve did not reach the KKT tolerance "
                          f"(relative violation {res.kkt_max_violation:.3e})")
    return res


def cmd_solve(cfg, stream) -> int:
    material = MATERIALS[cfg["material"]]
    res = _solve(cfg, _params(cfg))
    _table(cfg, ["r_nm", "rho_per_m2", "veff_meV"], _profile_rows(res, material), stream)
    return EXIT_OK


def _domain_dicts(res, material):
    if res.params.b_field > 0:
        doms = dft_solver.classify_domains(res)
    else:
        doms = []
    return [{"label": str(d), "r_start_nm": float(from_natural(d.r_start, "nm", material)),
             "r_end_nm": float(from_natural(d.r_end, "nm", material)),
             "r_start": d.r_start, "r_end": d.r_end} for d in doms]


def cmd_domains(cfg, stream) -> int:
    material = MATERIALS[cfg["material"]]
    params = _params(cfg)
    if not params.b_field > 0:
        raise ModelError("domain classification needs B > 0")
    res = _solve(cfg, params, "MTF")
    payload = {"chemical_potential": res.chemical_potential, "energy": res.energy,
               "domains": _domain_dicts(res, material)}
    _emit(cfg, render_json(cfg, payload), stream)
    return EXIT_OK


def cmd_point_charges(cfg, stream) -> int:
    material = MATERIALS[cfg["material"]]
    params = _params(cfg)
    search = point_charges.minimize_points(params.n_electrons, params, cfg["multistart"],
                                           seed=cfg["seed"])
    best = search.best
    payload = {"energy": best.energy, "gradient_norm": best.gradient_norm,
               "start_index": best.start_index, "positions": best.positions,
               "positions_nm": from_natural(best.positions, "nm", material),
               "energy_meV": float(from_natural(best.energy, "meV", material)),
               "minima_energies": [c.energy for c in search.minima]}
    _emit(cfg, render_json(cfg, payload), stream)
    return EXIT_OK


def cmd_scaling(cfg, stream) -> int:
    rep = dft_solver.scaling_check(cfg["n_electrons"], cfg["b_field"], cfg["coupling"],
                                   cfg["kind"], tolerances=_tolerances(cfg))
    _emit(cfg, render_json(cfg, asdict(rep)), stream)
    return EXIT_OK


def cmd_limit_sweep(cfg, stream) -> int:
    params = _params(cfg)
    schedule = cfg["schedule"]
    if schedule is None:
        thr = dft_solver.lll_threshold(params.n_electrons, params.coupling).criterion
        factors = [0.25, 0.5, 1.0, 1.5, 2.0] if cfg["direction"] == "B->inf" \
            else [1.0, 0.5, 0.25, 0.1, 0.0]
        schedule = [f * thr for f in factors]
    rows = dft_solver.limit_sweep(cfg["direction"], params, schedule, grid=_grid(cfg, params),
                                  tolerances=_tolerances(cfg))
    cols = ["b_field", "energy", "limit_energy", "energy_gap", "l1_distance"]
    _table(cfg, cols, [[getattr(r, c) for c in cols] for r in rows], stream)
    return EXIT_OK


def _figure1_one(cfg, params, b):
    res = dft_solver.minimize("MTF", params.replace(b_field=b), grid=_grid(cfg, params),
                              tolerances=_tolerances(cfg))
    if not res.converged:
        raise SolverError(f"MTF solve at B={b!r} did not converge")
    return res


def cmd_figure1(cfg, stream) -> int:
    """Profiles for each field in ``b_list`` plus a summary JSON."""
    material = MATERIALS[cfg["material"]]
    params = _params(cfg)
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    fields = cfg["b_list"]
    with ThreadPoolExecutor(max_workers=cfg["workers"]) as pool:
        results = list(pool.map(lambda b: _figure1_one(cfg, params, b), fields))
    thr = dft_solver.lll_threshold(params.n_electrons, params.coupling)
    summary = {"threshold_tesla": float(from_natural(thr.criterion, "tesla", material)),
               "printed_threshold_tesla": float(from_natural(thr.printed, "tesla", material)),
               "profiles": []}
    cols = ["r_nm", "rho_1e14_per_m2", "veff_meV", "domain"]
    for b, res in zip(fields, results):
        b_t = float(from_natural(b, "tesla", material))
        name = f"figure1_B{b_t:g}T.csv"
        (out / name).write_text(render_csv(cfg, cols, _profile_rows(res, material, True)))
        doms = _domain_dicts(res, material)
        summary["profiles"].append({
            "b_tesla": b_t, "file": name,
            "chemical_potential_meV": float(from_natural(res.chemical_potential, "meV", material)),
            "energy_meV": float(from_natural(res.energy, "meV", material)),
            "domains": [d["label"] for d in doms],
            "plateaus_nm": [[d["r_start_nm"], d["r_end_nm"]] for d in doms
                            if d["label"].startswith("incompressible")],
        })
    (out / "figure1_summary.json").write_text(render_json(cfg, summary))
    stream.write(f"wrote {len(fields)} profiles and figure1_summary.json to {out}\n")
    return EXIT_OK


def _occupied(cfg) -> tuple:
    if cfg["occupied"]:
        return tuple(int(t) for t in str(cfg["occupied"]).split(","))
    return tuple(range(cfg["n_electrons"]))


def cmd_verify(cfg, stream) -> int:
    which = cfg["which"]
    b = cfg["b_field"] if cfg["b_field"] > 0 else 1.0
    reports = []
    if which in ("exchange", "all"):
        reports.append(verify.exchange_inequality_check(verify.SlaterLLLState(_occupied(cfg), b)))
    if which in ("kinetic", "all"):
        reports.append(verify.kinetic_bound_check(verify.SlaterLLLState(_occupied(cfg), b),
                                                  cfg["lam"]))
    if which in ("lieb-thirring", "all"):
        reports.append(verify.lieb_thirring_check(verify.gaussian_well(cfg["u0"]), b, cfg["lam"],
                                                  n=cfg["lattice_n"]))
    payload = [asdict(r) for r in reports]
    code = EXIT_OK
    if which in ("blocks", "all"):
        n = min(cfg["n_electrons"], 3)
        l_max = cfg["l_max"] or n * (n - 1) // 2 + 4
        blk = verify.lll_block_structure(n, l_max, b)
        d = asdict(blk)
        d["sector_spectra"] = {str(k): v for k, v in d["sector_spectra"].items()}
        d["sectors"] = {str(k): v for k, v in d["sectors"].items()}
        payload.append(d)
        if not blk.passed:
            code = EXIT_FAILED
    if any(r.inconclusive for r in reports):
        code = EXIT_INCONCLUSIVE
    elif any(r.passed is False for r in reports):
        code = EXIT_FAILED
    _emit(cfg, render_json(cfg, payload), stream)
    return code


HANDLERS = {"spectrum": cmd_spectrum, "taut": cmd_taut, "exact-n": cmd_exact_n,
            "solve": cmd_solve, "point-charges": cmd_point_charges, "domains": cmd_domains,
            "figure1": cmd_figure1, "scaling-check": cmd_scaling,
            "limit-sweep": cmd_limit_sweep, "verify": cmd_verify}


def run(cfg: dict, stream=None) -> int:
    return HANDLERS[cfg["command"]](cfg, stream or sys.stdout)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if any(a in ("-h", "--help") for a in argv):
        build_parser().print_help()
        return EXIT_OK
    try:
        cfg = resolve_config(argv)
        return run(cfg)
    except (ValidationError, ModelError, SpectrumError) as exc:
        print(f"error: validation: {_one_line(exc)}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"error: solver: {_one_line(exc)}", file=sys.stderr)
        return EXIT_SOLVER


def _one_line(exc: Exception) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
