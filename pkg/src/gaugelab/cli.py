"""Command-line front end.

Each subcommand reads an optional config file (sectioned ``key = value``,
or a JSON sidecar written by an earlier run), applies flag overrides,
writes ``<name>.csv`` and a ``<name>.json`` sidecar, and exits with

* 0 on success,
* 2 on a schema violation,
* 3 when a basis would exceed the capacity cap,
* 4 on numerical non-convergence or a violated runtime invariant.

Frequencies accept the suffixes ``hz``, ``khz`` and ``mhz`` (value over
2 pi; converted to rad/s).  Times accept a trailing ``pi``, e.g. ``40pi``.
"""
from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import os
import re
import subprocess
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import driven, hilbert, iontrap, models, scaling, solvers
from .errors import CapacityError, ConvergenceError, GaugeLabError, SchemaError

OUTPUT_ENV = "GAUGELAB_OUTPUT_DIR"
FLOAT_FMT = "%.12e"
BOUNDARY_LIMIT = 1e-4
NORM_LIMIT = 1e-8

_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6}
_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


# --------------------------------------------------------------------------
# value parsing
# --------------------------------------------------------------------------

def parse_frequency(text) -> float:
    """``"120hz"`` -> 2 pi * 120; a bare number is returned unchanged."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower().replace(" ", "")
    m = re.fullmatch(rf"({_NUM})(hz|khz|mhz)?", s)
    if not m:
        raise SchemaError(f"cannot parse frequency {text!r}")
    val = float(m.group(1))
    return 2 * math.pi * val * _UNITS[m.group(2)] if m.group(2) else val


def parse_time(text) -> float:
    """Number with an optional ``pi`` factor: ``"40pi"``, ``"2.5"``, ``"pi"``."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower().replace(" ", "").replace("*", "")
    m = re.fullmatch(rf"({_NUM})?(pi)?", s)
    if not m or not (m.group(1) or m.group(2)):
        raise SchemaError(f"cannot parse time {text!r}")
    val = float(m.group(1)) if m.group(1) else 1.0
    return val * math.pi if m.group(2) else val


def parse_int_list(text):
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise SchemaError(f"expected comma-separated integers, got {text!r}") from None


def parse_bool(text) -> bool:
    s = str(text).strip().lower()
    if s in ("on", "true", "yes", "1"):
        return True
    if s in ("off", "false", "no", "0"):
        return False
    raise SchemaError(f"expected on/off, got {text!r}")


def _int(text):
    try:
        return int(str(text))
    except ValueError:
        raise SchemaError(f"expected an integer, got {text!r}") from None


def _float(text):
    try:
        return float(str(text))
    except ValueError:
        raise SchemaError(f"expected a number, got {text!r}") from None


# scenario schemas: key -> (section, parser, default)
SCHEMAS = {
    "string-break": {
        "L": ("lattice", _int, "8"),
        "N": ("lattice", _int, "10"),
        "J": ("model", _float, "1"),
        "mu": ("model", _float, "0.2"),
        "V": ("model", _float, "0.2"),
        "tmax": ("time", parse_time, "40pi"),
        "nt": ("time", _int, "400"),
        "tol": ("numerics", _float, "1e-10"),
    },
    "coleman": {
        "ga": ("model", _float, "0.3"),
        "mc": ("model", _float, str(scaling.CRITICAL_MASS_GA03)),
        "L": ("lattice", parse_int_list, "8,10,12"),
        "N": ("lattice", parse_int_list, "10,40,160"),
        "hmin": ("scan", _float, "-0.4"),
        "hmax": ("scan", _float, "0.1"),
        "nh": ("scan", _int, "101"),
        "tol": ("numerics", _float, "1e-10"),
    },
    "fvd": {
        "L": ("lattice", _int, "4"),
        "n_max": ("lattice", _int, "4"),
        "order": ("drive", _int, "2"),
        "compensate": ("drive", parse_bool, "on"),
        "J": ("drive", parse_frequency, "500hz"),
        "mu": ("drive", parse_frequency, "0hz"),
        "omega_z": ("drive", parse_frequency, "8mhz"),
        "eta": ("drive", _float, "0.15"),
        "pattern": ("drive", str, ""),
        "tmax": ("time", parse_time, "4pi"),
        "nt": ("time", _int, "201"),
    },
    "modes": {
        "blocks": ("trap", _int, "2"),
        "jitter": ("trap", parse_frequency, "0hz"),
        "seed": ("trap", _int, "0"),
    },
    "hobm-qs": {
        "L": ("lattice", _int, "8"),
        "N": ("lattice", _int, "10"),
        "J": ("model", parse_frequency, "120hz"),
        "mu": ("model", parse_frequency, "25hz"),
        "V": ("model", parse_frequency, "25hz"),
        "compensate": ("drive", parse_bool, "on"),
        "mismatch": ("drive", _float, "0"),
        "tmax": ("time", parse_time, "40pi"),
        "nt": ("time", _int, "400"),
        "tol": ("numerics", _float, "1e-10"),
    },
}


def read_config(path) -> dict:
    """Raw string values from an INI-style file or a JSON sidecar."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"config file {path} not found")
    text = path.read_text()
    if path.suffix == ".json":
        try:
            meta = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"bad JSON sidecar: {exc}") from None
        if "config" not in meta:
            raise SchemaError("sidecar has no 'config' entry")
        return {k: str(v) for k, v in meta["config"].items()}
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SchemaError(f"bad config file: {exc}") from None
    out = {}
    for sec in cp.sections():
        for k, v in cp.items(sec):
            out[f"{sec}.{k}"] = v
    return out


def resolve_config(scenario: str, raw: dict, overrides: dict) -> tuple[dict, dict]:
    """Merge defaults, file values and flags.

    Returns the string form (for the sidecar) and the parsed values.
    """
    schema = SCHEMAS[scenario]
    lower = {k.lower(): k for k in schema}
    strings = {k: d for k, (_, _, d) in schema.items()}
    for key, val in raw.items():
        name = key.split(".", 1)[-1]
        if name.lower() not in lower:
            raise SchemaError(f"unknown config key {key!r} for {scenario}")
        canon = lower[name.lower()]
        if "." in key and key.split(".", 1)[0] != schema[canon][0]:
            raise SchemaError(f"key {name!r} belongs in section [{schema[canon][0]}]")
        strings[canon] = val
    for k, v in overrides.items():
        if v is not None:
            strings[k] = str(v)
    parsed = {k: schema[k][1](v) for k, v in strings.items()}
    return strings, parsed


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def version_string() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        base = version("artifact")
    except PackageNotFoundError:
        base = "0+unknown"
    try:
        git = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
        if git.returncode == 0 and git.stdout.strip():
            return f"{base}+g{git.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return base


def format_csv(columns: dict) -> str:
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    buf = io.StringIO()
    np.savetxt(buf, data, fmt=FLOAT_FMT, delimiter=",", header=",".join(names), comments="", newline="\n")
    return buf.getvalue()


def write_outputs(outdir: Path, name: str, tables: dict, scenario: str, strings: dict,
                  wall: float, results: dict):
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    for suffix, cols in tables.items():
        fname = f"{name}{suffix}.csv"
        with open(outdir / fname, "w", newline="\n") as fh:
            fh.write(format_csv(cols))
        files.append(fname)
    meta = {"scenario": scenario, "version": version_string(), "config": strings,
            "wall_time_s": wall, "files": files, "results": results}
    with open(outdir / f"{name}.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return files


def _check_norm(series):
    drift = series.metadata.get("norm_drift", 0.0)
    if drift > NORM_LIMIT:
        raise ConvergenceError(f"norm drift {drift:.2e} exceeds {NORM_LIMIT:.0e}")


def _check_boundary(weight, what):
    if weight > BOUNDARY_LIMIT:
        raise ConvergenceError(f"{what}: truncation boundary weight {weight:.2e} exceeds {BOUNDARY_LIMIT:.0e}")


# --------------------------------------------------------------------------
# scenarios
# --------------------------------------------------------------------------

def _sector_run(lat, params, times, tol):
    b = hilbert.enumerate_gauge_sector(lat, charge=0)
    H = models.build_model(b, params)
    psi0 = models.string_state(b)
    edge = {"edge": lambda psi: models.boundary_weight(psi, b)}
    ts = solvers.evolve(H, psi0, times, tol=tol, observables={"E": models.electric_observable(b), **edge})
    _check_norm(ts)
    return ts


def run_string_break(c):
    t = np.linspace(0.0, c["tmax"], c["nt"])
    p = models.ModelParams(J=c["J"], mu=c["mu"], V=c["V"])
    q = _sector_run(hilbert.LatticeSpec.qed(c["L"]), p, t, c["tol"])
    _check_boundary(q.values["edge"].max(), "QED rotor cutoff")
    cols = {"t": t, "E_qed": q.values["E"], "E_qed_avg": solvers.time_average(q, "E")}
    res = {}
    if c["N"] > 0:
        ph = models.ModelParams(J=c["J"], mu=c["mu"], V=c["V"], N=c["N"])
        h = _sector_run(hilbert.LatticeSpec.hobm(c["L"], c["N"]), ph, t, c["tol"])
        _check_boundary(h.values["edge"].max(), "HOBM boson window")
        eps = solvers.trajectory_error(h, q, "E")
        cols.update({"E_hobm": h.values["E"], "E_hobm_avg": solvers.time_average(h, "E"), "eps": eps})
        res = {"eps_max": float(eps.max()), "eps_growth": solvers.growth_over_last_half(t, eps)}
    return {"": cols}, res


def run_coleman(c):
    grid = np.linspace(c["hmin"], c["hmax"], c["nh"])
    scans = {(L, None): scaling.order_parameter_scan(grid, L, None, c["ga"], c["mc"], c["tol"]) for L in c["L"]}
    for L in c["L"]:
        for N in c["N"]:
            scans[(L, N)] = scaling.order_parameter_scan(grid, L, N, c["ga"], c["mc"], c["tol"])
    rows = [r for s in scans.values() for r in s.rows()]
    scan_cols = {k: [r[i] for r in rows] for i, k in enumerate(("h", "E", "L", "N", "ga"))}
    hpc = {k: scaling.pseudo_critical_point(s) for k, s in scans.items()}
    crit = sorted(hpc.items(), key=lambda kv: (kv[0][0], -1 if kv[0][1] is None else kv[0][1]))
    crit_cols = {"L": [k[0] for k, _ in crit], "N": [-1 if k[1] is None else k[1] for k, _ in crit],
                 "h_pc": [v for _, v in crit], "m_pc": [c["mc"] + v for _, v in crit]}
    res = {"h_pc_qed": {str(L): hpc[(L, None)] for L in c["L"]}}
    if c["N"] and len(c["L"]) > 1:
        k0 = int(np.argmin(np.abs(grid)))
        ex = scaling.Exponents()
        order = {(L, N): scans[(L, N)].E[k0] / scans[(L, None)].E[k0] for L in c["L"] for N in c["N"]}
        critr = {(L, N): hpc[(L, N)] / hpc[(L, None)] for L in c["L"] for N in c["N"]}
        res["collapse_order"] = scaling.collapse_quality(
            scaling.ratio_collapse_data(c["L"], c["N"], order, ex, "order"))
        res["collapse_critical"] = scaling.collapse_quality(
            scaling.ratio_collapse_data(c["L"], c["N"], critr, ex, "critical"))
    return {"_scan": scan_cols, "_critical": crit_cols}, res


def run_fvd(c):
    drive = driven.QLMDrive(L=c["L"], J=c["J"], omega_z=c["omega_z"], eta_com=c["eta"], mu=c["mu"],
                            n_max=c["n_max"], order=c["order"], compensate=c["compensate"])
    pattern = c["pattern"] or "ge" * (c["L"] // 2)
    basis = drive.basis()
    H = driven.qlm_drive_hamiltonian(drive, basis)
    t = np.linspace(0.0, c["tmax"] / abs(c["J"]), c["nt"])
    g = hilbert.gauss_values(basis)
    g0 = hilbert.gauss_values(basis)[basis.index(models.qlm_configuration(basis.lattice, pattern))]
    top = (basis.matter == c["n_max"]).any(axis=1).astype(float)
    ts = solvers.spectral_evolve(H, models.qlm_state(basis, pattern), t,
                                 {"E": models.electric_values(basis), "gauss": ((g - g0) ** 2).T, "edge": top})
    ib, Hi = driven.ideal_qlm(drive)
    ti = solvers.spectral_evolve(Hi, models.qlm_state(ib, pattern), t, {"E": models.electric_values(ib)})
    _check_boundary(ts.values["edge"].max(), "phonon truncation")
    dev = ts.values["E"] - ti.values["E"]
    amp = float(np.ptp(ti.values["E"]))
    cols = {"t": t, "E_drive": ts.values["E"], "E_ideal": ti.values["E"],
            "gauss_max": ts.values["gauss"], "phonon_boundary_weight": ts.values["edge"]}
    res = {"rms_over_amplitude": float(np.sqrt(np.mean(dev ** 2)) / amp) if amp > 0 else float("nan"),
           "gauss_max": float(ts.values["gauss"].max()), "dim": len(basis),
           "rabi_hz": [float(r / (2 * math.pi)) for r in drive.rabi]}
    return {"": cols}, res


def run_modes(c):
    arr = iontrap.radial_modes(iontrap.segmented_array(c["blocks"], c["jitter"], seed=c["seed"]))
    cols = {"axis": [], "mode": [], "freq_hz": [], "pair_start": [], "pair_angle": []}
    for k, a in enumerate(("x", "y")):
        starts = {p[0] for p in iontrap.pair_list(arr.traps.n, a)}
        for q, e in enumerate(arr.modes[a].eps):
            cols["axis"].append(k)
            cols["mode"].append(q)
            cols["freq_hz"].append(e / (2 * math.pi))
            cols["pair_start"].append(q if q in starts else -1)
            cols["pair_angle"].append(iontrap.pair_angle(arr.V[a], q) if q in starts else float("nan"))
    res = {"leakout": arr.leakout(), "cross_talk": arr.cross_talk(),
           "leakage_bound": iontrap.leakage_bound(arr.traps, arr.V["x"]),
           "nn_coupling_hz": math.sqrt(iontrap.nearest_neighbor_coupling(arr.traps, arr.positions)) / (2 * math.pi)}
    return {"": cols}, res


def run_hobm_qs(c):
    J = c["J"]
    el = driven.ElementParams.surface_trap(N=c["N"], mismatch=c["mismatch"])
    cat = driven.ac_stark_catalog_hobm(el, compensate=c["compensate"])
    t = np.linspace(0.0, c["tmax"], c["nt"])
    p = models.ModelParams(J=1.0, mu=c["mu"] / J, V=c["V"] / J, N=c["N"])
    lat = hilbert.LatticeSpec.hobm(c["L"], c["N"])
    b = hilbert.enumerate_gauge_sector(lat, charge=0)
    psi0 = models.string_state(b)
    obs = {"E": models.electric_observable(b)}
    ideal = solvers.evolve(models.build_hobm(b, p), psi0, t, observables=obs, tol=c["tol"])
    H = driven.build_hobm_simulator(b, p, cat.F / J, cat.K / J)
    sim = solvers.evolve(H, psi0, t, observables=obs, tol=c["tol"])
    qed = _sector_run(hilbert.LatticeSpec.qed(c["L"]), models.ModelParams(J=1.0, mu=p.mu, V=p.V), t, c["tol"])
    for s in (ideal, sim):
        _check_norm(s)
    e_sim = solvers.trajectory_error(sim, ideal, "E")
    e_ref = solvers.trajectory_error(ideal, qed, "E")
    cols = {"t": t, "E_ideal": ideal.values["E"], "E_sim": sim.values["E"], "E_qed": qed.values["E"],
            "eps_sim_ideal": e_sim, "eps_ideal_qed": e_ref}
    res = {"F_hz": (cat.F / (2 * math.pi)).tolist(), "E_hz": (cat.E / (2 * math.pi)).tolist(),
           "K_hz": (cat.K / (2 * math.pi)).tolist(), "eps_sim_max": float(e_sim.max()),
           "eps_ref_max": float(e_ref.max())}
    return {"": cols}, res


RUNNERS = {"string-break": run_string_break, "coleman": run_coleman, "fvd": run_fvd,
           "modes": run_modes, "hobm-qs": run_hobm_qs}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gaugelab", description="Lattice gauge theory simulations.")
    sub = ap.add_subparsers(dest="scenario", required=True)
    for name, schema in SCHEMAS.items():
        sp_ = sub.add_parser(name)
        sp_.add_argument("--config", help="INI config or JSON sidecar of an earlier run")
        sp_.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./gaugelab-out)")
        sp_.add_argument("--name", default=None, help="output file stem (default: scenario name)")
        sp_.add_argument("--workers", type=int, default=1, help="worker processes (recorded only)")
        for key in schema:
            sp_.add_argument(f"--{key}", dest=f"opt_{key}", default=None)
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    scenario = args.scenario
    raw = read_config(args.config) if args.config else {}
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("opt_")}
    strings, cfg = resolve_config(scenario, raw, overrides)
    outdir = Path(args.out or os.environ.get(OUTPUT_ENV) or "gaugelab-out")
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", driven.ValidityWarning)
        tables, results = RUNNERS[scenario](cfg)
    wall = time.perf_counter() - t0
    write_outputs(outdir, args.name or scenario, tables, scenario, strings, wall, results)
    return 0


def main(argv=None) -> int:
    try:
        code = run(argv)
    except GaugeLabError as exc:
        print(f"gaugelab: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = exc.exit_code
    except MemoryError:
        print("gaugelab: out of memory", file=sys.stderr)
        code = CapacityError.exit_code
    return code


if __name__ == "__main__":
    sys.exit(main())
