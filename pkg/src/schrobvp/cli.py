"""Scenario runner: config parsing, solver orchestration, artifact emission.

Subcommands
  free-bvp           closed-form two-endpoint solve, constant coefficients
  linear             one viscous sub-problem (optionally a viscosity sweep)
  picard             the coupled two-endpoint solver on a scenario file
  verify-estimates   re-run the bound monitors on a stored picard run
  commutator-bench   seeded ensembles for the commutator bound constants
  mizohata           drift-integrability index of a first-order coefficient

Artifacts are JSON for configs and reports, CSV for time series, and the
field dump formats for slices; every file is written atomically (temp file
plus rename), so a failed run never leaves a partial artifact.  Reports are
deterministic given the same scenario and seed: wall-clock numbers go to a
separate timings.json that the determinism guarantee excludes.

Exit codes: 0 on success, 2 when an estimate monitor reports a failed
bound, 1 on any error (bad config, divergence, I/O).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import sympy

from . import __version__
from .coefficients import (
    CoefficientField,
    mizohata_index,
    norm_bundle,
    select_horizon,
)
from .commutators import estimate_constant
from .errors import ConfigError, ValidationError
from .estimates import (
    EstimateReport,
    bootstrap_diagnostics,
    commutator_chain_check,
    energy_monitor,
    weighted_smoothing_monitor,
)
from .fieldio import (
    atomic_write_text,
    dump_field_binary,
    dump_field_csv,
    load_field,
    write_norms_csv,
)
from .free_bvp import FreeBvpData, solve_free, verify_free_estimate
from .picard import BvpProblem, assemble_solution, coupling_stacks, picard_solve
from .presets import build_datum, load_preset, preset_names, resolve_scenario
from .spectral import Grid1D, SpaceTimeField, SpectralField, project
from .stepper import LinearProblem, StepperConfig, epsilon_study, solve_linear
from .weights import WeightProfile, build_weight

_TOP_KEYS = {
    "grid", "weight", "coefficients", "data", "stepper", "estimates",
    "horizon", "override_horizon", "tol", "m_max", "times", "out_dir", "seed",
}
_GRID_KEYS = {"n", "L"}
_WEIGHT_KEYS = {"beta", "mode", "margin"}
_COEFF_KEYS = {"a", "W", "lambda", "beta"}
_DATA_KEYS = {"f", "g"}
_STEPPER_KEYS = {"epsilon", "dt", "n_steps", "scheme", "epsilon_schedule"}
_ESTIMATE_KEYS = {"energy", "smoothing", "bootstrap", "chain", "q", "delta", "chain_constant", "slack"}

_STORED_SLICE_CAP = 128   # carrier slices kept for verify-estimates, at most
_HORIZON_PROBE = (0.25, 10001)   # window and resolution for automatic selection


def _check_keys(d: dict, allowed: set[str], where: str) -> None:
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r} in {where}")


# --- scenario construction --------------------------------------------------

@dataclass
class ScenarioConfig:
    """Validated scenario: constructed objects plus the resolved dict echo."""

    raw: dict
    grid: Grid1D
    weight: WeightProfile
    coeffs: CoefficientField
    lam: float
    beta: float
    f: SpectralField
    g: SpectralField
    stepper: StepperConfig
    estimates: dict
    horizon: float | None
    override_horizon: bool
    tol: float
    m_max: int
    times: list[float] = field(default_factory=list)
    out_dir: str | None = None
    seed: int = 0


def load_scenario_source(source: str) -> dict:
    """A scenario dict from a JSON file path or a bundled preset name."""
    if os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError(f"{source}: scenario file must hold a JSON object")
        return raw
    if source in preset_names():
        return {"preset": source}
    raise ConfigError(
        f"scenario {source!r} is neither a file nor a bundled preset "
        f"({', '.join(preset_names())})"
    )


def build_scenario(raw: dict) -> ScenarioConfig:
    """Validate every key and construct the solver objects.

    All grid, weight, and coefficient constraints are checked here, before
    any compute; an unknown key anywhere is an error naming that key.
    """
    resolved = resolve_scenario(raw)
    _check_keys(resolved, _TOP_KEYS, "scenario")

    grid_spec = resolved.get("grid")
    if not isinstance(grid_spec, dict):
        raise ConfigError("scenario needs a grid section {n, L}")
    _check_keys(grid_spec, _GRID_KEYS, "grid")
    if "n" not in grid_spec or "L" not in grid_spec:
        raise ConfigError("grid section needs both n and L")
    grid = Grid1D(int(grid_spec["n"]), float(grid_spec["L"]))

    weight_spec = resolved.get("weight")
    if not isinstance(weight_spec, dict) or "beta" not in weight_spec:
        raise ConfigError("scenario needs a weight section {beta, mode}")
    _check_keys(weight_spec, _WEIGHT_KEYS, "weight")
    weight = build_weight(
        float(weight_spec["beta"]),
        grid,
        mode=weight_spec.get("mode", "truncated"),
        margin=weight_spec.get("margin"),
    )

    coeff_spec = resolved.get("coefficients")
    if not isinstance(coeff_spec, dict):
        raise ConfigError("scenario needs a coefficients section {a, W, lambda, beta}")
    _check_keys(coeff_spec, _COEFF_KEYS, "coefficients")
    if "a" not in coeff_spec or "W" not in coeff_spec:
        raise ConfigError("coefficients section needs both a and W")
    lam = float(coeff_spec.get("lambda", 0.0))
    beta = float(coeff_spec.get("beta", weight.beta))
    if abs(beta - weight.beta) > 1e-12:
        raise ConfigError(
            f"coefficients beta {beta:g} disagrees with weight beta {weight.beta:g}"
        )

    horizon = resolved.get("horizon")
    if horizon is not None:
        horizon = float(horizon)
        if horizon <= 0:
            raise ConfigError(f"horizon must be positive, got {horizon:g}")
    t_max = max(1.0, 2.0 * horizon if horizon is not None else 0.0)
    coeffs = CoefficientField(
        coeff_spec["a"], coeff_spec["W"], ellipticity=lam, t_max=t_max
    )

    data_spec = resolved.get("data")
    if not isinstance(data_spec, dict):
        raise ConfigError("scenario needs a data section {f, g}")
    _check_keys(data_spec, _DATA_KEYS, "data")
    if "f" not in data_spec or "g" not in data_spec:
        raise ConfigError("data section needs both f and g")
    seed = int(resolved.get("seed", 0))
    f = build_datum(str(data_spec["f"]), grid, "-", seed=seed)
    g = build_datum(str(data_spec["g"]), grid, "+", seed=seed + 1)

    stepper_spec = resolved.get("stepper", {})
    _check_keys(stepper_spec, _STEPPER_KEYS, "stepper")
    stepper = StepperConfig(
        epsilon=float(stepper_spec.get("epsilon", 1e-3)),
        dt=stepper_spec.get("dt"),
        n_steps=stepper_spec.get("n_steps"),
        scheme=stepper_spec.get("scheme", "etd_rk4"),
        epsilon_schedule=tuple(stepper_spec.get("epsilon_schedule", ())),
    )

    est_spec = dict(resolved.get("estimates", {}))
    _check_keys(est_spec, _ESTIMATE_KEYS, "estimates")
    est_spec.setdefault("energy", True)
    est_spec.setdefault("smoothing", True)
    est_spec.setdefault("bootstrap", lam > 0)
    est_spec.setdefault("chain", False)

    times = [float(t) for t in resolved.get("times", [])]
    return ScenarioConfig(
        raw=resolved,
        grid=grid,
        weight=weight,
        coeffs=coeffs,
        lam=lam,
        beta=beta,
        f=f,
        g=g,
        stepper=stepper,
        estimates=est_spec,
        horizon=horizon,
        override_horizon=bool(resolved.get("override_horizon", False)),
        tol=float(resolved.get("tol", 1e-8)),
        m_max=int(resolved.get("m_max", 50)),
        times=times,
        out_dir=resolved.get("out_dir"),
        seed=seed,
    )


def _resolve_horizon(sc: ScenarioConfig, flag_T: float | None) -> tuple[float, bool, dict]:
    """Final horizon, override flag, and the selection trace for the report."""
    if flag_T is not None:
        return float(flag_T), True, {"source": "override-flag", "horizon": float(flag_T)}
    if sc.horizon is not None:
        return sc.horizon, sc.override_horizon, {"source": "explicit", "horizon": sc.horizon}
    window, nodes = _HORIZON_PROBE
    probe = np.linspace(0.0, window, nodes)
    bundle = norm_bundle(sc.coeffs, sc.weight.sup_logderiv, probe, sc.grid)
    sel = select_horizon(bundle, delta_data=sc.f.norm_l2() + sc.g.norm_l2())
    trace = {"source": "selected", **asdict(sel)}
    return sel.horizon, False, trace


# --- artifact helpers -------------------------------------------------------

def _write_json(path: Path, obj: dict | list) -> None:
    atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _out_dir(flag: str | None, scenario_value: str | None = None) -> Path:
    chosen = flag or scenario_value or os.environ.get("SCHRO_OUT_DIR")
    if not chosen:
        raise ConfigError("no output directory: give --out-dir or set SCHRO_OUT_DIR")
    path = Path(chosen)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dump_field(f: SpectralField, path_base: Path, fmt: str) -> str:
    if fmt == "csv":
        dump_field_csv(f, path_base.with_suffix(".csv"))
        return path_base.with_suffix(".csv").name
    dump_field_binary(f, path_base.with_suffix(".spf"))
    return path_base.with_suffix(".spf").name


def _versions() -> dict:
    return {
        "schrobvp": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def _storage_stride(n_slices: int) -> int:
    """Largest stride dividing the step count that keeps at most the cap."""
    steps = n_slices - 1
    stride = max(1, int(math.ceil(steps / _STORED_SLICE_CAP)))
    while stride > 1 and steps % stride:
        stride += 1
        if stride > steps:
            return steps
    return stride


def _store_carriers(run_dir: Path, vp: SpaceTimeField, vm: SpaceTimeField) -> dict:
    """Decimated carrier slices for later re-verification; returns the index."""
    stride = _storage_stride(len(vp.times))
    idx = list(range(0, len(vp.times), stride))
    fields_dir = run_dir / "fields"
    fields_dir.mkdir(parents=True, exist_ok=True)
    rows = ["index,t"]
    for j, i in enumerate(idx):
        dump_field_binary(vp.slice(i), fields_dir / f"vplus_{j:04d}.spf")
        dump_field_binary(vm.slice(i), fields_dir / f"vminus_{j:04d}.spf")
        rows.append(f"{j},{vp.times[i]:.17g}")
    atomic_write_text(fields_dir / "times.csv", "\n".join(rows) + "\n")
    return {"stride": stride, "count": len(idx)}


def _load_carriers(run_dir: Path, grid: Grid1D) -> tuple[SpaceTimeField, SpaceTimeField]:
    fields_dir = run_dir / "fields"
    table = fields_dir / "times.csv"
    if not table.exists():
        raise ConfigError(f"{run_dir} has no stored carrier slices (fields/times.csv missing)")
    raw = np.genfromtxt(table, delimiter=",", skip_header=1, dtype=np.float64, ndmin=2)
    times = raw[:, 1]
    stacks = {"vplus": [], "vminus": []}
    for name, stack in stacks.items():
        for j in range(len(times)):
            f = load_field(fields_dir / f"{name}_{j:04d}.spf")
            if f.grid != grid:
                raise ValidationError(f"stored slice {name}_{j:04d} grid disagrees with the scenario")
            stack.append(f.values)
    vp = SpaceTimeField(grid, times, np.array(stacks["vplus"]))
    vm = SpaceTimeField(grid, times, np.array(stacks["vminus"]))
    return vp, vm


def _dump_requested_times(
    run_dir: Path, sc: ScenarioConfig, asm, fmt: str
) -> list[dict]:
    """Assembled-field dumps nearest to each requested time."""
    if not sc.times:
        return []
    dumps_dir = run_dir / "dumps"
    dumps_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    times = asm.v.times
    for j, t in enumerate(sc.times):
        if t < -1e-12 or t > times[-1] + 1e-12:
            raise ConfigError(f"requested dump time {t:g} outside [0, {times[-1]:g}]")
        i = int(np.argmin(np.abs(times - t)))
        names = {
            "v": _dump_field(asm.v.slice(i), dumps_dir / f"v_{j:04d}", fmt),
            "u": _dump_field(asm.u.slice(i), dumps_dir / f"u_{j:04d}", fmt),
            "w": _dump_field(asm.w.slice(i), dumps_dir / f"w_{j:04d}", fmt),
        }
        entries.append({"requested_t": t, "stored_t": float(times[i]), "files": names})
    return entries


# --- estimate orchestration -------------------------------------------------

def run_monitors(
    sc: ScenarioConfig,
    vp: SpaceTimeField,
    vm: SpaceTimeField,
    w_stack: SpaceTimeField,
) -> list[EstimateReport]:
    """The toggled estimate monitors on one converged pair of carriers."""
    cfg = sc.estimates
    slack = float(cfg.get("slack", 0.05))
    reports: list[EstimateReport] = []
    if cfg.get("energy"):
        src_p, src_m = coupling_stacks(vp, vm, sc.coeffs, sc.weight)
        reports.append(
            energy_monitor(vm, src_m, "-", sc.coeffs, sc.weight, slack=slack)
        )
        reports.append(
            energy_monitor(vp, src_p, "+", sc.coeffs, sc.weight, slack=slack)
        )
    if cfg.get("smoothing"):
        w_plus_rows = np.empty_like(w_stack.values)
        w_minus_rows = np.empty_like(w_stack.values)
        for i in range(len(w_stack.times)):
            s = w_stack.slice(i)
            w_plus_rows[i] = project(s, "+").values
            w_minus_rows[i] = project(s, "-").values
        reports.append(
            weighted_smoothing_monitor(
                SpaceTimeField(sc.grid, w_stack.times, w_plus_rows),
                SpaceTimeField(sc.grid, w_stack.times, w_minus_rows),
                sc.coeffs,
                sc.beta,
                slack=slack,
            )
        )
    if cfg.get("bootstrap"):
        reports.append(
            bootstrap_diagnostics(
                w_stack,
                sc.coeffs,
                sc.beta,
                sc.lam,
                q=float(cfg.get("q", 2.0)),
                delta=float(cfg.get("delta", 0.6)),
                chain_constant=float(cfg.get("chain_constant", 1.0)),
                slack=slack,
            )
        )
    if cfg.get("chain"):
        i_mid = len(w_stack.times) // 2
        t_mid = float(w_stack.times[i_mid])
        b = sc.coeffs.a_values(sc.grid.x, t_mid) * sc.weight.logderiv
        reports.append(
            commutator_chain_check(
                b,
                w_stack.slice(i_mid),
                q=float(cfg.get("q", 2.0)),
                delta=float(cfg.get("delta", 0.6)),
                slack=slack,
            )
        )
    return reports


def _estimates_exit(reports: list[EstimateReport]) -> int:
    return 2 if any(r.verdict == "fail" for r in reports) else 0


def _write_estimate_artifacts(out: Path, reports: list[EstimateReport]) -> None:
    _write_json(out / "estimates.json", [r.to_dict() for r in reports])
    rows = ["name,lhs,rhs,ratio,verdict"]
    for r in reports:
        rows.append(f"{r.name},{r.lhs:.17g},{r.rhs:.17g},{r.ratio:.17g},{r.verdict}")
    atomic_write_text(out / "estimates.csv", "\n".join(rows) + "\n")


# --- subcommands ------------------------------------------------------------

def _parse_times_arg(text: str | None, horizon: float) -> np.ndarray:
    if text is None:
        return np.linspace(0.0, horizon, 65)
    tokens = [t for t in text.split(",") if t.strip()]
    if len(tokens) == 1 and "." not in tokens[0]:
        count = int(tokens[0])
        if count < 2:
            raise ConfigError("need at least 2 output times")
        return np.linspace(0.0, horizon, count)
    return np.array([float(t) for t in tokens])


def cmd_free_bvp(args: argparse.Namespace) -> int:
    out = _out_dir(args.out_dir)
    grid = Grid1D(args.grid_n, args.grid_L)
    f = build_datum(args.datum_f, grid, "-")
    g = build_datum(args.datum_g, grid, "+")
    times = _parse_times_arg(args.times, args.T)
    data = FreeBvpData(f=f, g=g, beta=args.beta, horizon=args.T, times=times)
    t0 = time.perf_counter()
    sol = solve_free(data)
    est = verify_free_estimate(sol, data)
    elapsed = time.perf_counter() - t0

    write_norms_csv(out / "norms.csv", sol.times, {"norm_v": sol.norm_series()})
    fields_dir = out / "dumps"
    fields_dir.mkdir(parents=True, exist_ok=True)
    for j in range(len(sol.times)):
        _dump_field(sol.slice(j), fields_dir / f"v_{j:04d}", args.field_format)
    report = {
        "config": {
            "beta": args.beta, "T": args.T,
            "grid": {"n": grid.n, "L": grid.half_length},
            "datum_f": args.datum_f, "datum_g": args.datum_g,
        },
        "estimate": asdict(est),
        "times": [float(t) for t in sol.times],
        "timing": {"file": "timings.json"},
        "versions": _versions(),
    }
    _write_json(out / "report.json", report)
    _write_json(out / "timings.json", {"total_s": elapsed})
    ok = est.ratio <= 1.0 + 1e-10
    print(f"free-bvp: sup ratio {est.ratio:.12f} ({'pass' if ok else 'FAIL'}); artifacts in {out}")
    return 0 if ok else 2


def cmd_linear(args: argparse.Namespace) -> int:
    sc = build_scenario(load_scenario_source(args.scenario))
    out = _out_dir(args.out_dir, sc.out_dir)
    horizon, _, trace = _resolve_horizon(sc, args.T)
    datum = sc.f if args.direction == "forward" else sc.g
    problem = LinearProblem(
        direction=args.direction,
        coeffs=sc.coeffs,
        weight=sc.weight,
        source=None,
        datum=datum,
        horizon=horizon,
    )
    t0 = time.perf_counter()
    sol = solve_linear(problem, sc.stepper)
    reports = []
    if sc.estimates.get("energy"):
        sign = "-" if args.direction == "forward" else "+"
        reports.append(energy_monitor(sol, None, sign, sc.coeffs, sc.weight))
    study = None
    if sc.stepper.epsilon_schedule:
        study = epsilon_study(problem, sc.stepper)
    elapsed = time.perf_counter() - t0

    write_norms_csv(out / "norms.csv", sol.times, {"norm_v": sol.norm_series()})
    _write_estimate_artifacts(out, reports)
    report = {
        "scenario": sc.raw,
        "direction": args.direction,
        "horizon": trace,
        "sup_norm": float(sol.sup_norm()),
        "datum_norm": datum.norm_l2(),
        "estimates": [r.to_dict() for r in reports],
        "epsilon_study": None if study is None else asdict(study),
        "timing": {"file": "timings.json"},
        "versions": _versions(),
    }
    _write_json(out / "report.json", report)
    _write_json(out / "timings.json", {"total_s": elapsed})
    code = _estimates_exit(reports)
    print(f"linear: sup norm {sol.sup_norm():.6g}, exit {code}; artifacts in {out}")
    return code


def run_picard_scenario(raw: dict, out_dir: str | None, flag_T: float | None = None,
                        field_format: str = "binary") -> int:
    """One full scenario run: solve, monitor, and write the run directory."""
    sc = build_scenario(raw)
    out = _out_dir(out_dir, sc.out_dir)
    horizon, override, trace = _resolve_horizon(sc, flag_T)
    problem = BvpProblem(
        f=sc.f, g=sc.g, coeffs=sc.coeffs, weight=sc.weight,
        horizon=horizon, stepper_cfg=sc.stepper, beta=sc.beta,
        override_horizon=override,
    )
    t0 = time.perf_counter()
    vp, vm, report = picard_solve(problem, tol=sc.tol, m_max=sc.m_max)
    solve_s = time.perf_counter() - t0
    if not report.converged:
        raise RuntimeError(
            f"no convergence in {sc.m_max} sweeps (last update {report.diff_norms[-1]:.3g})"
        )
    asm = assemble_solution(vp, vm, sc.weight, f=sc.f, g=sc.g)
    t1 = time.perf_counter()
    monitors = run_monitors(sc, vp, vm, asm.w)
    estimate_s = time.perf_counter() - t1

    write_norms_csv(
        out / "norms.csv",
        vp.times,
        {
            "norm_vplus": vp.norm_series(),
            "norm_vminus": vm.norm_series(),
            "norm_w": asm.w_norms,
        },
    )
    storage = _store_carriers(out, vp, vm)
    dumps = _dump_requested_times(out, sc, asm, field_format)
    _write_estimate_artifacts(out, monitors)
    _write_json(out / "scenario.json", sc.raw)
    run_report = {
        "scenario": sc.raw,
        "horizon": trace,
        "picard": report.to_dict(),
        "estimates": [r.to_dict() for r in monitors],
        "storage": storage,
        "dumps": dumps,
        "timing": {"file": "timings.json"},
        "versions": _versions(),
    }
    _write_json(out / "report.json", run_report)
    _write_json(out / "timings.json", {"solve_s": solve_s, "estimates_s": estimate_s})
    code = _estimates_exit(monitors)
    print(
        f"picard: converged in {report.iterations} sweeps at T={horizon:.6g}, "
        f"residual {report.residual_sup:.3g}, exit {code}; artifacts in {out}"
    )
    return code


def _run_batch_entry(payload: tuple[int, dict, str]) -> dict:
    index, raw, out_dir = payload
    try:
        code = run_picard_scenario(raw, out_dir)
        return {"index": index, "out_dir": out_dir, "exit": code, "error": None}
    except Exception as exc:  # worker boundary: report, let the parent aggregate
        return {"index": index, "out_dir": out_dir, "exit": 1, "error": str(exc)}


def cmd_picard(args: argparse.Namespace) -> int:
    if args.batch is not None:
        return _cmd_picard_batch(args)
    raw = load_scenario_source(args.scenario)
    return run_picard_scenario(raw, args.out_dir, args.T, args.field_format)


def _cmd_picard_batch(args: argparse.Namespace) -> int:
    with open(args.batch, encoding="utf-8") as fh:
        entries = json.load(fh)
    if not isinstance(entries, list) or not entries:
        raise ConfigError(f"{args.batch}: batch file must hold a non-empty JSON array")
    base = _out_dir(args.out_dir)
    payloads = []
    for i, raw in enumerate(entries):
        if not isinstance(raw, dict):
            raise ConfigError(f"{args.batch}: entry {i} is not a JSON object")
        sub = raw.get("out_dir") or str(base / f"run_{i:03d}")
        payloads.append((i, raw, sub))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_batch_entry, payloads))
    else:
        results = [_run_batch_entry(p) for p in payloads]
    results.sort(key=lambda r: r["index"])
    _write_json(base / "batch-summary.json", results)
    for r in results:
        note = r["error"] or f"exit {r['exit']}"
        print(f"batch entry {r['index']}: {note} ({r['out_dir']})")
    codes = [r["exit"] for r in results]
    return 1 if 1 in codes else (2 if 2 in codes else 0)


def cmd_verify_estimates(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    scenario_file = run_dir / "scenario.json"
    if not scenario_file.exists():
        raise ConfigError(f"{run_dir} is not a stored run (scenario.json missing)")
    with open(scenario_file, encoding="utf-8") as fh:
        sc = build_scenario(json.load(fh))
    out = _out_dir(args.out_dir or str(run_dir))
    vp, vm = _load_carriers(run_dir, sc.grid)
    asm = assemble_solution(vp, vm, sc.weight)
    reports = run_monitors(sc, vp, vm, asm.w)
    _write_estimate_artifacts(out, reports)
    code = _estimates_exit(reports)
    for r in reports:
        print(f"{r.name}: ratio {r.ratio:.6g} [{r.verdict}]")
    return code


def _parse_lm(text: str) -> list[tuple[int, int]]:
    pairs = []
    for token in text.split(";"):
        token = token.strip()
        if not token:
            continue
        bits = token.split(",")
        if len(bits) != 2:
            raise ConfigError(f"--lm expects 'l,m' pairs separated by ';', got {token!r}")
        pairs.append((int(bits[0]), int(bits[1])))
    if not pairs:
        raise ConfigError("--lm gave no (l, m) pairs")
    return pairs


def _parse_p_list(text: str) -> list[float]:
    vals = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if "/" in token:
            num, den = token.split("/")
            vals.append(float(num) / float(den))
        else:
            vals.append(float(token))
    if not vals:
        raise ConfigError("--p gave no exponents")
    return vals


def cmd_commutator_bench(args: argparse.Namespace) -> int:
    out = _out_dir(args.out_dir)
    grid = Grid1D(args.grid_n, args.grid_L)
    lm_pairs = _parse_lm(args.lm)
    p_list = _parse_p_list(args.p)
    rows = ["operator,l,m,p,trial,ratio"]
    summary = []
    t0 = time.perf_counter()
    for p in p_list:
        table = estimate_constant(
            args.operator,
            lm_pairs,
            grid,
            p=p,
            n_trials=args.trials,
            bandwidth=args.bandwidth,
            seed=args.seed,
            check_stability=not args.no_stability,
        )
        for (l, m), est in sorted(table.items()):
            for trial, ratio in enumerate(est.ratios):
                rows.append(f"{args.operator},{l},{m},{p:.17g},{trial},{ratio:.17g}")
            summary.append(est.to_dict())
    elapsed = time.perf_counter() - t0
    atomic_write_text(out / "bench.csv", "\n".join(rows) + "\n")
    _write_json(
        out / "bench-summary.json",
        {
            "operator": args.operator,
            "trials": args.trials,
            "seed": args.seed,
            "estimates": summary,
            "versions": _versions(),
        },
    )
    _write_json(out / "timings.json", {"total_s": elapsed})
    worst = max(e["max_ratio"] for e in summary)
    print(f"commutator-bench: {len(summary)} ensembles, worst ratio {worst:.6g}; artifacts in {out}")
    return 0


def _mizohata_field(args: argparse.Namespace, grid: Grid1D) -> tuple[np.ndarray, str]:
    if args.preset is not None and args.b is not None:
        raise ConfigError("give either --preset or --b, not both")
    if args.preset is not None:
        if args.preset == "real":
            return 1.0 / np.cosh(grid.x) + 0j, "sech(x)"
        if args.preset == "benchmark-drift":
            bench = build_scenario(load_preset("benchmark"))
            weight = build_weight(bench.beta, grid, mode="truncated")
            a0 = bench.coeffs.a_values(grid.x, 0.0)
            return -2j * a0 * weight.logderiv, "-2i a(x,0) logderiv(x)"
        if args.preset.startswith("imaginary:"):
            c = float(args.preset.split(":", 1)[1])
            return np.full(grid.n, 1j * c), f"{c:g}i"
        raise ConfigError(
            f"unknown mizohata preset {args.preset!r}; use real, imaginary:c, or benchmark-drift"
        )
    if args.b is None:
        raise ConfigError("mizohata needs --b EXPR or --preset NAME")
    x = sympy.Symbol("x", real=True)
    expr = sympy.sympify(args.b, locals={"x": x, "sech": sympy.sech, "I": sympy.I})
    fn = sympy.lambdify(x, expr, modules="numpy")
    vals = np.asarray(fn(grid.x), dtype=np.complex128)
    if vals.shape != (grid.n,):
        vals = np.full(grid.n, complex(expr))
    return vals, args.b


def cmd_mizohata(args: argparse.Namespace) -> int:
    out = _out_dir(args.out_dir)
    grid = Grid1D(args.grid_n, args.grid_L)
    vals, label = _mizohata_field(args, grid)
    R = args.R if args.R is not None else 0.5 * grid.half_length
    rep = mizohata_index(vals, grid, R)
    write_norms_csv(out / "running.csv", rep.radii, {"running_sup": rep.running_sup})
    _write_json(
        out / "report.json",
        {
            "b": label,
            "R": R,
            "grid": {"n": grid.n, "L": grid.half_length},
            "sup_value": rep.sup_value,
            "growth_slope": rep.growth_slope,
            "verdict": rep.verdict,
            "versions": _versions(),
        },
    )
    print(f"mizohata: verdict {rep.verdict}, sup {rep.sup_value:.6g}, slope {rep.growth_slope:.6g}")
    return 0


# --- argument parsing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schro",
        description="Two-endpoint solver and estimate monitors for weighted 1-D Schrodinger evolutions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_free = sub.add_parser("free-bvp", help="closed-form constant-coefficient endpoint solve")
    p_free.add_argument("--beta", type=float, default=1.0)
    p_free.add_argument("--T", type=float, default=0.5)
    p_free.add_argument("--grid-n", type=int, default=2048)
    p_free.add_argument("--grid-L", type=float, default=40.0)
    p_free.add_argument("--datum-f", default="gaussian:0,1.5")
    p_free.add_argument("--datum-g", default="gaussian:1,2")
    p_free.add_argument("--times", default=None, help="comma list of times, or a count")
    p_free.add_argument("--field-format", choices=("binary", "csv"), default="binary")
    p_free.add_argument("--out-dir", default=None)
    p_free.set_defaults(func=cmd_free_bvp)

    p_lin = sub.add_parser("linear", help="one viscous sub-problem from a scenario")
    p_lin.add_argument("--scenario", required=True, help="scenario JSON file or preset name")
    p_lin.add_argument("--direction", choices=("forward", "backward"), default="forward")
    p_lin.add_argument("--T", type=float, default=None, help="horizon override")
    p_lin.add_argument("--out-dir", default=None)
    p_lin.set_defaults(func=cmd_linear)

    p_pic = sub.add_parser("picard", help="coupled two-endpoint solve")
    p_pic.add_argument("--scenario", default=None, help="scenario JSON file or preset name")
    p_pic.add_argument("--T", type=float, default=None,
                       help="horizon override (bypasses the admissibility check, with a warning)")
    p_pic.add_argument("--batch", default=None, help="JSON array of scenarios")
    p_pic.add_argument("--jobs", type=int, default=1)
    p_pic.add_argument("--field-format", choices=("binary", "csv"), default="binary")
    p_pic.add_argument("--out-dir", default=None)
    p_pic.set_defaults(func=cmd_picard)

    p_ver = sub.add_parser("verify-estimates", help="re-run bound monitors on a stored run")
    p_ver.add_argument("--run-dir", required=True)
    p_ver.add_argument("--out-dir", default=None, help="defaults to the run directory")
    p_ver.set_defaults(func=cmd_verify_estimates)

    p_bench = sub.add_parser("commutator-bench", help="seeded commutator-constant ensembles")
    p_bench.add_argument("--operator", choices=("+", "-", "H"), default="+")
    p_bench.add_argument("--lm", default="0,1;1,1;0,2", help="l,m pairs separated by ';'")
    p_bench.add_argument("--p", default="4/3,2,4", help="comma list of Lebesgue exponents")
    p_bench.add_argument("--trials", type=int, default=100)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--grid-n", type=int, default=2048)
    p_bench.add_argument("--grid-L", type=float, default=8 * math.pi)
    p_bench.add_argument("--bandwidth", type=int, default=64)
    p_bench.add_argument("--no-stability", action="store_true",
                         help="skip the doubled-grid stability rerun")
    p_bench.add_argument("--out-dir", default=None)
    p_bench.set_defaults(func=cmd_commutator_bench)

    p_miz = sub.add_parser("mizohata", help="drift-integrability index")
    p_miz.add_argument("--b", default=None, help="expression in x (I for the imaginary unit)")
    p_miz.add_argument("--preset", default=None,
                       help="real, imaginary:c, or benchmark-drift")
    p_miz.add_argument("--R", type=float, default=None, help="max ray radius (default L/2)")
    p_miz.add_argument("--grid-n", type=int, default=2048)
    p_miz.add_argument("--grid-L", type=float, default=64.0)
    p_miz.add_argument("--out-dir", default=None)
    p_miz.set_defaults(func=cmd_mizohata)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "picard" and args.scenario is None and args.batch is None:
        parser.error("picard needs --scenario or --batch")
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
