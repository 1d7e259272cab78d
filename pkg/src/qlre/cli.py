"""Command-line front end.

Four subcommands: `simulate` runs one config or preset family and writes a
time-series CSV plus a JSON summary per run, `sweep` fans a base config out
over a parameter list (optionally in parallel processes), `reproduce` maps
figure ids to preset bundles and writes plot-ready CSVs with a manifest,
and `validate` runs the analytic oracle suite against the simulator.

Exit codes: 0 success, 1 invalid config or unknown name, 2 integration or
convergence failure, 3 sweep finished with failed rows, 4 validation failed.
All files are written atomically (temp file in the target directory, then
rename).  Numeric output uses 12 significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import evolve, half_max_time, lindblad_rhs
from .entanglement import (
    concurrence,
    entanglement_of_formation,
    eof_from_concurrence,
    log_negativity,
    negativity,
    tripartite_negativity,
)
from .errors import (
    ConvergenceFailure,
    IntegrationFailure,
    NumericalFailure,
    UnsupportedConfigurationError,
)
from .hilbert import (
    Backend,
    BasisDescriptor,
    DensityMatrix,
    fidelity_with_pure,
    partial_trace,
    product_state,
    to_collective_basis,
    to_full_basis,
    trace_distance,
)
from .oracle import (
    dark_state,
    edge_excited_steady,
    intro_pair_steady,
    w_state,
    x_dark,
    x_reduced,
)
from .scenarios import (
    PRESET_NAMES,
    ScenarioConfig,
    build_basis,
    build_initial_state,
    build_master_equation,
    compile_observables,
    config_from_dict,
    config_hash,
    config_to_dict,
    hilbert_dimension,
    preset,
    sweep,
)

DEFAULT_MEM_BYTES = 4 * 2**30
MEM_ENV_VAR = "QLRE_MAX_MEM_BYTES"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INTEGRATION = 2
EXIT_SWEEP_PARTIAL = 3
EXIT_VALIDATION = 4


class _ConfigError(Exception):
    """User-facing config problem; message names the failing field."""


def _fmt(x) -> str:
    if x is None:
        return ""
    return "%.12g" % x


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _mem_cap() -> int:
    raw = os.environ.get(MEM_ENV_VAR)
    if raw is None:
        return DEFAULT_MEM_BYTES
    try:
        cap = int(raw)
        if cap <= 0:
            raise ValueError
    except ValueError:
        raise _ConfigError(f"{MEM_ENV_VAR}: expected a positive integer, got {raw!r}")
    return cap


# ---------------------------------------------------------------------------
# single-run engine
# ---------------------------------------------------------------------------


@dataclass
class RunSummary:
    name: str
    config_hash: str
    backend: str
    dim: int
    residual: float
    wall_time_s: float
    observables: dict
    config: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "config_hash": self.config_hash,
                "backend": self.backend,
                "dim": self.dim,
                "steady_state_residual": self.residual,
                "wall_time_s": self.wall_time_s,
                "observables": self.observables,
                "config": self.config,
            },
            indent=2,
            sort_keys=True,
        )


def _check_memory(cfg: ScenarioConfig, force: bool):
    dim = hilbert_dimension(cfg)
    estimate = 16 * dim * dim
    cap = _mem_cap()
    print(
        f"{cfg.name}: dimension {dim}, density matrix ~{estimate / 2**20:.1f} MiB",
        file=sys.stderr,
    )
    if estimate > cap and not force:
        raise _ConfigError(
            f"{cfg.name}: estimated {estimate} bytes exceeds the cap of {cap}; "
            f"rerun with --force or raise {MEM_ENV_VAR}"
        )


def run_config(cfg: ScenarioConfig, out_dir: Path, force: bool = False) -> RunSummary:
    """Simulate one scenario and write its CSV/summary artifacts."""
    _check_memory(cfg, force)
    started = time.perf_counter()
    basis = build_basis(cfg)
    eq = build_master_equation(cfg, allow_large=True)
    rho0 = build_initial_state(cfg)
    observables = compile_observables(cfg, basis)
    traj = evolve(eq, rho0, cfg.t_max, cfg.sample_dt, observables=observables)
    residual = float(np.linalg.norm(lindblad_rhs(eq, traj.final_rho)))
    wall = time.perf_counter() - started

    obs_summary = {}
    for name in cfg.observables:
        series = traj.observables[name]
        try:
            t_half = half_max_time(series, traj.times)
        except Exception:
            t_half = None
        obs_summary[name] = {"final": float(series[-1]), "t_half": t_half}

    summary = RunSummary(
        name=cfg.name,
        config_hash=config_hash(cfg),
        backend=basis.backend.value,
        dim=basis.dim,
        residual=residual,
        wall_time_s=wall,
        observables=obs_summary,
        config=config_to_dict(cfg),
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.observables:
        lines = ["t_scaled," + ",".join(cfg.observables)]
        for i, t in enumerate(traj.times):
            row = [_fmt(t)] + [_fmt(traj.observables[n][i]) for n in cfg.observables]
            lines.append(",".join(row))
        _atomic_write(out_dir / f"{cfg.name}_timeseries.csv", "\n".join(lines) + "\n")
    _atomic_write(out_dir / f"{cfg.name}_summary.json", summary.to_json() + "\n")
    return summary


def _load_configs(spec: str) -> list:
    """A --config value is a JSON file path or a preset name."""
    path = Path(spec)
    if path.exists():
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise _ConfigError(f"{spec}: not valid JSON ({exc})")
        try:
            return [config_from_dict(data)]
        except ValueError as exc:
            raise _ConfigError(f"{spec}: {exc}")
    if spec in PRESET_NAMES:
        return preset(spec)
    raise _ConfigError(
        f"{spec!r} is neither a readable file nor a preset; "
        f"presets: {', '.join(PRESET_NAMES)}"
    )


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    try:
        configs = _load_configs(args.config)
    except _ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out)
    for cfg in configs:
        try:
            summary = run_config(cfg, out_dir, force=args.force)
        except _ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except (ValueError, UnsupportedConfigurationError) as exc:
            print(f"error: {cfg.name}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except (IntegrationFailure, ConvergenceFailure, NumericalFailure) as exc:
            print(f"error: {cfg.name}: {exc}", file=sys.stderr)
            return EXIT_INTEGRATION
        finals = ", ".join(
            f"{k}={_fmt(v['final'])}" for k, v in summary.observables.items()
        )
        print(f"{cfg.name}: residual {summary.residual:.3e}  {finals}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _parse_values(raw: str) -> list:
    values = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            values.append(int(token))
        except ValueError:
            try:
                values.append(float(token))
            except ValueError:
                raise _ConfigError(f"--values: {token!r} is not a number")
    if not values:
        raise _ConfigError("--values: no values given")
    return values


def _sweep_worker(payload):
    """Run one sweep point in a separate process; returns a row dict."""
    config_json, out_dir, force, value = payload
    cfg = config_from_dict(json.loads(config_json))
    try:
        summary = run_config(cfg, Path(out_dir), force=force)
    except Exception as exc:  # the row records the failure, the sweep continues
        return {"value": value, "status": f"failed: {type(exc).__name__}", "obs": {}}
    return {"value": value, "status": "ok", "obs": summary.observables}


def cmd_sweep(args) -> int:
    try:
        configs = _load_configs(args.config)
        if len(configs) != 1:
            raise _ConfigError(
                f"--config: sweep needs a single base config, got {len(configs)}"
            )
        base = configs[0]
        values = _parse_values(args.values)
        swept = sweep(base, args.param, values)
    except (_ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    payloads = [
        (json.dumps(config_to_dict(cfg)), str(out_dir), args.force, value)
        for cfg, value in zip(swept, values)
    ]
    if args.jobs <= 1:
        rows = [_sweep_worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_worker, payloads))

    rows.sort(key=lambda r: r["value"])
    obs_names = list(base.observables)
    header = [args.param, "status"]
    for n in obs_names:
        header += [f"final_{n}", f"t_half_{n}"]
    lines = [",".join(header)]
    failed = 0
    for row in rows:
        cells = [_fmt(row["value"]), row["status"]]
        for n in obs_names:
            entry = row["obs"].get(n)
            if entry is None:
                cells += ["", ""]
            else:
                cells += [_fmt(entry["final"]), _fmt(entry["t_half"])]
        if row["status"] != "ok":
            failed += 1
        lines.append(",".join(cells))
    _atomic_write(out_dir / "sweep.csv", "\n".join(lines) + "\n")
    print(f"sweep over {args.param}: {len(rows)} rows, {failed} failed")
    return EXIT_SWEEP_PARTIAL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------


def _curve_csv(path: Path, header: list, rows: list):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(c) if not isinstance(c, str) else c for c in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _reproduce_runs(configs, out_dir, force):
    summaries = []
    for cfg in configs:
        summaries.append(run_config(cfg, out_dir, force=force))
    return summaries


def cmd_reproduce(args) -> int:
    out_dir = Path(args.out)
    figure = args.figure
    known = (
        "intro",
        "fig1a",
        "fig3a",
        "fig3b",
        "fig4",
        "fig5a",
        "fig5b",
        "fig5c",
        "fig6",
        "appA",
        "appA-mixed",
        "appB",
    )
    if figure not in known:
        print(
            f"error: unknown figure {figure!r}; valid ids: {', '.join(known)}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    manifest = {"figure": figure, "files": []}

    def note(fname, panel):
        manifest["files"].append({"file": fname, "panel": panel})

    try:
        if figure == "intro":
            s = _reproduce_runs(preset("intro-pair"), out_dir, args.force)
            note("intro-pair_timeseries.csv", "two-spin pair entanglement versus time")
        elif figure == "fig1a":
            summaries = _reproduce_runs(preset("fig1a-sweep"), out_dir, args.force)
            rows = []
            for cfg, s in zip(preset("fig1a-sweep"), summaries):
                note(f"{cfg.name}_timeseries.csv", "per-size time series")
                rows.append((cfg.domains[0].population, s.observables["E_N(A|B)"]["final"]))
            _curve_csv(out_dir / "fig1a_curve.csv", ["N_A", "E_N"], rows)
            note("fig1a_curve.csv", "steady log-negativity versus N_A")
        elif figure in ("fig3a", "fig3b"):
            configs = preset(figure)
            summaries = _reproduce_runs(configs, out_dir, args.force)
            for cfg in configs:
                note(f"{cfg.name}_timeseries.csv", "entanglement and relaxation dynamics")
            if figure == "fig3b":
                rows = [
                    (
                        cfg.domains[1].population,
                        s.observables["E_F(A,C)"]["final"],
                        s.observables["E_F(A,C)"]["t_half"],
                    )
                    for cfg, s in zip(configs, summaries)
                ]
                _curve_csv(out_dir / "fig3b_curve.csv", ["N_B", "E_F", "t_half"], rows)
                note("fig3b_curve.csv", "steady entanglement and half-rise time versus N_B")
        elif figure == "fig4":
            for name in ("fig4-chain4", "fig4-chain5"):
                for cfg in preset(name):
                    run_config(cfg, out_dir, force=args.force)
                    note(f"{cfg.name}_timeseries.csv", "outer-domain pair entanglement")
        elif figure in ("fig5a", "fig5b", "fig5c"):
            key = {
                "fig5a": "fig5a-dephasing",
                "fig5b": "fig5b-individual",
                "fig5c": "fig5c-thermal",
            }[figure]
            for cfg in preset(key):
                run_config(cfg, out_dir, force=args.force)
                note(f"{cfg.name}_timeseries.csv", "pair entanglement under noise")
        elif figure == "fig6":
            star = preset("fig6-star")[0]
            run_config(star, out_dir, force=args.force)
            note(f"{star.name}_timeseries.csv", "tripartite negativity versus time")
            rows = []
            for cfg in sweep(star, "N_D", list(range(1, 12))):
                s = run_config(cfg, out_dir, force=args.force)
                rows.append((cfg.domains[3].population, s.observables["N_ABC"]["final"]))
            _curve_csv(out_dir / "fig6_inset.csv", ["N_D", "N_ABC"], rows)
            note("fig6_inset.csv", "steady tripartite negativity versus N_D")
        elif figure == "appA":
            for cfg in preset("appA-initial-states"):
                run_config(cfg, out_dir, force=args.force)
                note(f"{cfg.name}_timeseries.csv", "per-initial-state entanglement dynamics")
        elif figure == "appA-mixed":
            configs = preset("appA-mixed")
            summaries = _reproduce_runs(configs, out_dir, args.force)
            rows = []
            for cfg, s in zip(configs, summaries):
                init = cfg.domains[1].initial
                rows.append((init.a + init.b, s.observables["E_F(A,C)"]["final"]))
                note(f"{cfg.name}_timeseries.csv", "mixed-preparation dynamics")
            _curve_csv(out_dir / "appA_mixed_curve.csv", ["F_0", "E_F"], rows)
            note("appA_mixed_curve.csv", "steady entanglement versus preparation fidelity")
        else:  # appB
            configs = preset("appB-oracle")
            summaries = _reproduce_runs(configs, out_dir, args.force)
            rows = []
            for cfg, s in zip(configs, summaries):
                rows.append(
                    (
                        cfg.domains[1].population,
                        s.observables["C(A,C)"]["final"],
                        s.observables["x_d"]["final"],
                    )
                )
                note(f"{cfg.name}_timeseries.csv", "oracle-scenario dynamics")
            _curve_csv(out_dir / "appB_curve.csv", ["N_B", "C", "x_d"], rows)
            note("appB_curve.csv", "steady concurrence and dark-state weight versus N_B")
    except _ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationFailure, ConvergenceFailure, NumericalFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION

    _atomic_write(out_dir / f"{figure}_manifest.json", json.dumps(manifest, indent=2) + "\n")
    print(f"{figure}: wrote {len(manifest['files'])} files to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _steady_from(cfg_pops, initial, reservoirs, backend, tol=1e-10):
    from .dynamics import build_collective_zero_T, steady_state

    basis = BasisDescriptor(backend, cfg_pops)
    eq = build_collective_zero_T(basis, reservoirs)
    rho0 = product_state(basis, initial)
    return steady_state(eq, rho0, tol=tol)


def _check_measures():
    bell = np.zeros(4, dtype=complex)
    bell[1] = bell[2] = 1 / math.sqrt(2)
    b2 = BasisDescriptor(Backend.FULL, (1, 1))
    rho = DensityMatrix(np.outer(bell, bell.conj()), b2)
    errs = [
        abs(concurrence(rho) - 1.0),
        abs(entanglement_of_formation(rho) - 1.0),
        abs(negativity(rho, [0]) - 0.5),
        abs(log_negativity(rho, [0]) - 1.0),
        abs(eof_from_concurrence(0.5) - 0.35457890266526954),
    ]
    w = w_state().projector()
    errs.append(abs(tripartite_negativity(w) - math.sqrt(2) / 3))
    intro = intro_pair_steady()
    errs.append(abs(entanglement_of_formation(intro) - 0.35457890266526954))
    return max(errs), "entanglement measures on closed-form states"


def _check_dark_stationarity(cap):
    from .dynamics import build_collective_zero_T

    worst = 0.0
    for n_b in range(1, cap + 1):
        rho_full = dark_state(n_b).projector()
        eq_full = build_collective_zero_T(rho_full.basis, [[0, 1], [1, 2]])
        worst = max(worst, float(np.linalg.norm(lindblad_rhs(eq_full, rho_full))))
        rho_coll = to_collective_basis(rho_full)
        eq_coll = build_collective_zero_T(rho_coll.basis, [[0, 1], [1, 2]])
        worst = max(worst, float(np.linalg.norm(lindblad_rhs(eq_coll, rho_coll))))
    return worst, f"dark-state rhs norm, sizes 1..{cap}, both backends"


def _check_weights(cap):
    worst = 0.0
    for n_b in range(1, cap + 1):
        res = _steady_from(
            (1, n_b, 1), [1, 0, 0], [[0, 1], [1, 2]], Backend.COLLECTIVE
        )
        psi = to_collective_basis(dark_state(n_b))
        weight = fidelity_with_pure(res.rho, psi)
        worst = max(worst, abs(weight - x_dark(n_b)))
        red = partial_trace(to_full_basis(res.rho), [0, 2])
        worst = max(worst, abs(concurrence(red) - x_reduced(n_b)))
        worst = max(
            worst, trace_distance(to_full_basis(res.rho), edge_excited_steady(n_b))
        )
    return worst, f"steady-state weights versus closed forms, sizes 1..{cap}"


def _check_backends(cap):
    from .dynamics import build_collective_zero_T

    worst = 0.0
    for n_b in range(1, cap + 1):
        bc = BasisDescriptor(Backend.COLLECTIVE, (1, n_b, 1))
        keep = [0, 1, 2]
        eqc = build_collective_zero_T(bc, [[0, 1], [1, 2]])
        rc = product_state(bc, [0, n_b, 0])
        tc = evolve(eqc, rc, 3.0, 0.5, keep=keep)
        bf = bc.counterpart()
        eqf = build_collective_zero_T(bf, [[0, 1], [1, 2]])
        tf = evolve(eqf, to_full_basis(rc), 3.0, 0.5, keep=keep)
        for sc, sf in zip(tc.snapshots, tf.snapshots):
            worst = max(worst, trace_distance(sc, to_collective_basis(sf)))
    return worst, f"backend agreement per snapshot, sizes 1..{cap}"


def cmd_validate(args) -> int:
    cap = 5 if args.scale == "quick" else 8
    checks = [
        ("measures", _check_measures, 1e-9),
        ("dark-stationarity", lambda: _check_dark_stationarity(cap), 1e-10),
        ("steady-weights", lambda: _check_weights(cap), 1e-6),
        ("backend-agreement", lambda: _check_backends(min(cap, 5)), 1e-8),
    ]
    failed = []
    width = max(len(n) for n, _, _ in checks)
    for name, fn, tol in checks:
        try:
            worst, detail = fn()
            ok = worst < tol
        except Exception as exc:
            worst, detail, ok = math.inf, f"raised {type(exc).__name__}: {exc}", False
        status = "PASS" if ok else "FAIL"
        print(f"{status}  {name:<{width}}  worst {worst:.3e} (tol {tol:.0e})  {detail}")
        if not ok:
            failed.append(name)
    if failed:
        print(f"validation failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"all {len(checks)} checks passed at scale {args.scale}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlre",
        description="Collective spin relaxation simulator: scenarios, sweeps, "
        "figure reproduction, analytic validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one config file or preset family")
    p_sim.add_argument("--config", required=True, help="JSON config path or preset name")
    p_sim.add_argument("--out", default="qlre_out", help="output directory")
    p_sim.add_argument("--force", action="store_true", help="bypass the memory guard")
    p_sim.set_defaults(fn=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run a base config across parameter values")
    p_sweep.add_argument("--config", required=True, help="JSON config path or preset name")
    p_sweep.add_argument("--param", required=True, help="parameter to vary")
    p_sweep.add_argument("--values", required=True, help="comma-separated value list")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_sweep.add_argument("--out", default="qlre_out", help="output directory")
    p_sweep.add_argument("--force", action="store_true", help="bypass the memory guard")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_rep = sub.add_parser("reproduce", help="write plot-ready CSVs for a figure id")
    p_rep.add_argument("figure", help="figure id, e.g. fig3b or appA")
    p_rep.add_argument("--out", default="qlre_out", help="output directory")
    p_rep.add_argument("--force", action="store_true", help="bypass the memory guard")
    p_rep.set_defaults(fn=cmd_reproduce)

    p_val = sub.add_parser("validate", help="run the analytic oracle suite")
    p_val.add_argument(
        "--scale", choices=("quick", "full"), default="quick", help="size cap for checks"
    )
    p_val.set_defaults(fn=cmd_validate)
    return parser


def main(argv: Optional[list] = None) -> int:
    args = _build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
