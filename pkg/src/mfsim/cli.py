"""Command-line experiment runner.

Presets bundle a simulation configuration with a default round count; a flat
key=value config file can replace or adjust any simulation field, and flags
override both.  Every run writes the same four files (summary.json,
dfa_curves.csv, tau_q.csv, ccdf.csv) with fixed column order, so downstream
plotting never has to sniff schemas.  Exponents are dimensionless, prices and
relative prices are in log units.

Exit codes: 0 success, 2 bad preset/config/input naming the offending key,
3 unwritable output location.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .analysis import dfa, read_orderflow_csv, relative_prices_from_orderflow
from .cancelation import IMBALANCE_KINDS, MODES, CancelParams
from .errors import (EstimationError, OrderFlowParseError, ParameterError)
from .simulator import PRICE_MODES, SimConfig, run_experiment

#: preset name -> (SimConfig overrides, sweep grid or None, default rounds)
PRESETS: dict[str, tuple[dict, dict | None, int]] = {
    "mf-baseline": ({}, None, 20),
    "modified": ({"relative_price_mode": "long_memory"}, None, 20),
    "table1-sweep": ({"relative_price_mode": "long_memory"},
                     {"H_x": [0.5, 0.6, 0.7, 0.8, 0.9]}, 10),
    "poisson-variant": ({"relative_price_mode": "long_memory",
                         "cancel": CancelParams(mode="poisson", poisson_rate=0.01)},
                        None, 20),
    "subdiffusion-variant": ({"relative_price_mode": "long_memory", "H_s": 0.5},
                             None, 20),
    "orderflow-dfa": ({}, None, 1),
}

# config-file key -> (SimConfig/CancelParams target, parser)
_INT_KEYS = {"T": "T", "n_record": "n_record", "seed": "seed"}
_FLOAT_KEYS = {"H_s": "H_s", "H_x": "H_x", "alpha_x": "alpha_x",
               "sigma_x": "sigma_x", "cancel_A": "A", "cancel_B": "B",
               "cancel_poisson_rate": "poisson_rate"}
_STR_KEYS = {"relative_price_mode": ("relative_price_mode", PRICE_MODES),
             "cancel_mode": ("mode", MODES),
             "cancel_imbalance": ("imbalance", IMBALANCE_KINDS)}


class _ConfigError(Exception):
    """Raised for any config/preset/input problem that maps to exit 2."""


def parse_config_file(path: str) -> dict:
    """Flat key=value file -> {field: parsed value}; strict on key names.

    Simulation fields keep their own names; cancelation fields carry a
    cancel_ prefix (cancel_mode, cancel_A, cancel_B, cancel_poisson_rate,
    cancel_imbalance).  Blank lines and lines starting with # are ignored.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise _ConfigError(f"cannot read config file {path}: {exc}") from exc
    out: dict = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise _ConfigError(
                f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in out:
            raise _ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        if key in _INT_KEYS:
            try:
                out[key] = int(value)
            except ValueError as exc:
                raise _ConfigError(
                    f"{path}:{lineno}: key {key!r} needs an integer, "
                    f"got {value!r}") from exc
        elif key in _FLOAT_KEYS:
            try:
                out[key] = float(value)
            except ValueError as exc:
                raise _ConfigError(
                    f"{path}:{lineno}: key {key!r} needs a number, "
                    f"got {value!r}") from exc
        elif key in _STR_KEYS:
            _, allowed = _STR_KEYS[key]
            if value not in allowed:
                raise _ConfigError(
                    f"{path}:{lineno}: key {key!r} must be one of "
                    f"{allowed}, got {value!r}")
            out[key] = value
        else:
            raise _ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
    return out


def _build_config(preset_overrides: dict, file_values: dict,
                  seed: int | None) -> SimConfig:
    """Apply precedence preset < config file < flags."""
    cfg = SimConfig().replace(**preset_overrides)
    sim_updates = {}
    cancel_updates = {}
    for key, value in file_values.items():
        if key in _INT_KEYS:
            sim_updates[_INT_KEYS[key]] = value
        elif key in _FLOAT_KEYS:
            target = _FLOAT_KEYS[key]
            (cancel_updates if key.startswith("cancel_") else sim_updates)[
                target] = value
        else:
            target, _ = _STR_KEYS[key]
            (cancel_updates if key.startswith("cancel_") else sim_updates)[
                target] = value
    try:
        if cancel_updates:
            sim_updates["cancel"] = dataclasses.replace(cfg.cancel,
                                                        **cancel_updates)
        cfg = cfg.replace(**sim_updates)
        if seed is not None:
            cfg = cfg.replace(seed=seed)
    except ParameterError as exc:
        raise _ConfigError(str(exc)) from exc
    return cfg


def _float_cell(value: float) -> str:
    return repr(float(value))


def _write_outputs(out_dir: str, summary: dict, curve_points: list[dict]) -> None:
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "dfa_curves.csv"), "w", encoding="utf-8") as fh:
        fh.write("point_index,series,scale,fluctuation\n")
        for p, curves in enumerate(curve_points):
            for series in ("dfa_return", "dfa_volatility", "dfa_relative_price"):
                for scale, fluct in curves.get(series, []):
                    fh.write(f"{p},{series[4:]},{int(scale)},"
                             f"{_float_cell(fluct)}\n")
    with open(os.path.join(out_dir, "tau_q.csv"), "w", encoding="utf-8") as fh:
        fh.write("point_index,q,hq,tau\n")
        for p, curves in enumerate(curve_points):
            for q, hq, tau in curves.get("tau_volatility", []):
                fh.write(f"{p},{_float_cell(q)},{_float_cell(hq)},"
                         f"{_float_cell(tau)}\n")
    with open(os.path.join(out_dir, "ccdf.csv"), "w", encoding="utf-8") as fh:
        fh.write("point_index,volatility,ccdf\n")
        for p, curves in enumerate(curve_points):
            for vol, prob in curves.get("ccdf_volatility", []):
                fh.write(f"{p},{_float_cell(vol)},{_float_cell(prob)}\n")


def _run_orderflow(args, out_dir: str) -> int:
    if not args.input:
        print("orderflow-dfa requires --input pointing at an order-flow CSV",
              file=sys.stderr)
        return 2
    try:
        records = read_orderflow_csv(args.input)
        x = relative_prices_from_orderflow(records)
        result = dfa(x)
    except (OSError, OrderFlowParseError, EstimationError,
            ParameterError) as exc:
        print(f"orderflow-dfa failed: {exc}", file=sys.stderr)
        return 2
    summary = {
        "preset": "orderflow-dfa",
        "input": os.path.basename(args.input),
        "n": int(x.size),
        "H_x": float(result.hurst),
        "H_x_stderr": float(result.hurst_stderr),
        "fit_range": [int(result.fit_range[0]), int(result.fit_range[1])],
    }
    curves = {"dfa_relative_price": [[int(s), float(f)] for s, f in
                                     zip(result.scales, result.fluctuations)]}
    _write_outputs(out_dir, summary, [curves])
    print(f"H_x = {result.hurst:.4f} over {x.size} orders "
          f"-> {os.path.join(out_dir, 'summary.json')}")
    return 0


def _make_series_sink(out_dir: str):
    state = {"params": None, "index": -1}

    def sink(point_params, round_index, series):
        if point_params != state["params"]:
            state["params"] = point_params
            state["index"] += 1
        name = (f"returns_point{state['index']:03d}"
                f"_round{round_index:03d}.csv")
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            fh.write("return,volatility\n")
            for r, v in zip(series.returns.tolist(),
                            series.volatility.tolist()):
                fh.write(f"{_float_cell(r)},{_float_cell(v)}\n")

    return sink


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfsim",
        description="Order-book simulation experiments with DFA/MF-DFA and "
                    "tail-index reporting.")
    parser.add_argument("--preset", choices=sorted(PRESETS), metavar="NAME",
                        help="experiment preset: " + ", ".join(sorted(PRESETS)))
    parser.add_argument("--config", metavar="PATH",
                        help="flat key=value file of simulation fields")
    parser.add_argument("--rounds", type=int, metavar="N",
                        help="independent rounds per grid point "
                             "(default: preset's)")
    parser.add_argument("--seed", type=int, metavar="S",
                        help="base seed (round k derives from it)")
    parser.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="worker processes; results identical for any N")
    parser.add_argument("--out", default=".", metavar="DIR",
                        help="output directory (created if missing)")
    parser.add_argument("--emit-returns", action="store_true",
                        help="also write per-round return/volatility CSVs")
    parser.add_argument("--input", metavar="PATH",
                        help="order-flow CSV for the orderflow-dfa preset")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.preset is None and args.config is None:
        parser.print_usage(sys.stderr)
        print("one of --preset or --config is required", file=sys.stderr)
        return 2

    out_dir = args.out
    try:
        os.makedirs(out_dir, exist_ok=True)
        probe = os.path.join(out_dir, ".write_probe")
        with open(probe, "w", encoding="utf-8"):
            pass
        os.remove(probe)
    except OSError as exc:
        print(f"output directory {out_dir!r} is not writable: {exc}",
              file=sys.stderr)
        return 3

    if args.preset == "orderflow-dfa":
        return _run_orderflow(args, out_dir)

    preset_overrides: dict = {}
    sweep = None
    n_rounds = 20
    if args.preset is not None:
        preset_overrides, sweep, n_rounds = PRESETS[args.preset]
    try:
        file_values = parse_config_file(args.config) if args.config else {}
        config = _build_config(preset_overrides, file_values, args.seed)
        if args.rounds is not None:
            if args.rounds < 1:
                raise _ConfigError(f"--rounds must be >= 1, got {args.rounds}")
            n_rounds = args.rounds
        if args.jobs < 1:
            raise _ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    except _ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2

    sink = _make_series_sink(out_dir) if args.emit_returns else None
    report = run_experiment(config, n_rounds, sweep, jobs=args.jobs,
                            curves=True, series_sink=sink)
    report["preset"] = args.preset
    curve_points = [point.pop("curves") for point in report["points"]]
    _write_outputs(out_dir, report, curve_points)
    for point in report["points"]:
        agg = point["aggregates"]
        label = ", ".join(f"{k}={v}" for k, v in point["params"].items()) or "defaults"
        pooled = agg["beta_pooled"]
        beta_txt = f"{pooled:.4f}" if pooled is not None else "n/a"
        print(f"[{label}] H_r {agg['H_r']['mean']:.4f} (sd {agg['H_r']['sd']:.4f})  "
              f"H_v {agg['H_v']['mean']:.4f} (sd {agg['H_v']['sd']:.4f})  "
              f"beta_pooled {beta_txt}")
    print(f"wrote {os.path.join(out_dir, 'summary.json')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
