"""Batch command-line interface.

Subcommands: run (simulate a scenario), solve (static plan), oracle
(exhaustive optimum on small instances, optionally per service mode),
forecast (canned load-forecasting experiment), gradcheck (BPTT vs
finite differences), genload (synthetic load series CSV).

Exit codes: 0 success, 1 bad input or usage, 2 infeasible instance.
All randomness flows from one --seed; subcomponents derive sub-seeds by
the documented offsets in skyoff.sim.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from skyoff.domain import Scenario, ScenarioParseError, TaskRequest, load_scenario
from skyoff.forecast.baselines import persistence, rmse
from skyoff.forecast.model import ForecastConfig, series_to_csv
from skyoff.forecast.split import split_by_forecast
from skyoff.forecast.train import forecast, gradient_check, train
from skyoff.forecast.model import init_model
from skyoff.offload import metrics_to_csv
from skyoff.sim import (
    SEED_OFFSET_FORECAST,
    SEED_OFFSET_WORKLOAD,
    POLICIES,
    SyntheticLoadSpec,
    generate_loads,
    run,
)
from skyoff.solver import (
    MODE_RESTRICTIONS,
    OracleCapError,
    STATUS_INFEASIBLE,
    brute_force_oracle,
    solve,
    solve_result_to_jsonable,
)

GRADCHECK_THRESHOLD = 1e-4

# canned forecasting experiment layout: samples every 10 s, one hour of
# history, a 600 s evaluation window with a load rise starting 250 s in
EXP_PERIOD = 10.0
EXP_WINDOW = 360
EXP_HORIZON = 60
EXP_TRAIN_WINDOW = 48
EXP_TRAIN_HORIZON = 12
EXP_SHIFT_T = EXP_WINDOW * EXP_PERIOD + 250.0
EXP_DURATION = 4200.0
EXP_SPLIT_K = 20
EXP_SPLIT_HORIZON = 6  # near-term lookahead for the share probe
# the rising UAV climbs 0.45 -> 0.80 in sample-sized steps so the
# forecaster sees per-step changes comparable to the oscillation slope
EXP_RAMP = [(EXP_SHIFT_T + 10.0 * k, 0.45 + 0.05 * (k + 1)) for k in range(7)]


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    if getattr(args, "seed", None) is not None:
        scenario.seed = args.seed
    if getattr(args, "k", None) is not None:
        scenario.split_granularity = args.k
    return scenario


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    metrics, trace = run(scenario, policy=args.policy)
    out = _out_dir(args)
    (out / "metrics.csv").write_text(metrics_to_csv(metrics), encoding="utf-8")
    (out / "trace.jsonl").write_text(trace, encoding="utf-8")
    print(
        f"mean_delay_s={metrics.mean_delay_s!r} failed={metrics.failed_tasks} "
        f"total_energy_j={metrics.total_energy_j!r}"
    )
    return 0


def cmd_solve(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    result = solve(scenario)
    if result.status == STATUS_INFEASIBLE:
        print("infeasible: no energy-feasible plan covers every task", file=sys.stderr)
        return 2
    out = _out_dir(args)
    (out / "solve.json").write_text(
        json.dumps(solve_result_to_jsonable(result), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    (out / "metrics.csv").write_text(metrics_to_csv(result.metrics), encoding="utf-8")
    print(
        f"status={result.status} iterations={result.iterations} "
        f"mean_delay_s={result.metrics.mean_delay_s!r}"
    )
    return 0


def compare_modes(scenario: Scenario) -> list[tuple[str, str, float | None]]:
    """Oracle optimum under each service-mode restriction.

    Returns (mode, status, mean delay or None) rows in fixed order; the
    unrestricted m2m row can never exceed the others.
    """
    rows = []
    for mode in MODE_RESTRICTIONS:
        result = brute_force_oracle(scenario, mode=mode)
        mean = None if result.metrics is None else result.metrics.mean_delay_s
        rows.append((mode, result.status, mean))
    return rows


def _modes_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mode", "status", "mean_delay_s"])
    for mode, status, mean in rows:
        w.writerow([mode, status, "" if mean is None else repr(mean)])
    return buf.getvalue()


def cmd_oracle(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    try:
        if args.compare_modes:
            rows = compare_modes(scenario)
            text = _modes_csv(rows)
            if args.out:
                (_out_dir(args) / "modes.csv").write_text(text, encoding="utf-8")
            print(text, end="")
            return 0
        result = brute_force_oracle(scenario, mode=args.mode)
    except OracleCapError as exc:
        print(f"oracle refused: {exc}", file=sys.stderr)
        return 1
    if result.status == STATUS_INFEASIBLE:
        print("infeasible: no plan satisfies the energy budgets", file=sys.stderr)
        return 2
    if args.out:
        (_out_dir(args) / "oracle.json").write_text(
            json.dumps(solve_result_to_jsonable(result), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    print(
        f"status={result.status} plans_examined={result.iterations} "
        f"mean_delay_s={result.metrics.mean_delay_s!r}"
    )
    return 0


# ---------------------------------------------------------------------------
# Canned forecasting experiment


def _experiment_series(seed: int):
    """Three synthetic UAV load traces: one ramps up inside the
    evaluation window, one steps up mildly, one stays put."""
    specs = [
        SyntheticLoadSpec(
            base=0.45, amplitude=0.12, osc_period=240.0,
            regime_shifts=EXP_RAMP, noise_sigma=0.005,
            seed=seed + SEED_OFFSET_WORKLOAD,
        ),
        SyntheticLoadSpec(
            base=0.50, amplitude=0.12, osc_period=240.0,
            regime_shifts=[(EXP_SHIFT_T, 0.58)], noise_sigma=0.005,
            seed=seed + SEED_OFFSET_WORKLOAD + 1,
        ),
        SyntheticLoadSpec(
            base=0.40, amplitude=0.12, osc_period=240.0,
            regime_shifts=[], noise_sigma=0.005,
            seed=seed + SEED_OFFSET_WORKLOAD + 2,
        ),
    ]
    series = []
    for i, spec in enumerate(specs):
        s = generate_loads(spec, 1, EXP_DURATION, EXP_PERIOD)[0]
        s.uav_id = i + 1
        series.append(s)
    return series


def forecast_experiment(seed: int = 0) -> dict:
    """Train the LSTM per UAV on one hour of history, score it against
    persistence over the evaluation window containing the load rise, and
    probe how the forecast-driven split reacts once the rise is visible."""
    series = _experiment_series(seed)
    w, horizon = EXP_WINDOW, EXP_HORIZON
    cfg = ForecastConfig(
        window=EXP_TRAIN_WINDOW,
        horizon=EXP_TRAIN_HORIZON,
        hidden_size=12,
        learning_rate=0.1,
        epochs=150,
        seed=seed + SEED_OFFSET_FORECAST,
    )
    out = {"series": series, "eval": {}, "rmse": {}}
    forecasts_before = {}
    forecasts_after = {}
    # probe anchors: end of history, then mid-ramp once the rise shows
    # inside the input window
    anchor_b = w + 29
    err_lstm = []
    err_pers = []
    for s in series:
        loads = s.loads()
        history = loads[:w]
        actual = loads[w : w + horizon]
        model = train(history, cfg).model
        lstm_pred = forecast(model, history, horizon)
        pers_pred = persistence(history, horizon)
        out["eval"][s.uav_id] = {
            "t": [t for t, _ in s.samples[w : w + horizon]],
            "actual": [float(x) for x in actual],
            "lstm": [float(x) for x in lstm_pred],
            "persistence": [float(x) for x in pers_pred],
        }
        out["rmse"][s.uav_id] = {
            "lstm": rmse(lstm_pred, actual),
            "persistence": rmse(pers_pred, actual),
        }
        err_lstm.append(np.asarray(lstm_pred) - actual)
        err_pers.append(np.asarray(pers_pred) - actual)
        forecasts_before[s.uav_id] = [
            float(x) for x in forecast(model, loads[w - cfg.window : w], EXP_SPLIT_HORIZON)
        ]
        forecasts_after[s.uav_id] = [
            float(x)
            for x in forecast(model, loads[anchor_b - cfg.window : anchor_b], EXP_SPLIT_HORIZON)
        ]
    out["aggregate_rmse"] = {
        "lstm": float(np.sqrt(np.mean(np.concatenate(err_lstm) ** 2))),
        "persistence": float(np.sqrt(np.mean(np.concatenate(err_pers) ** 2))),
    }
    probe = TaskRequest(
        id=0, user_id=0, arrival_time=0.0,
        input_bits=8e6, compute_cycles=1e9, output_bits=8e5, content_id="probe",
    )
    out["shares_before"] = split_by_forecast(probe, forecasts_before, EXP_SPLIT_K)
    out["shares_after"] = split_by_forecast(probe, forecasts_after, EXP_SPLIT_K)
    out["task_cycles"] = probe.compute_cycles
    return out


def _experiment_csv(result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "uav_id", "actual", "lstm", "persistence"])
    for uid in sorted(result["eval"]):
        ev = result["eval"][uid]
        for t, a, l, p in zip(ev["t"], ev["actual"], ev["lstm"], ev["persistence"]):
            w.writerow([repr(t), uid, repr(a), repr(l), repr(p)])
    return buf.getvalue()


def cmd_forecast(args) -> int:
    result = forecast_experiment(args.seed if args.seed is not None else 0)
    if args.out:
        out = _out_dir(args)
        (out / "forecast.csv").write_text(_experiment_csv(result), encoding="utf-8")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["uav_id", "lstm_rmse", "persistence_rmse", "share_before", "share_after"])
        for uid in sorted(result["rmse"]):
            w.writerow([
                uid,
                repr(result["rmse"][uid]["lstm"]),
                repr(result["rmse"][uid]["persistence"]),
                repr(result["shares_before"][uid]),
                repr(result["shares_after"][uid]),
            ])
        (out / "summary.csv").write_text(buf.getvalue(), encoding="utf-8")
    for uid in sorted(result["rmse"]):
        r = result["rmse"][uid]
        print(
            f"uav {uid}: lstm_rmse={r['lstm']:.4f} persistence_rmse={r['persistence']:.4f}"
        )
    agg = result["aggregate_rmse"]
    print(f"aggregate: lstm_rmse={agg['lstm']:.4f} persistence_rmse={agg['persistence']:.4f}")
    sb, sa = result["shares_before"], result["shares_after"]
    c = result["task_cycles"]
    print(
        "share of rising uav 1: "
        f"before={sb[1] / c:.3f} after={sa[1] / c:.3f}"
    )
    return 0


def cmd_gradcheck(args) -> int:
    seed = args.seed if args.seed is not None else 0
    model = init_model(args.hidden, seed)
    rng = np.random.default_rng(seed + 1)
    window = rng.uniform(0.0, 1.0, size=args.window)
    err = gradient_check(model, window)
    print(f"max_rel_err={err!r}")
    return 0 if err < GRADCHECK_THRESHOLD else 1


def cmd_genload(args) -> int:
    seed = args.seed if args.seed is not None else 0
    shifts = []
    for spec in args.shift or []:
        try:
            t_str, base_str = spec.split(":", 1)
            shifts.append((float(t_str), float(base_str)))
        except ValueError:
            print(f"bad --shift {spec!r}, expected T:BASE", file=sys.stderr)
            return 1
    spec = SyntheticLoadSpec(
        base=args.base,
        amplitude=args.amplitude,
        osc_period=args.osc_period,
        regime_shifts=shifts,
        noise_sigma=args.noise,
        seed=seed + SEED_OFFSET_WORKLOAD,
    )
    series = generate_loads(spec, args.uavs, args.duration, args.period)
    text = series_to_csv(series)
    out = _out_dir(args)
    (out / "loads.csv").write_text(text, encoding="utf-8")
    print(f"wrote {len(series)} series x {len(series[0].samples)} samples")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skyoff", description=__doc__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("--scenario", required=True, help="scenario JSON path")
        sp.add_argument("--seed", type=int, default=None, help="override scenario seed")
        sp.add_argument("--k", type=int, default=None, help="split granularity override")

    sp = sub.add_parser("run", help="simulate a scenario")
    common(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--policy", choices=POLICIES, default="greedy_plus_local_search")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("solve", help="static plan for a scenario")
    common(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("oracle", help="exhaustive optimum (small instances)")
    common(sp)
    sp.add_argument("--out", default=None)
    sp.add_argument("--mode", choices=MODE_RESTRICTIONS, default=None)
    sp.add_argument("--compare-modes", action="store_true")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("forecast", help="canned load-forecasting experiment")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_forecast)

    sp = sub.add_parser("gradcheck", help="verify BPTT against finite differences")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--hidden", type=int, default=4)
    sp.add_argument("--window", type=int, default=8)
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("genload", help="write a synthetic load-series CSV")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.add_argument("--uavs", type=int, default=3)
    sp.add_argument("--duration", type=float, default=4200.0)
    sp.add_argument("--period", type=float, default=10.0)
    sp.add_argument("--base", type=float, default=0.4)
    sp.add_argument("--amplitude", type=float, default=0.1)
    sp.add_argument("--osc-period", type=float, default=600.0)
    sp.add_argument("--noise", type=float, default=0.01)
    sp.add_argument("--shift", action="append", help="T:BASE regime shift, repeatable")
    sp.set_defaults(func=cmd_genload)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ScenarioParseError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
