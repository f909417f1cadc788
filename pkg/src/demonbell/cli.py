"""Command line: ``demonbell {run,sweep,bounds,detect,demo-paper}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import acceptance, bounds, harness, qlin
from .harness import SpecError
from .thermo import DetectorConfig, EnvironmentModel, detect_anomaly, kt_ln2

DEFAULT_SEED = 20240617


def _common(p: argparse.ArgumentParser, config_required: bool = False) -> None:
    p.add_argument("--config", type=Path, required=config_required, help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads for run loops")
    p.add_argument("--format", choices=("csv", "json"), default="json", help="stdout format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="demonbell", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment from a config file")
    _common(p, config_required=True)

    p = sub.add_parser("sweep", help="sweep the demon activation probability")
    _common(p, config_required=True)
    p.add_argument("--p-values", default="0,0.25,0.5,0.75,1", help="comma separated, increasing")
    p.add_argument("--repetitions", type=int, default=1)

    p = sub.add_parser("bounds", help="print classical bounds for the settings in a config file")
    _common(p)

    p = sub.add_parser("detect", help="run the heat-anomaly detector on a heat CSV")
    _common(p)
    p.add_argument("heat_csv", type=Path)

    p = sub.add_parser("demo-paper", help="run the canned acceptance scenarios")
    _common(p)
    return parser


def _emit(data: dict, fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(data, indent=2) + "\n")
        return
    flat = _flatten(data)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(flat.keys())
    w.writerow(flat.values())


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


def _load(args) -> harness.ExperimentSpec:
    spec = harness.load_spec(args.config)
    if args.seed is not None:
        spec = spec.replace(seed=args.seed)
    return spec


def cmd_run(args) -> int:
    spec = _load(args)
    summary = harness.run_experiment(spec, args.out, args.threads)
    _emit(summary, args.format)
    return 0


def cmd_sweep(args) -> int:
    spec = _load(args)
    p_values = [float(x) for x in args.p_values.split(",") if x.strip()]
    result = harness.sweep_activation(spec, p_values, args.repetitions, args.threads)
    out = args.out or (Path(spec.out_dir) if spec.out_dir else None)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        harness.emit_plot_data(result, out / "sweep.csv")
        harness.write_json(out / "sweep.json", result.to_dict())
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(harness.PLOT_COLUMNS)
        for row in result.rows:
            w.writerow([repr(getattr(row, c)) for c in harness.PLOT_COLUMNS])
        sys.stdout.write(buf.getvalue())
    else:
        _emit(result.to_dict(), "json")
    return 0


def cmd_bounds(args) -> int:
    if args.config is not None:
        data = json.loads(args.config.read_text())
        angles = data.get("setting_angles_deg", [0.0, 90.0])
    else:
        angles = [0.0, 90.0]
    settings = qlin.settings_from_angles([math.radians(a) for a in angles])
    data = {
        "setting_angles_deg": list(angles),
        "lhs_bound": bounds.lhs_bound(settings).to_json(),
        "lhv_chsh_bound": bounds.lhv_chsh_bound().to_json(),
    }
    _emit(data, args.format)
    return 0


def cmd_detect(args) -> int:
    if args.config is not None:
        spec = _load(args)
        env, cfg = spec.environment(), spec.detector()
    else:
        env, cfg = EnvironmentModel(0.0, kt_ln2(300.0)), DetectorConfig()
    joules, _ = harness.read_heat_csv(args.heat_csv)
    verdict = detect_anomaly(joules, env, cfg)
    _emit(verdict.to_dict(), args.format)
    return 0


def cmd_demo(args) -> int:
    seed = DEFAULT_SEED if args.seed is None else args.seed
    results, sweep = acceptance.run_all(seed, args.threads)
    table = [r.to_dict() for r in results]
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        harness.write_json(args.out / "criteria.json", {"master_seed": seed, "criteria": table})
        with (args.out / "criteria.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("criterion", "title", "passed"))
            for r in results:
                w.writerow((r.number, r.title, int(r.passed)))
        harness.emit_plot_data(sweep, args.out / "steering_sweep.csv")
        harness.write_json(args.out / "steering_sweep.json", sweep.to_dict())
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "bounds": cmd_bounds, "detect": cmd_detect, "demo-paper": cmd_demo}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
