"""Experiment orchestration and all file I/O.

Seed splitting rule: a run with master seed ``s`` draws its transcript from
``[s, TAG_RUNS, chunk]`` streams and its background heat from
``[s, TAG_HEAT]``. Sweep point ``i``, repetition ``r`` runs with the child
seed ``derive_seed(s, TAG_REPETITION, i, r)``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import adversary, bounds, protocol, qlin
from .adversary import CheatTable, DemonPolicy
from .protocol import BellConfig, SteeringConfig
from .seeding import TAG_REPETITION, derive_seed
from .thermo import (
    DetectorConfig,
    EnvironmentModel,
    ThermalLedger,
    detect_anomaly,
    kt_ln2,
    landauer_cost,
    simulate_heat_record,
)

STEERING_SCENARIOS = ("steering_honest", "steering_lhs", "steering_demon")
BELL_SCENARIOS = ("bell_honest", "bell_demon_nonsignaling", "bell_demon_signaling")
SCENARIOS = STEERING_SCENARIOS + BELL_SCENARIOS
DEMON_SCENARIOS = ("steering_demon", "bell_demon_nonsignaling", "bell_demon_signaling")

PLOT_COLUMNS = ("p", "value", "std_err", "heat_per_run_J", "heat_per_run_kTln2", "detected_fraction")


class SpecError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid experiment spec: " + "; ".join(problems))


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str
    n_runs: int
    seed: int = 0
    temperature: float = 300.0
    setting_angles_deg: tuple = (0.0, 90.0)
    setting_choice_mode: str = protocol.PER_RUN_QUANTUM
    alice_angles_deg: tuple = (0.0, 90.0)
    bob_angles_deg: tuple = (45.0, 135.0)
    policy: DemonPolicy = field(default_factory=DemonPolicy)
    table: str | None = None
    table_b: str | None = None
    background_mean_J: float = 0.0
    background_std_J: float | None = None  # None: one kT ln2 at the configured temperature
    alpha: float = 0.05
    beta_power: float = 0.95
    out_dir: str | None = None

    def __post_init__(self):
        for name in ("setting_angles_deg", "alice_angles_deg", "bob_angles_deg"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if isinstance(self.policy, dict):
            try:
                object.__setattr__(self, "policy", DemonPolicy(**self.policy))
            except (TypeError, ValueError) as exc:
                raise SpecError([f"policy: {exc}"]) from None
        problems = []
        if self.scenario not in SCENARIOS:
            problems.append(f"scenario: {self.scenario!r} is not one of {SCENARIOS}")
        if isinstance(self.n_runs, bool) or not isinstance(self.n_runs, int) or self.n_runs < 1:
            problems.append(f"n_runs: must be an integer >= 1, got {self.n_runs!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            problems.append(f"seed: must be a non-negative integer, got {self.seed!r}")
        if not (isinstance(self.temperature, (int, float)) and self.temperature > 0):
            problems.append(f"temperature: must be positive, got {self.temperature!r}")
        if not problems:
            checks = [
                ("steering", self.steering_config),
                ("bell", self.bell_config),
                ("environment", self.environment),
                ("detector", self.detector),
                ("table", self.tables),
            ]
            for name, build in checks:
                try:
                    build()
                except (TypeError, ValueError, KeyError) as exc:
                    problems.append(f"{name}: {exc}")
        if problems:
            raise SpecError(problems)

    # -- derived configs

    @property
    def is_steering(self) -> bool:
        return self.scenario in STEERING_SCENARIOS

    @property
    def is_demon(self) -> bool:
        return self.scenario in DEMON_SCENARIOS

    def steering_config(self) -> SteeringConfig:
        angles = tuple(math.radians(a) for a in self.setting_angles_deg)
        return SteeringConfig(angles, self.n_runs, self.setting_choice_mode)

    def bell_config(self) -> BellConfig:
        return BellConfig(
            tuple(math.radians(a) for a in self.alice_angles_deg),
            tuple(math.radians(a) for a in self.bob_angles_deg),
            self.n_runs,
        )

    def environment(self) -> EnvironmentModel:
        std = kt_ln2(self.temperature) if self.background_std_J is None else self.background_std_J
        return EnvironmentModel(self.background_mean_J, std)

    def detector(self) -> DetectorConfig:
        return DetectorConfig(self.alpha, self.beta_power)

    def demon_policy(self) -> DemonPolicy:
        mode = adversary.SIGNALING if self.scenario == "bell_demon_signaling" else adversary.NON_SIGNALING
        return dataclasses.replace(self.policy, bell_mode=mode)

    def tables(self) -> tuple[CheatTable | None, CheatTable | None]:
        """Configured cheat tables, or the scenario's default ones."""
        given = [CheatTable.from_text(t) if t is not None else None for t in (self.table, self.table_b)]
        if self.scenario == "steering_demon":
            table = given[0] or CheatTable.correlated([1] * len(self.setting_angles_deg))
            if not table.covers(range(len(self.setting_angles_deg))):
                raise ValueError("steering table must cover every setting index")
            return table, None
        if self.scenario == "bell_demon_nonsignaling":
            if given[0] is None or given[1] is None:
                ta, tb, _, _ = adversary.best_nonsignaling_tables(self.bell_config())
                return given[0] or ta, given[1] or tb
            return given[0], given[1]
        if self.scenario == "bell_demon_signaling":
            ta, tb = adversary.signaling_tables()
            return given[0] or ta, given[1] or tb
        return None, None

    def bits_per_active_run(self) -> float:
        if self.scenario == "steering_demon":
            return math.log2(len(self.setting_angles_deg))
        if self.scenario in BELL_SCENARIOS[1:]:
            return 2.0
        return 0.0

    def replace(self, **changes) -> ExperimentSpec:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            v = self.demon_policy() if f.name == "policy" else getattr(self, f.name)
            if isinstance(v, DemonPolicy):
                v = {k: list(x) if isinstance(x, tuple) else x for k, x in dataclasses.asdict(v).items()}
            elif isinstance(v, tuple):
                v = list(v)
            d[f.name] = v
        return d

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentSpec:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        problems = [f"{k}: unknown key" for k in unknown]
        missing = [k for k in ("scenario", "n_runs") if k not in data]
        problems += [f"{k}: required key missing" for k in missing]
        if isinstance(data.get("policy"), dict):
            policy_fields = {f.name for f in dataclasses.fields(DemonPolicy)}
            problems += [f"policy.{k}: unknown key" for k in sorted(set(data["policy"]) - policy_fields)]
        if problems:
            raise SpecError(problems)
        data = dict(data)
        for key in ("table", "table_b"):
            if isinstance(data.get(key), list):
                data[key] = "\n".join(data[key])
        return cls(**data)


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError([f"{path}: not valid JSON ({exc})"]) from None
    if not isinstance(data, dict):
        raise SpecError([f"{path}: top level must be an object"])
    return ExperimentSpec.from_dict(data)


# ---------------------------------------------------------------- single runs


@dataclass
class Outcome:
    """In-memory result of one experiment, before anything is written."""

    spec: ExperimentSpec
    transcript: protocol.Transcript
    estimate: object
    value: float
    std_err: float
    classical_bound: float
    ledger: ThermalLedger
    demon_heat: np.ndarray
    heat_record: np.ndarray
    verdict: object

    def summary(self) -> dict:
        return {
            "scenario": self.spec.scenario,
            "seed": self.spec.seed,
            "n_runs": self.spec.n_runs,
            "config": self.spec.to_dict(),
            "estimate": self.estimate.to_dict(),
            "value": self.value,
            "std_err": self.std_err,
            "classical_bound": self.classical_bound,
            "exceeds_bound": bool(self.value > self.classical_bound),
            "demon_active_runs": int(self.transcript.demon_active.sum()),
            "ledger": self.ledger.to_dict(),
            "detector": None if self.verdict is None else self.verdict.to_dict(),
        }


def classical_bound(spec: ExperimentSpec) -> float:
    if spec.is_steering:
        return bounds.lhs_bound(spec.steering_config().settings).value
    return bounds.lhv_chsh_bound().value


def simulate(spec: ExperimentSpec, threads: int = 1) -> Outcome:
    """Run the scenario end to end without touching the filesystem."""
    T = spec.temperature
    ledger = ThermalLedger(T)
    s = spec.scenario
    if spec.is_steering:
        cfg = spec.steering_config()
        if s == "steering_honest":
            tr = protocol.run_steering_honest(cfg, spec.seed, threads)
        elif s == "steering_lhs":
            tr = protocol.run_steering_lhs_baseline(cfg, spec.seed, threads)
        else:
            table, _ = spec.tables()
            tr, ledger = adversary.run_steering_demon(cfg, spec.demon_policy(), table, T, spec.seed, threads)
        est = protocol.steering_parameter(tr, cfg.m)
        value, err = est.s_n, est.std_err
    else:
        cfg = spec.bell_config()
        if s == "bell_honest":
            tr = protocol.run_bell_honest(cfg, spec.seed, threads)
        else:
            ta, tb = spec.tables()
            tr, ledger = adversary.run_bell_demon(cfg, spec.demon_policy(), ta, tb, T, spec.seed, threads)
        est = protocol.chsh_value(tr)
        value, err = est.value, est.std_err
    per_active = per_active_heat(spec)
    demon_heat = np.where(tr.demon_active, per_active, 0.0)
    env = spec.environment()
    record = simulate_heat_record(spec.n_runs, demon_heat, env, spec.seed)
    verdict = detect_anomaly(record, env, spec.detector()) if spec.n_runs >= 2 else None
    return Outcome(spec, tr, est, value, err, classical_bound(spec), ledger, demon_heat, record, verdict)


def per_active_heat(spec: ExperimentSpec) -> float:
    """Demon heat of one active run, summed over the demons involved."""
    if spec.scenario == "steering_demon":
        return landauer_cost(math.log2(len(spec.setting_angles_deg)), spec.temperature)
    if spec.scenario in ("bell_demon_nonsignaling", "bell_demon_signaling"):
        one = landauer_cost(1.0, spec.temperature)
        return one + one
    return 0.0


def write_heat_csv(path, heat_record, demon_heat) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("run_index", "joules", "demon_joules"))
            for i, (h, d) in enumerate(zip(heat_record, demon_heat)):
                w.writerow((i, repr(float(h)), repr(float(d))))
    except OSError as exc:
        raise OSError(f"could not write heat record to {path}: {exc}") from exc


def read_heat_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    joules = np.array([float(r["joules"]) for r in rows])
    demon = np.array([float(r["demon_joules"]) for r in rows]) if rows and "demon_joules" in rows[0] else None
    return joules, demon


def write_json(path, data) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(data, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def run_experiment(spec: ExperimentSpec, out_dir=None, threads: int = 1) -> dict:
    """Simulate ``spec`` and write transcript.csv, heat.csv and summary.json."""
    outcome = simulate(spec, threads)
    summary = outcome.summary()
    out_dir = out_dir if out_dir is not None else spec.out_dir
    if out_dir is not None:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {out}: {exc}") from exc
        outcome.transcript.to_csv(out / "transcript.csv")
        write_heat_csv(out / "heat.csv", outcome.heat_record, outcome.demon_heat)
        write_json(out / "summary.json", summary)
    return summary


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepRow:
    p: float
    value: float
    std_err: float
    heat_per_run_J: float
    heat_per_run_kTln2: float
    detected_fraction: float


@dataclass
class SweepResult:
    scenario: str
    rows: list[SweepRow]
    classical_bound: float
    assisted_value: float
    baseline_value: float
    bits_per_active_run: float
    threshold_p: float | None
    threshold_p_fit: float | None
    temperature: float

    def __post_init__(self):
        ps = [r.p for r in self.rows]
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ValueError("sweep rows must have strictly increasing p")

    @property
    def threshold_heat_kTln2(self) -> float | None:
        """Per-run heat at which the expected value reaches the classical bound."""
        return None if self.threshold_p is None else self.threshold_p * self.bits_per_active_run

    @property
    def threshold_heat_fit_kTln2(self) -> float | None:
        return None if self.threshold_p_fit is None else self.threshold_p_fit * self.bits_per_active_run

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "classical_bound": self.classical_bound,
            "assisted_value": self.assisted_value,
            "baseline_value": self.baseline_value,
            "bits_per_active_run": self.bits_per_active_run,
            "threshold_p": self.threshold_p,
            "threshold_p_fit": self.threshold_p_fit,
            "threshold_heat_kTln2": self.threshold_heat_kTln2,
            "threshold_heat_fit_kTln2": self.threshold_heat_fit_kTln2,
            "temperature_K": self.temperature,
            "rows": [dataclasses.asdict(r) for r in self.rows],
        }


def mixture_endpoints(spec: ExperimentSpec) -> tuple[float, float]:
    """Exact expected value with the demon always on, and always off."""
    policy = spec.demon_policy()
    source = policy.source_state
    if spec.scenario == "steering_demon":
        settings = spec.steering_config().settings
        table, _ = spec.tables()
        assisted = sum(table[k].target_sign * table[k].declaration for k in range(len(settings))) / len(settings)
        if policy.inactive_alice_behavior == adversary.UNIFORM_RANDOM:
            baseline = 0.0
        else:
            baseline = sum(qlin.expectation_single(source, s) for s in settings) / len(settings)
        return float(assisted), float(baseline)
    cfg = spec.bell_config()
    ta, tb = spec.tables()
    if policy.bell_mode == adversary.SIGNALING:
        e = [[ta[(x, y)].target_sign * tb[(x, y)].target_sign for y in (0, 1)] for x in (0, 1)]
        assisted = bounds.chsh_combination(e[0][0], e[0][1], e[1][0], e[1][1])
    else:
        assisted = adversary.deterministic_chsh(ta, tb, cfg)
    baseline = bounds.quantum_value_chsh(qlin.tensor(source, source), cfg)
    return float(assisted), float(baseline)


def faking_threshold(bound: float, assisted: float, baseline: float) -> float | None:
    """Smallest activation probability whose expected value reaches ``bound``."""
    if baseline >= bound:
        return 0.0
    if assisted <= bound:
        return None
    return (bound - baseline) / (assisted - baseline)


def sweep_activation(spec: ExperimentSpec, p_values, repetitions: int = 1, threads: int = 1) -> SweepResult:
    if not spec.is_demon:
        raise ValueError(f"sweeps need a demon scenario, got {spec.scenario!r}")
    p_values = [float(p) for p in p_values]
    if not p_values:
        raise ValueError("empty list of activation probabilities")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if any(b <= a for a, b in zip(p_values, p_values[1:])):
        raise ValueError("activation probabilities must be strictly increasing")
    unit = kt_ln2(spec.temperature)
    rows = []
    for i, p in enumerate(p_values):
        values, errs, heat, flagged = [], [], [], 0
        for r in range(repetitions):
            sub = spec.replace(
                seed=derive_seed(spec.seed, TAG_REPETITION, i, r),
                policy=dataclasses.replace(spec.policy, activation_probability=p),
            )
            out = simulate(sub, threads)
            values.append(out.value)
            errs.append(out.std_err)
            heat.append(out.ledger.joules / spec.n_runs)
            flagged += bool(out.verdict is not None and out.verdict.reject)
        heat_j = math.fsum(heat) / repetitions
        rows.append(SweepRow(
            p,
            math.fsum(values) / repetitions,
            math.sqrt(math.fsum(e * e for e in errs)) / repetitions,
            heat_j,
            heat_j / unit,
            flagged / repetitions,
        ))
    bound = classical_bound(spec)
    assisted, baseline = mixture_endpoints(spec)
    fit = None
    if len(rows) >= 2:
        slope, intercept = np.polyfit([r.p for r in rows], [r.value for r in rows], 1)
        if slope > 0:
            fit = float((bound - intercept) / slope)
    return SweepResult(
        spec.scenario, rows, bound, assisted, baseline, spec.bits_per_active_run(),
        faking_threshold(bound, assisted, baseline), fit, spec.temperature,
    )


def hierarchy_comparison(steering: SweepResult, bell: SweepResult) -> dict:
    """Per-run heat needed to fake steering versus to fake a Bell violation."""
    s, b = steering.threshold_heat_kTln2, bell.threshold_heat_kTln2
    sf, bf = steering.threshold_heat_fit_kTln2, bell.threshold_heat_fit_kTln2
    return {
        "steering_scenario": steering.scenario,
        "bell_scenario": bell.scenario,
        "steering_threshold_p": steering.threshold_p,
        "bell_threshold_p": bell.threshold_p,
        "steering_threshold_heat_kTln2": s,
        "bell_threshold_heat_kTln2": b,
        "steering_threshold_heat_fit_kTln2": sf,
        "bell_threshold_heat_fit_kTln2": bf,
        "steering_cheaper": bool(s is not None and (b is None or s < b)),
        "steering_cheaper_fit": bool(sf is not None and (bf is None or sf < bf)),
    }


def emit_plot_data(result: SweepResult, path) -> Path:
    if not result.rows:
        raise ValueError("nothing to emit: sweep result has no rows")
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(PLOT_COLUMNS)
            for row in result.rows:
                w.writerow([repr(float(getattr(row, c))) for c in PLOT_COLUMNS])
    except OSError as exc:
        raise OSError(f"could not write plot data to {path}: {exc}") from exc
    return path


def read_plot_data(path) -> list[SweepRow]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != PLOT_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [SweepRow(**{c: float(r[c]) for c in PLOT_COLUMNS}) for r in reader]
