"""Honest steering and Bell tests, transcripts and estimators.

The honest source emits |Phi+> and all settings lie in the x-z plane, so the
correlator of settings at angles ``ta`` and ``tb`` is ``cos(ta - tb)``.
Runs are simulated in fixed-size chunks with per-chunk random streams (see
:mod:`demonbell.seeding`); a transcript depends only on ``(config, seed)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import bounds, qlin
from .qlin import MeasurementSetting
from .seeding import TAG_RUNS, TAG_SETTINGS, map_chunks, stream

PRE_SETTLED = "pre_settled_list"
PER_RUN_QUANTUM = "per_run_quantum"
SETTING_MODES = (PRE_SETTLED, PER_RUN_QUANTUM)

NO_SETTING = -1
CSV_COLUMNS = ("run_index", "setting_a", "setting_b", "declared_a", "measured_b", "demon_active")


class InsufficientDataError(ValueError):
    """An estimator cell has no runs."""


@dataclass(frozen=True)
class SteeringConfig:
    setting_angles: tuple[float, ...]
    n_runs: int
    setting_choice_mode: str = PER_RUN_QUANTUM

    def __post_init__(self):
        angles = tuple(float(a) for a in self.setting_angles)
        object.__setattr__(self, "setting_angles", angles)
        errors = []
        if len(angles) < 2:
            errors.append("setting_angles: need m >= 2 settings")
        if not all(math.isfinite(a) for a in angles):
            errors.append("setting_angles: must be finite")
        if len(set(angles)) != len(angles):
            errors.append("setting_angles: must be pairwise distinct")
        if not isinstance(self.n_runs, (int, np.integer)) or self.n_runs < 1:
            errors.append(f"n_runs: must be an integer >= 1, got {self.n_runs!r}")
        if self.setting_choice_mode not in SETTING_MODES:
            errors.append(f"setting_choice_mode: must be one of {SETTING_MODES}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def m(self) -> int:
        return len(self.setting_angles)

    @property
    def settings(self) -> list[MeasurementSetting]:
        return qlin.settings_from_angles(self.setting_angles)


@dataclass(frozen=True)
class BellConfig:
    alice_angles: tuple[float, float]
    bob_angles: tuple[float, float]
    n_runs: int

    def __post_init__(self):
        errors = []
        for name in ("alice_angles", "bob_angles"):
            angles = tuple(float(a) for a in getattr(self, name))
            object.__setattr__(self, name, angles)
            if len(angles) != 2 or not all(math.isfinite(a) for a in angles):
                errors.append(f"{name}: need two finite angles")
        if not isinstance(self.n_runs, (int, np.integer)) or self.n_runs < 1:
            errors.append(f"n_runs: must be an integer >= 1, got {self.n_runs!r}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def alice_settings(self) -> list[MeasurementSetting]:
        return qlin.settings_from_angles(self.alice_angles)

    @property
    def bob_settings(self) -> list[MeasurementSetting]:
        return qlin.settings_from_angles(self.bob_angles)


def standard_bell_config(n_runs: int) -> BellConfig:
    return BellConfig((0.0, math.pi / 2), (math.pi / 4, 3 * math.pi / 4), n_runs)


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    setting_a: int | None
    setting_b: int
    declared_a: int
    measured_b: int
    demon_active: bool


@dataclass
class Transcript:
    """Column-oriented run records.

    ``setting_a`` is ``NO_SETTING`` for steering runs, where only Bob picks
    a setting.
    """

    setting_a: np.ndarray
    setting_b: np.ndarray
    declared_a: np.ndarray
    measured_b: np.ndarray
    demon_active: np.ndarray
    seed: int
    config: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.setting_b)

    @property
    def products(self) -> np.ndarray:
        return self.declared_a.astype(np.int64) * self.measured_b

    def records(self) -> Iterator[RunRecord]:
        for i in range(len(self)):
            sa = int(self.setting_a[i])
            yield RunRecord(
                i,
                None if sa == NO_SETTING else sa,
                int(self.setting_b[i]),
                int(self.declared_a[i]),
                int(self.measured_b[i]),
                bool(self.demon_active[i]),
            )

    @classmethod
    def concat(cls, parts: list[dict], seed: int, config: dict) -> Transcript:
        cols = {k: np.concatenate([p[k] for p in parts]) for k in CSV_COLUMNS[1:]}
        return cls(seed=seed, config=config, **cols)

    def to_csv(self, path) -> None:
        path = Path(path)
        try:
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(CSV_COLUMNS)
                for r in self.records():
                    w.writerow((
                        r.run_index,
                        "" if r.setting_a is None else r.setting_a,
                        r.setting_b,
                        r.declared_a,
                        r.measured_b,
                        int(r.demon_active),
                    ))
        except OSError as exc:
            raise OSError(f"could not write transcript to {path}: {exc}") from exc

    @classmethod
    def from_csv(cls, path, seed: int = 0, config: dict | None = None) -> Transcript:
        with Path(path).open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            setting_a=np.array([int(r["setting_a"]) if r["setting_a"] else NO_SETTING for r in rows], dtype=np.int64),
            setting_b=np.array([int(r["setting_b"]) for r in rows], dtype=np.int64),
            declared_a=np.array([int(r["declared_a"]) for r in rows], dtype=np.int8),
            measured_b=np.array([int(r["measured_b"]) for r in rows], dtype=np.int8),
            demon_active=np.array([r["demon_active"] == "1" for r in rows], dtype=bool),
            seed=seed,
            config=config or {},
        )


@dataclass(frozen=True)
class SteeringEstimate:
    s_n: float
    std_err: float
    per_setting_correlations: list[float]
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ChshEstimate:
    value: float
    std_err: float
    correlators: list[list[float]]
    counts: list[list[int]]

    def __iter__(self):
        # unpacks as (value, std_err)
        return iter((self.value, self.std_err))

    def to_dict(self) -> dict:
        return asdict(self)


def _std_err(x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    return float(np.std(x, ddof=1) / math.sqrt(x.size))


def steering_parameter(t: Transcript, m: int) -> SteeringEstimate:
    """Sample mean of declared x measured, with per-setting conditional means."""
    if len(t) == 0:
        raise ValueError("empty transcript")
    k = t.setting_b
    if k.min() < 0 or k.max() >= m:
        raise ValueError(f"setting index outside 0..{m - 1}")
    prod = t.products
    per_setting = []
    for j in range(m):
        sel = prod[k == j]
        per_setting.append(float(sel.mean()) if sel.size else math.nan)
    return SteeringEstimate(float(prod.mean()), _std_err(prod), per_setting, len(t))


def chsh_value(t: Transcript) -> ChshEstimate:
    """``E(0,0) + E(1,0) + E(1,1) - E(0,1)`` from conditional sample means."""
    if len(t) == 0 or (t.setting_a == NO_SETTING).any():
        raise ValueError("CHSH needs a Bell transcript with both setting indices")
    prod = t.products
    e = [[0.0, 0.0], [0.0, 0.0]]
    se = [[0.0, 0.0], [0.0, 0.0]]
    counts = [[0, 0], [0, 0]]
    for x in (0, 1):
        for y in (0, 1):
            sel = prod[(t.setting_a == x) & (t.setting_b == y)]
            if sel.size == 0:
                raise InsufficientDataError(f"no runs with settings (x={x}, y={y})")
            e[x][y] = float(sel.mean())
            se[x][y] = _std_err(sel)
            counts[x][y] = int(sel.size)
    value = bounds.chsh_combination(e[0][0], e[0][1], e[1][0], e[1][1])
    err = math.sqrt(sum(s * s for row in se for s in row))
    return ChshEstimate(value, err, e, counts)


# ---------------------------------------------------------------- run loops


def pre_settled_settings(m: int, n_runs: int, seed: int) -> np.ndarray:
    """Bob's whole setting list, drawn up front from the seeded stream."""
    return stream(seed, TAG_SETTINGS).integers(0, m, size=n_runs)


def uniform_index(rand: np.ndarray, m: int) -> np.ndarray:
    return np.minimum((rand * m).astype(np.int64), m - 1)


def steering_setting_indices(cfg: SteeringConfig, seed: int, settings_list=None):
    """Return a ``(start, stop, rand) -> indices`` picker for the configured mode."""
    if settings_list is not None:
        fixed = np.asarray(settings_list, dtype=np.int64)
        if fixed.shape != (cfg.n_runs,) or fixed.min() < 0 or fixed.max() >= cfg.m:
            raise ValueError("settings_list must hold n_runs indices in 0..m-1")
    elif cfg.setting_choice_mode == PRE_SETTLED:
        fixed = pre_settled_settings(cfg.m, cfg.n_runs, seed)
    else:
        fixed = None

    def pick(start: int, stop: int, rand: np.ndarray) -> np.ndarray:
        if fixed is not None:
            return fixed[start:stop]
        return uniform_index(rand, cfg.m)

    return pick, fixed


def _config_echo(cfg) -> dict:
    d = asdict(cfg)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def run_steering_honest(cfg: SteeringConfig, seed: int, threads: int = 1, settings_list=None) -> Transcript:
    """Alice measures her half of |Phi+> along Bob's announced setting."""
    state = qlin.phi_plus()
    tables = [qlin.joint_sampling_table(state, s, s) for s in cfg.settings]
    p_a = np.array([t[0] for t in tables])
    p_b_plus = np.array([t[1] for t in tables])
    p_b_minus = np.array([t[2] for t in tables])
    pick, _ = steering_setting_indices(cfg, seed, settings_list)

    def chunk(c: int, start: int, stop: int) -> dict:
        u = stream(seed, TAG_RUNS, c).random((3, stop - start))
        k = pick(start, stop, u[0])
        x = qlin.sample_outcomes(p_a[k], u[1])
        y = qlin.sample_outcomes(np.where(x == 1, p_b_plus[k], p_b_minus[k]), u[2])
        return {
            "setting_a": np.full(k.size, NO_SETTING, dtype=np.int64),
            "setting_b": k,
            "declared_a": x,
            "measured_b": y,
            "demon_active": np.zeros(k.size, dtype=bool),
        }

    parts = map_chunks(chunk, cfg.n_runs, threads)
    return Transcript.concat(parts, seed, _config_echo(cfg))


def run_steering_lhs_baseline(cfg: SteeringConfig, seed: int, threads: int = 1, settings_list=None) -> Transcript:
    """Best cheat without a demon: one fixed state, deterministic declarations."""
    settings = cfg.settings
    witness = bounds.lhs_bound(settings).witness
    signs = np.array(witness["signs"], dtype=np.int8)
    p_bob = np.array([qlin.prob_plus(witness["state"], s) for s in settings])
    pick, _ = steering_setting_indices(cfg, seed, settings_list)

    def chunk(c: int, start: int, stop: int) -> dict:
        u = stream(seed, TAG_RUNS, c).random((2, stop - start))
        k = pick(start, stop, u[0])
        return {
            "setting_a": np.full(k.size, NO_SETTING, dtype=np.int64),
            "setting_b": k,
            "declared_a": signs[k],
            "measured_b": qlin.sample_outcomes(p_bob[k], u[1]),
            "demon_active": np.zeros(k.size, dtype=bool),
        }

    parts = map_chunks(chunk, cfg.n_runs, threads)
    return Transcript.concat(parts, seed, _config_echo(cfg))


def bell_sampling_tables(state: qlin.StateVector, cfg: BellConfig) -> np.ndarray:
    """Array ``[x, y, (P(a=+1), P(b=+1|a=+1), P(b=+1|a=-1))]``."""
    out = np.empty((2, 2, 3))
    for x, a in enumerate(cfg.alice_settings):
        for y, b in enumerate(cfg.bob_settings):
            out[x, y] = qlin.joint_sampling_table(state, a, b)
    return out


def sample_bell_outcomes(tables: np.ndarray, x: np.ndarray, y: np.ndarray, u_a: np.ndarray, u_b: np.ndarray):
    t = tables[x, y]
    a = qlin.sample_outcomes(t[:, 0], u_a)
    b = qlin.sample_outcomes(np.where(a == 1, t[:, 1], t[:, 2]), u_b)
    return a, b


def run_bell_honest(cfg: BellConfig, seed: int, threads: int = 1) -> Transcript:
    """Independent uniform settings, joint Born measurement of |Phi+>."""
    tables = bell_sampling_tables(qlin.phi_plus(), cfg)

    def chunk(c: int, start: int, stop: int) -> dict:
        u = stream(seed, TAG_RUNS, c).random((4, stop - start))
        x = uniform_index(u[0], 2)
        y = uniform_index(u[1], 2)
        a, b = sample_bell_outcomes(tables, x, y, u[2], u[3])
        return {"setting_a": x, "setting_b": y, "declared_a": a, "measured_b": b,
                "demon_active": np.zeros(x.size, dtype=bool)}

    parts = map_chunks(chunk, cfg.n_runs, threads)
    return Transcript.concat(parts, seed, _config_echo(cfg))
