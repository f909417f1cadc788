"""Maxwell-demon cheating strategies.

A demon learns the trusted party's setting index, rotates the incoming qubit
into an eigenstate of that setting according to a pre-agreed table, tells the
cheater what to declare, and then has to wipe its one-record memory before
the next run. Every wipe is charged to a :class:`ThermalLedger`.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import bounds, qlin
from .protocol import (
    BellConfig,
    SteeringConfig,
    Transcript,
    _config_echo,
    sample_bell_outcomes,
    bell_sampling_tables,
    steering_setting_indices,
    uniform_index,
)
from .qlin import MeasurementSetting, StateVector
from .seeding import TAG_RUNS, map_chunks, stream
from .thermo import ThermalLedger

NON_SIGNALING = "non_signaling"
SIGNALING = "signaling"
BELL_MODES = (NON_SIGNALING, SIGNALING)
UNIFORM_RANDOM = "uniform_random"
FIXED_PLUS = "fixed_plus"
INACTIVE_BEHAVIORS = (UNIFORM_RANDOM, FIXED_PLUS)

# +y eigenstate: unbiased for every x-z plane setting
DEFAULT_SOURCE_BLOCH = (0.0, 1.0, 0.0)


class ProtocolViolation(RuntimeError):
    """The demon's memory discipline was broken (capture without erase, or double erase)."""


@dataclass
class DemonMemory:
    """One-record register; 0 is the standard state, ``k + 1`` stores setting ``k``."""

    m: int
    register: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"a demon memory needs m >= 2 settings, got {self.m}")

    @property
    def bits_capacity(self) -> float:
        return math.log2(self.m)

    @property
    def is_standard(self) -> bool:
        return self.register == 0

    def _store(self, k: int) -> None:
        if self.register != 0:
            raise ProtocolViolation("capture into a memory that was not erased")
        if not 0 <= k < self.m:
            raise ValueError(f"setting index {k} outside 0..{self.m - 1}")
        self.register = k + 1


def entangle_with_setting_source(m: int, rand: float, memory: DemonMemory | None = None) -> tuple[int, DemonMemory]:
    """Couple to Bob's quantum setting source and read the collapsed register.

    The superposition (1/sqrt m) sum_k |D=k>|k> collapses to a uniformly
    random k once Bob measures his generator; only that outcome is simulated.
    """
    if m < 2:
        raise ValueError(f"need m >= 2 settings, got {m}")
    if memory is None:
        memory = DemonMemory(m)
    elif memory.m != m:
        raise ValueError("memory sized for a different number of settings")
    if memory.register != 0:
        raise ProtocolViolation("capture into a memory that was not erased")
    k = min(int(rand * m), m - 1)
    memory._store(k)
    return k, memory


def capture_pre_settled(settings_list, run_index: int, memory: DemonMemory) -> int:
    """Copy the stored classical setting for ``run_index`` into memory."""
    if not 0 <= run_index < len(settings_list):
        raise IndexError(f"run {run_index} outside a {len(settings_list)}-entry settings list")
    k = int(settings_list[run_index])
    memory._store(k)
    return k


def erase(memory: DemonMemory, ledger: ThermalLedger) -> tuple[DemonMemory, ThermalLedger]:
    if memory.register == 0:
        raise ProtocolViolation("erase of a memory already in its standard state")
    memory.register = 0
    ledger.charge(memory.bits_capacity)
    return memory, ledger


@dataclass(frozen=True)
class CheatEntry:
    target_sign: int
    declaration: int

    def __post_init__(self):
        if self.target_sign not in (1, -1) or self.declaration not in (1, -1):
            raise ValueError("table entries must be +1 or -1")


@dataclass(frozen=True)
class CheatTable:
    """Per setting key (index, or (x, y) pair for signaling demons): sign and declaration."""

    entries: dict = field(default_factory=dict)

    def __getitem__(self, key) -> CheatEntry:
        try:
            return self.entries[key]
        except KeyError:
            raise KeyError(f"cheat table has no entry for setting {key!r}") from None

    def covers(self, keys) -> bool:
        return all(k in self.entries for k in keys)

    @classmethod
    def correlated(cls, signs) -> CheatTable:
        """Declaration equal to the target sign for every setting."""
        return cls({k: CheatEntry(int(s), int(s)) for k, s in enumerate(signs)})

    @classmethod
    def from_signs(cls, signs: dict) -> CheatTable:
        return cls({k: CheatEntry(int(s), int(s)) for k, s in signs.items()})

    def to_text(self) -> str:
        lines = []
        for key in sorted(self.entries, key=lambda k: (k,) if isinstance(k, int) else tuple(k)):
            e = self.entries[key]
            label = f"{key[0]},{key[1]}" if isinstance(key, tuple) else str(key)
            lines.append(f"{label} -> {e.target_sign:+d} {e.declaration:+d}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> CheatTable:
        entries = {}
        pattern = re.compile(r"^\s*(\d+)(?:\s*,\s*(\d+))?\s*->\s*([+-]1)\s+([+-]1)\s*$")
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            match = pattern.match(line)
            if not match:
                raise ValueError(f"line {n}: cannot parse table entry {line!r}")
            a, b, sign, decl = match.groups()
            key = int(a) if b is None else (int(a), int(b))
            entries[key] = CheatEntry(int(sign), int(decl))
        return cls(entries)


@dataclass(frozen=True)
class DemonPolicy:
    activation_probability: float = 1.0
    bell_mode: str = NON_SIGNALING
    inactive_alice_behavior: str = UNIFORM_RANDOM
    source_bloch: tuple[float, float, float] = DEFAULT_SOURCE_BLOCH

    def __post_init__(self):
        errors = []
        if not 0.0 <= self.activation_probability <= 1.0:
            errors.append("activation_probability: must lie in [0, 1]")
        if self.bell_mode not in BELL_MODES:
            errors.append(f"bell_mode: must be one of {BELL_MODES}")
        if self.inactive_alice_behavior not in INACTIVE_BEHAVIORS:
            errors.append(f"inactive_alice_behavior: must be one of {INACTIVE_BEHAVIORS}")
        try:
            MeasurementSetting(tuple(self.source_bloch))
        except ValueError as exc:
            errors.append(f"source_bloch: {exc}")
        if errors:
            raise ValueError("; ".join(errors))
        object.__setattr__(self, "source_bloch", tuple(float(c) for c in self.source_bloch))

    @property
    def source_state(self) -> StateVector:
        return qlin.eigenstate(self.source_bloch, +1)


def demon_transform(k: int, table: CheatTable, settings: list[MeasurementSetting]) -> tuple[StateVector, int]:
    """Replace the qubit by the table's eigenstate of setting ``k``."""
    if not 0 <= k < len(settings):
        raise ValueError(f"setting index {k} outside 0..{len(settings) - 1}")
    entry = table[k]
    return qlin.eigenstate(settings[k], entry.target_sign), entry.declaration


def run_steering_demon(
    cfg: SteeringConfig,
    policy: DemonPolicy,
    table: CheatTable,
    temperature: float,
    seed: int,
    threads: int = 1,
    settings_list=None,
) -> tuple[Transcript, ThermalLedger]:
    """Steering test against an Alice helped by a demon in Bob's lab.

    Each chunk of runs owns its demon memory and ledger; ledgers are summed.
    """
    m = cfg.m
    settings = cfg.settings
    if not table.covers(range(m)):
        raise ValueError("cheat table must cover every setting index")
    transformed = [demon_transform(k, table, settings) for k in range(m)]
    p_active = np.array([qlin.prob_plus(state, settings[k]) for k, (state, _) in enumerate(transformed)])
    declare_active = np.array([d for _, d in transformed], dtype=np.int8)
    source = policy.source_state
    p_idle = np.array([qlin.prob_plus(source, s) for s in settings])
    pick, fixed = steering_setting_indices(cfg, seed, settings_list)
    pre_settled = fixed is not None
    p = policy.activation_probability

    def chunk(c: int, start: int, stop: int):
        u = stream(seed, TAG_RUNS, c).random((4, stop - start))
        active = u[0] < p
        k = pick(start, stop, u[1])
        memory = DemonMemory(m)
        ledger = ThermalLedger(temperature)
        for i in np.flatnonzero(active):
            if pre_settled:
                got = capture_pre_settled(fixed, start + int(i), memory)
            else:
                got, _ = entangle_with_setting_source(m, float(u[1, i]), memory)
            assert got == k[i]
            # transform and relay happen here; their effect is tabulated per k above
            erase(memory, ledger)
        assert memory.is_standard
        measured = qlin.sample_outcomes(np.where(active, p_active[k], p_idle[k]), u[2])
        if policy.inactive_alice_behavior == UNIFORM_RANDOM:
            idle_decl = np.where(u[3] < 0.5, 1, -1).astype(np.int8)
        else:
            idle_decl = np.ones(k.size, dtype=np.int8)
        declared = np.where(active, declare_active[k], idle_decl).astype(np.int8)
        cols = {
            "setting_a": np.full(k.size, -1, dtype=np.int64),
            "setting_b": k,
            "declared_a": declared,
            "measured_b": measured,
            "demon_active": active,
        }
        return cols, ledger

    results = map_chunks(chunk, cfg.n_runs, threads)
    echo = _config_echo(cfg)
    transcript = Transcript.concat([r[0] for r in results], seed, echo)
    return transcript, ThermalLedger.total([r[1] for r in results], temperature)


def bell_table_keys(mode: str):
    if mode == SIGNALING:
        return list(itertools.product((0, 1), repeat=2))
    return [0, 1]


def run_bell_demon(
    cfg: BellConfig,
    policy: DemonPolicy,
    table_a: CheatTable,
    table_b: CheatTable,
    temperature: float,
    seed: int,
    threads: int = 1,
) -> tuple[Transcript, ThermalLedger]:
    """Bell test with one demon per wing.

    Non-signaling demons key their tables on the local setting only;
    signaling demons key on the pair (x, y). Either way each demon stores
    and erases one local setting record (1 bit) per active run.
    """
    keys = bell_table_keys(policy.bell_mode)
    if not (table_a.covers(keys) and table_b.covers(keys)):
        raise ValueError(f"tables must cover keys {keys} for {policy.bell_mode} demons")
    alice, bob = cfg.alice_settings, cfg.bob_settings
    # p_plus[x, y] after transformation, per wing
    pa = np.empty((2, 2))
    pb = np.empty((2, 2))
    for x, y in itertools.product((0, 1), repeat=2):
        key_a = (x, y) if policy.bell_mode == SIGNALING else x
        key_b = (x, y) if policy.bell_mode == SIGNALING else y
        state_a, _ = demon_transform(x, _keyed(table_a, key_a, x), alice)
        state_b, _ = demon_transform(y, _keyed(table_b, key_b, y), bob)
        pa[x, y] = qlin.prob_plus(state_a, alice[x])
        pb[x, y] = qlin.prob_plus(state_b, bob[y])
    source = policy.source_state
    idle_tables = bell_sampling_tables(qlin.tensor(source, source), cfg)
    p = policy.activation_probability

    def chunk(c: int, start: int, stop: int):
        u = stream(seed, TAG_RUNS, c).random((5, stop - start))
        active = u[0] < p
        x = uniform_index(u[1], 2)
        y = uniform_index(u[2], 2)
        mem_a, mem_b = DemonMemory(2), DemonMemory(2)
        ledger = ThermalLedger(temperature)
        for i in np.flatnonzero(active):
            entangle_with_setting_source(2, float(u[1, i]), mem_a)
            entangle_with_setting_source(2, float(u[2, i]), mem_b)
            erase(mem_a, ledger)
            erase(mem_b, ledger)
        a_idle, b_idle = sample_bell_outcomes(idle_tables, x, y, u[3], u[4])
        a_act = qlin.sample_outcomes(pa[x, y], u[3])
        b_act = qlin.sample_outcomes(pb[x, y], u[4])
        cols = {
            "setting_a": x,
            "setting_b": y,
            "declared_a": np.where(active, a_act, a_idle).astype(np.int8),
            "measured_b": np.where(active, b_act, b_idle).astype(np.int8),
            "demon_active": active,
        }
        return cols, ledger

    results = map_chunks(chunk, cfg.n_runs, threads)
    transcript = Transcript.concat([r[0] for r in results], seed, _config_echo(cfg))
    return transcript, ThermalLedger.total([r[1] for r in results], temperature)


def _keyed(table: CheatTable, key, local: int) -> CheatTable:
    # view of one entry under the local index so demon_transform can look it up
    return CheatTable({local: table[key]})


def deterministic_outcome(state: StateVector, setting: MeasurementSetting) -> int:
    """Outcome of measuring an eigenstate of ``setting``; errors if it is not one."""
    p = qlin.prob_plus(state, setting)
    if p not in (0.0, 1.0):
        raise ValueError(f"state is not an eigenstate of the setting (P(+1) = {p})")
    return 1 if p == 1.0 else -1


def deterministic_chsh(table_a: CheatTable, table_b: CheatTable, cfg: BellConfig) -> float:
    """CHSH of a non-signaling table pair, from the Born rule on the transformed qubits."""
    alice, bob = cfg.alice_settings, cfg.bob_settings
    a = [deterministic_outcome(demon_transform(x, table_a, alice)[0], alice[x]) for x in (0, 1)]
    b = [deterministic_outcome(demon_transform(y, table_b, bob)[0], bob[y]) for y in (0, 1)]
    return float(bounds.chsh_combination(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]))


def best_nonsignaling_tables(cfg: BellConfig) -> tuple[CheatTable, CheatTable, float, list[float]]:
    """Exhaustive search over the 4 x 4 local table pairs.

    Returns an argmax pair, the maximal CHSH and the CHSH of every pair in
    enumeration order.
    """
    options = [CheatTable.correlated(signs) for signs in itertools.product((1, -1), repeat=2)]
    values = []
    best = (-math.inf, None, None)
    for ta, tb in itertools.product(options, repeat=2):
        v = deterministic_chsh(ta, tb, cfg)
        values.append(v)
        if v > best[0]:
            best = (v, ta, tb)
    return best[1], best[2], best[0], values


def signaling_tables() -> tuple[CheatTable, CheatTable]:
    """Pair-keyed tables whose outcome products are +1 except at (x, y) = (0, 1)."""
    pairs = list(itertools.product((0, 1), repeat=2))
    table_a = CheatTable.from_signs({xy: 1 for xy in pairs})
    table_b = CheatTable.from_signs({xy: (-1 if xy == (0, 1) else 1) for xy in pairs})
    return table_a, table_b
