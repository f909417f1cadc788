"""Landauer erasure accounting and heat-anomaly detection."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .seeding import TAG_HEAT, stream

BOLTZMANN_K = 1.380649e-23  # J/K, exact SI value
LN2 = math.log(2.0)


def landauer_cost(bits: float, temperature: float) -> float:
    """Minimum heat in joules for erasing ``bits`` bits at ``temperature`` kelvin."""
    if bits < 0 or not math.isfinite(bits):
        raise ValueError(f"bits must be a finite non-negative number, got {bits!r}")
    if not temperature > 0 or not math.isfinite(temperature):
        raise ValueError(f"temperature must be positive, got {temperature!r}")
    return bits * BOLTZMANN_K * temperature * LN2


def kt_ln2(temperature: float) -> float:
    return landauer_cost(1.0, temperature)


@dataclass
class ThermalLedger:
    """Cumulative erasure heat at a fixed temperature.

    Charges are kept as ``{bits per erasure: count}`` so that totals are
    exact multiples (no drift from repeated float addition).
    """

    temperature: float
    charges: Counter = field(default_factory=Counter)
    boltzmann_k: float = BOLTZMANN_K

    def __post_init__(self):
        landauer_cost(0.0, self.temperature)

    def charge(self, bits: float, count: int = 1) -> None:
        if bits < 0 or count < 0:
            raise ValueError("ledger charges must be non-negative")
        if count:
            self.charges[float(bits)] += int(count)

    @property
    def erasures(self) -> int:
        return sum(self.charges.values())

    @property
    def bits(self) -> float:
        return math.fsum(size * count for size, count in self.charges.items())

    @property
    def joules(self) -> float:
        return math.fsum(count * landauer_cost(size, self.temperature) for size, count in self.charges.items())

    @property
    def kt_ln2_units(self) -> float:
        return self.joules / kt_ln2(self.temperature)

    def merge(self, other: ThermalLedger) -> ThermalLedger:
        if other.temperature != self.temperature:
            raise ValueError("cannot merge ledgers kept at different temperatures")
        return ThermalLedger(self.temperature, self.charges + other.charges)

    @classmethod
    def total(cls, ledgers, temperature: float) -> ThermalLedger:
        out = cls(temperature)
        for led in ledgers:
            out = out.merge(led)
        return out

    def to_dict(self) -> dict:
        return {
            "temperature_K": self.temperature,
            "erasures": self.erasures,
            "bits": self.bits,
            "joules": self.joules,
            "kTln2_units": self.kt_ln2_units,
        }


@dataclass(frozen=True)
class EnvironmentModel:
    """Independent Gaussian background heat per run, in joules."""

    per_run_background_mean: float = 0.0
    per_run_background_std: float = 1.0

    def __post_init__(self):
        if not self.per_run_background_std > 0:
            raise ValueError("background std must be positive")
        if not math.isfinite(self.per_run_background_mean):
            raise ValueError("background mean must be finite")

    @classmethod
    def in_kt_ln2(cls, temperature: float, mean: float = 0.0, std: float = 1.0) -> EnvironmentModel:
        unit = kt_ln2(temperature)
        return cls(mean * unit, std * unit)


@dataclass(frozen=True)
class DetectorConfig:
    alpha: float = 0.05
    beta_power: float = 0.95

    def __post_init__(self):
        for name in ("alpha", "beta_power"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v!r}")


@dataclass(frozen=True)
class DetectionResult:
    reject: bool
    z_score: float
    p_value: float
    n: int

    def to_dict(self) -> dict:
        return {"z": self.z_score, "p_value": self.p_value, "reject": self.reject, "n": self.n}


def simulate_heat_record(n_runs: int, demon_heat_per_run, env: EnvironmentModel, seed: int) -> np.ndarray:
    """Observed per-run heat: Gaussian background plus the demon's dissipation."""
    demon = np.asarray(demon_heat_per_run, dtype=float)
    if demon.shape != (n_runs,):
        raise ValueError(f"need {n_runs} demon heat values, got shape {demon.shape}")
    rng = stream(seed, TAG_HEAT)
    background = rng.normal(env.per_run_background_mean, env.per_run_background_std, size=n_runs)
    return background + demon


def detect_anomaly(heat_record, env: EnvironmentModel, cfg: DetectorConfig) -> DetectionResult:
    """One-sided known-variance z-test of excess mean heat."""
    x = np.asarray(heat_record, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("empty heat record")
    if n < 2:
        raise ValueError("detector needs at least two runs")
    z = (x.mean() - env.per_run_background_mean) * math.sqrt(n) / env.per_run_background_std
    p = float(norm.sf(z))
    return DetectionResult(bool(p < cfg.alpha), float(z), p, int(n))


def required_runs(per_run_excess: float, env: EnvironmentModel, cfg: DetectorConfig) -> int:
    """Smallest batch size whose z-test reaches the configured power."""
    if not per_run_excess > 0:
        raise ValueError("per-run excess heat must be positive; an idle demon is undetectable")
    z_sum = norm.isf(cfg.alpha) + norm.ppf(cfg.beta_power)
    return int(math.ceil((z_sum * env.per_run_background_std / per_run_excess) ** 2))


def detection_power(n: int, per_run_excess: float, env: EnvironmentModel, cfg: DetectorConfig) -> float:
    """Analytic power of the z-test at batch size ``n``."""
    shift = per_run_excess * math.sqrt(n) / env.per_run_background_std
    return float(norm.sf(norm.isf(cfg.alpha) - shift))
