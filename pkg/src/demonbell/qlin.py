"""Dense complex linear algebra for one and two qubits.

States are stored as immutable numpy vectors. Measurements are dichotomic
spin observables ``n . sigma`` given by a unit Bloch vector. Every sampling
routine takes its uniform random numbers explicitly, so the functions are
pure and the decision rule is ``outcome = +1 iff rand < P(+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ALGEBRA_TOL = 1e-12
EXPECTATION_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state of one (dim 2) or two (dim 4) qubits."""

    amps: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amps))
        if amps.size not in (2, 4):
            raise ValueError(f"state dimension must be 2 or 4, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("state amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > ALGEBRA_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    @classmethod
    def from_amplitudes(cls, amps) -> StateVector:
        """Normalize ``amps`` and build a state."""
        a = np.asarray(amps, dtype=complex).ravel()
        n = np.linalg.norm(a)
        if n == 0 or not np.isfinite(n):
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(a / n)

    def density(self) -> DensityOp:
        return DensityOp(np.outer(self.amps, self.amps.conj()))


@dataclass(frozen=True)
class DensityOp:
    entries: np.ndarray

    def __post_init__(self):
        rho = _frozen(self.entries)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density operator must be square")
        if not np.all(np.isfinite(rho)):
            raise ValueError("density operator entries must be finite")
        if not np.allclose(rho, rho.conj().T, atol=ALGEBRA_TOL, rtol=0):
            raise ValueError("density operator is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > ALGEBRA_TOL:
            raise ValueError("density operator does not have unit trace")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("density operator is not positive semidefinite")
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def expectation(self, op: np.ndarray) -> float:
        return float(np.trace(self.entries @ op).real)


@dataclass(frozen=True)
class MeasurementSetting:
    """Dichotomic qubit observable along the unit vector ``bloch``."""

    bloch: tuple[float, float, float]
    label: int = 0

    def __post_init__(self):
        b = tuple(float(c) for c in self.bloch)
        if len(b) != 3 or not all(math.isfinite(c) for c in b):
            raise ValueError("bloch must be a finite real 3-vector")
        if abs(math.sqrt(sum(c * c for c in b)) - 1.0) > ALGEBRA_TOL:
            raise ValueError(f"bloch vector {b} is not unit length")
        object.__setattr__(self, "bloch", b)

    @classmethod
    def from_angle(cls, theta: float, label: int = 0) -> MeasurementSetting:
        """Setting in the x-z plane, ``theta`` measured from +z towards +x."""
        return cls((math.sin(theta), 0.0, math.cos(theta)), label)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.bloch)


def settings_from_angles(angles) -> list[MeasurementSetting]:
    return [MeasurementSetting.from_angle(t, k) for k, t in enumerate(angles)]


def bloch_operator(bloch) -> np.ndarray:
    nx, ny, nz = bloch
    return nx * SIGMA_X + ny * SIGMA_Y + nz * SIGMA_Z


def pauli_observable(setting: MeasurementSetting) -> np.ndarray:
    """Return the 2x2 operator ``n_x X + n_y Y + n_z Z``."""
    if not isinstance(setting, MeasurementSetting):
        setting = MeasurementSetting(tuple(setting))
    return bloch_operator(setting.bloch)


def projector(setting: MeasurementSetting, sign: int) -> np.ndarray:
    _check_sign(sign)
    return 0.5 * (I2 + sign * pauli_observable(setting))


def _check_sign(sign: int) -> None:
    if sign not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {sign!r}")


def fix_phase(amps: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first nonzero amplitude is real positive."""
    amps = np.asarray(amps, dtype=complex)
    for a in amps:
        if abs(a) > ALGEBRA_TOL:
            return amps * (abs(a) / a)
    return amps


def eigenstate(setting: MeasurementSetting, sign: int) -> StateVector:
    """Eigenvector of ``n . sigma`` with eigenvalue ``sign``.

    Closed form in spherical coordinates of the Bloch vector; the global
    phase is fixed by making the first nonzero amplitude real positive.
    """
    _check_sign(sign)
    nx, ny, nz = setting.bloch if isinstance(setting, MeasurementSetting) else setting
    if sign < 0:
        nx, ny, nz = -nx, -ny, -nz
    # |n> = cos(t/2)|0> + e^{i phi} sin(t/2)|1>, with cos t = nz
    theta = math.atan2(math.hypot(nx, ny), nz)
    phi = math.atan2(ny, nx)
    amps = np.array([math.cos(theta / 2), complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2)])
    amps[np.abs(amps) < 1e-15] = 0.0
    return StateVector(fix_phase(amps))


def bloch_vector(state: StateVector) -> np.ndarray:
    """Bloch vector of a single-qubit pure state."""
    if state.dim != 2:
        raise ValueError("bloch_vector needs a single-qubit state")
    a = state.amps
    return np.array([float(np.vdot(a, s @ a).real) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)])


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Two-qubit product state, first factor as the major index."""
    if a.dim != 2 or b.dim != 2:
        raise ValueError("tensor takes two single-qubit states")
    return StateVector(np.kron(a.amps, b.amps))


def phi_plus() -> StateVector:
    return StateVector(np.array([1, 0, 0, 1]) / math.sqrt(2))


def _real(z: complex, tol: float = EXPECTATION_TOL) -> float:
    if abs(z.imag) > tol:
        raise ArithmeticError(f"expectation has imaginary residue {z.imag!r}")
    return float(z.real)


def expectation_single(state: StateVector, setting: MeasurementSetting) -> float:
    a = state.amps
    return _real(np.vdot(a, pauli_observable(setting) @ a))


def expectation_joint_diagnostic(
    state: StateVector, a: MeasurementSetting, b: MeasurementSetting
) -> tuple[float, float]:
    """Correlator clamped to [-1, 1] together with the discarded imaginary residue."""
    if state.dim != 4:
        raise ValueError("expectation_joint needs a two-qubit state")
    op = np.kron(pauli_observable(a), pauli_observable(b))
    z = np.vdot(state.amps, op @ state.amps)
    v = _real(z)
    return min(1.0, max(-1.0, v)), abs(float(z.imag))


def expectation_joint(state: StateVector, a: MeasurementSetting, b: MeasurementSetting) -> float:
    """``<state| (a . sigma) (x) (b . sigma) |state>``."""
    return expectation_joint_diagnostic(state, a, b)[0]


def _snap(p: float) -> float:
    # eigenstate inputs must give P in {0, 1} exactly under the decision rule
    if p < ALGEBRA_TOL:
        return 0.0
    if p > 1.0 - ALGEBRA_TOL:
        return 1.0
    return p


def prob_plus(state: StateVector, setting: MeasurementSetting) -> float:
    """Born probability of outcome +1, ``(1 + <n . sigma>) / 2``."""
    return _snap(0.5 * (1.0 + expectation_single(state, setting)))


def born_measure_single(
    state: StateVector, setting: MeasurementSetting, rand: float
) -> tuple[int, StateVector]:
    outcome = 1 if rand < prob_plus(state, setting) else -1
    return outcome, eigenstate(setting, outcome)


def joint_probabilities(state: StateVector, a: MeasurementSetting, b: MeasurementSetting) -> np.ndarray:
    """2x2 table ``P[i, j]`` of outcomes (x, y), index 0 for +1 and 1 for -1."""
    if state.dim != 4:
        raise ValueError("joint_probabilities needs a two-qubit state")
    table = np.empty((2, 2))
    for i, x in enumerate((1, -1)):
        for j, y in enumerate((1, -1)):
            op = np.kron(projector(a, x), projector(b, y))
            table[i, j] = max(0.0, _real(np.vdot(state.amps, op @ state.amps)))
    return table


def joint_sampling_table(state: StateVector, a: MeasurementSetting, b: MeasurementSetting):
    """Marginal ``P(x=+1)`` and conditionals ``P(y=+1 | x)`` for x = +1, -1."""
    table = joint_probabilities(state, a, b)
    p_a = _snap(table[0].sum())
    cond = []
    for row in table:
        total = row.sum()
        cond.append(_snap(row[0] / total) if total > 0 else 0.5)
    return p_a, cond[0], cond[1]


def born_measure_joint(
    state: StateVector, a: MeasurementSetting, b: MeasurementSetting, rand: tuple[float, float]
) -> tuple[int, int]:
    """Sample (x, y): x from its marginal, then y conditioned on x."""
    p_a, p_b_plus, p_b_minus = joint_sampling_table(state, a, b)
    x = 1 if rand[0] < p_a else -1
    p_b = p_b_plus if x == 1 else p_b_minus
    y = 1 if rand[1] < p_b else -1
    return x, y


def sample_outcomes(p_plus: np.ndarray, rand: np.ndarray) -> np.ndarray:
    """Vectorized decision rule; returns int8 array of +1/-1."""
    return np.where(rand < p_plus, 1, -1).astype(np.int8)
