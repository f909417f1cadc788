import itertools
import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from demonbell import bounds, protocol, qlin
from demonbell.qlin import MeasurementSetting

DEG = math.pi / 180


def brute_lambda_max(settings):
    """Independent oracle: largest eigenvalue of the averaged spin operator, all sign vectors."""
    m = len(settings)
    best = -math.inf
    for signs in itertools.product((1, -1), repeat=m):
        op = sum(a * qlin.pauli_observable(s) for a, s in zip(signs, settings)) / m
        best = max(best, np.linalg.eigvalsh(op)[-1])
    return best


def test_lhs_bound_two_orthogonal_settings():
    r = bounds.lhs_bound(qlin.settings_from_angles([0, 90 * DEG]))
    assert r.value == pytest.approx(0.7071067811865476, abs=1e-12)
    assert r.enumerated_count == 4


def test_lhs_bound_planar_three_settings():
    # {0, 60, 120} degrees: (+,+,+) sums to a vector of norm 2, so the bound is 2/3
    r = bounds.lhs_bound(qlin.settings_from_angles([0, 60 * DEG, 120 * DEG]))
    assert r.value == pytest.approx(2 / 3, abs=1e-12)
    assert r.value == pytest.approx(brute_lambda_max(qlin.settings_from_angles([0, 60 * DEG, 120 * DEG])), abs=1e-12)
    assert r.enumerated_count == 8


def test_lhs_bound_orthogonal_triad():
    triad = [MeasurementSetting(v, k) for k, v in enumerate([(1, 0, 0), (0, 1, 0), (0, 0, 1)])]
    assert bounds.lhs_bound(triad).value == pytest.approx(0.5773502691896258, abs=1e-12)


def test_lhs_bound_single_setting():
    assert bounds.lhs_bound([MeasurementSetting((0, 0, 1))]).value == 1.0


def test_lhs_bound_refuses_large_m():
    with pytest.raises(ValueError, match="sampling"):
        bounds.lhs_bound(qlin.settings_from_angles(np.linspace(0, 3, 25)))
    with pytest.raises(ValueError):
        bounds.lhs_bound([])


@pytest.mark.parametrize("m", [2, 3, 4, 5, 7])
def test_lhs_bound_matches_eigenvalue_oracle_and_witness(m):
    rng = np.random.default_rng(m)
    vecs = rng.normal(size=(m, 3))
    settings = [MeasurementSetting(tuple(v / np.linalg.norm(v)), k) for k, v in enumerate(vecs)]
    r = bounds.lhs_bound(settings)
    assert r.value == pytest.approx(brute_lambda_max(settings), abs=1e-12)
    witnessed = bounds.lhs_witness_value(settings, r.witness["signs"], r.witness["state"])
    assert witnessed == pytest.approx(r.value, abs=1e-12)


def test_equally_spaced_planar_closed_form():
    for m in range(2, 9):
        settings = qlin.settings_from_angles([k * math.pi / m for k in range(m)])
        assert bounds.lhs_bound(settings).value == pytest.approx(1 / (m * math.sin(math.pi / (2 * m))), abs=1e-12)


def test_lhs_bound_rotation_and_relabel_invariance():
    rng = np.random.default_rng(1)
    vecs = rng.normal(size=(5, 3))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    base = bounds.lhs_bound([MeasurementSetting(tuple(v)) for v in vecs]).value
    for rot in Rotation.random(20, random_state=2):
        rotated = rot.apply(vecs)
        assert bounds.lhs_bound([MeasurementSetting(tuple(v)) for v in rotated]).value == pytest.approx(base, abs=1e-10)
    shuffled = vecs[rng.permutation(5)]
    assert bounds.lhs_bound([MeasurementSetting(tuple(v)) for v in shuffled]).value == pytest.approx(base, abs=1e-12)


def test_lhs_bound_handles_cancelling_settings():
    # antipodal pair: every sign vector either cancels or doubles
    r = bounds.lhs_bound([MeasurementSetting((0, 0, 1)), MeasurementSetting((0, 0, -1))])
    assert r.value == pytest.approx(1.0)


def test_lhv_chsh_bound():
    r = bounds.lhv_chsh_bound()
    assert r.value == 2.0
    assert r.enumerated_count == 16


def test_lhv_witness_round_trip_through_chsh_value():
    w = bounds.lhv_chsh_bound().witness
    x = np.repeat([0, 0, 1, 1], 3)
    y = np.repeat([0, 1, 0, 1], 3)
    a = np.array(w["alice"], dtype=np.int8)[x]
    b = np.array(w["bob"], dtype=np.int8)[y]
    t = protocol.Transcript(x, y, a, b, np.zeros(x.size, bool), seed=0)
    assert protocol.chsh_value(t).value == 2.0


def test_lhv_witness_perturbation():
    # one flip moves the value by 0 or 4: entries whose partner terms cancel leave it at 2
    w = bounds.lhv_chsh_bound().witness
    a, b = list(w["alice"]), list(w["bob"])
    values = []
    for side, idx in itertools.product(("alice", "bob"), (0, 1)):
        aa, bb = list(a), list(b)
        (aa if side == "alice" else bb)[idx] *= -1
        values.append(bounds.chsh_combination(aa[0] * bb[0], aa[0] * bb[1], aa[1] * bb[0], aa[1] * bb[1]))
    assert set(values) <= {2, -2}
    assert min(values) <= 0


def test_quantum_value_chsh():
    cfg = protocol.standard_bell_config(1)
    assert bounds.quantum_value_chsh(qlin.phi_plus(), cfg) == pytest.approx(2.8284271247461903, abs=1e-12)
    same = protocol.BellConfig((0.3, 0.3), (0.3, 0.3), 1)
    assert bounds.quantum_value_chsh(qlin.phi_plus(), same) == pytest.approx(2.0, abs=1e-12)


def test_quantum_value_chsh_product_state():
    ket0 = qlin.StateVector(np.array([1, 0]))
    cfg = protocol.standard_bell_config(1)
    value = bounds.quantum_value_chsh(qlin.tensor(ket0, ket0), cfg)
    # product state: correlators factor into single-qubit means cos(theta)
    ma = [math.cos(t) for t in cfg.alice_angles]
    mb = [math.cos(t) for t in cfg.bob_angles]
    expected = ma[0] * mb[0] + ma[1] * mb[0] + ma[1] * mb[1] - ma[0] * mb[1]
    assert value == pytest.approx(expected, abs=1e-12)
    assert abs(value) <= 2


def test_sandwich():
    settings = qlin.settings_from_angles([0, 90 * DEG])
    assert bounds.lhs_bound(settings).value < 1
    assert bounds.lhv_chsh_bound().value == 2 < bounds.quantum_value_chsh(
        qlin.phi_plus(), protocol.standard_bell_config(1)
    )


def test_bound_result_json():
    r = bounds.lhs_bound(qlin.settings_from_angles([0, 90 * DEG])).to_json()
    assert set(r) == {"value", "witness", "enumerated_count"}
    assert set(r["witness"]["state"]) == {"re", "im"}
