import numpy as np
import pytest

import minimaxctrl as mc
from minimaxctrl.disturbance import (
    confusing_disturbance,
    emit,
    general_confusing,
    load_sequence,
    save_sequence,
    spec_from_dict,
    spec_to_dict,
    validate_spec,
)


def test_zero_emits_zero(models):
    spec = validate_spec(mc.DisturbanceSpec(kind="zero"), models, 2, 10)
    np.testing.assert_array_equal(emit(spec, 0, np.ones(3), np.zeros(1)), np.zeros(3))


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        mc.DisturbanceSpec(kind="brownian")


def test_confusing_identity(models):
    """Under model j's dynamics the target model explains the step exactly."""
    j, i = 2, 3
    Aj, Bj = models.pair(j)
    Ai, Bi = models.pair(i)
    x = np.array([1.0, -0.5, 2.0])
    u = np.array([0.7])
    w = confusing_disturbance(models, j, i, x, u)
    x_next = Aj @ x + Bj @ u + w
    assert np.linalg.norm(x_next - (Ai @ x + Bi @ u)) <= 1e-12


def test_confusing_needs_distinct_target(models):
    with pytest.raises(ValueError):
        confusing_disturbance(models, 2, 2, np.ones(3), np.zeros(1))
    with pytest.raises(ValueError):
        validate_spec(
            mc.DisturbanceSpec(kind="confusing", target=2), models, 2, 10
        )
    with pytest.raises(ValueError):
        validate_spec(
            mc.DisturbanceSpec(kind="confusing", target=9), models, 2, 10
        )


def test_general_confusing_recovers_pairwise_form(models):
    """theta = e_i - e_j reproduces the two-model confusing construction."""
    j, i = 2, 3
    theta = np.zeros(4)
    theta[i - 1], theta[j - 1] = 1.0, -1.0
    x = np.array([0.3, 1.1, -0.4])
    u = np.array([-0.2])
    w_pair = confusing_disturbance(models, j, i, x, u)
    w_gen = general_confusing(models, theta, x, u)
    np.testing.assert_allclose(w_gen, w_pair, atol=1e-12)


def test_general_confusing_checks_theta_length(models):
    with pytest.raises(ValueError):
        general_confusing(models, np.ones(3), np.ones(3), np.zeros(1))


def test_sinusoid_respects_amplitude(models):
    spec = validate_spec(
        mc.DisturbanceSpec(
            kind="sinusoid", amplitude=0.8, omega=0.3, phase=0.1,
            direction=np.array([2.0, 0.0, 0.0]),  # gets normalized
        ),
        models, 2, 100,
    )
    assert np.linalg.norm(spec.direction) == pytest.approx(1.0, abs=1e-12)
    for k in range(100):
        w = emit(spec, k, np.zeros(3), np.zeros(1))
        assert np.linalg.norm(w) <= 0.8 + 1e-12


def test_peak_sinusoid_spec_sits_at_scan_peak(models, penalties, benchmark_controller):
    A, B = models.pair(2)
    spec = mc.peak_sinusoid_spec(A, B, benchmark_controller.K, penalties)
    scan = mc.closed_loop_scan(A, B, benchmark_controller.K, penalties)
    assert spec.omega == scan.peak_omega
    assert spec.amplitude == 1.0
    assert spec.phase == 0.0
    assert np.linalg.norm(spec.direction) == pytest.approx(1.0, abs=1e-12)


def test_peak_sinusoid_degenerates_at_nyquist(models, penalties,
                                              benchmark_controller):
    """A zero-phase sine sampled at integer steps vanishes when omega = pi.

    The benchmark set's certified loop peaks exactly at the Nyquist
    frequency, so the constructed signal is zero on the sample grid.
    Frozen here because downstream regret behavior depends on it.
    """
    A, B = models.pair(2)
    spec = mc.peak_sinusoid_spec(A, B, benchmark_controller.K, penalties)
    assert spec.omega == pytest.approx(np.pi, abs=1e-12)
    sampled = [emit(spec, k, np.zeros(3), np.zeros(1)) for k in range(50)]
    assert np.max(np.abs(sampled)) <= 1e-12


def test_worst_case_needs_gain(models):
    spec = validate_spec(mc.DisturbanceSpec(kind="hinf_worst_case"), models, 2, 10)
    with pytest.raises(ValueError):
        emit(spec, 0, np.ones(3), np.zeros(1))


def test_worst_case_is_state_feedback(models, benchmark_controller):
    spec = validate_spec(
        mc.DisturbanceSpec(kind="hinf_worst_case", L=benchmark_controller.L),
        models, 2, 10,
    )
    x = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(emit(spec, 5, x, np.zeros(1)),
                               benchmark_controller.L @ x)


def test_stable_loop_disturbance_has_finite_energy(models, penalties,
                                                   benchmark_controller):
    """Worst-case feedback on the certified loop injects summable energy."""
    A, B = models.pair(2)
    K, L = benchmark_controller.K, benchmark_controller.L
    x = np.ones(3)
    energies = []
    for _ in range(101):
        w = L @ x
        energies.append(float(w @ w))
        x = A @ x - B @ (K @ x) + w
    total = sum(energies)
    tail = sum(energies[75:])
    assert total > 0
    assert tail <= 1e-6 * total


def test_external_sequence_round_trip(models, tmp_path):
    rng = np.random.default_rng(3)
    W = rng.standard_normal((7, 3))
    path = tmp_path / "w.csv"
    save_sequence(path, W)
    again = load_sequence(path)
    np.testing.assert_allclose(again, W, atol=1e-11)

    spec = validate_spec(
        mc.DisturbanceSpec(kind="external", sequence=again), models, 2, 7
    )
    np.testing.assert_array_equal(emit(spec, 3, np.zeros(3), np.zeros(1)), again[3])
    with pytest.raises(ValueError):
        emit(spec, 7, np.zeros(3), np.zeros(1))


def test_external_width_checked(models):
    with pytest.raises(ValueError):
        validate_spec(
            mc.DisturbanceSpec(kind="external", sequence=np.ones((5, 2))),
            models, 2, 5,
        )


def test_spec_dict_round_trip(models):
    from minimaxctrl.disturbance import specs_equal

    specs = [
        mc.DisturbanceSpec(kind="zero"),
        mc.DisturbanceSpec(kind="hinf_worst_case"),
        mc.DisturbanceSpec(kind="sinusoid", amplitude=0.5, omega=1.2,
                           phase=0.3, direction=np.array([0.0, 1.0, 0.0])),
        mc.DisturbanceSpec(kind="confusing", target=3),
    ]
    for spec in specs:
        doc = spec_to_dict(spec)
        again = spec_from_dict(doc, models.n)
        assert specs_equal(spec, again)


def test_spec_from_dict_rejects_unknown_keys(models):
    with pytest.raises(ValueError):
        spec_from_dict({"kind": "zero", "amplitude": 2.0}, models.n)


def test_loop_defaults():
    assert mc.DisturbanceSpec(kind="zero").generating_loop == "open"
    assert mc.DisturbanceSpec(kind="sinusoid").generating_loop == "open"
    assert mc.DisturbanceSpec(kind="hinf_worst_case").generating_loop == "hinf"
    assert mc.DisturbanceSpec(kind="confusing", target=3).generating_loop == "minimax"


def test_open_kind_cannot_claim_a_loop(models):
    spec = mc.DisturbanceSpec(kind="zero", generating_loop="minimax")
    with pytest.raises(ValueError):
        validate_spec(spec, models, 2, 10)
