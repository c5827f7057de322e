import math

import numpy as np
import pytest

from fluctherm.approx import FourierSeries, build_series
from fluctherm.circuitsim import (
    amplification_schedule,
    amplitude_amplification,
    chebyshev_split,
    direct_series_action,
    series_scalar_from_split,
    simulate_lcu,
    simulate_qsp,
    solve_phase_set,
    solve_qsp_phases,
    su2_qsp_matrices,
)
from fluctherm.errors import CertificationError, NoSignalError
from fluctherm.nonequilibrium import haar_random_unitary


def random_series(rng, j_order, scale=1.0):
    pos = scale * (rng.standard_normal(j_order + 1) + 1j * rng.standard_normal(j_order + 1))
    pos[0] = pos[0].real
    coeffs = np.concatenate([pos[1:][::-1].conj(), [pos[0]], pos[1:]])
    return FourierSeries.from_coefficients(1.0, -1.0, 0.2, coeffs)


def random_state(rng, dim):
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


class TestLcu:
    def test_identity_unitary_collapses_powers(self):
        rng = np.random.default_rng(0)
        ser = random_series(rng, 4)
        psi = random_state(rng, 4)
        res = simulate_lcu(ser, np.eye(4, dtype=complex), psi)
        expected = (np.sum(ser.coeffs) / ser.l1) * psi
        assert np.max(np.abs(res.top_block - expected)) <= 1e-12

    def test_explicit_three_term_sum(self):
        rng = np.random.default_rng(1)
        coeffs = np.array([0.3 - 0.2j, 0.5, 0.3 + 0.2j])
        ser = FourierSeries.from_coefficients(1.0, 0.0, 0.2, coeffs)
        u = haar_random_unitary(2, rng).matrix
        psi = random_state(rng, 2)
        direct = (
            coeffs[0] * u.conj().T + coeffs[1] * np.eye(2) + coeffs[2] * u
        ) @ psi / ser.l1
        res = simulate_lcu(ser, u, psi)
        assert np.max(np.abs(res.top_block - direct)) <= 1e-10

    def test_matches_direct_oracle_on_random_instances(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            j_order = int(rng.integers(1, 14))
            dim = int(rng.choice([2, 4, 8]))
            ser = random_series(rng, j_order)
            u = haar_random_unitary(dim, rng).matrix
            psi = random_state(rng, dim)
            res = simulate_lcu(ser, u, psi)
            oracle = direct_series_action(ser, u, psi)
            assert np.max(np.abs(res.top_block - oracle)) <= 1e-10
            assert res.probability_conservation_defect() <= 1e-10

    def test_rejects_non_unitary(self):
        rng = np.random.default_rng(3)
        ser = random_series(rng, 2)
        with pytest.raises(ValueError):
            simulate_lcu(ser, np.ones((2, 2), dtype=complex), random_state(rng, 2))


class TestChebyshevSplit:
    def test_real_coefficients_kill_q2(self):
        coeffs = np.array([0.25, 0.5, 0.25])
        ser = FourierSeries.from_coefficients(1.0, 0.0, 0.1, coeffs)
        _, q2 = chebyshev_split(ser)
        assert np.allclose(q2, 0.0)

    def test_imaginary_sides_keep_constant_p1(self):
        coeffs = np.array([0.25j, 0.5, -0.25j])
        ser = FourierSeries.from_coefficients(1.0, 0.0, 0.1, coeffs)
        p1, _ = chebyshev_split(ser)
        assert np.allclose(p1[1:], 0.0)
        assert p1[0] == pytest.approx(0.5 / ser.l1)

    def test_reconstruction_identity_on_theta_grid(self):
        rng = np.random.default_rng(4)
        ser = random_series(rng, 9)
        thetas = np.linspace(0.0, 2.0 * math.pi, 257, endpoint=False)
        direct = (
            np.exp(1j * np.outer(thetas, ser.js)) @ ser.coeffs
        ) / ser.l1
        split = series_scalar_from_split(ser, thetas)
        assert np.max(np.abs(split - direct)) <= 1e-10

    def test_paper_scale_series_reconstruction(self):
        ser = build_series(1.0, 50.0, -1.0, 0.05)
        thetas = np.linspace(0.0, 2.0 * math.pi, 101, endpoint=False)
        direct = (np.exp(1j * np.outer(thetas, ser.js)) @ ser.coeffs) / ser.l1
        assert np.max(np.abs(series_scalar_from_split(ser, thetas) - direct)) <= 1e-10


class TestPhaseSolver:
    def test_constant_target(self):
        phases, residual = solve_qsp_phases(np.array([1.0]), "first")
        assert residual <= 1e-6
        # phases = {0} reproduces the constant exactly
        y = np.linspace(-0.99, 0.99, 101)
        s = np.sqrt(1.0 - y**2)
        exact = su2_qsp_matrices(np.zeros(1), y, s)[:, 0, 0].real
        assert np.max(np.abs(exact - 1.0)) == 0.0

    def test_pure_t2_target_has_exact_three_phase_solution(self):
        # scanning the three-phase family: V(0,0,0) = W^2, whose top entry
        # is T_2(y) exactly
        y = np.linspace(-1.0, 1.0, 201)
        s = np.sqrt(np.clip(1.0 - y**2, 0.0, None))
        recon = su2_qsp_matrices(np.zeros(3), y, s)[:, 0, 0].real
        assert np.max(np.abs(recon - (2.0 * y**2 - 1.0))) <= 1e-10
        phases, residual = solve_qsp_phases(np.array([0.0, 1.0]), "first")
        assert residual <= 1e-6
        assert len(phases) == 3

    def test_gradient_matches_finite_differences(self):
        from fluctherm.circuitsim import _qsp_objective

        rng = np.random.default_rng(5)
        y = np.cos(np.linspace(0.3, 1.2, 7))
        s = np.sin(np.linspace(0.3, 1.2, 7))
        target = rng.standard_normal(7) * 0.1
        for kind in (1, 2):
            phases = rng.standard_normal(9) * 0.3
            _, grad = _qsp_objective(phases, y, s, target, kind)
            h = 1e-6
            for k in range(9):
                shifted = phases.copy()
                shifted[k] += h
                op, _ = _qsp_objective(shifted, y, s, target, kind)
                shifted[k] -= 2 * h
                om, _ = _qsp_objective(shifted, y, s, target, kind)
                assert grad[k] == pytest.approx((op - om) / (2 * h), abs=1e-6)

    def test_lemma4_series_phase_set(self):
        ser = build_series(1.0, 1.0, -1.0, 0.05)
        phase_set = solve_phase_set(ser)
        assert phase_set.residual1 <= 1e-6
        assert phase_set.residual2 <= 1e-6
        assert phase_set.phases1.shape[0] == 2 * ser.J + 1
        # converged endpoint structure
        assert phase_set.phases1[0] == pytest.approx(math.pi / 4.0, abs=1e-6)
        assert phase_set.phases1[-1] == pytest.approx(math.pi / 4.0, abs=1e-6)
        assert phase_set.phases2[0] == pytest.approx(0.0, abs=1e-6)
        assert phase_set.phases2[-1] == pytest.approx(-math.pi / 2.0, abs=1e-6)

    def test_rejects_oversized_target(self):
        with pytest.raises(ValueError):
            solve_qsp_phases(np.array([1.5]), "first")


class TestQsp:
    def test_identity_unitary(self):
        rng = np.random.default_rng(6)
        ser = random_series(rng, 3, scale=0.5)
        phase_set = solve_phase_set(ser)
        psi = random_state(rng, 4)
        res = simulate_qsp(ser, phase_set, np.eye(4, dtype=complex), psi)
        expected = (np.sum(ser.coeffs) / (2.0 * ser.l1)) * psi
        assert np.max(np.abs(res.top_block - expected)) <= 1e-8

    def test_single_eigenphase_block_value(self):
        rng = np.random.default_rng(7)
        ser = random_series(rng, 4, scale=0.5)
        phase_set = solve_phase_set(ser)
        theta = 0.83
        u = np.array([[np.exp(1j * theta)]])
        psi = np.array([1.0 + 0.0j])
        res = simulate_qsp(ser, phase_set, u, psi)
        expected = series_scalar_from_split(ser, np.array([theta]))[0] / 2.0
        assert abs(res.top_block[0] - expected) <= 1e-8

    def test_agrees_with_lcu_on_random_two_qubit_instances(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            ser = random_series(rng, 6, scale=0.5)
            phase_set = solve_phase_set(ser)
            u = haar_random_unitary(4, rng).matrix
            psi = random_state(rng, 4)
            lcu = simulate_lcu(ser, u, psi)
            qsp = simulate_qsp(ser, phase_set, u, psi)
            assert np.max(np.abs(2.0 * qsp.top_block - lcu.top_block)) <= 1e-6
            assert qsp.probability_conservation_defect() <= 1e-10
            assert qsp.ancilla_count == 3

    def test_rejects_uncertified_phases(self):
        rng = np.random.default_rng(9)
        ser = random_series(rng, 3, scale=0.5)
        phase_set = solve_phase_set(ser)
        bad = type(phase_set)(
            phases1=phase_set.phases1,
            phases2=phase_set.phases2,
            residual1=1e-3,
            residual2=phase_set.residual2,
            target_p1=phase_set.target_p1,
            target_q2=phase_set.target_q2,
        )
        with pytest.raises(CertificationError):
            simulate_qsp(ser, bad, np.eye(4, dtype=complex), random_state(rng, 4))


class TestAmplification:
    @staticmethod
    def prepared_state(rng, amplitude, anc=4, dim=8):
        state = np.zeros((anc, dim), dtype=complex)
        good = random_state(rng, dim)
        bad = rng.standard_normal((anc - 1, dim)) + 1j * rng.standard_normal(
            (anc - 1, dim)
        )
        bad /= np.linalg.norm(bad)
        state[0] = amplitude * good
        state[1:] = math.sqrt(1.0 - amplitude**2) * bad
        return state, good

    def test_full_amplitude_returns_immediately(self):
        rng = np.random.default_rng(10)
        state, good = self.prepared_state(rng, 1.0 - 1e-16)
        final, report = amplitude_amplification(state, 4)
        assert report.rounds_used == 0
        assert abs(np.vdot(good, final.amplitudes)) == pytest.approx(1.0)

    def test_half_amplitude_needs_one_round(self):
        rng = np.random.default_rng(11)
        state, _ = self.prepared_state(rng, 0.5)
        _, report = amplitude_amplification(state, 4)
        assert report.rounds_used == 1
        assert math.sin(3.0 * math.asin(0.5)) == pytest.approx(1.0)

    def test_amplitude_law(self):
        rng = np.random.default_rng(12)
        for amplitude in (0.31, 0.07, 0.011):
            state, _ = self.prepared_state(rng, amplitude)
            theta = math.asin(amplitude)
            k = amplification_schedule(amplitude)
            psi = state.copy()
            init = state.copy()
            for _ in range(k):
                psi[0] *= -1.0
                psi = 2.0 * np.vdot(init, psi) * init - psi
            achieved = np.linalg.norm(psi[0])
            assert achieved == pytest.approx(
                abs(math.sin((2 * k + 1) * theta)), abs=1e-10
            )

    def test_final_state_is_normalized_projection(self):
        rng = np.random.default_rng(13)
        state, good = self.prepared_state(rng, 0.2)
        final, report = amplitude_amplification(state, 4)
        assert abs(np.vdot(good, final.amplitudes)) == pytest.approx(1.0, abs=1e-9)
        assert report.final_overlap == pytest.approx(1.0, abs=1e-9)

    def test_no_signal(self):
        state = np.zeros((4, 8), dtype=complex)
        state[1, 0] = 1.0
        with pytest.raises(NoSignalError):
            amplitude_amplification(state, 4)

    def test_schedule_is_bounded_by_quarter_period(self):
        for amplitude in (0.4, 0.09, 0.014, 0.003):
            k = amplification_schedule(amplitude)
            assert k <= math.ceil(math.pi / (4.0 * math.asin(amplitude))) + 1
