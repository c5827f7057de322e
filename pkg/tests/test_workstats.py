import numpy as np
import pytest

from fluctherm.hamiltonians import (
    PAULIS,
    build_tfim,
    diagonalize,
    spectral_norm,
    tfim_coupling_part,
    tfim_field_part,
)
from fluctherm.nonequilibrium import haar_random_unitary, interpolated_evolution
from fluctherm.thermal import free_energy_difference
from fluctherm.workstats import (
    check_cutoff,
    cutoff_bound_commuting,
    cutoff_bound_general,
    cutoff_bound_local,
    eigenspace_overlap_check,
    forward_distribution,
    largest_cutoff,
    reverse_distribution,
    verify_fluctuation_identities,
    work_operator,
)

SPEC_Z = diagonalize(PAULIS["Z"])
SPEC_2Z = diagonalize(2.0 * PAULIS["Z"])


def random_hermitian(d, rng):
    h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (h + h.conj().T) / 2.0


def tfim_pair(n, beta=1.0):
    h0 = tfim_field_part(n, 1.0)
    v = tfim_coupling_part(n, 0.5)
    s0 = diagonalize(h0)
    s1 = diagonalize(h0.dense() + v.dense())
    td = free_energy_difference(s0, s1, beta)
    return h0, v, s0, s1, td


class TestWorkOperator:
    def test_equal_z_pair(self):
        w = work_operator(PAULIS["Z"], PAULIS["Z"])
        assert np.allclose(np.sort(np.linalg.eigvalsh(w)), [-2.0, 0.0, 0.0, 2.0])

    def test_z_two_z(self):
        w = work_operator(2.0 * PAULIS["Z"], PAULIS["Z"])
        assert np.allclose(np.sort(np.linalg.eigvalsh(w)), [-3.0, -1.0, 1.0, 3.0])

    def test_real_h0_conjugation_is_identity(self):
        h0 = build_tfim(2, 1.0, 0.5).dense()
        w = work_operator(h0, h0)
        eye = np.eye(4)
        assert np.allclose(w, np.kron(h0, eye) - np.kron(eye, h0))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            work_operator(np.eye(2), np.eye(4))


class TestForwardDistribution:
    def test_diagonal_pair_identity_drive(self):
        _, dist = forward_distribution(SPEC_Z, SPEC_2Z, 1.0, np.eye(2, dtype=complex))
        z0 = 2.0 * np.cosh(1.0)
        # only diagonal transitions: w = eps0 with probability e^{-beta eps0}/Z0
        assert np.allclose(dist.w, [-1.0, 1.0])
        assert dist.P[0] == pytest.approx(np.exp(1.0) / z0, abs=1e-14)
        assert dist.P[1] == pytest.approx(np.exp(-1.0) / z0, abs=1e-14)

    def test_trivial_pair(self):
        _, dist = forward_distribution(SPEC_Z, SPEC_Z, 1.2, np.eye(2, dtype=complex))
        assert np.allclose(dist.w, [0.0])
        assert dist.P[0] == pytest.approx(1.0, abs=1e-14)

    def test_tfim_n6_normalization(self):
        _, _, s0, s1, td = tfim_pair(6)
        table, dist = forward_distribution(s0, s1, 1.0, np.eye(64, dtype=complex))
        assert len(table) == 64 * 64
        assert table.p.sum() == pytest.approx(1.0, abs=1e-10)
        assert dist.P.sum() == pytest.approx(1.0, abs=1e-10)

    def test_work_values_recomputable(self):
        _, _, s0, s1, _ = tfim_pair(3)
        table, _ = forward_distribution(s0, s1, 1.0, np.eye(8, dtype=complex))
        recomputed = s1.eigenvalues[table.n_idx] - s0.eigenvalues[table.m_idx]
        assert np.max(np.abs(recomputed - table.w)) <= 1e-12

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            forward_distribution(SPEC_Z, SPEC_2Z, 1.0, np.ones((2, 2)))


class TestReverseAndIdentities:
    def test_reverse_diagonal_pair(self):
        dist = reverse_distribution(SPEC_Z, SPEC_2Z, 1.0, np.eye(2, dtype=complex))
        z1 = 2.0 * np.cosh(2.0)
        assert np.allclose(dist.w, [-1.0, 1.0])
        assert dist.P[0] == pytest.approx(np.exp(2.0) / z1, abs=1e-14)
        assert dist.P[1] == pytest.approx(np.exp(-2.0) / z1, abs=1e-14)

    def test_jarzynski_two_term(self):
        _, dist = forward_distribution(SPEC_Z, SPEC_2Z, 1.0, np.eye(2, dtype=complex))
        lhs = float(np.sum(dist.P * np.exp(-dist.w)))
        assert lhs == pytest.approx(np.cosh(2.0) / np.cosh(1.0), abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_identities_random_drives(self, n):
        rng = np.random.default_rng(n)
        _, _, s0, s1, td = tfim_pair(n)
        for _ in range(3):
            u = haar_random_unitary(2**n, rng).matrix
            _, fwd = forward_distribution(s0, s1, 1.0, u, td.deltaA)
            rev = reverse_distribution(s0, s1, 1.0, u)
            res = verify_fluctuation_identities(fwd, rev, 1.0, td.deltaA)
            assert res.max() < 1e-10

    def test_reverse_second_moment_bounded(self):
        # sum_w P_rev(w) w^2 <= ||V||^2
        rng = np.random.default_rng(9)
        _, v, s0, s1, td = tfim_pair(4)
        for u in (np.eye(16, dtype=complex), haar_random_unitary(16, rng).matrix):
            rev = reverse_distribution(s0, s1, 1.0, u)
            second = float(np.sum(rev.P * rev.w**2))
            if np.allclose(u, np.eye(16)):
                assert second <= spectral_norm(v) ** 2 + 1e-10


class TestLargestCutoff:
    def test_eps_zero_returns_w_min(self):
        _, dist = forward_distribution(SPEC_Z, SPEC_2Z, 1.0, np.eye(2, dtype=complex))
        td = free_energy_difference(SPEC_Z, SPEC_2Z, 1.0)
        report = largest_cutoff(dist, 1.0, td.deltaA, 0.0)
        assert report.w_l == pytest.approx(-1.0)
        assert report.satisfied and report.lhs == 0.0

    def test_large_eps_admits_sentinel(self):
        _, _, s0, s1, td = tfim_pair(3)
        _, dist = forward_distribution(s0, s1, 1.0, np.eye(8, dtype=complex))
        report = largest_cutoff(dist, 1.0, td.deltaA, 7.0)
        assert report.w_l == pytest.approx(dist.w_max + 1.0)
        # oracle: the full reweighted sum is the Jarzynski sum = 1
        total = float(np.sum(dist.P * np.exp(-(dist.w - td.deltaA))))
        assert total == pytest.approx(1.0, abs=1e-10)
        assert report.lhs <= report.budget

    def test_monotone_in_eps(self):
        _, _, s0, s1, td = tfim_pair(4)
        _, dist = forward_distribution(s0, s1, 1.0, np.eye(16, dtype=complex))
        cuts = [
            largest_cutoff(dist, 1.0, td.deltaA, eps).w_l
            for eps in (0.001, 0.01, 0.1, 0.5, 1.0, 3.0)
        ]
        assert all(a <= b + 1e-12 for a, b in zip(cuts, cuts[1:]))

    def test_footnote_bound(self):
        # e^{beta (deltaA - w_l)/2} >= sqrt(35/36) for eps <= 1
        _, _, s0, s1, td = tfim_pair(4)
        _, dist = forward_distribution(s0, s1, 1.0, np.eye(16, dtype=complex))
        for eps in (0.005, 0.05, 0.5, 1.0):
            report = largest_cutoff(dist, 1.0, td.deltaA, eps)
            assert np.exp((td.deltaA - report.w_l) / 2.0) >= 0.986

    def test_report_json(self):
        _, dist = forward_distribution(SPEC_Z, SPEC_2Z, 1.0, np.eye(2, dtype=complex))
        td = free_energy_difference(SPEC_Z, SPEC_2Z, 1.0)
        report = largest_cutoff(dist, 1.0, td.deltaA, 0.3)
        assert '"satisfied": true' in report.to_json()


class TestCutoffBounds:
    def test_general_formula(self):
        assert cutoff_bound_general(1.0, 0.6) == pytest.approx(-10.0)
        assert cutoff_bound_general(0.0, 0.5) == 0.0

    def test_general_bound_verified_exactly(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            h0 = random_hermitian(4, rng)
            v = random_hermitian(4, rng)
            s0, s1 = diagonalize(h0), diagonalize(h0 + v)
            u = haar_random_unitary(4, rng).matrix
            beta = float(rng.uniform(0.1, 2.0))
            td = free_energy_difference(s0, s1, beta)
            v_u = (h0 + v) - u @ h0 @ u.conj().T
            w_l = cutoff_bound_general(spectral_norm(v_u), 0.5)
            _, dist = forward_distribution(s0, s1, beta, u, td.deltaA)
            assert check_cutoff(dist, beta, td.deltaA, 0.5, w_l).satisfied

    def test_commuting_bound_is_exact_zero_tail(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            e0 = np.sort(rng.standard_normal(8))
            nu = rng.standard_normal(8)
            h0 = np.diag(e0)
            v = np.diag(nu)
            s0, s1 = diagonalize(h0), diagonalize(h0 + v)
            beta = float(rng.uniform(0.1, 2.0))
            td = free_energy_difference(s0, s1, beta)
            w_l = cutoff_bound_commuting(spectral_norm(v))
            _, dist = forward_distribution(
                s0, s1, beta, np.eye(8, dtype=complex), td.deltaA
            )
            report = check_cutoff(dist, beta, td.deltaA, 0.0, w_l)
            assert report.lhs == 0.0 and report.satisfied

    def test_commuting_z_pair_hits_w_min(self):
        assert cutoff_bound_commuting(1.0) == pytest.approx(-1.0)

    def test_local_formula_values(self):
        meta = build_tfim(6, 1.0, 0.5).locality
        # ln(6/eps) = 1 at eps = 6/e: -2Mv - 2hgk = -5 - 8
        assert cutoff_bound_local(meta, 6.0 / np.e) == pytest.approx(-13.0)
        expected = -5.0 - 8.0 * np.log(1200.0)
        assert cutoff_bound_local(meta, 0.005) == pytest.approx(expected, abs=1e-10)
        assert expected == pytest.approx(-61.72, abs=0.01)
        # eps -> 6 leaves only the -2Mv term
        assert cutoff_bound_local(meta, 6.0) == pytest.approx(-5.0)

    def test_local_bound_verified_exactly(self):
        for n, eps in [(4, 0.05), (6, 0.005)]:
            _, _, s0, s1, td = tfim_pair(n)
            meta = build_tfim(n, 1.0, 0.5).locality
            w_l = cutoff_bound_local(meta, eps)
            _, dist = forward_distribution(
                s0, s1, 1.0, np.eye(2**n, dtype=complex), td.deltaA
            )
            assert check_cutoff(dist, 1.0, td.deltaA, eps, w_l).satisfied


class TestEigenspaceOverlap:
    def test_orthogonal_projectors_for_equal_hamiltonians(self):
        _, _, s0, _, _ = tfim_pair(3)
        meta = build_tfim(3, 1.0, 0.5).locality
        lhs, _ = eigenspace_overlap_check(s0, s0, meta, 0.5, -0.5)
        assert lhs <= 1e-12

    def test_trivial_when_gap_below_2mv(self):
        _, _, s0, s1, _ = tfim_pair(3)
        meta = build_tfim(3, 1.0, 0.5).locality
        lhs, bound = eigenspace_overlap_check(s0, s1, meta, 0.5, 0.0)
        assert bound >= 1.0 and lhs <= bound

    def test_tfim_grid(self):
        _, _, s0, s1, _ = tfim_pair(6)
        meta = build_tfim(6, 1.0, 0.5).locality
        lo = float(s0.eigenvalues[0]) - 0.5
        hi = float(s0.eigenvalues[-1]) + 0.5
        grid = np.linspace(lo, hi, 10)
        for eps0 in grid:
            for eps1 in grid:
                if eps1 > eps0:
                    continue
                lhs, bound = eigenspace_overlap_check(s0, s1, meta, eps0, eps1)
                assert lhs <= bound + 1e-12

    def test_requires_ordered_thresholds(self):
        _, _, s0, s1, _ = tfim_pair(3)
        meta = build_tfim(3, 1.0, 0.5).locality
        with pytest.raises(ValueError):
            eigenspace_overlap_check(s0, s1, meta, 0.0, 1.0)


class TestCutoffConditionEquivalence:
    def test_projected_norm_form_matches_sum_form(self):
        # || e^{-bW/2} Pi_{<w_l} (U x 1)|Psi_0> ||^2 e^{b dA} equals the
        # reweighted tail sum
        from fluctherm.thermal import purification

        rng = np.random.default_rng(21)
        _, _, s0, s1, td = tfim_pair(2)
        beta = 1.0
        u = interpolated_evolution(
            tfim_field_part(2, 1.0), tfim_coupling_part(2, 0.5), 1.0, steps=128
        ).matrix
        _, dist = forward_distribution(s0, s1, beta, u, td.deltaA)
        psi0 = purification(s0, beta)
        driven = (u @ psi0.amplitudes.reshape(4, 4)).reshape(-1)
        w = work_operator(s1.reconstruct(), s0.reconstruct())
        sw = diagonalize(w)
        for w_l in (-2.0, -0.5, 0.3, 1.5):
            mask = sw.eigenvalues < w_l
            proj_vec = sw.eigenvectors[:, mask]
            comp = proj_vec.conj().T @ driven
            weights = np.exp(-beta * sw.eigenvalues[mask] / 2.0)
            norm_sq = float(np.sum(np.abs(weights * comp) ** 2))
            lhs_sum = float(
                np.sum(dist.P[dist.w < w_l] * np.exp(-beta * dist.w[dist.w < w_l]))
            )
            assert norm_sq == pytest.approx(lhs_sum, abs=1e-10)
