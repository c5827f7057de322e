"""Exact statevector simulation of the block-encoding circuits.

Two routes realize the Laurent polynomial X = sum_j alpha_j U^j as the
ancilla-|0> block of a unitary:

* LCU: prepare the ancilla in sum_j sqrt(alpha_{-J+j}/alpha)|j>, apply the
  binary ladder of controlled powers U^{2^t}, unprepare with the transpose
  of the preparation, and finish with U^{-J}; the top block is (X/alpha)|psi>.
* QSP: a single-ancilla sequence of Z rotations interleaved with controlled
  U^{1/2} / U^{-1/2}; two phase sets realize the even/odd Chebyshev parts of
  X, and a four-term unit-weight combination places (X/(2 alpha))|psi> in the
  top block using three ancilla qubits total.

Phases are found by quasi-Newton descent on the squared reconstruction error
over a Chebyshev grid, with the analytic SU(2) chain-rule gradient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur
from scipy.optimize import minimize

from .approx import FourierSeries
from .errors import CertificationError, NoSignalError, QspConvergenceError
from .thermal import PureState

QSP_RESIDUAL_GATE = 1e-6
QSP_CERT_GRID = 2001


@dataclass(frozen=True)
class BlockEncodingResult:
    """Ancilla-<0| component of the encoded state and the leftover weight."""

    top_block: np.ndarray
    orth_norm: float
    ancilla_count: int

    def probability_conservation_defect(self) -> float:
        """| ||top||^2 + orth^2 - 1 | for unit input."""
        return abs(
            float(np.linalg.norm(self.top_block)) ** 2 + self.orth_norm**2 - 1.0
        )


@dataclass(frozen=True)
class QspPhaseSet:
    """Two phase lists with their Chebyshev targets and reconstruction errors."""

    phases1: np.ndarray
    phases2: np.ndarray
    residual1: float
    residual2: float
    target_p1: np.ndarray
    target_q2: np.ndarray

    def require_certified(self) -> "QspPhaseSet":
        worst = max(self.residual1, self.residual2)
        if worst > QSP_RESIDUAL_GATE:
            raise CertificationError(
                f"phase set is uncertified (residual {worst:.3e} > "
                f"{QSP_RESIDUAL_GATE:g})"
            )
        return self


@dataclass(frozen=True)
class AmplificationReport:
    rounds_used: int
    initial_amplitude: float
    final_overlap: float
    expected_rounds: float


class _EigUnitary:
    """Eigendecomposition U = Z diag(e^{i theta}) Z^dagger of a unitary."""

    def __init__(self, z: np.ndarray, theta: np.ndarray):
        self.z = z
        self.theta = theta

    @staticmethod
    def from_matrix(u: np.ndarray) -> "_EigUnitary":
        u = np.asarray(u, dtype=complex)
        d = u.shape[0]
        dev = np.max(np.abs(u.conj().T @ u - np.eye(d)))
        if dev > 1e-10:
            raise ValueError(f"matrix is not unitary (deviation {dev:.3e})")
        t, z = schur(u, output="complex")
        off = np.max(np.abs(t - np.diag(np.diag(t))))
        if off > 1e-9:
            raise ValueError("Schur form of a unitary should be diagonal")
        return _EigUnitary(z, np.angle(np.diag(t)))

    def to_eigenbasis(self, psi: np.ndarray) -> np.ndarray:
        return self.z.conj().T @ psi

    def from_eigenbasis(self, coeffs: np.ndarray) -> np.ndarray:
        return self.z @ coeffs


def _complete_unitary(first_column: np.ndarray) -> np.ndarray:
    """A unitary whose first column is the given unit vector."""
    b = np.asarray(first_column, dtype=complex)
    d = b.shape[0]
    drop = int(np.argmax(np.abs(b)))
    eye = np.eye(d, dtype=complex)
    cols = [eye[:, k] for k in range(d) if k != drop]
    m = np.column_stack([b] + cols)
    q, _ = np.linalg.qr(m)
    phase = np.vdot(q[:, 0], b)
    q[:, 0] *= phase / abs(phase)
    return q


def lcu_full_state(
    series: FourierSeries, u: np.ndarray, psi: np.ndarray
) -> tuple[np.ndarray, int]:
    """Statevector (ancilla_dim, system_dim) after the full LCU circuit.

    The ancilla register is padded to 2^m >= 2J+2 with zero coefficients;
    the final inverse power is U^{-J} regardless of padding.
    """
    psi = np.asarray(psi, dtype=complex)
    coeffs = series.coeffs
    j_order = series.J
    alpha = series.l1
    anc_qubits = max(1, math.ceil(math.log2(2 * j_order + 2)))
    anc_dim = 2**anc_qubits
    if anc_dim < coeffs.shape[0]:
        raise ValueError("ancilla register too small for the coefficient list")
    b = np.zeros(anc_dim, dtype=complex)
    b[: coeffs.shape[0]] = np.sqrt(coeffs / alpha)  # principal square root
    prep = _complete_unitary(b)

    eig = _EigUnitary.from_matrix(u)
    if psi.shape[0] != eig.z.shape[0]:
        raise ValueError("state dimension does not match the unitary")
    psi_e = eig.to_eigenbasis(psi)

    # B on |0>, then the controlled-power ladder |j> -> |j> U^j
    state = np.outer(b, psi_e)
    powers = np.exp(1j * np.outer(np.arange(anc_dim), eig.theta))
    state *= powers
    # B^T on the ancilla, then U^{-J} on the system
    state = prep.T @ state
    state *= np.exp(-1j * j_order * eig.theta)[None, :]
    return state @ eig.z.T, anc_dim


def simulate_lcu(
    series: FourierSeries, u: np.ndarray, psi: "np.ndarray | PureState"
) -> BlockEncodingResult:
    """Run the LCU circuit; the top block equals (X/alpha)|psi>."""
    if isinstance(psi, PureState):
        psi = psi.amplitudes
    state, anc_dim = lcu_full_state(series, u, psi)
    top = state[0]
    total = float(np.linalg.norm(state))
    orth = math.sqrt(max(total**2 - float(np.linalg.norm(top)) ** 2, 0.0))
    return BlockEncodingResult(
        top_block=top, orth_norm=orth, ancilla_count=int(math.log2(anc_dim))
    )


def direct_series_action(
    series: FourierSeries, u: np.ndarray, psi: np.ndarray
) -> np.ndarray:
    """Oracle: (X/alpha)|psi> by explicit matrix powers, no circuit."""
    eig = _EigUnitary.from_matrix(u)
    psi_e = eig.to_eigenbasis(np.asarray(psi, dtype=complex))
    values = np.exp(1j * np.outer(eig.theta, series.js)) @ series.coeffs
    return eig.from_eigenbasis(values * psi_e) / series.l1


def chebyshev_split(series: FourierSeries) -> tuple[np.ndarray, np.ndarray]:
    """Split X/alpha into Chebyshev data: p1 over T_{2j}, q2 over R_{2j-1}.

    p1[j] = (alpha_0 if j=0 else 2 Re alpha_j)/alpha for j = 0..J and
    q2[j-1] = -2 Im(alpha_j)/alpha for j = 1..J, so that
    p1(cos(theta/2)) + sin(theta/2) q2(cos(theta/2)) = (1/alpha) sum_j alpha_j e^{ij theta}.
    """
    coeffs = series.coeffs
    sym = np.max(np.abs(coeffs - coeffs[::-1].conj()))
    if sym > 1e-12 * max(1.0, float(np.max(np.abs(coeffs)))):
        raise ValueError("coefficients are not conjugate-symmetric")
    alpha = series.l1
    j_order = series.J
    pos = coeffs[j_order:]  # alpha_0 .. alpha_J
    p1 = np.real(pos).copy() * 2.0 / alpha
    p1[0] = np.real(pos[0]) / alpha
    q2 = -2.0 * np.imag(pos[1:]) / alpha
    return p1, q2


def _cheb_targets(
    p1: np.ndarray, q2: np.ndarray, phi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate p1(cos phi) and sin(phi) q2(cos phi) through angle sums."""
    j1 = np.arange(p1.shape[0])
    target_p = np.cos(2.0 * np.outer(phi, j1)) @ p1
    j2 = np.arange(1, q2.shape[0] + 1)
    target_q = np.sin(2.0 * np.outer(phi, j2)) @ q2 if q2.shape[0] else np.zeros_like(phi)
    return target_p, target_q


def series_scalar_from_split(
    series: FourierSeries, theta: "float | np.ndarray"
) -> np.ndarray:
    """(1/alpha) sum_j alpha_j e^{ij theta} via the Chebyshev split (oracle)."""
    p1, q2 = chebyshev_split(series)
    phi = np.atleast_1d(np.asarray(theta, dtype=float)) / 2.0
    tp, tq = _cheb_targets(p1, q2, phi)
    return tp + tq


def _qsp_objective(
    phases: np.ndarray,
    y: np.ndarray,
    s: np.ndarray,
    target: np.ndarray,
    kind: int,
) -> tuple[float, np.ndarray]:
    """Squared reconstruction error and its gradient in the phases.

    V(y) = Rz(phi_0) W Rz(phi_1) ... W Rz(phi_d) with W = [[y, is],[is, y]];
    kind 1 matches Re V_00 to the target, kind 2 matches Im V_01.
    """
    d = phases.shape[0] - 1
    g = y.shape[0]
    m = 0 if kind == 1 else 1
    eip = np.exp(1j * phases)

    # backward pass: c_k = A_k ... A_d e_m, with A_k = Rz(phi_k) (W if k<d else I)
    c = np.empty((d + 1, g, 2), dtype=complex)
    c0 = np.zeros((g, 2), dtype=complex)
    c0[:, m] = 1.0
    c0[:, 0] *= eip[d]
    c0[:, 1] *= np.conj(eip[d])
    c[d] = c0
    for k in range(d - 1, -1, -1):
        nxt = c[k + 1]
        wc0 = y * nxt[:, 0] + 1j * s * nxt[:, 1]
        wc1 = 1j * s * nxt[:, 0] + y * nxt[:, 1]
        c[k, :, 0] = eip[k] * wc0
        c[k, :, 1] = np.conj(eip[k]) * wc1

    value = c[0, :, 0]
    recon = np.real(value) if kind == 1 else np.imag(value)
    diff = recon - target
    obj = 0.5 * float(np.dot(diff, diff))

    # forward pass: r_k = e_0^T A_0 ... A_{k-1}; dV_0m/dphi_k = r_k (iZ) c_k
    grad = np.empty(d + 1)
    r0 = np.ones(g, dtype=complex)
    r1 = np.zeros(g, dtype=complex)
    for k in range(d + 1):
        deriv = 1j * (r0 * c[k, :, 0] - r1 * c[k, :, 1])
        dval = np.real(deriv) if kind == 1 else np.imag(deriv)
        grad[k] = float(np.dot(diff, dval))
        if k < d:
            a0 = r0 * eip[k]
            a1 = r1 * np.conj(eip[k])
            r0 = a0 * y + a1 * 1j * s
            r1 = a0 * 1j * s + a1 * y
    return obj, grad


def _qsp_reconstruction(
    phases: np.ndarray, y: np.ndarray, s: np.ndarray, kind: int
) -> np.ndarray:
    obj_entry = 0 if kind == 1 else 1
    mats = su2_qsp_matrices(phases, y, s)
    value = mats[:, 0, obj_entry]
    return np.real(value) if kind == 1 else np.imag(value)


def su2_qsp_matrices(phases: np.ndarray, y: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Batched 2x2 products Rz(phi_0) W ... W Rz(phi_d) at each grid point."""
    g = y.shape[0]
    out = np.zeros((g, 2, 2), dtype=complex)
    eip = np.exp(1j * phases[0])
    out[:, 0, 0] = eip
    out[:, 1, 1] = np.conj(eip)
    for k in range(1, phases.shape[0]):
        w00 = y
        w01 = 1j * s
        a = out.copy()
        out[:, :, 0] = a[:, :, 0] * w00[:, None] + a[:, :, 1] * w01[:, None]
        out[:, :, 1] = a[:, :, 0] * w01[:, None] + a[:, :, 1] * w00[:, None]
        eip = np.exp(1j * phases[k])
        out[:, :, 0] *= eip
        out[:, :, 1] *= np.conj(eip)
    return out


def _certification_grid() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = np.arange(QSP_CERT_GRID)
    phi = math.pi * (idx + 0.5) / QSP_CERT_GRID  # phi in (0, pi)
    y = np.cos(phi)
    s = np.sin(phi)
    return phi, y, s


def solve_qsp_phases(
    target: np.ndarray,
    kind: str,
    max_iterations: int = 10_000,
    gradient_tol: float = 1e-12,
) -> tuple[np.ndarray, float]:
    """Find 2J+1 phases reproducing a definite-parity Chebyshev target.

    kind="first": target holds coefficients of p1 over T_{2j}, j = 0..J, and
    the phases make Re<0|V|0> = p1(y).  kind="second": target holds
    coefficients of q2 over R_{2j-1}, j = 1..J, and the phases make
    Im<0|V|1> = sqrt(1-y^2) q2(y) on the principal branch.

    Raises QspConvergenceError with the best residual if the optimizer stops
    above the acceptance gate.
    """
    target = np.asarray(target, dtype=float)
    if kind == "first":
        kind_id = 1
        j_order = target.shape[0] - 1
    elif kind == "second":
        kind_id = 2
        j_order = target.shape[0]
    else:
        raise ValueError("kind must be 'first' or 'second'")
    d = 2 * j_order
    n_phases = d + 1

    p1 = target if kind_id == 1 else np.zeros(1)
    q2 = target if kind_id == 2 else np.zeros(0)

    phi_cert, y_cert, s_cert = _certification_grid()
    tp_cert, tq_cert = _cheb_targets(p1, q2, phi_cert)
    target_cert = tp_cert if kind_id == 1 else tq_cert
    if np.max(np.abs(target_cert)) > 1.0 + 1e-12:
        raise ValueError("target polynomial exceeds 1 in magnitude on [-1, 1]")

    if kind_id == 1:
        x0 = np.zeros(n_phases)
        x0[0] = math.pi / 4.0
        x0[-1] = math.pi / 4.0
    else:
        x0 = np.zeros(n_phases)
        x0[-1] = -math.pi / 2.0

    def residual_of(phases: np.ndarray) -> float:
        recon = _qsp_reconstruction(phases, y_cert, s_cert, kind_id)
        return float(np.max(np.abs(recon - target_cert)))

    best_phases, best_residual = x0, residual_of(x0)
    grid_sizes = [max(j_order + 1, 8)]
    if grid_sizes[0] < 2 * j_order + 1:
        grid_sizes.append(2 * j_order + 1)
    for grid_size in grid_sizes:
        k = np.arange(1, grid_size + 1)
        phi = math.pi * (2.0 * k - 1.0) / (4.0 * grid_size)  # phi in (0, pi/2)
        y, s = np.cos(phi), np.sin(phi)
        tp, tq = _cheb_targets(p1, q2, phi)
        t = tp if kind_id == 1 else tq
        result = minimize(
            _qsp_objective,
            best_phases,
            args=(y, s, t, kind_id),
            method="L-BFGS-B",
            jac=True,
            options={
                "maxiter": max_iterations,
                "gtol": gradient_tol,
                "ftol": 0.0,
                "maxcor": 30,
            },
        )
        residual = residual_of(result.x)
        if residual < best_residual:
            best_phases, best_residual = result.x, residual
        if best_residual <= QSP_RESIDUAL_GATE:
            return best_phases, best_residual
    raise QspConvergenceError(
        f"phase optimization stalled at residual {best_residual:.3e}",
        best_residual,
    )


def solve_phase_set(series: FourierSeries) -> QspPhaseSet:
    """Solve both phase lists for a series and bundle the diagnostics."""
    p1, q2 = chebyshev_split(series)
    phases1, res1 = solve_qsp_phases(p1, "first")
    phases2, res2 = solve_qsp_phases(q2, "second")
    return QspPhaseSet(
        phases1=phases1,
        phases2=phases2,
        residual1=res1,
        residual2=res2,
        target_p1=p1,
        target_q2=q2,
    )


def qsp_full_state(
    series: FourierSeries,
    phase_set: QspPhaseSet,
    u: np.ndarray,
    psi: np.ndarray,
) -> tuple[np.ndarray, int]:
    """Statevector (8, system_dim) after the three-ancilla QSP circuit.

    Ancilla index packs (two selection qubits, one QSP qubit); the top block
    at index 0 carries (X/(2 alpha))|psi>.  The four selected unitaries are
    V_{Phi1}, V_{Phi1}^dag, V_{Phi2} e^{-i pi X/2}, e^{i pi X/2} V_{Phi2}^dag.
    """
    phase_set.require_certified()
    psi = np.asarray(psi, dtype=complex)
    eig = _EigUnitary.from_matrix(u)
    psi_e = eig.to_eigenbasis(psi)
    half = eig.theta / 2.0
    y, s = np.cos(half), np.sin(half)

    v1 = su2_qsp_matrices(phase_set.phases1, y, s)
    v2 = su2_qsp_matrices(phase_set.phases2, y, s)
    v1d = np.conj(np.swapaxes(v1, 1, 2))
    v2d = np.conj(np.swapaxes(v2, 1, 2))
    minus_ix = np.array([[0.0, -1j], [-1j, 0.0]])  # e^{-i pi X / 2}
    plus_ix = np.array([[0.0, 1j], [1j, 0.0]])
    terms = [v1, v1d, v2 @ minus_ix, plus_ix @ v2d]

    # each term acts on (qsp ancilla) x (eigencomponent); input qsp state |0>
    vecs = [t[:, :, 0] * psi_e[:, None] for t in terms]  # (levels, 2)
    dim = psi.shape[0]
    state = np.zeros((8, dim), dtype=complex)
    for a in range(4):
        acc = np.zeros((dim, 2), dtype=complex)
        for b in range(4):
            sign = (-1) ** bin(a & b).count("1")
            acc += sign * vecs[b]
        acc *= 0.25
        state[2 * a] = eig.from_eigenbasis(acc[:, 0])
        state[2 * a + 1] = eig.from_eigenbasis(acc[:, 1])
    return state, 8


def simulate_qsp(
    series: FourierSeries,
    phase_set: QspPhaseSet,
    u: np.ndarray,
    psi: "np.ndarray | PureState",
) -> BlockEncodingResult:
    """Run the QSP circuit; the top block equals (X/(2 alpha))|psi>."""
    if isinstance(psi, PureState):
        psi = psi.amplitudes
    state, _ = qsp_full_state(series, phase_set, u, psi)
    top = state[0]
    total = float(np.linalg.norm(state))
    orth = math.sqrt(max(total**2 - float(np.linalg.norm(top)) ** 2, 0.0))
    return BlockEncodingResult(top_block=top, orth_norm=orth, ancilla_count=3)


def amplification_schedule(initial_amplitude: float) -> int:
    """Round count maximizing sin^2((2k+1) arcsin a) for a known amplitude."""
    theta = math.asin(min(initial_amplitude, 1.0))
    if theta >= math.pi / 2.0 - 1e-15:
        return 0
    x = math.pi / (4.0 * theta) - 0.5
    candidates = {max(0, math.floor(x)), math.ceil(x)}
    return max(
        candidates, key=lambda k: (math.sin((2 * k + 1) * theta) ** 2, -k)
    )


def amplitude_amplification(
    state: np.ndarray,
    anc_dim: int,
    max_rounds: "int | None" = None,
    factor_dims: "tuple[int, ...] | None" = None,
    expected_rounds: "float | None" = None,
) -> tuple[PureState, AmplificationReport]:
    """Amplify the ancilla-|0> block of a prepared state by exact reflections.

    state is the (anc_dim, system_dim) statevector produced by the
    preparation unitary on |0>|Psi_0>.  The iterate G = (2P' - 1)(1 - 2P)
    uses the reflection about the initial state and the sign flip on the
    good block; after k rounds the success amplitude is sin((2k+1) theta)
    with theta = arcsin(initial amplitude).  The returned state is the
    normalized good block after the optimal known-amplitude round count.
    """
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        state = state.reshape(anc_dim, -1)
    sys_dim = state.shape[1]
    amplitude = float(np.linalg.norm(state[0]))
    if amplitude < 1e-14:
        raise NoSignalError("initial success amplitude is zero")
    good_direction = state[0] / amplitude

    rounds = amplification_schedule(amplitude)
    if max_rounds is not None:
        rounds = min(rounds, max_rounds)
    psi = state.copy()
    initial = state.copy()
    overlap_with_initial = np.vdot(initial, initial)
    for _ in range(rounds):
        psi[0] *= -1.0  # 1 - 2P
        proj = np.vdot(initial, psi) / overlap_with_initial
        psi = 2.0 * proj * initial - psi  # 2P' - 1
    good = psi[0]
    good_norm = float(np.linalg.norm(good))
    final = good / good_norm
    final_overlap = abs(np.vdot(good_direction, final))
    report = AmplificationReport(
        rounds_used=rounds,
        initial_amplitude=amplitude,
        final_overlap=final_overlap,
        expected_rounds=(
            expected_rounds if expected_rounds is not None else 1.0 / amplitude
        ),
    )
    dims = factor_dims if factor_dims is not None else (sys_dim,)
    return PureState(final, dims), report
