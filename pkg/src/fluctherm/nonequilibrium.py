"""Non-equilibrium drive unitaries: identity, interpolated evolution, and the
greedy eigenstate-matching construction that maximizes the work cutoff.

The interpolated drive is time evolution under H(t) = H0 + (t/T) V,
discretized by the midpoint rule (second order).  The greedy construction
walks the eigenvalues of H1 in ascending order and maps each one to the
lowest still-available eigenstate of H0 when that transition clears the
cutoff, otherwise to the highest available one; this minimizes the reverse
tail cost C = sum_{w > -w_l*} P_rev(w) over all permutations.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .hamiltonians import PauliSum, Spectrum, as_dense_hermitian

EVOLUTION_CONVERGENCE_TOL = 1e-8
MAX_EVOLUTION_STEPS = 2**16


@dataclass(frozen=True)
class NonEqUnitary:
    matrix: np.ndarray
    label: str

    def __post_init__(self):
        d = self.matrix.shape[0]
        dev = np.max(np.abs(self.matrix.conj().T @ self.matrix - np.eye(d)))
        if dev > 1e-10:
            raise ValueError(f"matrix is not unitary (deviation {dev:.3e})")


@dataclass(frozen=True)
class PermutationAssignment:
    """pi[n] = index of the H0 eigenstate assigned to the n-th H1 eigenstate."""

    pi: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.pi) != list(range(len(self.pi))):
            raise ValueError("assignment is not a bijection")


def identity_unitary(dim: int) -> NonEqUnitary:
    return NonEqUnitary(np.eye(dim, dtype=complex), "identity")


def _taylor_order(a_norm: float, tol: float = 1e-16) -> "int | None":
    """Smallest Taylor order with remainder bound a^{k+1}/(k+1)! below tol.

    Returns None when more than 8 terms would be needed; past that point an
    exact eigendecomposition per step is the cheaper machine-precision route.
    """
    bound = a_norm
    for k in range(1, 9):
        bound *= a_norm / (k + 1)
        if bound < tol:
            return k + 1
    return None


def _midpoint_product(
    h0: np.ndarray, v: np.ndarray, total_time: float, steps: int
) -> np.ndarray:
    """Ordered product of e^{-i dt H(t_mid)} factors, latest factor leftmost.

    Each factor is evaluated to machine precision: by a Horner-form Taylor
    series applied to the running product when dt * ||H|| is small (the usual
    case), falling back to an exact eigendecomposition otherwise.
    """
    dt = total_time / steps
    dim = h0.shape[0]
    norm_bound = dt * (
        float(np.linalg.norm(h0, ord=2)) + float(np.linalg.norm(v, ord=2))
    )
    order = _taylor_order(norm_bound)
    # a real generator admits the cheaper real-symmetric eigensolver
    is_real = (
        np.max(np.abs(h0.imag)) == 0.0
        and (v.size == 0 or np.max(np.abs(v.imag)) == 0.0)
    )
    h0c = np.ascontiguousarray(h0, dtype=complex)
    vc = np.ascontiguousarray(v, dtype=complex)
    u = np.eye(dim, dtype=complex)
    for k in range(steps):
        c = (k + 0.5) / steps
        if order is not None:
            gen = dt * (h0c + c * vc)
            w = u
            for m in range(order, 0, -1):
                w = u + (-1j / m) * (gen @ w)
            u = w
        else:
            gen = dt * (h0.real + c * v.real) if is_real else dt * (h0 + c * v)
            evals, q = np.linalg.eigh(gen)
            qc = q.astype(complex)
            u = (qc * np.exp(-1j * evals)) @ qc.conj().T @ u
    return u


def interpolated_evolution(
    h0: "PauliSum | np.ndarray",
    v: "PauliSum | np.ndarray",
    total_time: float,
    steps: "int | str" = "auto",
) -> NonEqUnitary:
    """Time-ordered evolution under H(t) = H0 + (t/T) V from t = 0 to T.

    With steps="auto", the step count is doubled until another doubling
    changes the result by less than 1e-8 in operator norm, capped at 2^16.
    """
    if total_time < 0:
        raise ValueError("T must be >= 0")
    h0 = as_dense_hermitian(h0)
    v = as_dense_hermitian(v)
    dim = h0.shape[0]
    if total_time == 0:
        return NonEqUnitary(np.eye(dim, dtype=complex), "interpolation(T=0)")
    label = f"interpolation(T={total_time:g})"
    if steps != "auto":
        s = int(steps)
        if s < 1:
            raise ValueError("steps must be >= 1")
        return NonEqUnitary(_midpoint_product(h0, v, total_time, s), label)
    s = 16
    u_prev = _midpoint_product(h0, v, total_time, s)
    while s < MAX_EVOLUTION_STEPS:
        s *= 2
        u_next = _midpoint_product(h0, v, total_time, s)
        if np.linalg.norm(u_next - u_prev, ord=2) < EVOLUTION_CONVERGENCE_TOL:
            return NonEqUnitary(u_next, label)
        u_prev = u_next
    return NonEqUnitary(u_prev, label)


def optimal_unitary(
    spec0: Spectrum, spec1: Spectrum, w_l_star: float
) -> tuple[NonEqUnitary, PermutationAssignment]:
    """Greedy eigenstate assignment for a given target cutoff w_l*.

    For n = 0..N-1: if eps_{1,n} >= eps_{0,min(S_n)} + w_l*, the n-th H1
    eigenstate is fed from the lowest remaining H0 eigenstate, else from the
    highest remaining one.  The returned unitary maps H0 eigenstates to H1
    eigenstates accordingly.
    """
    n_dim = spec0.dim
    if spec1.dim != n_dim:
        raise ValueError("spectra have different dimensions")
    available = deque(range(n_dim))
    pi = []
    for n in range(n_dim):
        if spec1.eigenvalues[n] >= spec0.eigenvalues[available[0]] + w_l_star:
            pi.append(available.popleft())
        else:
            pi.append(available.pop())
    assignment = PermutationAssignment(tuple(pi))
    perm = np.zeros((n_dim, n_dim))
    for n, m in enumerate(pi):
        perm[n, m] = 1.0
    u = spec1.eigenvectors @ perm @ spec0.eigenvectors.conj().T
    return NonEqUnitary(u, "optimal"), assignment


def cost_function(
    assignment: PermutationAssignment,
    spec0: Spectrum,
    spec1: Spectrum,
    beta: float,
    w_l_star: float,
) -> float:
    """Reverse-tail cost sum_{n: eps_{0,pi(n)} - eps_{1,n} > -w_l*} P1(eps_{1,n})."""
    from .thermal import boltzmann_weights

    p1 = boltzmann_weights(spec1, beta)
    pi = np.asarray(assignment.pi)
    violating = spec0.eigenvalues[pi] - spec1.eigenvalues > -w_l_star
    return float(np.sum(p1[violating]))


def optimal_unitary_for_eps(
    spec0: Spectrum, spec1: Spectrum, beta: float, eps: float
) -> tuple[NonEqUnitary, PermutationAssignment, float]:
    """Greedy-optimal drive for an error budget, together with its cutoff.

    Searches the largest candidate cutoff (distinct transition works plus a
    sentinel) whose greedy assignment keeps the reverse-tail cost within
    (eps/6)^2; the cost of the greedy assignment is monotone in the cutoff.
    eps = 0 short-circuits to the ascending-order map with the cutoff equal
    to its minimum work.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps == 0:
        w_l = float(np.min(spec1.eigenvalues - spec0.eigenvalues))
        u, assignment = optimal_unitary(spec0, spec1, w_l)
        return u, assignment, w_l
    budget = (eps / 6.0) ** 2
    diffs = np.unique(
        (spec1.eigenvalues[None, :] - spec0.eigenvalues[:, None]).reshape(-1)
    )
    candidates = np.concatenate((diffs, [diffs[-1] + 1.0]))
    lo, hi = 0, len(candidates) - 1  # invariant: candidates[lo] feasible
    if cost_function(
        optimal_unitary(spec0, spec1, candidates[hi])[1],
        spec0, spec1, beta, candidates[hi],
    ) <= budget:
        lo = hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        _, assignment = optimal_unitary(spec0, spec1, candidates[mid])
        if cost_function(assignment, spec0, spec1, beta, candidates[mid]) <= budget:
            lo = mid
        else:
            hi = mid
    w_l = float(candidates[lo])
    u, assignment = optimal_unitary(spec0, spec1, w_l)
    return u, assignment, w_l


def conjugate_unitary(u: NonEqUnitary) -> NonEqUnitary:
    """Entrywise complex conjugate (the drive applied on the mirror copy)."""
    return NonEqUnitary(u.matrix.conj(), u.label + "*")


def haar_random_unitary(dim: int, rng: np.random.Generator) -> NonEqUnitary:
    """Haar-distributed random unitary via QR of a Ginibre matrix."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return NonEqUnitary(q, "custom")


def unitary_from_descriptor(
    desc: dict,
    spec0: Spectrum,
    spec1: Spectrum,
    h0: "PauliSum | np.ndarray",
    v: "PauliSum | np.ndarray",
    beta: float,
    default_eps: float,
) -> NonEqUnitary:
    """Resolve a run-config unitary descriptor.

    Schema: {"type": "identity" | "interpolation" | "optimal",
             "T": float, "steps": int | "auto", "eps": float}.
    """
    kind = desc.get("type", "identity")
    if kind == "identity":
        return identity_unitary(spec0.dim)
    if kind == "interpolation":
        return interpolated_evolution(
            h0, v, float(desc["T"]), desc.get("steps", "auto")
        )
    if kind == "optimal":
        eps = float(desc.get("eps", default_eps))
        u, _, _ = optimal_unitary_for_eps(spec0, spec1, beta, eps)
        return u
    raise ValueError(f"unknown unitary descriptor type {kind!r}")
