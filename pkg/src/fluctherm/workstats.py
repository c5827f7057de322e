"""Work statistics of the two-time measurement scheme and work-cutoff bounds.

Forward process: measure H0 on the thermal state of H0, drive with a unitary
U, measure H1; the work w = eps_{1,n} - eps_{0,m} occurs with probability
p_{m,n} = (e^{-beta eps_{0,m}} / Z0) |<phi_{1,n}|U|phi_{0,m}>|^2.  The reverse
process starts from the thermal state of H1 and drives with U^dagger, giving
w = eps_{0,m} - eps_{1,n}.  Both distributions share one degeneracy-binned
grid so the per-value Crooks relation P(w) e^{-beta w} = e^{-beta dA}
P_rev(-w) is well defined bin by bin.

The work cutoff w_l is the threshold below which the reweighted tail
sum_{w < w_l} P(w) e^{-beta (w - dA)} fits inside the (eps/6)^2 budget.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .hamiltonians import LocalityMetadata, Spectrum

UNITARITY_TOL = 1e-10


@dataclass(frozen=True)
class WorkTable:
    """All transition pairs (m, n) with their work, probability, and phase."""

    m_idx: np.ndarray
    n_idx: np.ndarray
    w: np.ndarray
    p: np.ndarray
    phase: np.ndarray
    beta: float
    deltaA: float

    def __len__(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class WorkDistribution:
    """Binned work distribution; bins ascend in w and probabilities sum to 1."""

    w: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.w) <= 0):
            raise ValueError("bins must be strictly ascending")

    @property
    def w_min(self) -> float:
        return float(self.w[0])

    @property
    def w_max(self) -> float:
        return float(self.w[-1])

    def to_csv(self) -> str:
        lines = ["w,P"]
        lines += [f"{w:.12g},{p:.12g}" for w, p in zip(self.w, self.P)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CutoffReport:
    """Evaluation of the cutoff condition at one threshold w_l."""

    w_l: float
    lhs: float
    budget: float
    satisfied: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "w_l": self.w_l,
                "lhs": self.lhs,
                "budget": self.budget,
                "satisfied": self.satisfied,
            }
        )


def binning_tolerance(w_values: np.ndarray) -> float:
    scale = max(1.0, abs(float(w_values.max())) + abs(float(w_values.min())))
    return 1e-9 * scale


def _bin_values(w: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cluster work values whose gaps are below the degeneracy tolerance.

    Bins whose probability is exactly zero (structurally forbidden
    transitions) are dropped; this keeps the forward and reverse grids
    mirror images of each other.
    """
    order = np.argsort(w, kind="stable")
    ws, ps = w[order], p[order]
    tol = binning_tolerance(ws)
    edges = np.nonzero(np.diff(ws) > tol)[0] + 1
    starts = np.concatenate(([0], edges))
    stops = np.concatenate((edges, [len(ws)]))
    w_bins = np.array([ws[a:b].mean() for a, b in zip(starts, stops)])
    p_bins = np.array([ps[a:b].sum() for a, b in zip(starts, stops)])
    keep = p_bins > 0.0
    return w_bins[keep], p_bins[keep]


def _check_unitary(u: np.ndarray, dim: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (dim, dim):
        raise ValueError(f"unitary has shape {u.shape}, expected {(dim, dim)}")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(dim)))
    if dev > UNITARITY_TOL:
        raise ValueError(f"matrix is not unitary (deviation {dev:.3e})")
    return u


def work_operator(h1: np.ndarray, h0: np.ndarray) -> np.ndarray:
    """W = H1 (x) 1 - 1 (x) H0^* on the doubled space."""
    h1 = np.asarray(h1, dtype=complex)
    h0 = np.asarray(h0, dtype=complex)
    if h1.shape != h0.shape:
        raise ValueError("H1 and H0 must have equal dimensions")
    d = h1.shape[0]
    eye = np.eye(d)
    return np.kron(h1, eye) - np.kron(eye, h0.conj())


def _transition_probabilities(
    spec0: Spectrum, spec1: Spectrum, u: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """T[n, m] = |<phi_{1,n}| U |phi_{0,m}>|^2 and the raw amplitudes."""
    amp = spec1.eigenvectors.conj().T @ u @ spec0.eigenvectors
    return np.abs(amp) ** 2, amp


def forward_distribution(
    spec0: Spectrum,
    spec1: Spectrum,
    beta: float,
    u: np.ndarray,
    deltaA: float | None = None,
) -> tuple[WorkTable, WorkDistribution]:
    """Forward work table and its binned distribution."""
    from .thermal import boltzmann_weights, free_energy_difference

    u = _check_unitary(u, spec0.dim)
    if deltaA is None:
        deltaA = free_energy_difference(spec0, spec1, beta).deltaA
    t, amp = _transition_probabilities(spec0, spec1, u)
    p0 = boltzmann_weights(spec0, beta)
    p = (t * p0[None, :]).T  # p[m, n]
    n1, n0 = t.shape
    m_idx, n_idx = np.meshgrid(np.arange(n0), np.arange(n1), indexing="ij")
    w = spec1.eigenvalues[n_idx] - spec0.eigenvalues[m_idx]
    table = WorkTable(
        m_idx=m_idx.reshape(-1),
        n_idx=n_idx.reshape(-1),
        w=w.reshape(-1),
        p=p.reshape(-1),
        phase=np.angle(amp.T.reshape(-1)),
        beta=beta,
        deltaA=deltaA,
    )
    w_bins, p_bins = _bin_values(table.w, table.p)
    return table, WorkDistribution(w_bins, p_bins)


def reverse_distribution(
    spec0: Spectrum, spec1: Spectrum, beta: float, u: np.ndarray
) -> WorkDistribution:
    """Reverse-process distribution: start from the H1 thermal state, drive
    with U^dagger, record w = eps_{0,m} - eps_{1,n}."""
    from .thermal import boltzmann_weights

    u = _check_unitary(u, spec0.dim)
    t, _ = _transition_probabilities(spec0, spec1, u)  # t[n, m]
    p1 = boltzmann_weights(spec1, beta)
    p_rev = t * p1[:, None]  # pairs (n, m)
    n1, n0 = t.shape
    n_idx, m_idx = np.meshgrid(np.arange(n1), np.arange(n0), indexing="ij")
    w_rev = spec0.eigenvalues[m_idx] - spec1.eigenvalues[n_idx]
    w_bins, p_bins = _bin_values(w_rev.reshape(-1), p_rev.reshape(-1))
    return WorkDistribution(w_bins, p_bins)


@dataclass(frozen=True)
class FluctuationResiduals:
    jarzynski: float
    crooks_per_bin: float
    crooks_w2: float

    def max(self) -> float:
        return max(self.jarzynski, self.crooks_per_bin, self.crooks_w2)


def verify_fluctuation_identities(
    forward: WorkDistribution,
    reverse: WorkDistribution,
    beta: float,
    deltaA: float,
) -> FluctuationResiduals:
    """Residuals of the Jarzynski equality and two Crooks-type identities.

    * |sum_w P(w) e^{-beta w} - e^{-beta dA}|
    * max_w |P(w) e^{-beta w} - e^{-beta dA} P_rev(-w)|  (shared bin grid)
    * |sum_w P(w) w^2 e^{-beta w} - e^{-beta dA} sum_w P_rev(w) w^2|,
      the f(w) = e^{-beta w/2} w^2 instance of the generalized Crooks relation.
    """
    boltz = np.exp(-beta * forward.w)
    target = np.exp(-beta * deltaA)
    jarzynski = abs(float(np.sum(forward.P * boltz)) - target)

    # reverse bins are the mirrored forward bins; align by value
    rev_w = -reverse.w[::-1]
    rev_p = reverse.P[::-1]
    tol = binning_tolerance(np.concatenate((forward.w, rev_w)))
    per_bin = 0.0
    j = 0
    for i in range(forward.w.shape[0]):
        p_rev_here = 0.0
        while j < rev_w.shape[0] and rev_w[j] < forward.w[i] - tol:
            j += 1
        if j < rev_w.shape[0] and abs(rev_w[j] - forward.w[i]) <= tol:
            p_rev_here = rev_p[j]
        per_bin = max(
            per_bin, abs(float(forward.P[i] * boltz[i]) - target * p_rev_here)
        )

    lhs_w2 = float(np.sum(forward.P * forward.w**2 * boltz))
    rhs_w2 = target * float(np.sum(reverse.P * reverse.w**2))
    return FluctuationResiduals(
        jarzynski=jarzynski,
        crooks_per_bin=per_bin,
        crooks_w2=abs(lhs_w2 - rhs_w2),
    )


def cutoff_condition_lhs(
    dist: WorkDistribution, beta: float, deltaA: float, w_l: float
) -> float:
    """sum_{w < w_l} P(w) e^{-beta (w - deltaA)}  (strict inequality)."""
    mask = dist.w < w_l
    if not np.any(mask):
        return 0.0
    return float(np.sum(dist.P[mask] * np.exp(-beta * (dist.w[mask] - deltaA))))


def check_cutoff(
    dist: WorkDistribution, beta: float, deltaA: float, eps: float, w_l: float
) -> CutoffReport:
    """Evaluate the cutoff condition at an explicitly given threshold."""
    budget = (eps / 6.0) ** 2
    lhs = cutoff_condition_lhs(dist, beta, deltaA, w_l)
    return CutoffReport(w_l=float(w_l), lhs=lhs, budget=budget, satisfied=lhs <= budget)


def largest_cutoff(
    dist: WorkDistribution, beta: float, deltaA: float, eps: float
) -> CutoffReport:
    """Largest admissible work cutoff over the bin-edge candidate set.

    Candidates are the distinct binned work values plus a sentinel above
    w_max; the condition is a strict-inequality prefix sum, so the maximizer
    is always one of these.  eps = 0 returns the smallest work value with
    positive probability (the condition then demands an empty sum).
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps == 0:
        positive = dist.w[dist.P > 0]
        w_l = float(positive[0])
        return check_cutoff(dist, beta, deltaA, 0.0, w_l)
    budget = (eps / 6.0) ** 2
    candidates = np.concatenate((dist.w, [dist.w_max + 1.0]))
    reweighted = dist.P * np.exp(-beta * (dist.w - deltaA))
    prefix = np.concatenate(([0.0], np.cumsum(reweighted)))  # prefix[i] = sum over bins < candidate i
    feasible = prefix <= budget
    best = int(np.nonzero(feasible)[0][-1])
    return CutoffReport(
        w_l=float(candidates[best]),
        lhs=float(prefix[best]),
        budget=budget,
        satisfied=True,
    )


def cutoff_bound_general(norm_vu: float, eps: float) -> float:
    """Cutoff valid for arbitrary Hamiltonian pairs: w_l <= -6 ||V_U|| / eps."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    return -6.0 * norm_vu / eps


def cutoff_bound_commuting(norm_v: float) -> float:
    """Cutoff for [H0, H1] = 0 and trivial drive: w_l <= -||V|| empties the tail."""
    return -norm_v


def cutoff_bound_local(meta: LocalityMetadata, eps: float) -> float:
    """Cutoff for k-local degree-g spin pairs: w_l <= -2Mv - 2hgk ln(6/eps)."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    return -2.0 * meta.M * meta.v - 2.0 * meta.h * meta.g * meta.k * np.log(6.0 / eps)


def eigenspace_overlap_check(
    spec0: Spectrum,
    spec1: Spectrum,
    meta: LocalityMetadata,
    eps0: float,
    eps1: float,
) -> tuple[float, float]:
    """Exact ||Pi^1_{<=eps1} Pi^0_{>eps0}|| against its exponential bound.

    Returns (lhs, bound) with bound = e^{-(eps0 - eps1 - 2Mv) / (2hgk)}.
    Requires eps1 <= eps0.
    """
    if eps1 > eps0:
        raise ValueError("requires eps1 <= eps0")
    v1 = spec1.projector_at_most(eps1)
    v0 = spec0.projector_above(eps0)
    if v1.shape[1] == 0 or v0.shape[1] == 0:
        lhs = 0.0
    else:
        lhs = float(np.linalg.norm(v1.conj().T @ v0, ord=2))
    bound = float(
        np.exp(-(eps0 - eps1 - 2.0 * meta.M * meta.v) / (2.0 * meta.h * meta.g * meta.k))
    )
    return lhs, bound
