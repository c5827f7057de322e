"""Gibbs states, their purifications, and free-energy differences.

The purification convention is the "two-copy" form

    |Psi> = (1/sqrt(Z)) sum_m e^{-beta eps_m / 2} |phi_m> |phi_m^*>,

whose partial trace over the second factor is exactly the thermal state.
Numerically this is the vectorization of e^{-beta H / 2} normalized in
Frobenius norm, which makes it well defined even for degenerate spectra.
Boltzmann weights are always evaluated after shifting by the ground-state
energy so that beta * ||H|| up to ~700 stays in double-precision range.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .hamiltonians import PauliString, PauliSum, Spectrum


@dataclass(frozen=True)
class DensityMatrix:
    """A positive unit-trace Hermitian matrix."""

    entries: np.ndarray

    def validate(self, tol: float = 1e-12) -> "DensityMatrix":
        a = self.entries
        if np.max(np.abs(a - a.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(a).real - 1.0) > tol:
            raise ValueError("density matrix trace differs from 1")
        if np.min(np.linalg.eigvalsh(a)) < -tol:
            raise ValueError("density matrix has a negative eigenvalue")
        return self

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def to_csv(self) -> str:
        lines = ["index,re,im"]
        flat = self.entries.reshape(-1)
        lines += [f"{i},{z.real:.12g},{z.imag:.12g}" for i, z in enumerate(flat)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PureState:
    """A state vector together with its tensor-factor dimensions."""

    amplitudes: np.ndarray
    factor_dims: tuple[int, ...]
    normalized: bool = True

    def __post_init__(self):
        expected = int(np.prod(self.factor_dims))
        if self.amplitudes.shape != (expected,):
            raise ValueError(
                f"amplitude vector of length {self.amplitudes.shape} does not "
                f"match factor dims {self.factor_dims}"
            )
        if self.normalized:
            nrm = float(np.linalg.norm(self.amplitudes))
            if abs(nrm - 1.0) > 1e-12:
                raise ValueError(f"state norm {nrm} differs from 1")

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def to_csv(self) -> str:
        lines = ["index,re,im"]
        lines += [
            f"{i},{z.real:.12g},{z.imag:.12g}"
            for i, z in enumerate(self.amplitudes)
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ThermoData:
    """Partition functions and free-energy difference at one temperature.

    deltaA = -(1/beta) ln(Z1/Z0); at beta = 0 with equal dimensions the
    difference is defined to be 0.  log_Z0/log_Z1 are kept alongside because
    the raw partition functions can overflow for large beta*||H||.
    """

    beta: float
    Z0: float
    Z1: float
    deltaA: float
    log_Z0: float
    log_Z1: float


def boltzmann_weights(spectrum: Spectrum, beta: float) -> np.ndarray:
    """Normalized Boltzmann probabilities e^{-beta eps} / Z, overflow-safe."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    shifted = -beta * (spectrum.eigenvalues - spectrum.eigenvalues[0])
    w = np.exp(shifted)
    return w / w.sum()


def log_partition_function(spectrum: Spectrum, beta: float) -> float:
    return float(logsumexp(-beta * spectrum.eigenvalues))


def thermal_state(spectrum: Spectrum, beta: float) -> DensityMatrix:
    """Gibbs state e^{-beta H} / Z through the spectral representation."""
    p = boltzmann_weights(spectrum, beta)
    q = spectrum.eigenvectors
    rho = (q * p) @ q.conj().T
    return DensityMatrix((rho + rho.conj().T) / 2.0)


def purification(spectrum: Spectrum, beta: float) -> PureState:
    """Two-copy purification sum_m e^{-beta eps_m/2} |phi_m>|phi_m^*> / sqrt(Z).

    Computed as the normalized vectorization of the weighted projector sum
    Q diag(e^{-beta(eps - eps_min)/2}) Q^dagger, which is invariant under
    basis rotations inside degenerate eigenspaces.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    half = np.exp(-0.5 * beta * (spectrum.eigenvalues - spectrum.eigenvalues[0]))
    q = spectrum.eigenvectors
    mat = (q * half) @ q.conj().T
    vec = mat.reshape(-1)
    vec = vec / np.linalg.norm(vec)
    d = spectrum.dim
    return PureState(vec, (d, d))


def partial_trace_second(state: PureState) -> DensityMatrix:
    """Trace out the second tensor factor of a bipartite pure state."""
    if len(state.factor_dims) != 2:
        raise ValueError("expected a bipartite state")
    d1, d2 = state.factor_dims
    m = state.amplitudes.reshape(d1, d2)
    rho = m @ m.conj().T
    if not state.normalized:
        rho = rho / np.trace(rho).real
    return DensityMatrix(rho)


def free_energy_difference(
    spec0: Spectrum, spec1: Spectrum, beta: float
) -> ThermoData:
    """Free-energy difference -(1/beta) ln(Z1/Z0) between two spectra."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    log_z0 = log_partition_function(spec0, beta)
    log_z1 = log_partition_function(spec1, beta)
    if beta == 0:
        if spec0.dim != spec1.dim:
            raise ValueError("beta = 0 requires equal dimensions")
        delta_a = 0.0
    else:
        delta_a = -(log_z1 - log_z0) / beta
    return ThermoData(
        beta=beta,
        Z0=float(np.exp(log_z0)),
        Z1=float(np.exp(log_z1)),
        deltaA=delta_a,
        log_Z0=log_z0,
        log_Z1=log_z1,
    )


def u0_product_circuit(n: int, beta: float) -> PureState:
    """Purification of the thermal state of sum_j Z_j by an explicit circuit.

    Applies Ry(theta) = e^{-i theta Y} with theta = arccos(e^{-beta/2} /
    sqrt(2 cosh beta)) on each of the first n qubits of |0>^{2n}, then a
    CNOT from qubit j to qubit n+j.  The result is
    sum_b e^{-beta(n - 2 b_1 - ... - 2 b_n)/2} |b>|b> / sqrt(Z0).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    theta = np.arccos(np.exp(-beta / 2.0) / np.sqrt(2.0 * np.cosh(beta)))
    c, s = np.cos(theta), np.sin(theta)
    # After the rotations the first register holds prod_j (c|0> + s|1>); the
    # CNOT ladder copies each bit, so amplitudes live on |b>|b> only.
    single = np.array([c, s])
    amp_first = single
    for _ in range(n - 1):
        amp_first = np.kron(amp_first, single)
    d = 2**n
    vec = np.zeros(d * d, dtype=complex)
    idx = np.arange(d)
    vec[idx * d + idx] = amp_first
    return PureState(vec, (d, d))


def rotation_angle(beta: float) -> float:
    """theta = arccos(e^{-beta/2} / sqrt(2 cosh beta)) of the product circuit."""
    return float(np.arccos(np.exp(-beta / 2.0) / np.sqrt(2.0 * np.cosh(beta))))


def zfield_hamiltonian(n: int) -> PauliSum:
    """sum_j Z_j, the non-interacting reference Hamiltonian."""
    terms = tuple(
        (1.0, PauliString("I" * j + "Z" + "I" * (n - j - 1))) for j in range(n)
    )
    return PauliSum(n, terms)
