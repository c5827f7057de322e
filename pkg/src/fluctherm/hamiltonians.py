"""Spin Hamiltonians as weighted Pauli strings, with exact dense diagonalization.

Conventions used throughout the package:

* qubit 0 is the leftmost (most significant) tensor factor, so the dense
  matrix of the string ``"ZX"`` is ``kron(Z, X)``;
* all term coefficients are real, which makes every operator Hermitian by
  construction;
* spectra are returned in ascending order with a deterministic eigenvector
  phase (largest-magnitude component made real and positive).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import reduce

import numpy as np

PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

#: absolute max-entry tolerance below which a matrix counts as Hermitian
HERMITICITY_TOL = 1e-12

#: relative tolerance for treating two eigenvalues as degenerate downstream
DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Paulis, written like ``"ZIXX"``."""

    factors: str

    def __post_init__(self):
        bad = set(self.factors) - set("IXYZ")
        if bad:
            raise ValueError(f"invalid Pauli labels {sorted(bad)} in {self.factors!r}")
        if not self.factors:
            raise ValueError("empty Pauli string")

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def weight(self) -> int:
        """Number of non-identity factors."""
        return sum(1 for f in self.factors if f != "I")

    def support(self) -> tuple[int, ...]:
        return tuple(j for j, f in enumerate(self.factors) if f != "I")

    def dense(self) -> np.ndarray:
        return reduce(np.kron, (PAULIS[f] for f in self.factors))

    def __str__(self) -> str:
        return self.factors


@dataclass(frozen=True)
class LocalityMetadata:
    """Structure constants of a split H = H0 + V into local parts.

    k: max qubits touched by any term; g: max number of terms (within one
    part) acting on a single qubit; h, v: largest |coefficient| among the
    H0 / V terms; M: number of V terms.
    """

    k: int
    g: int
    h: float
    v: float
    M: int

    def __post_init__(self):
        if self.k < 1 or self.g < 1 or self.M < 1:
            raise ValueError("k, g, M must be positive")
        if self.h < 0 or self.v < 0:
            raise ValueError("h, v must be non-negative")


@dataclass(frozen=True)
class PauliSum:
    """A Hamiltonian given as a real-weighted list of Pauli strings."""

    n: int
    terms: tuple[tuple[float, PauliString], ...]
    locality: LocalityMetadata | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("qubit count must be >= 1")
        for coeff, string in self.terms:
            if string.n != self.n:
                raise ValueError(
                    f"term {string} has {string.n} qubits, expected {self.n}"
                )
            if abs(float(np.imag(coeff))) > 0:
                raise ValueError("coefficients must be real")

    @property
    def dim(self) -> int:
        return 2**self.n

    def dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for coeff, string in self.terms:
            out += coeff * string.dense()
        return out

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n != self.n:
            raise ValueError("qubit counts differ")
        return PauliSum(self.n, self.terms + other.terms)

    def to_json(self) -> str:
        doc = {
            "n": self.n,
            "terms": [{"coeff": c, "pauli": s.factors} for c, s in self.terms],
        }
        return json.dumps(doc)

    @staticmethod
    def from_json(doc: str | dict) -> "PauliSum":
        if isinstance(doc, str):
            doc = json.loads(doc)
        terms = tuple(
            (float(t["coeff"]), PauliString(t["pauli"])) for t in doc["terms"]
        )
        return PauliSum(int(doc["n"]), terms)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian operator."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_dim: int

    @property
    def dim(self) -> int:
        return self.source_dim

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.conj().T

    def projector_at_most(self, cutoff: float) -> np.ndarray:
        """Columns spanning the eigenspace with eigenvalue <= cutoff."""
        return self.eigenvectors[:, self.eigenvalues <= cutoff]

    def projector_above(self, cutoff: float) -> np.ndarray:
        """Columns spanning the eigenspace with eigenvalue > cutoff."""
        return self.eigenvectors[:, self.eigenvalues > cutoff]


def as_dense_hermitian(op: "PauliSum | np.ndarray") -> np.ndarray:
    """Coerce to a dense complex matrix, enforcing Hermiticity to 1e-12."""
    a = op.dense() if isinstance(op, PauliSum) else np.asarray(op, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    dev = np.max(np.abs(a - a.conj().T))
    if dev > HERMITICITY_TOL:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    return a


def build_tfim(n: int, field: float, coupling: float) -> PauliSum:
    """Open-chain transverse-field Ising model  field*sum_j Z_j - coupling*sum_j X_j X_{j+1}.

    The returned locality metadata follows the H0 + V split where the Z terms
    form the non-interacting H0 and the XX terms form the perturbation V.
    For n = 1 there are no couplings and no metadata is attached.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    z_terms = []
    for j in range(n):
        factors = "I" * j + "Z" + "I" * (n - j - 1)
        z_terms.append((float(field), PauliString(factors)))
    xx_terms = []
    for j in range(n - 1):
        factors = "I" * j + "XX" + "I" * (n - j - 2)
        xx_terms.append((float(-coupling), PauliString(factors)))
    meta = locality_from_split(z_terms, xx_terms) if xx_terms else None
    return PauliSum(n, tuple(z_terms + xx_terms), locality=meta)


def tfim_field_part(n: int, field: float) -> PauliSum:
    """The non-interacting part  field * sum_j Z_j."""
    terms = tuple(
        (float(field), PauliString("I" * j + "Z" + "I" * (n - j - 1)))
        for j in range(n)
    )
    return PauliSum(n, terms)


def tfim_coupling_part(n: int, coupling: float) -> PauliSum:
    """The perturbation  -coupling * sum_j X_j X_{j+1}  (empty for n = 1)."""
    terms = tuple(
        (float(-coupling), PauliString("I" * j + "XX" + "I" * (n - j - 2)))
        for j in range(n - 1)
    )
    return PauliSum(n, terms)


def locality_from_split(
    h0_terms: list[tuple[float, PauliString]] | tuple,
    v_terms: list[tuple[float, PauliString]] | tuple,
) -> LocalityMetadata:
    """Scan an explicit H0/V term split for its locality structure constants."""
    if not v_terms:
        raise ValueError("V has no terms; locality metadata undefined")
    all_terms = list(h0_terms) + list(v_terms)
    k = max(s.weight for _, s in all_terms)
    g = 1
    for part in (h0_terms, v_terms):
        degree: dict[int, int] = {}
        for _, s in part:
            for q in s.support():
                degree[q] = degree.get(q, 0) + 1
        if degree:
            g = max(g, max(degree.values()))
    h = max((abs(c) for c, _ in h0_terms), default=0.0)
    v = max(abs(c) for c, _ in v_terms)
    return LocalityMetadata(k=k, g=g, h=h, v=v, M=len(list(v_terms)))


def diagonalize(op: "PauliSum | np.ndarray") -> Spectrum:
    """Exact dense eigendecomposition with ascending eigenvalues.

    The eigenvector phase is fixed deterministically: the largest-magnitude
    component of each column is rotated to be real and positive.
    """
    a = as_dense_hermitian(op)
    eigenvalues, q = np.linalg.eigh(a)
    for col in range(q.shape[1]):
        mags = np.abs(q[:, col])
        # first component within rounding of the max, so exact magnitude
        # ties inside degenerate subspaces resolve stably
        i = int(np.argmax(mags >= mags.max() * (1.0 - 1e-12)))
        pivot = q[i, col]
        if abs(pivot) > 0:
            q[:, col] *= np.conj(pivot) / abs(pivot)
    return Spectrum(
        eigenvalues=np.real(eigenvalues), eigenvectors=q, source_dim=a.shape[0]
    )


def conjugate(op: "PauliSum | np.ndarray") -> np.ndarray:
    """Entrywise complex conjugate in the computational basis."""
    return as_dense_hermitian(op).conj()


def spectral_norm(op: "PauliSum | np.ndarray | Spectrum") -> float:
    """Largest |eigenvalue| of a Hermitian operator."""
    if isinstance(op, Spectrum):
        eigenvalues = op.eigenvalues
    else:
        eigenvalues = np.linalg.eigvalsh(as_dense_hermitian(op))
    if eigenvalues.size == 0:
        return 0.0
    return float(np.max(np.abs(eigenvalues)))


def degeneracy_tolerance(spectrum: Spectrum) -> float:
    scale = max(1.0, float(np.max(np.abs(spectrum.eigenvalues), initial=0.0)))
    return DEGENERACY_RTOL * scale
