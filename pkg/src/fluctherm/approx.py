"""Fourier-series approximation of e^{-beta W / 2} with a work cutoff.

The scalar target is e^{-x} for x = beta (w - w_l) / 2 >= 0, smoothed by
convolving a truncated exponential with a Gaussian; the smoothed function is
h(x) = e^{-x} (1 + Erf(Delta + x)) / 2, whose Fourier transform

    H(omega) = e^{-omega^2/4} * e^{-1/4} e^{(1 + i omega)(Delta + 1/2)} / (1 + i omega)

decays fast enough that a step-delta Riemann sum truncated at J terms gives
an (eps/3)-relative approximation above the cutoff and a factor-2 one below
it.  Parameter selection:

    Delta = max{4, sqrt(ln(6/eps))},   z = beta (w_max - w_l) + 2 Delta^2,
    delta = 2 pi / z,                  J = ceil(z^{3/2} / 3) - 1.

The resulting operator is X = sum_j alpha_j U^j with U = e^{i delta beta W/2},
alpha_j = e^{-beta w_l/2} (delta / sqrt(2 pi)) H(j delta) e^{-i j delta beta w_l / 2},
and L1 weight alpha = sum |alpha_j| <= 2 e^{Delta} e^{-beta w_l / 2}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import CertificationError


@dataclass(frozen=True)
class FourierParams:
    Delta: float
    z: float
    delta: float
    J: int


@dataclass(frozen=True)
class FourierSeries:
    """Coefficients alpha_{-J..J} together with the parameters that built them."""

    beta: float
    w_l: float
    w_max: float
    eps: float
    Delta: float
    z: float
    delta: float
    J: int
    coeffs: np.ndarray  # alpha_{-J} ... alpha_{J}

    @property
    def l1(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    @property
    def js(self) -> np.ndarray:
        return np.arange(-self.J, self.J + 1)

    def to_csv(self) -> str:
        lines = ["j,re,im"]
        lines += [
            f"{j},{a.real:.12g},{a.imag:.12g}"
            for j, a in zip(self.js, self.coeffs)
        ]
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_coefficients(
        beta: float, w_l: float, delta: float, coeffs: np.ndarray
    ) -> "FourierSeries":
        """Wrap an explicit conjugate-symmetric coefficient list (used to run
        the circuit simulators on synthetic series)."""
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape[0] % 2 != 1:
            raise ValueError("coefficient list must have odd length 2J+1")
        j = (coeffs.shape[0] - 1) // 2
        if np.max(np.abs(coeffs - coeffs[::-1].conj())) > 1e-12 * max(
            1.0, float(np.max(np.abs(coeffs)))
        ):
            raise ValueError("coefficients must satisfy alpha_{-j} = conj(alpha_j)")
        return FourierSeries(
            beta=beta, w_l=w_l, w_max=np.nan, eps=np.nan,
            Delta=np.nan, z=np.nan, delta=delta, J=j, coeffs=coeffs,
        )


@dataclass(frozen=True)
class HsSeries:
    """Gaussian-weight series for e^{-beta W/2} when W >= 0."""

    beta: float
    w_max: float
    eps: float
    delta: float
    J: int
    coeffs: np.ndarray  # real, c_{-J} ... c_{J}

    @property
    def weight_sum(self) -> float:
        return float(np.sum(self.coeffs))

    @property
    def js(self) -> np.ndarray:
        return np.arange(-self.J, self.J + 1)


@dataclass(frozen=True)
class CertificationReport:
    """Per-eigenvalue relative errors of a series against its two bounds."""

    eigenvalues: np.ndarray
    relative_errors: np.ndarray
    above_cutoff: np.ndarray
    violations: np.ndarray
    eps: float

    @property
    def ok(self) -> bool:
        return not bool(np.any(self.violations))

    @property
    def max_relative_above(self) -> float:
        if not np.any(self.above_cutoff):
            return 0.0
        return float(np.max(self.relative_errors[self.above_cutoff]))

    @property
    def max_relative_below(self) -> float:
        below = ~self.above_cutoff
        if not np.any(below):
            return 0.0
        return float(np.max(self.relative_errors[below]))


def select_parameters(
    beta: float, w_max: float, w_l: float, eps: float
) -> FourierParams:
    """Sufficient parameter choice for the two-sided relative error bounds."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if w_max < w_l:
        raise ValueError("w_max must be >= w_l")
    delta_big = max(4.0, math.sqrt(math.log(6.0 / eps)))
    z = beta * (w_max - w_l) + 2.0 * delta_big**2
    step = 2.0 * math.pi / z
    j = math.ceil(z**1.5 / 3.0) - 1
    return FourierParams(Delta=delta_big, z=z, delta=step, J=j)


def fourier_transform_h(omega: np.ndarray, delta_big: float) -> np.ndarray:
    """H(omega), the unitary Fourier transform of the smoothed exponential."""
    omega = np.asarray(omega, dtype=float)
    g = (
        (math.exp(-0.25) / math.sqrt(2.0 * math.pi))
        * np.exp((1.0 + 1j * omega) * (delta_big + 0.5))
        / (1.0 + 1j * omega)
    )
    f = np.exp(-(omega**2) / 4.0) / math.sqrt(2.0 * math.pi)
    return math.sqrt(2.0 * math.pi) * f * g


def smoothed_exponential(x: np.ndarray, delta_big: float) -> np.ndarray:
    """h(x) = e^{-x} (1 + Erf(Delta + x)) / 2, the scalar being approximated."""
    x = np.asarray(x, dtype=float)
    return np.exp(-x) * (1.0 + erf(delta_big + x)) / 2.0


def build_series(
    beta: float,
    w_max: float,
    w_l: float,
    eps: float,
    J: "int | None" = None,
) -> FourierSeries:
    """Construct the coefficient list for the given instance.

    J defaults to the minimal sufficient value; callers may pass any larger
    truncation order.
    """
    params = select_parameters(beta, w_max, w_l, eps)
    j = params.J if J is None else int(J)
    if J is not None and j < params.J:
        raise ValueError(f"J={j} is below the minimal sufficient value {params.J}")
    js = np.arange(-j, j + 1)
    omegas = js * params.delta
    coeffs = (
        math.exp(-beta * w_l / 2.0)
        * (params.delta / math.sqrt(2.0 * math.pi))
        * fourier_transform_h(omegas, params.Delta)
        * np.exp(-1j * omegas * beta * w_l / 2.0)
    )
    return FourierSeries(
        beta=beta, w_l=w_l, w_max=w_max, eps=eps,
        Delta=params.Delta, z=params.z, delta=params.delta, J=j, coeffs=coeffs,
    )


def evaluate_series(series: FourierSeries, w: "float | np.ndarray") -> np.ndarray:
    """Scalar the operator X assigns to an eigenvalue w of the work operator:
    sum_j alpha_j e^{i j delta beta w / 2}."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    phases = np.exp(
        1j * np.outer(w, series.js) * (series.delta * series.beta / 2.0)
    )
    values = phases @ series.coeffs
    return values if values.shape[0] > 1 else values[0]


def certify_constraints(
    series: FourierSeries, eigenvalues: "np.ndarray | list"
) -> CertificationReport:
    """Check every work eigenvalue against the two relative-error bounds.

    Above the cutoff the error must stay within (eps/3) e^{-beta w/2}; below
    it within 2 e^{-beta w/2}.  An empty eigenvalue list passes vacuously.
    This gate runs before any series is used inside a circuit.
    """
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if eigenvalues.size == 0:
        return CertificationReport(
            eigenvalues=eigenvalues,
            relative_errors=np.zeros(0),
            above_cutoff=np.zeros(0, dtype=bool),
            violations=np.zeros(0, dtype=bool),
            eps=series.eps,
        )
    values = np.atleast_1d(evaluate_series(series, eigenvalues))
    target = np.exp(-series.beta * eigenvalues / 2.0)
    rel = np.abs(target - values) / target
    above = eigenvalues >= series.w_l
    allowed = np.where(above, series.eps / 3.0, 2.0)
    violations = rel > allowed
    return CertificationReport(
        eigenvalues=eigenvalues,
        relative_errors=rel,
        above_cutoff=above,
        violations=violations,
        eps=series.eps,
    )


def require_certified(series: FourierSeries, eigenvalues: np.ndarray) -> CertificationReport:
    report = certify_constraints(series, eigenvalues)
    if not report.ok:
        bad = int(np.sum(report.violations))
        raise CertificationError(
            f"series certification failed on {bad} of {report.eigenvalues.size} "
            f"work eigenvalues (max rel. error above cutoff "
            f"{report.max_relative_above:.3e}, below {report.max_relative_below:.3e})"
        )
    return report


def hs_parameters(beta: float, w_max: float, eps: float) -> HsSeries:
    """Gaussian-quadrature series for non-negative work operators.

    delta = (1/2pi) / (sqrt(beta w_max) + sqrt(6 ln(2/eps))) and
    J = ceil(2 pi (sqrt(beta w_max) + sqrt(6 ln(2/eps))) sqrt(6 ln(2/eps)));
    the coefficients are (delta / sqrt(2 pi)) e^{-omega_j^2 / 2} and sum to
    at most 2.  The series acts through e^{i omega_j sqrt(beta W)}, so it
    requires w_min >= 0 at the point of use.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if w_max < 0:
        raise ValueError("w_max must be >= 0")
    root_bw = math.sqrt(beta * w_max)
    root_log = math.sqrt(6.0 * math.log(2.0 / eps))
    delta = 1.0 / (2.0 * math.pi * (root_bw + root_log))
    j = math.ceil(2.0 * math.pi * (root_bw + root_log) * root_log)
    js = np.arange(-j, j + 1)
    coeffs = (delta / math.sqrt(2.0 * math.pi)) * np.exp(-((js * delta) ** 2) / 2.0)
    return HsSeries(beta=beta, w_max=w_max, eps=eps, delta=delta, J=j, coeffs=coeffs)


def evaluate_hs_series(series: HsSeries, w: "float | np.ndarray") -> np.ndarray:
    """sum_j c_j e^{i omega_j sqrt(beta w)} for w >= 0."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if np.any(w < 0):
        raise ValueError("the Gaussian series is defined for w >= 0 only")
    root = np.sqrt(series.beta * w)
    phases = np.exp(1j * np.outer(root, series.js) * series.delta)
    values = phases @ series.coeffs.astype(complex)
    return values if values.shape[0] > 1 else values[0]
