"""Numerical simulator and verification suite for fluctuation-theorem
thermal-state preparation on small spin systems."""

from .approx import (
    FourierSeries,
    HsSeries,
    build_series,
    certify_constraints,
    evaluate_hs_series,
    evaluate_series,
    hs_parameters,
    select_parameters,
)
from .circuitsim import (
    AmplificationReport,
    BlockEncodingResult,
    QspPhaseSet,
    amplitude_amplification,
    chebyshev_split,
    simulate_lcu,
    simulate_qsp,
    solve_phase_set,
    solve_qsp_phases,
)
from .errors import (
    CertificationError,
    ConfigError,
    NoSignalError,
    QspConvergenceError,
)
from .hamiltonians import (
    LocalityMetadata,
    PauliString,
    PauliSum,
    Spectrum,
    build_tfim,
    conjugate,
    diagonalize,
    spectral_norm,
)
from .nonequilibrium import (
    NonEqUnitary,
    PermutationAssignment,
    conjugate_unitary,
    cost_function,
    interpolated_evolution,
    optimal_unitary,
    optimal_unitary_for_eps,
)
from .pipeline import (
    RunConfig,
    RunResult,
    expected_rounds,
    gate_cost_estimate,
    gate_cost_estimate_commuting,
    run_tspp,
    trace_distance,
)
from .thermal import (
    DensityMatrix,
    PureState,
    ThermoData,
    free_energy_difference,
    partial_trace_second,
    purification,
    thermal_state,
    u0_product_circuit,
)
from .workstats import (
    CutoffReport,
    WorkDistribution,
    WorkTable,
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

__version__ = "0.1.0"
