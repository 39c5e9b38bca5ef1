"""Entanglement analysis of few-qubit states from random local measurements."""
from .quantum import (
    CorrelationTensor,
    DensityMatrix,
    NonPhysicalStateError,
    apply_local_unitaries,
    as_mask,
    bell_state,
    correlation_tensor,
    haar_local_unitary,
    make_reference_state,
    marginal_tensor,
    product_state,
    purity,
    state_from_tensor,
)
from .sampling import (
    CorrelationDataset,
    NoiseModel,
    exact_correlation,
    outcome_distribution,
    run_experiment,
    sample_setting,
    simulate_setting,
)
from .moments import MomentEstimate, bayes_correct_moment, estimate_moment, exact_moment, exact_moments
from .witnesses import WitnessReport, bisep_bound, exact_report, witness_report, witness_value
from .distributions import histogram, product_distribution_test, theoretical_density
from .bisep import FrontierTable, boundary_state, sample_biseparable, scan_bound

__version__ = "0.1.0"
