"""Small-depth monotone formulas that approximate Majority, with certified numerics."""

from .amplification import (
    AmplificationTable,
    FanInProfile,
    GateCount,
    Lemma1Report,
    LemmaCheck,
    amplify,
    amplify_exact,
    gate_count,
    lemma1_check,
    lemma3_check,
    lemma4_check,
    lemma_sweep,
    lemma_threshold,
    size_bound,
)
from .circuit import Circuit, TruthTable, evaluate, majority, sample_circuit, truth_table
from .construction import NOT_FOUND, ExploreResult, ProfileRecipe, explore, paper_profile, valiant_profile
from .inequalities import check_inequality, inequality_suite
from .numerics import CertInterval, TriBool, certify_leq, iv_arith, iv_from_ratio, iv_pow
from .verification import (
    VerificationReport,
    exact_disagreement,
    expected_error,
    middle_band,
    monte_carlo_disagreement,
    stirling_check,
    weight_slice_consistency,
)

__version__ = "0.1.0"
