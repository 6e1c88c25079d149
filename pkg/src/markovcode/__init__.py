"""Optimal real-time source coding of Markov chains over a one-bit-per-slot channel."""

from .chain import (
    GeneratorMatrix,
    TransitionMatrix,
    blend,
    ctmc_to_dtmc,
    homogeneous_matrix,
    matrix_power,
    random_matrix,
    reference_random_matrix,
    steady_state,
    validate,
    validate_generator,
)
from .codebook import (
    Codebook,
    CompleteCode,
    assign_codewords,
    enumerate_complete_codes,
    huffman_lengths,
    is_complete,
)
from .errors import (
    MarkovCodeError,
    MultichainPolicyError,
    NonErgodicError,
    SingularSystemError,
    SolverError,
    UnsupportedAlphabetError,
    ValidationError,
)
from .mdp import (
    AugmentedState,
    CodingPolicy,
    SolveReport,
    expected_cost,
    long_run_average,
    policy_improvement,
    policy_iteration,
    policy_transition_matrix,
    state_space,
    stationary_distribution,
    transition_kernel,
    value_determination,
)
from .policies import PolicyKind, myopic_policy, solve_all, steady_state_policy
from .sim import SimResult, sample_next, simulate

__version__ = "0.1.0"
