"""modesplit: solvability, synthesis, and verification of state-to-output
mode decoupling for linear time-invariant systems.

The library decides nine variants of the problem of making every
closed-loop mode visible from at most one output, with per-output mode
counts and optionally assigned values.  Decisions reduce to subset
dimension tests over subspace families built from the system pencil;
positive instances come with a synthesized feedback/feedforward pair that
an independent closed-loop checker validates.
"""

from .errors import (
    BadIndex,
    BadSpec,
    DefectiveClosedLoop,
    DimensionMismatch,
    InfeasibleCounts,
    InternalInconsistency,
    InvalidMatrix,
    ModesplitError,
    NoWitness,
    NotRightInvertible,
    NotStabilized,
    ParseError,
    ProblemTooLarge,
    SynthesisFailed,
    UnsupportedPencil,
    VerificationFailed,
)
from .linalg import (
    AffineSet,
    Infeasible,
    SubspaceBasis,
    affine_solution_set,
    eig_decomp,
    null_space,
    orthonormalize,
    principal_angles,
    rank_of,
    right_inverse,
    subspace_sum_dim,
)
from .subspaces import (
    ComplexZeroFamily,
    DirectedSlice,
    KernelSlice,
    complex_zero_decomposition,
    l_i,
    r_hat_i,
    r_i_lambda,
    r_lambda,
    r_star,
    r_star_i,
    v_star,
    v_star_g,
    v_star_g_i,
)
from .synthesis import (
    CandidateSlot,
    FeedbackSolution,
    assemble_candidates,
    feedforward_gain,
    friend_of_rstar,
    synthesize_feedback,
)
from .system import (
    LtiSystem,
    StabilityRegion,
    ValidationReport,
    dump_system,
    load_system,
    normal_rank_pencil,
    validate_assumption1,
)
from .transversal import (
    ConditionLedger,
    CountedFamily,
    CountedMember,
    LedgerEntry,
    ProblemSpec,
    SolvabilityReport,
    check_bounded,
    check_counted,
    check_problem,
    extract_transversal,
)
from .verification import (
    DecoupledRealization,
    DecouplingReport,
    ModalMap,
    ModeEntry,
    OutputBlock,
    SimulationResult,
    check_decoupling,
    closed_loop_static_gain,
    decoupled_realization,
    mode_output_map,
    simulate_error,
)
from .zeros import InvariantZero, ZeroStructure, invariant_zeros, minimum_phase_zeros, rosenbrock

__version__ = "0.1.0"

__all__ = [
    "AffineSet",
    "BadIndex",
    "BadSpec",
    "CandidateSlot",
    "ComplexZeroFamily",
    "ConditionLedger",
    "CountedFamily",
    "CountedMember",
    "DecoupledRealization",
    "DecouplingReport",
    "DefectiveClosedLoop",
    "DimensionMismatch",
    "DirectedSlice",
    "FeedbackSolution",
    "Infeasible",
    "InfeasibleCounts",
    "InternalInconsistency",
    "InvalidMatrix",
    "InvariantZero",
    "KernelSlice",
    "LedgerEntry",
    "LtiSystem",
    "ModalMap",
    "ModeEntry",
    "ModesplitError",
    "NoWitness",
    "NotRightInvertible",
    "NotStabilized",
    "OutputBlock",
    "ParseError",
    "ProblemSpec",
    "ProblemTooLarge",
    "SimulationResult",
    "SolvabilityReport",
    "StabilityRegion",
    "SubspaceBasis",
    "SynthesisFailed",
    "UnsupportedPencil",
    "ValidationReport",
    "VerificationFailed",
    "ZeroStructure",
    "affine_solution_set",
    "assemble_candidates",
    "check_bounded",
    "check_counted",
    "check_decoupling",
    "check_problem",
    "closed_loop_static_gain",
    "complex_zero_decomposition",
    "decoupled_realization",
    "dump_system",
    "eig_decomp",
    "extract_transversal",
    "feedforward_gain",
    "friend_of_rstar",
    "invariant_zeros",
    "l_i",
    "load_system",
    "minimum_phase_zeros",
    "mode_output_map",
    "normal_rank_pencil",
    "null_space",
    "orthonormalize",
    "principal_angles",
    "r_hat_i",
    "r_i_lambda",
    "r_lambda",
    "r_star",
    "r_star_i",
    "rank_of",
    "right_inverse",
    "rosenbrock",
    "simulate_error",
    "subspace_sum_dim",
    "synthesize_feedback",
    "v_star",
    "v_star_g",
    "v_star_g_i",
    "validate_assumption1",
]
