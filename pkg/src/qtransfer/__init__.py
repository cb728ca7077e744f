"""qtransfer: a desk-scale laboratory for unitary information-transfer models.

Build measurement-style channels from declarative branch maps, grade
hypothetical transfers against the orthogonality dichotomy, simulate
sequential imprinting chains with their record-quality ledgers, score
redundancy and discord on branching states, and trace the
information-disturbance frontier by ascent over the unitary group.
"""

from .chains import (
    ChainConfig,
    ChainLink,
    ChainTrace,
    QualityLedger,
    StageSnapshot,
    build_branching_state,
    overlap_product_check,
    quality_ledger,
    random_factorizing_config,
    run_chain,
)
from .channels import (
    Branch,
    FeasibilityReport,
    TransferSpec,
    check_feasibility,
    complete_to_unitary,
    gram_matrix,
    random_repeatable_spec,
    state_with_overlap,
    verify_repeatability,
)
from .darwinism import (
    FragmentSpec,
    PartialInfoCurve,
    PipPoint,
    mutual_information,
    partial_info_curve,
    quantum_discord,
    redundancy,
    schmidt_pointer_gap,
)
from .errors import (
    DegenerateSchmidtError,
    DegenerateSystemError,
    InfeasibleSpecError,
    InvalidStateError,
    LabelCollisionError,
    LayoutMismatchError,
    NonFactorizingError,
    NonNormalizableError,
    NotRepeatableError,
    NumericalRankLossError,
    QTransferError,
    RankError,
    SpectrumMismatchError,
    UnknownLabelError,
    UnsupportedDimensionError,
)
from .frontier import (
    FrontierPoint,
    FrontierProblem,
    FrontierRow,
    evaluate,
    frontier_scan,
    optimize,
)
from .linalg import (
    DensityOperator,
    PureState,
    SubsystemLayout,
    UnitaryOperator,
    apply_unitary,
    basis_state,
    evolve_density,
    exp_i_hermitian,
    hs_inner,
    inner,
    partial_trace,
    purify,
    random_density,
    random_pure,
    random_unitary,
    tensor,
    trace_distance,
    uhlmann_fidelity,
    von_neumann_entropy,
)
from .verifiers import (
    DichotomyTag,
    DichotomyVerdict,
    classify_dichotomy,
    mixed_invariant_gap,
    norm_residual,
    purified_branch_records,
    purified_residual,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
