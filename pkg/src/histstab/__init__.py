"""Consistent histories with a repetition-stability test, on dense matrices."""

__version__ = "0.1.0"

from .errors import (
    DegenerateContextError,
    DegenerateInputError,
    DomainError,
    HistStabError,
    OutputError,
    ResourceError,
    StructuralError,
    ValidationError,
)
from .operators import (
    TAU_STRUCT,
    DensityMatrix,
    FactoredSpace,
    Projector,
    Propagator,
    heisenberg_evolve,
    partial_trace_env,
    projector_from_vectors,
    tensor,
)
from .histories import (
    CONSISTENCY_TOL,
    HISTORY_CAP,
    TAU_NUM,
    ConsistencyReport,
    DecoherenceFunctional,
    HistorySet,
    ProjectionDecomposition,
    check_consistency,
    coarse_grain,
    decoherence_functional,
    enumerate_histories,
    history_probability,
)
from .stability import (
    RepetitionCurve,
    StabilityReport,
    TimeGrid,
    check_stability,
    chord_ratio,
    fluctuation_bound,
    repetition_curve,
    stability_timescale,
)
from .decoherence import (
    CatState,
    DecayFit,
    SpinBathModel,
    build_pointer_projectors,
    build_spin_bath,
    cat_scenario,
    effective_system_state,
    off_diagonal_decay,
)
from .search import (
    HistoryTemplate,
    ProjectorFamily,
    SearchResult,
    rotation_family,
    search_consistent_sets,
    violation_norm,
)
