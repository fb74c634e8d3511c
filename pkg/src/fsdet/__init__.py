"""Factor score determinacy in one-factor models with a two-group mean difference."""

from ._backend import DEFAULT_BACKEND, available_backends
from .determinacy import (
    CompensationPlan,
    DeterminacyReport,
    Path,
    benchmark_loading,
    closed_form_rho_sq,
    compensation,
    compensation_factor,
    determinacy_closed,
    determinacy_matrix,
    determinacy_with_group,
    regression_weights,
    score_group_d,
)
from .errors import (
    CommunalityError,
    DegenerateSimulationError,
    ModelError,
    SingularMatrixError,
    UnreachableTargetError,
)
from .model import (
    CorrelationStructure,
    GroupSpec,
    ModelSpec,
    build_sigma,
    combined_loading,
    corrected_loading,
    d_to_r,
)
from .simulation import (
    EliminationMode,
    SimulationConfig,
    SimulationResult,
    identifiability_check,
    simulate,
)

__version__ = "0.1.0"
