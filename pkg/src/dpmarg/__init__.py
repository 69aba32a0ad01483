"""dpmarg: differentially private release of k-way marginal and parity
queries by Gaussian noise followed by Frank-Wolfe projection onto a
unit-vector relaxation of the parity-column hull, with JL-compressed
synopses and boosting for worst-case error."""

from ._kernels import NUMBA_ENABLED
from .boosting import BoostConfig, BoostResult, base_generator, boost, median_aggregate
from .errors import (
    DpmargError,
    IncompleteInputError,
    InvalidQueryError,
    NotInSupportError,
    SizeGuardError,
    ValidationError,
)
from .frankwolfe import FWIterate, Vertex, frank_wolfe, line_search
from .geometry import (
    WidthEstimate,
    dual_norm_K_bruteforce,
    dual_norm_L,
    dual_norm_L0_bruteforce,
    estimate_width,
    sample_dp_vector,
)
from .noise import (
    PrivacyLedger,
    PrivacyParams,
    make_rng,
    noisy_scaled_answers,
    privacy_multiplier,
    split_rng,
)
from .projection import (
    RawPoint,
    ReleaseResult,
    default_iterations,
    exact_projection_K,
    mse,
    relaxed_projection_mechanism,
    root_mse,
    worst_case_error,
)
from .queries import (
    MarginalQuery,
    QueryDistribution,
    RowDatabase,
    barak_coefficients,
    canonical_tuple,
    lift_distribution,
    marginal_eval,
    marginals_from_parities,
    parity_eval,
    true_parity_answers,
    uniform_grid_distribution,
    uniform_marginal_distribution,
    uniform_subset_distribution,
)
from .sdp import (
    GrothendieckMatrix,
    LPoint,
    SdpResult,
    SdpSettings,
    binary_maximize_bruteforce,
    build_grothendieck_matrix,
    l_point_eval,
    sdp_maximize,
)
from .synopsis import (
    Synopsis,
    jl_compress,
    jl_dimension,
    load_synopsis,
    reconstruct_answer,
    save_synopsis,
    synopsis_size_bits,
)

__version__ = "0.1.0"
