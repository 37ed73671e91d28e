"""Quantum operations through the Choi matrix: representations, positivity
tests, named channel families and a small command-line front end."""

__version__ = "0.1.0"

from .tensor_ops import (  # noqa: E402
    BipartiteDims,
    DimensionError,
    SchmidtDecomposition,
    flip,
    hs_inner,
    is_product,
    operator_schmidt,
    partial_flip,
    partial_trace,
    partial_transpose,
    reshape_to_matrix,
    reshape_to_vector,
    reshuffle,
    reshuffle_prime,
    schmidt_rank,
)
from .channel import (  # noqa: E402
    Channel,
    KrausSet,
    NotCompletelyPositive,
    NotHermiticityPreserving,
    apply,
    canonical_kraus,
    channel_from_choi,
    channel_from_kraus,
    channel_from_superop,
    choi_spectrum,
    compose,
    dual,
    entropy,
    is_trace_preserving,
    is_unital,
    kraus_rank,
    superop_spectrum,
    unitary_channel,
)
from .positivity import (  # noqa: E402
    ccp_value,
    choi_map_decomposable,
    choi_map_positive,
    cp_value,
    decomposability_line_test,
    positivity_value,
    spa,
)
from .duality import (  # noqa: E402
    apply_extended,
    classical_shadow,
    map_from_state,
    max_entangled_state,
    state_from_map,
)
