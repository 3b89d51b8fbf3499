"""Desk-scale Wightman reconstruction with matrix-valued test functions.

Modules: :mod:`algebra` (field algebra), :mod:`states` (Wightman data and
axiom checks), :mod:`gns` (Hilbert space reconstruction),
:mod:`matrix_states` (finite-dimensional approximations), :mod:`ym2`
(two-dimensional Yang-Mills sums), :mod:`matrix_model` (Hermitian one-matrix
model) and :mod:`cli`.
"""

from .algebra import (
    BorchersElement,
    MatrixTestFunction,
    SampledSpace,
    Term,
    cross,
    killing_pair,
    load_test_functions,
    star,
    translate,
)
from .gns import GnsRepresentation, build_gram, gns_construct, symmetry_unitary, vacuum_expectation
from .matrix_model import (
    MatrixModelSpec,
    MomentTable,
    eigenvalue_sample,
    gaussian_moment_table,
    gaussian_moments_wick,
    matrix_state_from_model,
    mc_moments,
    saddle_residual,
    solve_saddle,
)
from .matrix_states import (
    MatrixState,
    compress_to_matrix_state,
    convergence_report,
    eval_matrix_state,
    finite_order_approx,
    state_order,
)
from .states import (
    ConstantData,
    SeminormSpec,
    StateFunctional,
    TabulatedData,
    TraceMode,
    UltralocalData,
    check_hssc,
    check_krein,
    check_locality,
    check_positivity,
    check_translation_invariance,
    deform_state,
    eval_state,
    mix_states,
    sesquilinear,
    tensor_product_states,
)
from .words import WordBasis

__version__ = "0.1.0"
