"""Simulation and certification of parallel bipartite Bell experiments.

The package simulates bipartite measurement strategies, composes independent
copies into joint correlation tables under broadcast or per-copy input
schemes, and certifies (or rejects) such tables through conditional and
input-averaged Bell expression values evaluated copy by copy.
"""

from .bell import (
    BellExpression,
    BoundResult,
    ConditionalSlice,
    CorrelationTable,
    Scheme,
    averaged_j_percopy,
    bell_operator,
    builtin_expression,
    chsh_expression,
    chsh_game_expression,
    classical_bound,
    conditional_slice,
    conditional_value,
    copy_marginal,
    correlator,
    decode_joint,
    encode_joint,
    evaluate,
    expression_from_json_dict,
    expression_to_json_dict,
    generalized_conditional_value,
    generalized_j_value,
    j_value,
    quantum_value_fixed_measurements,
    table_from_json_dict,
    table_to_json_dict,
    tilted_chsh_expression,
)
from .certify import (
    CertificationReport,
    ProtocolSpec,
    certify_theorem1,
    certify_theorem2,
    certify_theorem3,
    certify_theorem4,
    sweep_noise,
)
from .qcore import (
    DensityMatrix,
    Ket,
    Povm,
    born_probability,
    kron,
    max_eigenvalue,
    validate_povm,
)
from .strategies import (
    NoiseSpec,
    SingleCopyStrategy,
    adversary_copy,
    adversary_shared_randomness,
    apply_isotropic_noise,
    build_preset_strategy,
    build_preset_table,
    chsh_reference,
    compose,
    fullstats_reference,
    local_deterministic,
    parse_strategy_spec,
    single_copy_table,
    tilted_chsh_reference,
)

__version__ = "0.1.0"

__all__ = [
    "BellExpression",
    "BoundResult",
    "CertificationReport",
    "ConditionalSlice",
    "CorrelationTable",
    "DensityMatrix",
    "Ket",
    "NoiseSpec",
    "Povm",
    "ProtocolSpec",
    "Scheme",
    "SingleCopyStrategy",
    "adversary_copy",
    "adversary_shared_randomness",
    "apply_isotropic_noise",
    "averaged_j_percopy",
    "bell_operator",
    "born_probability",
    "build_preset_strategy",
    "build_preset_table",
    "builtin_expression",
    "certify_theorem1",
    "certify_theorem2",
    "certify_theorem3",
    "certify_theorem4",
    "chsh_expression",
    "chsh_game_expression",
    "chsh_reference",
    "classical_bound",
    "compose",
    "conditional_slice",
    "conditional_value",
    "copy_marginal",
    "correlator",
    "decode_joint",
    "encode_joint",
    "evaluate",
    "expression_from_json_dict",
    "expression_to_json_dict",
    "fullstats_reference",
    "generalized_conditional_value",
    "generalized_j_value",
    "j_value",
    "kron",
    "local_deterministic",
    "max_eigenvalue",
    "parse_strategy_spec",
    "quantum_value_fixed_measurements",
    "single_copy_table",
    "sweep_noise",
    "table_from_json_dict",
    "table_to_json_dict",
    "tilted_chsh_expression",
    "tilted_chsh_reference",
    "validate_povm",
]
