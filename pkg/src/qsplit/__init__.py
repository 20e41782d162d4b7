"""Canonical, Wold and Levan decompositions of q-commuting contraction tuples."""
from .errors import QSplitError
from .numkit import DEFAULT_TOL, Subspace, Tolerance
from .opmodel import (
    CommutationData,
    OperatorTuple,
    ShiftBlock,
    StructuredOperator,
    classify,
    verify_doubly,
    verify_q_commuting,
)
from .decomp import (
    canonical_decomposition,
    cnu_tuple_decomposition,
    dc_part,
    levan_decomposition,
    tuple_decomposition,
    unitary_cnu_split,
    unitary_part,
    wold_decomposition,
)

__version__ = "0.1.0"
