"""Causal discovery from conditional independence under latent variables and
selection bias, built around partially oriented inducing path graphs."""

from .causal_queries import (
    CausalClaim,
    ClaimKind,
    all_claims,
    blocking_claims,
    definite_cause,
    exists_directed_path,
    exists_semi_directed_path,
    latent_variable,
    no_cause_either_way,
)
from .equiv_verify import (
    EnumBounds,
    VerificationReport,
    enumerate_dags,
    equiv_members,
    iter_equiv_members,
    verify_bounded,
    verify_poipg,
)
from .fci import ConflictPolicy, FciConfig, FciResult, FciTrace, OrientationConflict, SepsetTable, fci, possible_d_sep
from .graph_core import ARROW, CIRCLE, TAIL, Dag, EndpointMark, GraphError, MixedGraph, Poipg, Role, Variable
from .oracles import (
    CiOracle,
    DataError,
    Dataset,
    InsufficientPolicy,
    OracleError,
    TestResult,
    Verdict,
    caching_oracle,
    data_oracle,
    g2_test,
    graphical_oracle,
    table_oracle,
)
from .separation import (
    CiSet,
    CiStatement,
    InducingPathOrientation,
    d_separated,
    exists_inducing_path,
    inducing_path_orientations,
    is_inducing_path,
    observable_ci_set,
    observable_independent,
)

__version__ = "0.1.0"
