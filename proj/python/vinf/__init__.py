"""Python bindings for the vinf verifiable-inference toolkit."""

from ._core import (
    Model,
    VinfError,
    attack,
    commit_vector,
    gen_params,
    js_divergence,
    leaf_hash,
    open_vector,
    prove,
    quantile,
    referee,
    verify,
    verify_opening,
)

__all__ = [
    "Model",
    "VinfError",
    "attack",
    "commit_vector",
    "gen_params",
    "js_divergence",
    "leaf_hash",
    "open_vector",
    "prove",
    "quantile",
    "referee",
    "verify",
    "verify_opening",
]
