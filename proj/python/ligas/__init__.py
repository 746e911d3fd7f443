"""Integrated-gradient attribution analysis of a toy acceptability classifier."""

from ligas._core import (
    DataError,
    Model,
    NumericError,
    UsageError,
    Vocabulary,
    analyze,
    attribute,
    generate,
    gen,
    pattern,
    render,
    sign_stats,
    subtree_scores,
    train,
)

__all__ = [
    "DataError",
    "Model",
    "NumericError",
    "UsageError",
    "Vocabulary",
    "analyze",
    "attribute",
    "generate",
    "gen",
    "pattern",
    "render",
    "sign_stats",
    "subtree_scores",
    "train",
]
