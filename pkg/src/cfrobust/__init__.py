"""Manipulation-robustness toolkit for collaborative filtering."""
from .ratings import (
    MISSING,
    InspectionOrder,
    RatingPmf,
    RatingScale,
    RatingsVector,
    TrainingSet,
    kl_divergence,
    l1_distance,
    mix_pmfs,
    pmf_mean,
)

__version__ = "0.1.0"

__all__ = [
    "MISSING",
    "InspectionOrder",
    "RatingPmf",
    "RatingScale",
    "RatingsVector",
    "TrainingSet",
    "kl_divergence",
    "l1_distance",
    "mix_pmfs",
    "pmf_mean",
]
