"""Weighted Hilbert-Schmidt Lie algebras: brackets, exp/log series and truncated Ricci curvature."""

from hsgeo.algebra import AlgebraVector, Family, TruncatedAlgebra, bracket, inner, norm
from hsgeo.scaling import GeneralScaling, ScalingSequence

__all__ = [
    "AlgebraVector",
    "Family",
    "GeneralScaling",
    "ScalingSequence",
    "TruncatedAlgebra",
    "bracket",
    "inner",
    "norm",
]

__version__ = "0.1.0"
