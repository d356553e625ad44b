"""Curvature of weighted one-parameter reductions of the para-quaternionic and
quaternionic projective planes, with a finite-difference oracle."""

from .clifford import PARA, QUAT, GenQuaternion, SignatureTag
from .orbifold import GLParams
from .reduction import PointOnK, ReductionParams

__all__ = ["PARA", "QUAT", "GenQuaternion", "SignatureTag", "GLParams", "PointOnK",
           "ReductionParams"]
