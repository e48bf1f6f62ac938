"""
jointsim - joint similarity of commuting power-bounded matrices to contractions.

This package profiles finite families of complex square matrices (spectrum,
Jordan structure, power-bound certificates), decomposes the space into
joint invariant subspaces, and builds one invertible similarity that makes
every member a contraction, together with a checked bound on its
conditioning.
"""

__version__ = "1.0.0"
__author__ = "jointsim developers"

from .config import FamilySpec, ToleranceConfig
from .decomp import decompose_family, decompose_single
from .famgen import GenSpec, Recipe, generate
from .simjoint import joint_similarity, uniform_family_report, verify_similarity
from .spectra import profile

__all__ = [
    'FamilySpec',
    'ToleranceConfig',
    'GenSpec',
    'Recipe',
    'generate',
    'profile',
    'decompose_single',
    'decompose_family',
    'joint_similarity',
    'uniform_family_report',
    'verify_similarity',
]
