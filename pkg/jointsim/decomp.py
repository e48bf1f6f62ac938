"""
Joint spectral decomposition of commuting families.

A decomposition splits C^n into complementary subspaces, each invariant for
the whole family, such that every member acts on every part either as a
scalar or with all its eigenvalues in the member's Delta-set. The family
version refines the trivial decomposition {C^n} one split at a time using
the single-matrix decomposition of a restriction.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import FamilySpec, ToleranceConfig
from .errors import (
    CommutativityViolation,
    DegenerateDecompositionError,
    DomainViolation,
    IllPosedStructureError,
)
from .matcore import (
    as_cmatrix,
    block_slices,
    commutator_residual,
    inverse,
    op_norm,
    orthonormalize,
    restrict,
    singular_values,
)
from .spectra import SpectralProfile, delta_set, eigen_clusters, invariance_residual, jordan_structure, profile

logger = logging.getLogger(__name__)


class TagKind(str, Enum):
    SCALAR = "scalar"
    DELTA_SPECTRUM = "delta_spectrum"


@dataclass(frozen=True)
class Tag:
    kind: TagKind
    z: Optional[complex] = None

    @classmethod
    def scalar(cls, z: complex) -> "Tag":
        return cls(TagKind.SCALAR, complex(z))

    @classmethod
    def delta_spectrum(cls) -> "Tag":
        return cls(TagKind.DELTA_SPECTRUM)

    @property
    def is_scalar(self) -> bool:
        return self.kind is TagKind.SCALAR


@dataclass
class Subspace:
    """A subspace given by an n x d matrix with orthonormal columns."""

    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass
class Decomposition:
    """
    Parts V_1..V_s with the assembly map X (coordinates in the stacked part
    bases) and alpha = max(||X||, ||X^-1||). ``tags[i][name]`` is the tag of
    member ``name`` on part i.
    """

    parts: List[Subspace]
    assembly: np.ndarray
    alpha: float
    tags: List[Dict[str, Tag]]
    member_names: List[str] = field(default_factory=list)
    splits: int = 0

    @property
    def dims(self) -> List[int]:
        return [p.dim for p in self.parts]

    @property
    def stacked_bases(self) -> np.ndarray:
        return np.hstack([p.basis for p in self.parts])

    def blocks(self, T) -> List[np.ndarray]:
        """Diagonal blocks of ``X T X^-1``, one per part."""
        conj = self.assembly @ as_cmatrix(T, "T") @ self.stacked_bases
        return [conj[s, s] for s in block_slices(self.dims)]

    def block_diagonal_residual(self, T) -> float:
        """Norm of the off-diagonal part of ``X T X^-1``."""
        conj = self.assembly @ as_cmatrix(T, "T") @ self.stacked_bases
        off = conj.copy()
        for s in block_slices(self.dims):
            off[s, s] = 0
        return op_norm(off)


def worst_commutator(family: FamilySpec) -> Tuple[Tuple[str, str], float]:
    """The member pair with the largest scaled commutator residual."""
    names = family.names
    worst, pair = 0.0, (names[0], names[0])
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            res = commutator_residual(family.members[a], family.members[b])
            if res > worst:
                worst, pair = res, (a, b)
    return pair, worst


def require_commuting(family: FamilySpec) -> float:
    """
    Raises:
        CommutativityViolation: if some pair's residual exceeds ``tol_commute``

    Returns:
        the worst residual
    """
    pair, residual = worst_commutator(family)
    if residual > family.tolerances.tol_commute:
        raise CommutativityViolation(
            f"Members {pair[0]} and {pair[1]} do not commute (residual {residual:.3e} > "
            f"{family.tolerances.tol_commute:.1e})",
            pair=pair,
            residual=residual,
        )
    return residual


def _require_disc(name: str, prof: SpectralProfile, tol: ToleranceConfig) -> None:
    outside = [lam for lam in prof.eigenvalues if abs(lam) > 1.0 + tol.tol_spectrum]
    if outside:
        raise DomainViolation(
            f"Spectrum of {name} leaves the closed unit disc: max |lambda| = {max(abs(l) for l in outside):.6g}"
        )


def _tag(T: np.ndarray, basis: np.ndarray, deltas: Sequence[complex], radius: float, tol: ToleranceConfig) -> Optional[Tag]:
    """Tag of one member on one part, or None; the scalar tag wins when both fit."""
    d = basis.shape[1]
    M = restrict(T, basis)
    z = np.trace(M) / d
    if op_norm(T @ basis - z * basis) <= tol.tol_commute * op_norm(T) * np.sqrt(d):
        return Tag.scalar(z)
    eigs = [c.value for c in eigen_clusters(M, tol)]
    if deltas and all(min(abs(lam - mu) for mu in deltas) <= radius for lam in eigs):
        return Tag.delta_spectrum()
    return None


def assembly_map(parts: Sequence[Subspace], tol_rank: float = 1e-9) -> Tuple[np.ndarray, float]:
    """
    The map sending ``v_1 + ... + v_s`` to its coordinates in the stacked
    part bases, and ``alpha = max(||X||, ||X^-1||)``.

    Raises:
        DegenerateDecompositionError: if the stacked bases are numerically singular
    """
    stacked = np.hstack([p.basis for p in parts])
    n = stacked.shape[0]
    if stacked.shape[1] != n:
        raise DegenerateDecompositionError(f"Part dimensions sum to {stacked.shape[1]}, expected {n}")
    s = singular_values(stacked)
    if s[-1] <= tol_rank * n * s[0]:
        raise DegenerateDecompositionError(f"Parts are not a direct sum (smallest singular value {s[-1]:.3e})")
    X = inverse(stacked, tol_rank=tol_rank)
    alpha = max(op_norm(X), float(s[0]))
    return X, alpha


def _build(parts: List[Subspace], members: Dict[str, np.ndarray], deltas: Dict[str, List[complex]],
           radii: Dict[str, float], tol: ToleranceConfig, splits: int = 0) -> Decomposition:
    tags: List[Dict[str, Tag]] = []
    for i, part in enumerate(parts):
        row = {}
        for name, T in members.items():
            tag = _tag(T, part.basis, deltas[name], radii[name], tol)
            if tag is None:
                raise IllPosedStructureError(f"Member {name} fits neither tag on part {i} (dim {part.dim})")
            res = invariance_residual(T, part.basis)
            if res > tol.tol_commute * op_norm(T):
                raise IllPosedStructureError(f"Part {i} is not invariant for {name} (residual {res:.3e})")
            row[name] = tag
        tags.append(row)
    X, alpha = assembly_map(parts, tol_rank=tol.tol_rank)
    return Decomposition(parts=parts, assembly=X, alpha=alpha, tags=tags, member_names=list(members), splits=splits)


def _single_parts(T: np.ndarray, prof: SpectralProfile, tol: ToleranceConfig) -> List[Subspace]:
    n = T.shape[0]
    js = prof.jordan
    deltas = prof.delta_set
    values = prof.eigenvalues
    if deltas and len(deltas) == len(values):
        return [Subspace(np.eye(n, dtype=np.complex128))]
    parts = []
    if deltas:
        parts.append(Subspace(orthonormalize(js.columns_for(deltas))))
    for z in values:
        if z not in deltas:
            parts.append(Subspace(orthonormalize(js.columns_for([z]))))
    return parts


def decompose_single(T, prof: Optional[SpectralProfile] = None, tol: Optional[ToleranceConfig] = None,
                     name: str = "T") -> Decomposition:
    """
    Decomposition for the one-member family {T}: one part spanning the
    generalized eigenspaces of the Delta-set, plus one part per remaining
    eigenvalue z, on which T acts as z I.

    With an empty Delta-set every part is scalar; when every eigenvalue is in
    the Delta-set the only part is C^n.

    Raises:
        DomainViolation: if the spectrum leaves the closed unit disc
    """
    tol = tol or ToleranceConfig()
    mat = as_cmatrix(T, "T")
    prof = prof or profile(mat, tol)
    _require_disc(name, prof, tol)
    parts = _single_parts(mat, prof, tol)
    return _build(parts, {name: mat}, {name: prof.delta_set}, {name: prof.cluster_radius}, tol)


def _first_violation(parts: List[Subspace], members: Dict[str, np.ndarray], deltas: Dict[str, List[complex]],
                     radii: Dict[str, float], tol: ToleranceConfig) -> Optional[Tuple[int, str]]:
    for name, T in members.items():
        for i, part in enumerate(parts):
            if _tag(T, part.basis, deltas[name], radii[name], tol) is None:
                return i, name
    return None


def decompose_family(family: FamilySpec, profiles: Optional[Dict[str, SpectralProfile]] = None) -> Decomposition:
    """
    Joint spectral decomposition of a commuting family.

    Starting from {C^n}, members are scanned in input order and parts in
    creation order; the first (part, member) pair that fits neither tag
    is split by the single-matrix decomposition of the restriction, lifted
    back through the part basis. Each split adds at least one part, so at
    most n - 1 splits happen.

    Raises:
        CommutativityViolation: if the family does not commute
        DomainViolation: if a member's spectrum leaves the closed unit disc
        IllPosedStructureError: if refinement stalls before every member fits a tag on every part
    """
    tol = family.tolerances
    require_commuting(family)
    members = family.members
    profiles = profiles or {name: profile(T, tol) for name, T in members.items()}
    for name, prof in profiles.items():
        _require_disc(name, prof, tol)
    deltas = {name: prof.delta_set for name, prof in profiles.items()}
    radii = {name: prof.cluster_radius for name, prof in profiles.items()}

    n = family.n
    parts = [Subspace(np.eye(n, dtype=np.complex128))]
    splits = 0
    while True:
        violation = _first_violation(parts, members, deltas, radii, tol)
        if violation is None:
            break
        i, name = violation
        if splits >= n - 1:
            raise IllPosedStructureError(f"Refinement stalled after {splits} splits")
        basis = parts[i].basis
        restricted = restrict(members[name], basis)
        sub_parts = _single_parts(restricted, profile(restricted, tol), tol)
        if len(sub_parts) < 2:
            raise IllPosedStructureError(
                f"Restriction of {name} to part {i} fits neither tag but does not split"
            )
        parts[i:i + 1] = [Subspace(orthonormalize(basis @ p.basis)) for p in sub_parts]
        splits += 1
        logger.debug(f"Split part {i} by {name} into dims {[p.dim for p in sub_parts]}")

    decomp = _build(parts, members, deltas, radii, tol, splits=splits)
    logger.info(f"Decomposition of '{family.name}': {len(parts)} parts, dims {decomp.dims}, "
                f"alpha {decomp.alpha:.4g}, {splits} splits")
    return decomp


def delta_monotonicity_holds(decomp: Decomposition, family: FamilySpec,
                             profiles: Dict[str, SpectralProfile]) -> bool:
    """Delta(T|_V) lies in Delta(T) for every member T and part V."""
    tol = family.tolerances
    for part in decomp.parts:
        for name, T in family.members.items():
            local = delta_set(jordan_structure(restrict(T, part.basis), tol))
            radius = profiles[name].cluster_radius
            if any(min((abs(lam - mu) for mu in profiles[name].delta_set), default=np.inf) > radius
                   for lam in local):
                return False
    return True
