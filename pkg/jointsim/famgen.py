"""
Seeded test families: polynomials in one matrix, planted block-diagonal and
Jordan structures, and the two counterexample families.
"""

import logging
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy.stats import unitary_group

from .config import FamilySpec, PlantedTruth, ToleranceConfig
from .errors import InvalidInputError
from .matcore import op_norm
from .spectra import jordan_block

logger = logging.getLogger(__name__)

# Largest planted Jordan block per recipe, and the gap between planted eigenvalues.
_MAX_JORDAN_BLOCK = 4
_MAX_DIAGONAL_BLOCK = 3
_PLANTED_GAP = 0.05


class Recipe(str, Enum):
    POLYNOMIALS_IN_ONE_MATRIX = "polynomials_in_one_matrix"
    PLANTED_BLOCK_DIAGONAL = "planted_block_diagonal"
    PLANTED_JORDAN = "planted_jordan"
    COUNTEREXAMPLE_NC = "counterexample_nc"
    COUNTEREXAMPLE_UNBOUNDED = "counterexample_unbounded"


@dataclass
class GenSpec:
    """
    Generation settings.

    Args:
        seed: seed for ``numpy.random.default_rng``
        n: dimension (ignored by the 2x2 counterexample recipes)
        recipe: which family to build
        spectral_radius_cap: every eigenvalue lies in the disc of this radius
        norm_cap: operator norm cap for polynomial families
        size: number of members for the commuting recipes
        m: truncation of the unbounded family
        cond_cap: condition number cap of the planted conjugator
    """

    seed: int = 0
    n: int = 4
    recipe: Recipe = Recipe.POLYNOMIALS_IN_ONE_MATRIX
    spectral_radius_cap: float = 0.9
    norm_cap: float = 10.0
    size: int = 3
    m: int = 3
    cond_cap: float = 4.0

    def __post_init__(self):
        try:
            self.recipe = Recipe(self.recipe)
        except ValueError:
            raise InvalidInputError(
                f"Unknown recipe '{self.recipe}'. Choose from: {', '.join(r.value for r in Recipe)}"
            )
        if not 0.0 < self.spectral_radius_cap <= 1.0:
            raise InvalidInputError(f"spectral_radius_cap must lie in (0, 1], got {self.spectral_radius_cap}")
        if not self.norm_cap > 0.0:
            raise InvalidInputError(f"norm_cap must be positive, got {self.norm_cap}")
        if not self.cond_cap >= 1.0:
            raise InvalidInputError(f"cond_cap must be at least 1, got {self.cond_cap}")
        for field_name in ("n", "size", "m"):
            if int(getattr(self, field_name)) < 1:
                raise InvalidInputError(f"{field_name} must be a positive integer")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GenSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"Unknown generator fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["recipe"] = self.recipe.value
        return out


def _disc_points(rng: np.random.Generator, k: int, cap: float, min_gap: float = 1e-2) -> np.ndarray:
    """k points uniform in the disc of radius ``cap``, pairwise at least ``min_gap`` apart."""
    points: List[complex] = []
    while len(points) < k:
        z = cap * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        if all(abs(z - w) >= min_gap for w in points):
            points.append(complex(z))
    return np.array(points)


def _conjugator(rng: np.random.Generator, n: int, cond_cap: float) -> Tuple[np.ndarray, np.ndarray]:
    """``X = U1 diag(s) U2`` with ``s`` in ``[1, cond_cap]``, and its inverse."""
    U1 = unitary_group.rvs(n, random_state=rng) if n > 1 else np.eye(1, dtype=np.complex128)
    U2 = unitary_group.rvs(n, random_state=rng) if n > 1 else np.eye(1, dtype=np.complex128)
    s = np.exp(rng.uniform(0.0, np.log(cond_cap), size=n))
    X = (U1 * s[None, :]) @ U2
    X_inv = (U2.conj().T * (1.0 / s)[None, :]) @ U1.conj().T
    return X, X_inv


def _block_sizes(rng: np.random.Generator, n: int, max_size: int) -> List[int]:
    """A random composition of n with parts between 1 and ``max_size``."""
    sizes, left = [], n
    while left > 0:
        d = int(rng.integers(1, min(left, max_size) + 1))
        sizes.append(d)
        left -= d
    return sizes


def _polynomials_in_one_matrix(spec: GenSpec, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    n, cap = spec.n, spec.spectral_radius_cap
    eigs = _disc_points(rng, n, cap)
    strict = np.triu(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), k=1) * 0.1
    U = unitary_group.rvs(n, random_state=rng) if n > 1 else np.eye(1, dtype=np.complex128)
    A = U @ (np.diag(eigs) + strict) @ U.conj().T

    members = {}
    for k in range(spec.size):
        degree = int(rng.integers(0, n))
        coeffs = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
        P = np.zeros((n, n), dtype=np.complex128)
        for c in coeffs[::-1]:
            P = P @ A + c * np.eye(n)
        rho = float(np.max(np.abs(np.polyval(coeffs[::-1], eigs))))
        norm = op_norm(P)
        scales = [cap / rho if rho > 0 else np.inf, spec.norm_cap / norm if norm > 0 else np.inf]
        scale = min(scales)
        members[f"T{k + 1}"] = P * (scale if np.isfinite(scale) else 1.0)
    return members


def _planted_gap(cap: float, k: int) -> float:
    return min(_PLANTED_GAP, cap / k)


def _planted_block_diagonal(spec: GenSpec, rng: np.random.Generator) -> Tuple[Dict[str, np.ndarray], PlantedTruth]:
    n, cap = spec.n, spec.spectral_radius_cap
    sizes = _block_sizes(rng, n, _MAX_DIAGONAL_BLOCK)
    X, X_inv = _conjugator(rng, n, spec.cond_cap)

    members, truth = {}, {}
    for k in range(spec.size):
        name = f"T{k + 1}"
        eigs = _disc_points(rng, len(sizes), cap, _planted_gap(cap, len(sizes)))
        blocks, planted = [], []
        for d, z in zip(sizes, eigs):
            if d >= 2 and rng.uniform() < 0.5:
                coupling = rng.uniform(0.5, 1.0) * np.exp(2j * np.pi * rng.uniform())
                blocks.append(z * np.eye(d) + coupling * jordan_block(0, d))
                planted.append((complex(z), d))
            else:
                blocks.append(z * np.eye(d))
                planted.extend([(complex(z), 1)] * d)
        B = np.zeros((n, n), dtype=np.complex128)
        start = 0
        for d, block in zip(sizes, blocks):
            B[start:start + d, start:start + d] = block
            start += d
        members[name] = X @ B @ X_inv
        truth[name] = planted
    return members, PlantedTruth(recipe=spec.recipe.value, conjugator=X, blocks=truth, partition=sizes)


def _planted_jordan(spec: GenSpec, rng: np.random.Generator) -> Tuple[Dict[str, np.ndarray], PlantedTruth]:
    n, cap = spec.n, spec.spectral_radius_cap
    sizes = _block_sizes(rng, n, _MAX_JORDAN_BLOCK)
    eigs = list(_disc_points(rng, len(sizes), cap, _planted_gap(cap, len(sizes))))
    # a repeated eigenvalue with blocks of different sizes now and then
    for i in range(1, len(eigs)):
        if rng.uniform() < 0.25:
            eigs[i] = eigs[int(rng.integers(0, i))]

    J = np.zeros((n, n), dtype=np.complex128)
    start, planted = 0, []
    for d, lam in zip(sizes, eigs):
        J[start:start + d, start:start + d] = jordan_block(lam, d)
        planted.append((complex(lam), d))
        start += d
    X, X_inv = _conjugator(rng, n, spec.cond_cap)
    return {"T1": X @ J @ X_inv}, PlantedTruth(
        recipe=spec.recipe.value, conjugator=X, blocks={"T1": planted}, partition=sizes
    )


def counterexample_nc() -> Dict[str, np.ndarray]:
    """``T = [[0, 2], [0, 0]]`` and its adjoint: power bounded, not commuting."""
    T = np.array([[0, 2], [0, 0]], dtype=np.complex128)
    return {"T": T, "T_adj": T.conj().T}


def counterexample_unbounded(m: int) -> Dict[str, np.ndarray]:
    """``T_k = [[0, k], [0, 0]]`` for k = 1..m: commuting, nilpotent, norms growing without bound."""
    return {f"T{k}": np.array([[0, k], [0, 0]], dtype=np.complex128) for k in range(1, m + 1)}


def generate(spec: GenSpec, tolerances: ToleranceConfig = None) -> FamilySpec:
    """
    Build the family described by ``spec``; the same seed gives the same family.

    Planted recipes attach their ground truth (conjugator, per-member Jordan
    blocks, block partition) as ``FamilySpec.planted``.
    """
    rng = np.random.default_rng(spec.seed)
    planted = None
    if spec.recipe is Recipe.POLYNOMIALS_IN_ONE_MATRIX:
        members = _polynomials_in_one_matrix(spec, rng)
    elif spec.recipe is Recipe.PLANTED_BLOCK_DIAGONAL:
        members, planted = _planted_block_diagonal(spec, rng)
    elif spec.recipe is Recipe.PLANTED_JORDAN:
        members, planted = _planted_jordan(spec, rng)
    elif spec.recipe is Recipe.COUNTEREXAMPLE_NC:
        members = counterexample_nc()
    else:
        members = counterexample_unbounded(spec.m)

    name = f"{spec.recipe.value}-seed{spec.seed}"
    logger.debug(f"Generated '{name}' with {len(members)} members")
    return FamilySpec(name=name, members=members, tolerances=tolerances or ToleranceConfig(), planted=planted)
