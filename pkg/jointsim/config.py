"""
Configuration objects: tolerance settings and the family record every
command operates on.
"""

import logging
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError
from .matcore import as_cmatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToleranceConfig:
    """
    Tolerances governing every rank, cluster, commutativity and contraction
    decision.

    ``tol_rank`` is relative and multiplied by the dimension at use;
    ``tol_cluster`` is multiplied by ``1 + ||T||``. The remaining fields are
    used as stated.
    """

    tol_rank: float = 1e-9
    tol_commute: float = 1e-9
    tol_cluster: float = 1e-6
    tol_contraction: float = 1e-8
    tol_spectrum: float = 1e-9

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not np.isfinite(value) or value < 0:
                raise InvalidInputError(f"{f.name} must be a finite nonnegative number, got {value!r}")
        if self.tol_cluster < self.tol_rank:
            raise InvalidInputError(
                f"tol_cluster ({self.tol_cluster}) must not be finer than tol_rank ({self.tol_rank})"
            )

    def with_overrides(self, **overrides) -> "ToleranceConfig":
        """
        Return a copy with the given fields replaced; ``None`` values are ignored.

        Raises:
            InvalidInputError: on unknown field names or invalid values
        """
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise InvalidInputError(f"Unknown tolerance fields: {sorted(unknown)}")
        changes = {k: float(v) for k, v in overrides.items() if v is not None}
        return replace(self, **changes) if changes else self

    def cluster_radius(self, norm: float) -> float:
        return self.tol_cluster * (1.0 + norm)

    def rank_cutoff(self, n: int, scale: float) -> float:
        return self.tol_rank * n * scale

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass
class PlantedTruth:
    """Ground truth recorded by the planted generator recipes."""

    recipe: str
    conjugator: Optional[np.ndarray] = None
    blocks: Dict[str, List[Tuple[complex, int]]] = field(default_factory=dict)
    partition: List[int] = field(default_factory=list)


@dataclass
class FamilySpec:
    """
    A named finite family of square matrices sharing one dimension, plus the
    tolerances used to analyze it.
    """

    name: str
    members: Dict[str, np.ndarray]
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    planted: Optional[PlantedTruth] = None

    def __post_init__(self):
        if not self.members:
            raise InvalidInputError(f"Family '{self.name}' has no members")
        converted = {}
        n = None
        for member_name, matrix in self.members.items():
            mat = as_cmatrix(matrix, name=member_name)
            if mat.shape[0] != mat.shape[1]:
                raise InvalidInputError(f"Member '{member_name}' is not square: shape {mat.shape}")
            if n is None:
                n = mat.shape[0]
            elif mat.shape[0] != n:
                raise InvalidInputError(
                    f"Member '{member_name}' has dimension {mat.shape[0]}, expected {n}"
                )
            converted[str(member_name)] = mat
        self.members = converted

    @classmethod
    def from_matrices(
        cls,
        matrices: Sequence,
        name: str = "family",
        names: Optional[Iterable[str]] = None,
        tolerances: Optional[ToleranceConfig] = None,
    ) -> "FamilySpec":
        names = list(names) if names is not None else [f"T{k + 1}" for k in range(len(matrices))]
        if len(names) != len(matrices):
            raise InvalidInputError("names and matrices differ in length")
        if len(set(names)) != len(names):
            raise InvalidInputError(f"Member names are not unique: {names}")
        return cls(
            name=name,
            members=dict(zip(names, matrices)),
            tolerances=tolerances or ToleranceConfig(),
        )

    @property
    def n(self) -> int:
        return next(iter(self.members.values())).shape[0]

    @property
    def names(self) -> List[str]:
        return list(self.members)

    @property
    def matrices(self) -> List[np.ndarray]:
        return list(self.members.values())

    def __len__(self) -> int:
        return len(self.members)
