"""
Similarity constructions: common unitary triangularization, the diagonal
scaling that turns a commuting family with spectra inside a disc of radius
r < 1 into contractions, the per-part similarity, and the assembled joint
similarity with its conditioning certificate.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import FamilySpec, ToleranceConfig
from .decomp import Decomposition, Tag, decompose_family, require_commuting
from .errors import (
    CommutativityViolation,
    DomainViolation,
    InvalidInputError,
    JointSimError,
    NotPowerBoundedError,
    VerificationFailure,
)
from .matcore import (
    as_cmatrix,
    direct_sum,
    inverse,
    numerical_kernel,
    op_norm,
    phase_normalize,
    restrict,
    svd,
    unitary_completion,
)
from .spectra import SpectralProfile, _sort_key, eigen_clusters, profile, schur_eigenvalues

logger = logging.getLogger(__name__)

K_FLOOR = 1.0 + 1e-6


@dataclass
class TriangularForm:
    """``triangulars[k] = U T_k U*`` is upper triangular for every k."""

    U: np.ndarray
    triangulars: List[np.ndarray]
    lower_residual: float = 0.0


@dataclass
class ScalingPlan:
    epsilon: float
    X: np.ndarray
    K: float
    r: float

    @property
    def norm_X(self) -> float:
        return float(np.max(np.abs(np.diag(self.X))))

    @property
    def norm_X_inv(self) -> float:
        return float(np.max(np.abs(1.0 / np.diag(self.X))))


class ScaledSimilarity(NamedTuple):
    Y: np.ndarray
    bound: float
    Y_inv: np.ndarray
    plan: Optional[ScalingPlan] = None


@dataclass
class SimilarityCertificate:
    """
    A joint similarity Y for a family with the quantities its bound is made of:
    ``norm_Y <= bound = alpha * (n^2 K / (1 - r))^((n - 1) / 2)``.
    """

    Y: np.ndarray
    norm_Y: float
    norm_Yinv: float
    bound: float
    conjugated_norms: Dict[str, float]
    K: float
    r: float
    alpha: float
    k_clamped: bool = False
    verified: bool = True
    conditioning_lower_bound: float = 1.0
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def bound_ratio(self) -> float:
        return self.bound / self.norm_Y

    @property
    def worst_member(self) -> Tuple[str, float]:
        name = max(self.conjugated_norms, key=self.conjugated_norms.get)
        return name, self.conjugated_norms[name]


@dataclass
class UniformFamilyReport:
    uniform_K: Optional[float]
    delta_infimum: Optional[float]
    delta_radius: float
    has_uniform_jordan: bool
    theta: Optional[float] = None
    chain_bound: Optional[float] = None
    chain_holds: Optional[bool] = None
    radius_bound: Optional[float] = None
    consistent: bool = True


@dataclass
class ObstructionWitness:
    """Growth of ``||(ST)^p||``; spectral radius above 1 rules out any joint similarity."""

    pair: Tuple[str, str]
    spectral_radius: float
    growth: List[Tuple[int, float]]
    obstructed: bool


def similarity_bound(n: int, K: float, r: float, alpha: float = 1.0) -> float:
    """``alpha * (n^2 K / (1 - r))^((n - 1) / 2)``."""
    return alpha * (n * n * K / (1.0 - r)) ** ((n - 1) / 2.0)


def _common_eigenvector(mats: Sequence[np.ndarray], tol: ToleranceConfig) -> np.ndarray:
    """
    A unit vector that is an eigenvector of every matrix in ``mats``.

    The eigenspace of the first matrix for its smallest-modulus eigenvalue is
    invariant for the others; it is narrowed member by member.

    Raises:
        CommutativityViolation: if the resulting vector is not a common eigenvector
    """
    m = mats[0].shape[0]
    basis = np.eye(m, dtype=np.complex128)
    for A in mats:
        d = basis.shape[1]
        if d == 1:
            break
        M = restrict(A, basis)
        lam = min(eigen_clusters(M, tol), key=lambda c: (abs(c.value), _sort_key(c.value))).value
        shifted = M - lam * np.eye(d)
        cutoff = max(tol.rank_cutoff(d, op_norm(shifted)), tol.cluster_radius(op_norm(M)))
        kernel = numerical_kernel(shifted, cutoff)
        if kernel.shape[1] == 0:
            kernel = svd(shifted)[2][:, -1:]
        basis = basis @ kernel

    v = phase_normalize(basis[:, 0])
    for k, A in enumerate(mats):
        Av = A @ v
        res = np.linalg.norm(Av - (v.conj() @ Av) * v)
        if res > tol.cluster_radius(op_norm(A)):
            raise CommutativityViolation(
                f"No common eigenvector: residual {res:.3e} for member {k}", pair=(str(k), "*"), residual=float(res)
            )
    return v


def triangularize_commuting(matrices: Sequence, tol: Optional[ToleranceConfig] = None) -> TriangularForm:
    """
    One unitary U with ``U T_k U*`` upper triangular for every commuting T_k.

    A common eigenvector of the trailing compressions is rotated to the
    front by a Householder-based unitary completion, then the procedure
    recurses on the (m-1)-dimensional compressions, which still commute.
    """
    tol = tol or ToleranceConfig()
    mats = [as_cmatrix(T, f"T{k}") for k, T in enumerate(matrices)]
    if not mats:
        raise InvalidInputError("Cannot triangularize an empty family")
    n = mats[0].shape[0]
    W = np.eye(n, dtype=np.complex128)
    for step in range(n - 1):
        trailing = [(W.conj().T @ A @ W)[step:, step:] for A in mats]
        v = _common_eigenvector(trailing, tol)
        W[:, step:] = W[:, step:] @ unitary_completion(v)

    triangulars, worst = [], 0.0
    for k, A in enumerate(mats):
        conj = W.conj().T @ A @ W
        lower = op_norm(np.tril(conj, -1)) if n > 1 else 0.0
        limit = max(1e-9, tol.tol_commute) * op_norm(A)
        if lower > limit:
            raise CommutativityViolation(
                f"Member {k} is not triangularized (strict lower part {lower:.3e} > {limit:.3e})",
                pair=(str(k), "*"),
                residual=float(lower),
            )
        worst = max(worst, lower)
        triangulars.append(np.triu(conj))
    return TriangularForm(U=W.conj().T, triangulars=triangulars, lower_residual=worst)


def common_triangularize(family: FamilySpec) -> TriangularForm:
    """Simultaneous unitary triangularization of a commuting family."""
    require_commuting(family)
    return triangularize_commuting(family.matrices, family.tolerances)


def scaling_plan(n: int, K: float, r: float) -> ScalingPlan:
    """
    ``epsilon = (1 - r) / (n^2 K)`` and ``X = diag(1, eps^-1, ..., eps^-(n-1))``.

    Raises:
        DomainViolation: if r is outside [0, 1)
    """
    if not 0.0 <= r < 1.0:
        raise DomainViolation(f"Spectral radius bound r must lie in [0, 1), got {r}")
    if K <= 1.0:
        logger.warning(f"K = {K} raised to {K_FLOOR}")
        K = max(K, K_FLOOR)
    epsilon = (1.0 - r) / (n * n * K)
    X = np.diag(epsilon ** -np.arange(n, dtype=float)).astype(np.complex128)
    return ScalingPlan(epsilon=epsilon, X=X, K=K, r=r)


def scaled_contraction(tri: TriangularForm, K: float, r: float) -> ScaledSimilarity:
    """
    ``Y = (||X^-1|| / ||X||)^(1/2) X U``, making every ``Y T_k Y^-1`` a
    contraction when ``||T_k|| <= K`` and every eigenvalue has modulus at most r.

    ``||Y|| = ||Y^-1|| <= (n^2 K / (1 - r))^((n - 1) / 2)``.
    """
    n = tri.U.shape[0]
    plan = scaling_plan(n, K, r)
    scale = math.sqrt(plan.norm_X_inv / plan.norm_X)
    d = np.diag(plan.X)
    Y = scale * (d[:, None] * tri.U)
    Y_inv = (tri.U.conj().T * (1.0 / d)[None, :]) / scale
    return ScaledSimilarity(Y=Y, bound=similarity_bound(n, plan.K, r), Y_inv=Y_inv, plan=plan)


def similarize_block(members: Sequence, tags: Sequence[Tag], K: float, r: float,
                     tol: Optional[ToleranceConfig] = None) -> ScaledSimilarity:
    """
    Similarity for one part: scalar members are left alone (any similarity
    fixes z I), the others are triangularized together and scaled.

    Raises:
        InvalidInputError: if a member fits neither its tag
    """
    tol = tol or ToleranceConfig()
    mats = [as_cmatrix(M, f"member {k}") for k, M in enumerate(members)]
    if len(mats) != len(tags):
        raise InvalidInputError("members and tags differ in length")
    d = mats[0].shape[0]
    identity = np.eye(d, dtype=np.complex128)
    moving = []
    for k, (M, tag) in enumerate(zip(mats, tags)):
        norm = op_norm(M)
        if tag.is_scalar:
            limit = max(tol.cluster_radius(norm), tol.tol_commute * norm * math.sqrt(d))
            if op_norm(M - tag.z * identity) > limit or abs(tag.z) > 1.0 + tol.tol_spectrum:
                raise InvalidInputError(f"Member {k} is tagged scalar({tag.z:.6g}) but is not")
        else:
            rho = max(abs(c.value) for c in eigen_clusters(M, tol))
            if rho > r + tol.cluster_radius(norm):
                raise InvalidInputError(f"Member {k} has spectral radius {rho:.6g} > r = {r:.6g}")
            moving.append(M)

    if not moving:
        return ScaledSimilarity(Y=identity, bound=similarity_bound(d, max(K, K_FLOOR), r), Y_inv=identity)
    return scaled_contraction(triangularize_commuting(moving, tol), K, r)


def conditioning_lower_bound(members: Dict[str, np.ndarray], conjugated_norms: Dict[str, float]) -> float:
    """
    ``max_T ||T|| / ||Y T Y^-1||``, a lower bound on ``||Y|| ||Y^-1||`` for
    the similarity that produced ``conjugated_norms``.
    """
    ratios = [op_norm(T) / conjugated_norms[name] for name, T in members.items() if conjugated_norms[name] > 0]
    return max(ratios, default=1.0)


def _require_power_bounded(profiles: Dict[str, SpectralProfile]) -> None:
    for name, prof in profiles.items():
        if not prof.power_bound.is_power_bounded:
            raise NotPowerBoundedError(
                f"Member {name} is not power bounded ({prof.power_bound.reason.value})",
                member=name,
                reason=prof.power_bound.reason.value,
            )


def joint_similarity(family: FamilySpec, profiles: Optional[Dict[str, SpectralProfile]] = None,
                     decomposition: Optional[Decomposition] = None) -> SimilarityCertificate:
    """
    A single Y making every member of a commuting power-bounded family a
    contraction.

    Pipeline: decompose the space, build a similarity Z_i per part, set
    ``Z = (Z_1 (+) ... (+) Z_s) X`` and balance it to
    ``Y = (||Z^-1|| / ||Z||)^(1/2) Z``.

    Raises:
        CommutativityViolation: if the family does not commute
        NotPowerBoundedError: if a member fails its power-bound certificate
        VerificationFailure: if a conjugated norm exceeds ``1 + tol_contraction``;
            the failed certificate is attached
    """
    tol = family.tolerances
    require_commuting(family)
    profiles = profiles or {name: profile(T, tol) for name, T in family.members.items()}
    _require_power_bounded(profiles)
    decomp = decomposition or decompose_family(family, profiles)

    n = family.n
    K_raw = max(op_norm(T) for T in family.matrices)
    k_clamped = K_raw <= 1.0
    K = K_FLOOR if k_clamped else K_raw
    if k_clamped:
        logger.warning(f"Family norms are at most 1 ({K_raw:.6g}); K clamped to {K}")
    r = max((prof.delta_radius for prof in profiles.values()), default=0.0)
    if r >= 1.0:
        raise DomainViolation(f"Delta-set radius {r:.6g} is not below 1")

    blocks = {name: decomp.blocks(T) for name, T in family.members.items()}
    pieces = []
    for i in range(len(decomp.parts)):
        names = family.names
        piece = similarize_block(
            [blocks[name][i] for name in names], [decomp.tags[i][name] for name in names], K, r, tol
        )
        pieces.append(piece)

    Z = direct_sum([p.Y for p in pieces]) @ decomp.assembly
    Z_inv = decomp.stacked_bases @ direct_sum([p.Y_inv for p in pieces])
    balance = math.sqrt(op_norm(Z_inv) / op_norm(Z))
    Y = balance * Z
    Y_inv = Z_inv / balance

    conjugated = {name: op_norm(Y @ T @ Y_inv) for name, T in family.members.items()}
    cert = SimilarityCertificate(
        Y=Y,
        norm_Y=op_norm(Y),
        norm_Yinv=op_norm(Y_inv),
        bound=similarity_bound(n, K, r, decomp.alpha),
        conjugated_norms=conjugated,
        K=K,
        r=r,
        alpha=decomp.alpha,
        k_clamped=k_clamped,
        conditioning_lower_bound=conditioning_lower_bound(family.members, conjugated),
        tolerances=tol,
    )
    worst, worst_norm = cert.worst_member
    if worst_norm > 1.0 + tol.tol_contraction:
        cert.verified = False
        raise VerificationFailure(
            f"Member {worst} has conjugated norm {worst_norm:.12g} > 1 + {tol.tol_contraction:.1e}",
            certificate=cert,
            worst_member=worst,
            norm=worst_norm,
        )
    logger.info(f"Joint similarity for '{family.name}': ||Y|| = {cert.norm_Y:.6g}, bound {cert.bound:.6g}, "
                f"worst conjugated norm {worst_norm:.12g} ({worst})")
    return cert


def reject_noncommuting(family: FamilySpec) -> float:
    """
    Refuse non-commuting families, for which no joint similarity to
    contractions need exist.

    Returns:
        the worst commutator residual when the family commutes

    Raises:
        CommutativityViolation: otherwise
    """
    return require_commuting(family)


def noncommuting_obstruction(family: FamilySpec, p_max: int = 20) -> List[ObstructionWitness]:
    """
    For each ordered pair (S, T), the growth of ``||(ST)^p||``.

    If S and T were both contractions after conjugation by X, then
    ``||(ST)^p|| <= ||X|| ||X^-1||`` for every p, so a spectral radius of
    ST above 1 rules out a joint similarity.
    """
    witnesses = []
    names = family.names
    for a in names:
        for b in names:
            if a == b:
                continue
            product = family.members[a] @ family.members[b]
            rho = float(max(abs(schur_eigenvalues(product))))
            growth, power = [], np.eye(family.n, dtype=np.complex128)
            for p in range(1, p_max + 1):
                power = power @ product
                growth.append((p, op_norm(power)))
            witnesses.append(ObstructionWitness(
                pair=(a, b),
                spectral_radius=rho,
                growth=growth,
                obstructed=rho > 1.0 + family.tolerances.tol_spectrum,
            ))
    return witnesses


def uniform_family_report(family: FamilySpec, profiles: Dict[str, SpectralProfile],
                          p_samples: int = 1000) -> UniformFamilyReport:
    """
    Uniformity diagnostics: the largest certified power-bound constant, the
    smallest delta(T), and the largest modulus in any Delta-set.

    When both uniformity hypotheses hold, ``p |lam|^(p-1) <= K theta`` with
    ``theta = 1 / delta_infimum`` is sampled, and the radius ``1 - eps``
    with ``N = ceil(4 theta K)`` and ``(1 - eps)^(N-1) = 1/2`` is reported:
    every Delta-set eigenvalue must lie strictly inside it.
    """
    tol = family.tolerances
    certs = [prof.power_bound for prof in profiles.values()]
    uniform_K = max(c.constant_K for c in certs) if all(c.is_power_bounded for c in certs) else None
    deltas = [prof.delta_value for prof in profiles.values() if prof.delta_value is not None]
    delta_infimum = min(deltas) if deltas else None
    delta_radius = max((prof.delta_radius for prof in profiles.values()), default=0.0)
    has_uniform_jordan = delta_infimum is not None and delta_infimum > tol.tol_cluster

    report = UniformFamilyReport(
        uniform_K=uniform_K,
        delta_infimum=delta_infimum,
        delta_radius=delta_radius,
        has_uniform_jordan=has_uniform_jordan,
    )
    if uniform_K is None or not has_uniform_jordan:
        return report

    theta = 1.0 / delta_infimum
    chain_bound = uniform_K * theta
    p = np.arange(1, p_samples + 1)
    peak = max(
        float((p * abs(lam) ** (p - 1)).max()) if abs(lam) > 0 else 1.0
        for prof in profiles.values()
        for lam in prof.delta_set
    )
    N = max(2, math.ceil(4 * theta * uniform_K))
    eps = 1.0 - 0.5 ** (1.0 / (N - 1))

    report.theta = theta
    report.chain_bound = chain_bound
    report.chain_holds = peak <= chain_bound * (1 + 1e-8)
    report.radius_bound = 1.0 - eps
    report.consistent = bool(delta_radius < 1.0 and delta_radius < report.radius_bound and report.chain_holds)
    if not report.consistent:
        logger.error(f"Uniform family diagnostics inconsistent: radius {delta_radius:.6g}, "
                     f"bound {report.radius_bound:.6g}, chain holds {report.chain_holds}")
    return report


@dataclass
class VerificationReport:
    """Independent re-check of a claimed joint similarity Y."""

    conjugated_norms: Dict[str, float]
    norm_Y: float
    norm_Yinv: float
    contraction: bool
    balanced: bool
    bound: Optional[float] = None
    within_bound: Optional[bool] = None
    K: Optional[float] = None
    r: Optional[float] = None
    alpha: Optional[float] = None
    bound_note: str = ""

    @property
    def worst_member(self) -> Tuple[str, float]:
        name = max(self.conjugated_norms, key=self.conjugated_norms.get)
        return name, self.conjugated_norms[name]

    @property
    def passed(self) -> bool:
        return self.contraction and self.balanced and self.within_bound is not False


def _recomputed_bound(family: FamilySpec) -> Tuple[float, float, float, float]:
    tol = family.tolerances
    require_commuting(family)
    profiles = {name: profile(T, tol) for name, T in family.members.items()}
    _require_power_bounded(profiles)
    decomp = decompose_family(family, profiles)
    K = max(max(op_norm(T) for T in family.matrices), K_FLOOR)
    r = max((prof.delta_radius for prof in profiles.values()), default=0.0)
    return similarity_bound(family.n, K, r, decomp.alpha), K, r, decomp.alpha


def verify_similarity(family: FamilySpec, Y) -> VerificationReport:
    """
    Recompute every conjugated norm, the balance ``||Y|| = ||Y^-1||`` and
    the certified bound from scratch, sharing nothing with the pipeline
    that produced Y.

    The bound check is skipped (``within_bound`` None) when the family has
    no certified bound, e.g. when it does not commute.

    Raises:
        SingularMatrixError: if Y is numerically singular
    """
    tol = family.tolerances
    y = as_cmatrix(Y, "Y")
    if y.shape != (family.n, family.n):
        raise InvalidInputError(f"Y has shape {y.shape}, expected {(family.n, family.n)}")
    y_inv = inverse(y, tol_rank=tol.tol_rank)
    conjugated = {name: op_norm(y @ T @ y_inv) for name, T in family.members.items()}
    norm_Y, norm_Yinv = op_norm(y), op_norm(y_inv)

    report = VerificationReport(
        conjugated_norms=conjugated,
        norm_Y=norm_Y,
        norm_Yinv=norm_Yinv,
        contraction=all(v <= 1.0 + tol.tol_contraction for v in conjugated.values()),
        balanced=abs(norm_Y - norm_Yinv) <= 1e-8 * norm_Y,
    )
    try:
        report.bound, report.K, report.r, report.alpha = _recomputed_bound(family)
        report.within_bound = norm_Y <= report.bound * (1 + 1e-8)
    except JointSimError as e:
        report.bound_note = str(e)
        logger.warning(f"Bound check skipped: {e}")
    return report
