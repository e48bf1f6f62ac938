"""
Eigenstructure analysis of single matrices.

Spectra come from the complex Schur form, eigenvalues are grouped by
single-linkage clustering, and Jordan structure is read off the Weyr
sequence of each cluster's invariant subspace. The cluster radius and rank
cutoffs in ``ToleranceConfig`` define what counts as a Jordan block under
floating point: couplings below the cluster radius are treated as zero.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.cluster.hierarchy import linkage, to_tree
from scipy.special import gammaln

from .config import ToleranceConfig
from .errors import IllPosedStructureError, InvalidInputError, NumericalFailure, SingularMatrixError
from .matcore import (
    as_cmatrix,
    direct_sum,
    inverse,
    numerical_kernel,
    op_norm,
    orthonormalize,
    phase_normalize,
    restrict,
    singular_values,
    svd,
)

logger = logging.getLogger(__name__)

# Beyond this many powers the block supremum is bounded term by term.
_MAX_SCAN = 100_000

# Backward error, in units of n * eps * ||T||, a defective eigenvalue may carry.
_DEFECT_SLACK = 1e3


@dataclass
class EigenCluster:
    value: complex
    algebraic_multiplicity: int
    members: List[complex] = field(default_factory=list)


@dataclass
class JordanStructure:
    """
    Jordan data of T: ``transform @ T @ inverse(transform)`` is the direct sum
    of ``J_r(lambda)`` over ``blocks`` in the listed order.

    ``chains`` is the inverse of ``transform``; its columns are the Jordan
    chains, grouped by block.
    """

    blocks: List[Tuple[complex, int]]
    transform: np.ndarray
    transform_cond: float
    chains: np.ndarray
    residual: float = 0.0

    @property
    def n(self) -> int:
        return self.transform.shape[0]

    def canonical_form(self) -> np.ndarray:
        return direct_sum([jordan_block(lam, r) for lam, r in self.blocks])

    def columns_for(self, values: Sequence[complex]) -> np.ndarray:
        """Chain columns belonging to blocks whose eigenvalue is in ``values``."""
        wanted = set(values)
        cols, start = [], 0
        for lam, r in self.blocks:
            if lam in wanted:
                cols.extend(range(start, start + r))
            start += r
        return self.chains[:, cols]


class PowerBoundReason(str, Enum):
    SPECTRUM_EXCEEDS_DISC = "spectrum_exceeds_disc"
    BOUNDARY_JORDAN_BLOCK = "boundary_jordan_block"
    CERTIFIED = "certified"


@dataclass
class PowerBoundCertificate:
    is_power_bounded: bool
    constant_K: Optional[float]
    reason: PowerBoundReason


@dataclass
class SpectralProfile:
    spectrum: List[EigenCluster]
    delta_set: List[complex]
    delta_value: Optional[float]
    jordan: JordanStructure
    power_bound: PowerBoundCertificate
    norm: float = 0.0
    cluster_radius: float = 0.0

    @property
    def eigenvalues(self) -> List[complex]:
        return [c.value for c in self.spectrum]

    @property
    def delta_radius(self) -> float:
        # max over the empty set is 0
        return max((abs(lam) for lam in self.delta_set), default=0.0)


@dataclass
class PowerBoundReport:
    passed: bool
    vacuous: bool
    worst_ratio: float
    worst_lambda: Optional[complex]
    worst_norm_ratio: float
    worst_power: int


def jordan_block(lam: complex, r: int) -> np.ndarray:
    """``J_r(lambda)``: lambda on the diagonal, ones on the superdiagonal."""
    return lam * np.eye(r, dtype=np.complex128) + np.eye(r, k=1, dtype=np.complex128)


def _sort_key(lam: complex) -> Tuple[float, float]:
    return (round(lam.real, 12), round(lam.imag, 12))


def schur_eigenvalues(T) -> np.ndarray:
    mat = as_cmatrix(T)
    try:
        R, _ = scipy.linalg.schur(mat, output="complex")
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"Schur iteration did not converge: {e}") from e
    return np.diag(R).copy()


def _defect_spread(r: int, n: int, norm: float) -> float:
    """Spread of the computed copies of one eigenvalue whose largest Jordan block has size r."""
    return norm * (_DEFECT_SLACK * n * np.finfo(float).eps) ** (1.0 / r)


def _is_one_eigenvalue(mat: np.ndarray, eigs: np.ndarray, leaves: List[int], tol: ToleranceConfig,
                       radius: float, norm: float) -> bool:
    """
    Whether ``eigs[leaves]`` are the scattered copies of a single defective
    eigenvalue. About their mean the Weyr sequence must be consistent; with r
    the largest block it implies, the spread must fit size r and
    ``(block - mean)^r`` must vanish up to backward error.
    """
    m, n = len(leaves), len(eigs)
    members = eigs[leaves]
    center = complex(members.mean())
    spread = float(np.max(np.abs(members - center)))
    if spread > _defect_spread(m, n, norm):
        return False
    chosen = set(leaves)

    def select(x):
        return int(np.argmin(np.abs(eigs - x))) in chosen

    try:
        R, _, sdim = scipy.linalg.schur(mat, output="complex", sort=select)
    except (np.linalg.LinAlgError, ValueError):
        return False
    if sdim != m:
        return False
    block = R[:m, :m]
    scale = max(op_norm(block - center * np.eye(m)), norm)
    try:
        N, _, counts = _weyr_kernels(block, center, tol, n, scale, radius)
    except NumericalFailure:
        return False
    r = len(counts)
    if r < 2 or spread > _defect_spread(r, n, norm):
        return False
    return op_norm(np.linalg.matrix_power(N, r)) <= _DEFECT_SLACK * n * np.finfo(float).eps * scale ** r


def _linkage_groups(mat: np.ndarray, eigs: np.ndarray, radius: float, tol: ToleranceConfig) -> List[List[int]]:
    """
    Index groups of the single-linkage tree: a subtree is kept whole when it
    merges below the cluster radius or passes ``_is_one_eigenvalue``.
    """
    if len(eigs) == 1:
        return [[0]]
    points = np.column_stack([eigs.real, eigs.imag])
    root = to_tree(linkage(points, method="single"))
    norm = op_norm(mat)
    groups, pending = [], [root]
    while pending:
        node = pending.pop()
        leaves = node.pre_order()
        if node.is_leaf() or node.dist <= radius or _is_one_eigenvalue(mat, eigs, leaves, tol, radius, norm):
            groups.append(sorted(leaves))
        else:
            pending.extend([node.right, node.left])
    return groups


def eigen_clusters(T, tol: ToleranceConfig) -> List[EigenCluster]:
    """
    Eigenvalues of T from its Schur form, merged by single linkage at the
    cluster radius ``tol_cluster * (1 + ||T||)``.

    A defective eigenvalue comes out of the Schur form as r copies spread by
    about ``(eps ||T||)^(1/r)``, well beyond the cluster radius once r >= 3.
    Coarser subtrees of the linkage are merged as well when their
    spread and Weyr sequence show a single eigenvalue.

    The representative of a cluster is the mean of its members, which is far
    more accurate than any single member when the cluster comes from a
    defective eigenvalue.
    """
    mat = as_cmatrix(T, "T")
    if mat.shape[0] != mat.shape[1]:
        raise InvalidInputError(f"T must be square, got shape {mat.shape}")
    eigs = schur_eigenvalues(mat)
    radius = tol.cluster_radius(op_norm(mat))

    clusters = []
    for leaves in _linkage_groups(mat, eigs, radius, tol):
        members = [complex(eigs[i]) for i in leaves]
        clusters.append(
            EigenCluster(value=complex(np.mean(members)), algebraic_multiplicity=len(members), members=members)
        )
    clusters.sort(key=lambda c: _sort_key(c.value))
    logger.debug(f"{len(eigs)} eigenvalues merged into {len(clusters)} clusters (radius {radius:.2e})")
    return clusters


def _power_cutoff(tol: ToleranceConfig, n: int, scale: float, radius: float, k: int) -> float:
    return max(tol.rank_cutoff(n, scale ** k), radius ** k)


def generalized_kernel(T, lam: complex, k: int, tol: ToleranceConfig) -> np.ndarray:
    """
    Orthonormal basis of the numerical null space of ``(T - lam I)^k``.

    Singular values at most ``max(tol_rank * n * ||T - lam I||^k, radius^k)``
    count as zero, where radius is the cluster radius of T.
    """
    mat = as_cmatrix(T, "T")
    if k < 1:
        raise InvalidInputError(f"k must be a positive integer, got {k}")
    n = mat.shape[0]
    shifted = mat - lam * np.eye(n)
    power = np.linalg.matrix_power(shifted, k)
    radius = tol.cluster_radius(op_norm(mat))
    cutoff = _power_cutoff(tol, n, op_norm(shifted), radius, k)
    return numerical_kernel(power, cutoff)


def _check_separation(clusters: List[EigenCluster], radius: float) -> None:
    for i, a in enumerate(clusters):
        for b in clusters[i + 1:]:
            if abs(a.value - b.value) <= 2 * radius:
                raise IllPosedStructureError(
                    f"Eigenvalue clusters {a.value:.6g} and {b.value:.6g} are within "
                    f"{2 * radius:.2e}; coarsen tol_cluster"
                )


def _cluster_subspace(mat: np.ndarray, clusters: List[EigenCluster], index: int) -> Tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the invariant subspace of one cluster, and T on it."""
    reps = np.array([c.value for c in clusters])

    def select(x):
        return int(np.argmin(np.abs(reps - x))) == index

    try:
        R, Z, sdim = scipy.linalg.schur(mat, output="complex", sort=select)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"Schur reordering failed for cluster {reps[index]:.6g}: {e}") from e
    expected = clusters[index].algebraic_multiplicity
    if sdim != expected:
        raise IllPosedStructureError(
            f"Reordered Schur form isolates {sdim} eigenvalues for cluster {reps[index]:.6g}, expected {expected}"
        )
    return Z[:, :sdim], R[:sdim, :sdim]


def _weyr_kernels(block: np.ndarray, lam: complex, tol: ToleranceConfig, n: int, scale: float, radius: float):
    """
    ``N = block - lam I``, the kernels of ``N^k`` up to the first power that
    annihilates everything, and the Weyr counts ``dim ker N^k - dim ker N^(k-1)``.

    Raises:
        NumericalFailure: if the kernels never fill the space or the counts increase
    """
    m = block.shape[0]
    N = block - lam * np.eye(m)
    kernels = [np.zeros((m, 0), dtype=np.complex128)]
    power = np.eye(m, dtype=np.complex128)
    for k in range(1, m + 1):
        power = power @ N
        kernels.append(numerical_kernel(power, _power_cutoff(tol, n, scale, radius, k)))
        if kernels[-1].shape[1] == m:
            break
    weyr = [K.shape[1] for K in kernels]
    if weyr[-1] != m:
        raise NumericalFailure(f"Weyr sequence {weyr[1:]} for {lam:.6g} does not reach multiplicity {m}")
    counts = [weyr[k] - weyr[k - 1] for k in range(1, len(weyr))]
    if any(c <= 0 for c in counts) or any(counts[i] < counts[i + 1] for i in range(len(counts) - 1)):
        raise NumericalFailure(f"Inconsistent Weyr sequence {weyr[1:]} for eigenvalue {lam:.6g}")
    return N, kernels, counts


def _cluster_chains(block: np.ndarray, lam: complex, tol: ToleranceConfig, n: int, scale: float, radius: float):
    """
    Jordan chains of the m x m matrix ``block`` whose only eigenvalue is lam.

    Returns a list of (size, chain) with chain an m x size array whose
    columns v_1..v_size satisfy (block - lam) v_{j+1} = v_j, (block - lam) v_1 = 0.
    """
    N, kernels, counts = _weyr_kernels(block, lam, tol, n, scale, radius)
    top = len(counts)
    level_vectors: Dict[int, List[np.ndarray]] = {k: [] for k in range(1, top + 1)}
    chains = []
    for k in range(top, 0, -1):
        need = counts[k - 1] - (counts[k] if k < top else 0)
        if need == 0:
            continue
        lower = [kernels[k - 1]] + [v.reshape(-1, 1) for v in level_vectors[k]]
        lower = np.hstack(lower)
        candidates = kernels[k]
        if lower.shape[1]:
            q = scipy.linalg.orth(lower)
            candidates = candidates - q @ (q.conj().T @ candidates)
        U, s, _ = svd(candidates)
        if len(s) < need or s[need - 1] <= 1e-8:
            raise NumericalFailure(f"Could not complete Jordan chains of length {k} for {lam:.6g}")
        for j in range(need):
            head = phase_normalize(U[:, j])
            chain = [head]
            for _ in range(k - 1):
                chain.append(N @ chain[-1])
            chain.reverse()
            for level, vec in enumerate(chain, 1):
                level_vectors[level].append(vec)
            chains.append((k, np.column_stack(chain)))
    return chains


def jordan_structure(T, tol: ToleranceConfig) -> JordanStructure:
    """
    Jordan canonical structure of T.

    Each cluster's invariant subspace is isolated with a reordered Schur
    form; within it the Weyr sequence ``dim ker N^k`` fixes the block sizes
    and chains are built top-down, heads taken orthogonal to the lower
    levels already spanned.

    Raises:
        IllPosedStructureError: if clusters are within twice the cluster radius,
            or the chains of different clusters are numerically dependent
        NumericalFailure: if the chains cannot be completed or do not
            conjugate T to the canonical form
    """
    mat = as_cmatrix(T, "T")
    n = mat.shape[0]
    norm = op_norm(mat)
    radius = tol.cluster_radius(norm)
    clusters = eigen_clusters(mat, tol)
    _check_separation(clusters, radius)

    pieces = []
    for index, cluster in enumerate(clusters):
        basis, block = _cluster_subspace(mat, clusters, index)
        scale = max(op_norm(block - cluster.value * np.eye(block.shape[0])), norm)
        for size, chain in _cluster_chains(block, cluster.value, tol, n, scale, radius):
            pieces.append((cluster.value, size, basis @ chain))

    pieces.sort(key=lambda p: (_sort_key(p[0]), p[1]))
    blocks = [(lam, size) for lam, size, _ in pieces]
    chains = np.hstack([cols for _, _, cols in pieces])
    try:
        transform = inverse(chains, tol_rank=tol.tol_rank)
    except SingularMatrixError as e:
        raise IllPosedStructureError(
            f"Jordan chains are numerically dependent (smallest singular value "
            f"{e.smallest_singular_value:.3e}); coarsen tol_cluster"
        ) from e
    cond = op_norm(chains) * op_norm(transform)

    js = JordanStructure(blocks=blocks, transform=transform, transform_cond=cond, chains=chains)
    js.residual = op_norm(transform @ mat @ chains - js.canonical_form())
    limit = (tol.rank_cutoff(n, max(norm, 1.0)) + radius) * cond
    if js.residual > limit:
        raise NumericalFailure(f"Jordan conjugation residual {js.residual:.2e} exceeds {limit:.2e} (cond {cond:.2e})")
    logger.debug(f"Jordan blocks: {[(complex(l), r) for l, r in blocks]}, transform cond {cond:.3e}")
    return js


def delta_set(js: JordanStructure) -> List[complex]:
    """Eigenvalues owning a Jordan block of size at least 2."""
    out = []
    for lam, r in js.blocks:
        if r >= 2 and lam not in out:
            out.append(lam)
    return out


def delta_set_from_kernels(T, clusters: List[EigenCluster], tol: ToleranceConfig) -> List[complex]:
    """Eigenvalues with ``dim ker (T - lam)^2 > dim ker (T - lam)``."""
    return [
        c.value
        for c in clusters
        if generalized_kernel(T, c.value, 2, tol).shape[1] > generalized_kernel(T, c.value, 1, tol).shape[1]
    ]


def delta_value(T, js: JordanStructure, tol: ToleranceConfig) -> Optional[float]:
    """
    ``min ||(T - lam I)|_{ker (T - lam I)^2}||`` over the Delta-set, or None
    when the Delta-set is empty.
    """
    mat = as_cmatrix(T, "T")
    values = delta_set(js)
    if not values:
        return None
    n = mat.shape[0]
    norms = []
    for lam in values:
        basis = generalized_kernel(mat, lam, 2, tol)
        norms.append(op_norm((mat - lam * np.eye(n)) @ basis))
    return float(min(norms))


def block_power_sup(lam: complex, r: int) -> float:
    """
    Upper bound on ``sup_{p >= 0} ||J_r(lam)^p||`` from the binomial expansion
    ``sum_j C(p, j) |lam|^(p-j)``.

    Every binomial term is decreasing once ``p + 1 > (r - 1) / (1 - |lam|)``,
    so the scan stops there. Boundary eigenvalues of 1 x 1 blocks contribute 1.
    """
    rho = abs(lam)
    if r == 1:
        return 1.0
    if rho >= 1.0:
        return float("inf")
    if rho == 0.0:
        return 1.0
    js = np.arange(r)
    p_end = int(np.ceil((r - 1) / (1.0 - rho))) + 2
    log_rho = np.log(rho)

    def term(p, j):
        return np.exp(gammaln(p + 1) - gammaln(j + 1) - gammaln(p - j + 1) + (p - j) * log_rho)

    if p_end <= _MAX_SCAN:
        p = np.arange(p_end + 1)[:, None]
        valid = p >= js[None, :]
        safe_p = np.where(valid, p, js[None, :])
        totals = np.where(valid, term(safe_p, js[None, :]), 0.0).sum(axis=1)
        return float(max(1.0, totals.max()))

    # each term peaks at p = floor(j / (1 - rho)); summing the peaks bounds the sum
    bound = 0.0
    for j in js:
        peak = max(int(j), int(np.floor(j / (1.0 - rho))))
        bound += max(term(p, j) for p in (max(int(j), peak - 1), peak, peak + 1))
    return float(max(1.0, bound))


def power_bound_certificate(T, js: JordanStructure, tol: ToleranceConfig) -> PowerBoundCertificate:
    """
    Certify power boundedness from the Jordan data.

    Rejected when an eigenvalue leaves the closed unit disc (up to
    ``tol_spectrum``) or a block of size at least 2 sits on or near the
    unit circle. Otherwise ``K = cond(transform) * max_blocks sup_p ||J^p||``.
    """
    slack = tol.tol_spectrum
    if any(abs(lam) > 1.0 + slack for lam, _ in js.blocks):
        return PowerBoundCertificate(False, None, PowerBoundReason.SPECTRUM_EXCEEDS_DISC)
    if any(r >= 2 and abs(lam) >= 1.0 - slack for lam, r in js.blocks):
        return PowerBoundCertificate(False, None, PowerBoundReason.BOUNDARY_JORDAN_BLOCK)
    peak = max(block_power_sup(lam, r) for lam, r in js.blocks)
    return PowerBoundCertificate(True, float(js.transform_cond * peak), PowerBoundReason.CERTIFIED)


def profile(T, tol: ToleranceConfig) -> SpectralProfile:
    """
    Full spectral profile of one matrix.

    Raises:
        IllPosedStructureError: if the Delta-set read off the Jordan blocks
            differs from the one given by ``dim ker (T - lam)^2 > dim ker (T - lam)``
    """
    mat = as_cmatrix(T, "T")
    js = jordan_structure(mat, tol)
    clusters = eigen_clusters(mat, tol)
    norm = op_norm(mat)
    radius = tol.cluster_radius(norm)
    deltas = delta_set(js)
    by_kernels = delta_set_from_kernels(mat, clusters, tol)
    if not _same_sets(deltas, by_kernels, radius):
        raise IllPosedStructureError(
            f"Delta-set from Jordan blocks {deltas} disagrees with kernel dimensions {by_kernels}; "
            f"coarsen tol_cluster"
        )
    return SpectralProfile(
        spectrum=clusters,
        delta_set=deltas,
        delta_value=delta_value(mat, js, tol),
        jordan=js,
        power_bound=power_bound_certificate(mat, js, tol),
        norm=norm,
        cluster_radius=radius,
    )


def verify_power_bound_inequality(T, prof: SpectralProfile, p_max: int = 1000) -> PowerBoundReport:
    """
    Sample ``p |lam|^(p-1) <= K / delta(T)`` over the Delta-set and
    ``||T^p|| <= K`` for ``1 <= p <= p_max``, each with relative slack 1e-8.
    """
    cert = prof.power_bound
    if not cert.is_power_bounded:
        raise InvalidInputError("Power-bound inequality needs a certified profile")
    if p_max < 1:
        raise InvalidInputError(f"p_max must be positive, got {p_max}")
    mat = as_cmatrix(T, "T")
    K = cert.constant_K
    p = np.arange(1, p_max + 1)

    worst_ratio, worst_lambda = 0.0, None
    for lam in prof.delta_set:
        rho = abs(lam)
        growth = p * rho ** (p - 1) if rho > 0 else (p == 1).astype(float)
        ratio = float(growth.max() * prof.delta_value / K)
        if ratio > worst_ratio:
            worst_ratio, worst_lambda = ratio, lam

    worst_norm_ratio, worst_power = 0.0, 0
    power = np.eye(mat.shape[0], dtype=np.complex128)
    for k in range(1, p_max + 1):
        power = power @ mat
        ratio = op_norm(power) / K
        if ratio > worst_norm_ratio:
            worst_norm_ratio, worst_power = ratio, k

    passed = worst_ratio <= 1 + 1e-8 and worst_norm_ratio <= 1 + 1e-8
    return PowerBoundReport(
        passed=passed,
        vacuous=not prof.delta_set,
        worst_ratio=worst_ratio,
        worst_lambda=worst_lambda,
        worst_norm_ratio=worst_norm_ratio,
        worst_power=worst_power,
    )


def _same_sets(a: Sequence[complex], b: Sequence[complex], radius: float) -> bool:
    return all(any(abs(x - y) <= radius for y in b) for x in a) and all(
        any(abs(x - y) <= radius for y in a) for x in b
    )


def invariance_residual(T, basis: np.ndarray) -> float:
    """``||(I - P) T B||`` for an orthonormal basis B with projection P."""
    mat = as_cmatrix(T, "T")
    image = mat @ basis
    return op_norm(image - basis @ (basis.conj().T @ image))


def split_delta_check(T, V, W, tol: ToleranceConfig) -> bool:
    """
    Check that the Delta-sets of T on complementary invariant subspaces V and
    W together give the Delta-set of T.

    Raises:
        InvalidInputError: if V or W is not invariant or they are not complementary
    """
    mat = as_cmatrix(T, "T")
    n = mat.shape[0]
    V = orthonormalize(as_cmatrix(V, "V"))
    W = orthonormalize(as_cmatrix(W, "W"))
    if V.shape[1] + W.shape[1] != n:
        raise InvalidInputError(f"dim V + dim W = {V.shape[1] + W.shape[1]}, expected {n}")
    s = singular_values(np.hstack([V, W]))
    if s[-1] <= tol.rank_cutoff(n, s[0]):
        raise InvalidInputError("V and W intersect non-trivially")
    norm = op_norm(mat)
    for label, basis in (("V", V), ("W", W)):
        if invariance_residual(mat, basis) > tol.tol_commute * norm:
            raise InvalidInputError(f"Subspace {label} is not invariant for T")

    radius = tol.cluster_radius(norm)
    whole = delta_set(jordan_structure(mat, tol))
    parts = delta_set(jordan_structure(restrict(mat, V), tol)) + delta_set(jordan_structure(restrict(mat, W), tol))
    return _same_sets(parts, whole, radius)
