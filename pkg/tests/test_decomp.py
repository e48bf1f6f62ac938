import numpy as np
import pytest

from jointsim.decomp import (
    Subspace,
    TagKind,
    assembly_map,
    decompose_family,
    decompose_single,
    delta_monotonicity_holds,
    require_commuting,
    worst_commutator,
)
from jointsim.errors import CommutativityViolation, DegenerateDecompositionError, DomainViolation
from jointsim.famgen import GenSpec, Recipe, generate
from jointsim.matcore import op_norm, restrict
from jointsim.spectra import eigen_clusters, invariance_residual, jordan_block, profile

from .conftest import family_of


def check_decomposition(decomp, family):
    """Direct sum, invariance and tag conditions of a decomposition."""
    tol = family.tolerances
    stacked = decomp.stacked_bases
    assert stacked.shape == (family.n, family.n)
    np.testing.assert_allclose(decomp.assembly @ stacked, np.eye(family.n), atol=1e-8)
    assert decomp.alpha >= 1.0 - 1e-12
    for i, part in enumerate(decomp.parts):
        for name, T in family.members.items():
            norm = max(op_norm(T), 1.0)
            assert invariance_residual(T, part.basis) <= tol.tol_commute * norm
            tag = decomp.tags[i][name]
            if tag.is_scalar:
                assert op_norm(T @ part.basis - tag.z * part.basis) <= 1e-8 * norm
                assert abs(tag.z) <= 1.0 + tol.tol_spectrum
            else:
                restricted = part.basis.conj().T @ T @ part.basis
                deltas = profile(T, tol).delta_set
                for lam in (c.value for c in eigen_clusters(restricted, tol)):
                    assert min(abs(lam - mu) for mu in deltas) <= 1e-5


class TestDecomposeSingle:

    def test_jordan_and_scalar(self, jordan_plus_scalar):
        decomp = decompose_single(jordan_plus_scalar)
        assert decomp.dims == [2, 1]
        assert decomp.tags[0]["T"].kind is TagKind.DELTA_SPECTRUM
        assert decomp.tags[1]["T"].is_scalar
        assert decomp.tags[1]["T"].z == pytest.approx(0.9, abs=1e-12)

    def test_empty_delta_gives_scalar_parts(self):
        decomp = decompose_single(np.diag([1.0, 1j, 1j]))
        assert sorted(decomp.dims) == [1, 2]
        values = sorted((tags["T"].z for tags in decomp.tags), key=lambda z: z.real)
        assert values == pytest.approx([1j, 1.0])
        assert decomp.alpha == pytest.approx(1.0)

    def test_whole_spectrum_in_delta(self):
        decomp = decompose_single(jordan_block(0.0, 2))
        assert decomp.dims == [2]
        assert decomp.alpha == pytest.approx(1.0)

    def test_outside_disc(self):
        with pytest.raises(DomainViolation, match="unit disc"):
            decompose_single(np.diag([1.5, 0.1]))

    def test_matches_singleton_family(self, jordan_plus_scalar):
        single = decompose_single(jordan_plus_scalar, name="T1")
        family = decompose_family(family_of(jordan_plus_scalar))
        assert sorted(single.dims) == sorted(family.dims)


class TestDecomposeFamily:

    def test_refines_until_scalar(self):
        family = family_of(np.diag([0.5, 0.5, 0.2]), np.diag([0.1, 0.3, 0.3]))
        decomp = decompose_family(family)
        assert decomp.dims == [1, 1, 1]
        assert decomp.splits == 2
        assert all(tag.is_scalar for tags in decomp.tags for tag in tags.values())
        check_decomposition(decomp, family)

    def test_jordan_pair(self):
        J = jordan_block(0.0, 2)
        family = family_of(J, 0.5 * np.eye(2) + 0.3 * J)
        decomp = decompose_family(family)
        assert decomp.dims == [2]
        check_decomposition(decomp, family)

    def test_non_commuting(self, nilpotent):
        with pytest.raises(CommutativityViolation) as excinfo:
            decompose_family(family_of(nilpotent, nilpotent.conj().T))
        assert excinfo.value.residual == pytest.approx(0.8)
        assert excinfo.value.exit_code == 4

    def test_jordan_pair_beside_scalars(self):
        J = jordan_block(0.0, 2)
        T1 = np.zeros((3, 3), dtype=np.complex128)
        T2 = np.zeros((3, 3), dtype=np.complex128)
        T1[:2, :2], T1[2, 2] = J, 0.5
        T2[:2, :2], T2[2, 2] = J + 0.2 * np.eye(2), 0.7
        family = family_of(T1, T2)
        decomp = decompose_family(family)
        assert decomp.dims == [2, 1]
        assert decomp.splits == 1
        assert decomp.tags[0]["T1"].kind is TagKind.DELTA_SPECTRUM
        assert decomp.tags[0]["T2"].kind is TagKind.DELTA_SPECTRUM
        assert decomp.tags[1]["T1"].z == pytest.approx(0.5, abs=1e-12)
        assert decomp.tags[1]["T2"].z == pytest.approx(0.7, abs=1e-12)
        check_decomposition(decomp, family)

    def test_parts_do_not_split_again(self, jordan_plus_scalar):
        J = jordan_block(0.0, 2)
        T1 = np.zeros((3, 3), dtype=np.complex128)
        T2 = np.zeros((3, 3), dtype=np.complex128)
        T1[:2, :2], T1[2, 2] = J, 0.5
        T2[:2, :2], T2[2, 2] = J + 0.2 * np.eye(2), 0.7
        for family in (family_of(T1, T2), family_of(jordan_plus_scalar)):
            decomp = decompose_family(family)
            for part in decomp.parts:
                again = decompose_family(family_of(*[restrict(T, part.basis) for T in family.matrices]))
                assert again.splits == 0
                assert again.dims == [part.dim]

    def test_block_diagonal_residual(self):
        family = generate(GenSpec(seed=3, n=5, recipe=Recipe.PLANTED_BLOCK_DIAGONAL))
        decomp = decompose_family(family)
        for T in family.matrices:
            assert decomp.block_diagonal_residual(T) <= 1e-8 * max(op_norm(T), 1.0) * decomp.alpha ** 2


@pytest.mark.parametrize("seed", range(40))
def test_planted_block_diagonal_invariants(seed):
    family = generate(GenSpec(seed=seed, n=2 + seed % 6, size=1 + seed % 3,
                              recipe=Recipe.PLANTED_BLOCK_DIAGONAL))
    profiles = {name: profile(T, family.tolerances) for name, T in family.members.items()}
    decomp = decompose_family(family, profiles)
    check_decomposition(decomp, family)
    assert delta_monotonicity_holds(decomp, family, profiles)
    assert len(decomp.parts) <= family.n
    assert decomp.splits <= family.n - 1


@pytest.mark.parametrize("seed", range(40))
def test_polynomial_family_invariants(seed):
    family = generate(GenSpec(seed=seed, n=2 + seed % 7, size=1 + seed % 5))
    profiles = {name: profile(T, family.tolerances) for name, T in family.members.items()}
    decomp = decompose_family(family, profiles)
    check_decomposition(decomp, family)
    assert delta_monotonicity_holds(decomp, family, profiles)


def test_assembly_of_dependent_parts():
    e1 = np.array([[1.0], [0.0]], dtype=np.complex128)
    with pytest.raises(DegenerateDecompositionError):
        assembly_map([Subspace(e1), Subspace(e1.copy())])


def test_assembly_of_oblique_parts():
    u = np.array([[1.0], [0.0]], dtype=np.complex128)
    v = np.array([[1.0], [1.0]], dtype=np.complex128) / np.sqrt(2)
    X, alpha = assembly_map([Subspace(u), Subspace(v)])
    np.testing.assert_allclose(X @ np.hstack([u, v]), np.eye(2), atol=1e-12)
    assert alpha == pytest.approx(op_norm(X))
    assert alpha > 1.0


def test_worst_commutator_and_tolerance(nilpotent):
    E = np.array([[0, 0], [1, 0]], dtype=np.complex128)
    family = family_of(nilpotent, nilpotent + 1e-12 * E)
    pair, residual = worst_commutator(family)
    assert pair == ("T1", "T2")
    assert residual < family.tolerances.tol_commute
    assert require_commuting(family) == residual
