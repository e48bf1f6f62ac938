import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jointsim.errors import InvalidInputError, SingularMatrixError
from jointsim.matcore import (
    as_cmatrix,
    commutator_residual,
    direct_sum,
    entrywise_norm_bounds,
    numerical_kernel,
    op_norm,
    phase_normalize,
    solve,
    svd,
    unitary_completion,
)
from jointsim.spectra import jordan_block

entries = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


def random_complex(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


class TestOpNorm:

    def test_diagonal(self):
        assert op_norm(np.diag([0.5, -0.8j])) == pytest.approx(0.8, rel=1e-14)

    def test_zero(self):
        assert op_norm(np.zeros((3, 3))) == 0.0

    def test_rank_one(self, nilpotent):
        assert op_norm(nilpotent) == pytest.approx(2.0, rel=1e-14)

    def test_matches_power_iteration(self):
        rng = np.random.default_rng(0)
        T = random_complex(rng, 5)
        gram = T.conj().T @ T
        v = rng.normal(size=5) + 0j
        for _ in range(2000):
            v = gram @ v
            v /= np.linalg.norm(v)
        estimate = np.sqrt(np.real(v.conj() @ gram @ v))
        assert op_norm(T) == pytest.approx(estimate, rel=1e-8)

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidInputError, match="non-finite"):
            op_norm(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestDirectSum:

    def test_scalars(self):
        np.testing.assert_array_equal(direct_sum([[[2]], [[3]]]), np.diag([2, 3]))

    def test_single_block(self, nilpotent):
        np.testing.assert_array_equal(direct_sum([nilpotent]), nilpotent)

    def test_jordan_and_scalar(self):
        out = direct_sum([jordan_block(0, 2), [[0.9]]])
        expected = np.zeros((3, 3))
        expected[0, 1] = 1
        expected[2, 2] = 0.9
        np.testing.assert_array_equal(out, expected)

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            direct_sum([])

    def test_norm_is_max_of_blocks(self):
        rng = np.random.default_rng(1)
        blocks = [random_complex(rng, d) for d in (1, 3, 2)]
        assert op_norm(direct_sum(blocks)) == pytest.approx(max(op_norm(b) for b in blocks), rel=1e-12)


class TestEntrywiseBounds:

    def test_nilpotent(self, nilpotent):
        assert entrywise_norm_bounds(nilpotent) == (2.0, 8.0)

    def test_identity(self):
        assert entrywise_norm_bounds(np.eye(3)) == (1.0, 9.0)

    @seed(4)
    @settings(deadline=None, max_examples=60)
    @given(re=arrays(np.float64, (4, 4), elements=entries), im=arrays(np.float64, (4, 4), elements=entries))
    def test_brackets_norm(self, re, im):
        T = re + 1j * im
        lower, upper = entrywise_norm_bounds(T)
        norm = op_norm(T)
        assert lower <= norm * (1 + 1e-12) + 1e-300
        assert norm <= upper * (1 + 1e-12) + 1e-300


class TestSvd:

    def test_diagonal(self):
        _, S, _ = svd(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(S, [3.0, 1.0])

    def test_nilpotent(self, nilpotent):
        _, S, _ = svd(nilpotent)
        np.testing.assert_allclose(S, [2.0, 0.0], atol=1e-15)

    def test_reconstruction(self):
        rng = np.random.default_rng(2)
        T = random_complex(rng, 6)
        U, S, V = svd(T)
        np.testing.assert_allclose(U.conj().T @ U, np.eye(6), atol=1e-10)
        np.testing.assert_allclose(V.conj().T @ V, np.eye(6), atol=1e-10)
        assert op_norm(U @ np.diag(S) @ V.conj().T - T) < 1e-10 * op_norm(T)

    def test_unitary_invariance(self):
        rng = np.random.default_rng(3)
        T = random_complex(rng, 4)
        U, _, V = svd(random_complex(rng, 4))
        assert op_norm(U @ T @ V) == pytest.approx(op_norm(T), abs=1e-10)


class TestSolve:

    def test_identity(self):
        B = np.array([[1, 2j], [3, 4]])
        np.testing.assert_allclose(solve(np.eye(2), B), B)

    def test_diagonal(self):
        np.testing.assert_allclose(solve(np.diag([2.0, 4.0]), np.eye(2)), np.diag([0.5, 0.25]))

    def test_residual(self):
        rng = np.random.default_rng(5)
        A = random_complex(rng, 5) + 5 * np.eye(5)
        B = random_complex(rng, 5, 2)
        X = solve(A, B)
        assert op_norm(A @ X - B) <= 1e-9 * op_norm(A) * op_norm(X)

    def test_singular(self, nilpotent):
        with pytest.raises(SingularMatrixError) as excinfo:
            solve(nilpotent, np.eye(2))
        assert excinfo.value.smallest_singular_value == pytest.approx(0.0, abs=1e-15)
        assert excinfo.value.exit_code == 5


class TestCommutatorResidual:

    def test_self(self, nilpotent):
        assert commutator_residual(nilpotent, nilpotent) == 0.0

    def test_adjoint_pair(self, nilpotent):
        assert commutator_residual(nilpotent, nilpotent.conj().T) == pytest.approx(0.8, rel=1e-14)

    def test_diagonal_pair(self):
        assert commutator_residual(np.diag([1, 2j]), np.diag([3, -1])) == 0.0

    def test_size_mismatch(self):
        with pytest.raises(InvalidInputError, match="mismatch"):
            commutator_residual(np.eye(2), np.eye(3))


def test_as_cmatrix_rejects_vectors():
    with pytest.raises(InvalidInputError, match="2-D"):
        as_cmatrix([1, 2, 3])


def test_numerical_kernel(nilpotent):
    K = numerical_kernel(nilpotent, 1e-12)
    assert K.shape == (2, 1)
    assert abs(K[0, 0]) == pytest.approx(1.0)


def test_phase_normalize():
    v = phase_normalize(np.array([1j, 2j, 0]))
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert v[1].imag == pytest.approx(0.0, abs=1e-15)
    assert v[1].real > 0


@pytest.mark.parametrize("n", [1, 2, 5])
def test_unitary_completion(n):
    rng = np.random.default_rng(n)
    v = random_complex(rng, n, 1)[:, 0]
    v /= np.linalg.norm(v)
    Q = unitary_completion(v)
    np.testing.assert_allclose(Q[:, 0], v, atol=1e-12)
    np.testing.assert_allclose(Q.conj().T @ Q, np.eye(n), atol=1e-12)
