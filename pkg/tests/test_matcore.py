"""Dense linear-algebra substrate, checked against independently coded oracles."""

import numpy as np
import pytest

from ebdyn import matcore
from ebdyn.errors import DimensionMismatchError, NotHermitianError

from helpers import ginibre, random_hermitian


def charpoly_roots(m):
    """Eigenvalues via Faddeev-LeVerrier coefficients and companion-matrix roots.

    Shares no code path with the Hermitian eigensolver: coefficients come
    from trace recursion, roots from ``np.roots`` on the coefficient vector.
    """
    n = m.shape[0]
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[0] = 1.0
    mk = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        mk = m @ mk
        coeffs[k] = -np.trace(mk) / k
        mk = mk + coeffs[k] * np.eye(n)
    return np.roots(coeffs)


def taylor_expm(m):
    """Term-wise Taylor series, summed until the partial sum stagnates."""
    acc = np.eye(m.shape[0], dtype=complex)
    term = np.eye(m.shape[0], dtype=complex)
    for k in range(1, 300):
        term = term @ m / k
        nxt = acc + term
        if np.array_equal(nxt, acc):
            break
        acc = nxt
    return acc


def kron_loops(a, b):
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


class TestHermEig:
    def test_diagonal(self):
        vals, _ = matcore.herm_eig(np.diag([1.0, 0.0]))
        np.testing.assert_allclose(vals, [0.0, 1.0])

    def test_pauli_x(self):
        vals, _ = matcore.herm_eig(matcore.PAULI_X)
        np.testing.assert_allclose(vals, [-1.0, 1.0], atol=1e-14)

    def test_against_charpoly_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            m = random_hermitian(rng, 4)
            vals, _ = matcore.herm_eig(m)
            oracle = np.sort(charpoly_roots(m).real)
            np.testing.assert_allclose(vals, oracle, atol=1e-8)

    def test_reconstruction(self):
        rng = np.random.default_rng(12)
        for d in (2, 3, 5):
            m = random_hermitian(rng, d, scale=3.0)
            vals, vecs = matcore.herm_eig(m)
            rec = vecs @ np.diag(vals) @ vecs.conj().T
            norm = np.linalg.norm(m, 2)
            assert np.linalg.norm(rec - m, 2) <= 1e-10 * max(norm, 1.0)
            assert np.all(np.diff(vals) >= 0)

    def test_eigenvectors_unitary(self):
        rng = np.random.default_rng(13)
        _, vecs = matcore.herm_eig(random_hermitian(rng, 6))
        np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(6), atol=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            matcore.herm_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_min_herm_eig(self):
        assert matcore.min_herm_eig(np.diag([3.0, -2.0, 5.0])) == pytest.approx(-2.0)


class TestExpm:
    def test_zero_matrix(self):
        np.testing.assert_array_equal(matcore.expm(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        out = matcore.expm(np.diag([1.5, -0.5]))
        np.testing.assert_allclose(out, np.diag([np.exp(1.5), np.exp(-0.5)]), rtol=1e-14)

    def test_against_taylor_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            m = ginibre(rng, 4) * 0.8
            np.testing.assert_allclose(matcore.expm(m), taylor_expm(m), atol=1e-10)

    def test_inverse_pairing(self):
        rng = np.random.default_rng(22)
        for _ in range(10):
            m = ginibre(rng, 4)
            m *= 10.0 / max(np.linalg.norm(m, 2), 10.0)
            prod = matcore.expm(m) @ matcore.expm(-m)
            np.testing.assert_allclose(prod, np.eye(4), atol=1e-9)

    def test_moderate_norm_accuracy(self):
        # eigenbasis route must stay accurate well away from the origin
        rng = np.random.default_rng(23)
        h = random_hermitian(rng, 4, scale=12.0)
        vals, vecs = np.linalg.eigh(h)
        expected = vecs @ np.diag(np.exp(vals)) @ vecs.conj().T
        np.testing.assert_allclose(
            matcore.expm(h), expected, rtol=1e-10, atol=1e-10 * np.exp(vals).max()
        )


class TestKron:
    def test_identity(self):
        np.testing.assert_array_equal(matcore.kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_unit_matrix_placement(self):
        e11 = matcore.matrix_unit(2, 0, 0)
        e22 = matcore.matrix_unit(2, 1, 1)
        out = matcore.kron(e11, e22)
        expected = np.zeros((4, 4))
        expected[1, 1] = 1.0
        np.testing.assert_array_equal(out, expected)

    def test_against_loop_oracle(self):
        rng = np.random.default_rng(31)
        a, b = ginibre(rng, 2, 3), ginibre(rng, 3, 2)
        # vectorized complex multiply rounds differently than the scalar loop
        np.testing.assert_allclose(matcore.kron(a, b), kron_loops(a, b), atol=1e-14)

    def test_mixed_product(self):
        rng = np.random.default_rng(32)
        a, b, c, e = (ginibre(rng, 3) for _ in range(4))
        lhs = matcore.kron(a, b) @ matcore.kron(c, e)
        np.testing.assert_allclose(lhs, matcore.kron(a @ c, b @ e), atol=1e-12)

    def test_bilinearity(self):
        rng = np.random.default_rng(33)
        a, b, c = (ginibre(rng, 2) for _ in range(3))
        lhs = matcore.kron(a + 2.0 * b, c)
        rhs = matcore.kron(a, c) + 2.0 * matcore.kron(b, c)
        np.testing.assert_allclose(lhs, rhs, atol=1e-14)


class TestPartialTranspose:
    def test_product_rule(self):
        rng = np.random.default_rng(41)
        a, b = ginibre(rng, 3), ginibre(rng, 3)
        out = matcore.partial_transpose_second(matcore.kron(a, b), 3, 3)
        np.testing.assert_array_equal(out, matcore.kron(a, b.T))

    def test_identity_fixed(self):
        np.testing.assert_array_equal(
            matcore.partial_transpose_second(np.eye(6), 2, 3), np.eye(6)
        )

    def test_swap_gives_maximally_entangled(self):
        swap = np.zeros((4, 4))
        for i in range(2):
            for j in range(2):
                swap[i * 2 + j, j * 2 + i] = 1.0
        pt = matcore.partial_transpose_second(swap, 2, 2)
        vals = np.linalg.eigvalsh(pt)
        np.testing.assert_allclose(vals, [0.0, 0.0, 0.0, 2.0], atol=1e-14)

    def test_involution_trace_hermiticity(self):
        rng = np.random.default_rng(42)
        m = random_hermitian(rng, 6)
        pt = matcore.partial_transpose_second(m, 2, 3)
        np.testing.assert_array_equal(matcore.partial_transpose_second(pt, 2, 3), m)
        assert np.trace(pt) == pytest.approx(np.trace(m))
        np.testing.assert_allclose(pt, pt.conj().T, atol=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            matcore.partial_transpose_second(np.eye(5), 2, 2)


class TestVecUnvec:
    def test_roundtrip(self):
        rng = np.random.default_rng(51)
        m = ginibre(rng, 3)
        np.testing.assert_array_equal(matcore.unvec(matcore.vec(m), 3), m)

    def test_column_stacking(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(matcore.vec(m), [1.0, 3.0, 2.0, 4.0])

    def test_vec_of_product(self):
        # vec(A X B) = (B^T kron A) vec(X), the convention everything relies on
        rng = np.random.default_rng(52)
        a, x, b = (ginibre(rng, 3) for _ in range(3))
        lhs = matcore.vec(a @ x @ b)
        rhs = matcore.kron(b.T, a) @ matcore.vec(x)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_unvec_rejects_non_square_length(self):
        with pytest.raises(DimensionMismatchError):
            matcore.unvec(np.zeros(5))


def test_matrix_units_enumeration():
    seen = {}
    for i, j, e in matcore.matrix_units(3):
        assert e[i, j] == 1.0 and np.count_nonzero(e) == 1
        seen[(i, j)] = True
    assert len(seen) == 9


def test_paulis_square_to_identity():
    for sigma in matcore.PAULIS:
        np.testing.assert_allclose(sigma @ sigma, np.eye(2), atol=1e-15)
