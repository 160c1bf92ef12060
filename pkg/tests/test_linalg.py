import numpy as np
import pytest

from weightsep import (
    NumericError,
    ShapeError,
    SingularMatrixError,
    frobenius_norm_sq,
    jacobi_eigh,
    matmul,
    pca_reduce,
    qr_decompose,
    semi_orthogonal_init,
    separability_metric,
    trace,
)


def test_matmul_matches_numpy():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 6))
    b = rng.normal(size=(6, 3))
    assert np.allclose(matmul(a, b), a @ b, rtol=0, atol=1e-12)


def test_matmul_inner_dim_mismatch():
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((4, 2)))


def test_matmul_associative():
    rng = np.random.default_rng(1)
    for _ in range(50):
        m, k, l, n = rng.integers(1, 9, size=4)
        a = rng.normal(size=(m, k))
        b = rng.normal(size=(k, l))
        c = rng.normal(size=(l, n))
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        assert np.max(np.abs(left - right)) < 1e-9


def test_frobenius_equals_trace_of_gram():
    # ||M||_F^2 == tr(M^T M), the bridge between the two metric forms
    rng = np.random.default_rng(2)
    for _ in range(50):
        m, n = rng.integers(1, 12, size=2)
        mat = rng.normal(size=(m, n)) * rng.uniform(0.1, 10)
        lhs = frobenius_norm_sq(mat)
        rhs = trace(matmul(mat.T, mat))
        assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs))


def test_trace_requires_square():
    with pytest.raises(ShapeError):
        trace(np.ones((2, 3)))


# --- QR ---------------------------------------------------------------


def qr_case_ok(w):
    q, r = qr_decompose(w)
    m, n = w.shape
    assert q.shape == (m, n)
    assert r.shape == (n, n)
    assert np.max(np.abs(q.T @ q - np.eye(n))) < 1e-10
    assert np.max(np.abs(q @ r - w)) < 1e-10
    # upper triangular, non-negative diagonal
    assert np.max(np.abs(np.tril(r, -1))) == 0.0
    assert np.all(np.diag(r) >= 0)


def test_qr_contract_random_matrices():
    """Orthonormal Q, upper-triangular R with non-negative diagonal, and
    exact reconstruction, over random well-conditioned shapes."""
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 12))
        m = int(rng.integers(n, 20))
        qr_case_ok(rng.uniform(-1, 1, size=(m, n)))


def test_qr_identity_fixed_point():
    q, r = qr_decompose(np.eye(5))
    assert np.allclose(q, np.eye(5))
    assert np.allclose(r, np.eye(5))


def test_qr_wide_matrix_rejected():
    with pytest.raises(ShapeError):
        qr_decompose(np.ones((3, 5)))


def test_qr_rank_deficient_names_column():
    w = np.ones((4, 3))  # three identical columns
    with pytest.raises(SingularMatrixError) as err:
        qr_decompose(w)
    assert "column 1" in str(err.value)


def test_semi_orthogonal_init_is_semi_orthogonal():
    for seed in range(5):
        w = semi_orthogonal_init(12, 7, seed)
        assert w.shape == (12, 7)
        assert separability_metric(w) < 1e-12


def test_semi_orthogonal_init_deterministic():
    a = semi_orthogonal_init(10, 10, 42)
    b = semi_orthogonal_init(10, 10, 42)
    assert np.array_equal(a, b)


# --- eigensolver / PCA ------------------------------------------------


def test_jacobi_matches_library_eigensolver():
    """Eigenvalues and (sign-fixed) eigenvectors against np.linalg.eigh."""
    rng = np.random.default_rng(4)
    for _ in range(30):
        d = int(rng.integers(2, 12))
        a = rng.normal(size=(d, d))
        sym = (a + a.T) / 2
        vals, vecs = jacobi_eigh(sym)
        ref_vals, ref_vecs = np.linalg.eigh(sym)
        # jacobi_eigh sorts descending
        assert np.max(np.abs(vals - ref_vals[::-1])) < 1e-9
        for k in range(d):
            v = vecs[:, k]
            r = ref_vecs[:, d - 1 - k]
            if np.dot(v, r) < 0:
                r = -r
            assert np.max(np.abs(v - r)) < 1e-7
        # residual of the eigen-equation
        assert np.max(np.abs(sym @ vecs - vecs * vals)) < 1e-9


def test_jacobi_requires_symmetric():
    with pytest.raises(ShapeError):
        jacobi_eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_pca_translation_invariant():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(40, 6))
    shifted = x + rng.normal(size=6)
    a = pca_reduce(x, 3)
    b = pca_reduce(shifted, 3)
    assert np.max(np.abs(a - b)) < 1e-9


def test_pca_lossless_when_k_equals_dim():
    # full-rank projection is a rigid rotation of the centered cloud
    rng = np.random.default_rng(6)
    x = rng.normal(size=(30, 4))
    y = pca_reduce(x, 4)
    dx = np.linalg.norm(x[:, None] - x[None, :], axis=2)
    dy = np.linalg.norm(y[:, None] - y[None, :], axis=2)
    assert np.max(np.abs(dx - dy)) < 1e-8


def test_pca_line_collapses_to_diagonal_direction():
    t = np.linspace(-1, 1, 11)
    pts = np.stack([t, t], axis=1)  # y = x
    y = pca_reduce(pts, 1)
    expect = t * np.sqrt(2)
    if np.sign(y[0, 0]) != np.sign(expect[0]):
        expect = -expect
    assert np.max(np.abs(y[:, 0] - expect)) < 1e-9


def test_pca_component_variances_match_eigenvalues():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(50, 10)) * rng.uniform(0.5, 3.0, size=10)
    y = pca_reduce(x, 3)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (len(x) - 1)
    ref = np.sort(np.linalg.eigvalsh(cov))[::-1][:3]
    got = y.var(axis=0, ddof=1)
    assert np.max(np.abs(got - ref)) < 1e-6
    # and they come out non-increasing
    assert np.all(np.diff(got) <= 1e-12)


def test_pca_k_too_large():
    with pytest.raises(ShapeError):
        pca_reduce(np.zeros((5, 3)), 4)
