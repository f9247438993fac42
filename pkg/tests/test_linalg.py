import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from omp_rip.harness import make_rng
from omp_rip.linalg import (
    format_csv,
    jacobi_eigenvalues,
    read_csv,
    restricted_least_squares,
    symmetric_eig_extremes,
    write_csv,
)

from oracles import bisection_eigenvalues, normal_equations_ls


def test_restricted_ls_identity():
    z = restricted_least_squares(np.eye(3), [1, 2, 3], [0, 2])
    assert np.array_equal(z, [1.0, 0.0, 3.0])
    assert np.array_equal(restricted_least_squares(np.eye(3), [1, 2, 3], []), np.zeros(3))


def test_restricted_ls_matches_normal_equations():
    rng = make_rng(7)
    A = rng.standard_normal((6, 8))
    y = rng.standard_normal(6)
    z = restricted_least_squares(A, y, [1, 4, 6])
    ref = normal_equations_ls(A, y, [1, 4, 6])
    assert np.max(np.abs(z - ref)) <= 1e-10
    assert np.all(z[[0, 2, 3, 5, 7]] == 0.0)


def test_restricted_ls_rank_deficient_min_norm():
    a = np.array([1.0, 2.0, 0.0])
    A = np.column_stack([a, a, [0.0, 0.0, 1.0]])
    z = restricted_least_squares(A, [1.0, 2.0, 3.0], [0, 1])
    # duplicated column: the two coefficients split the weight evenly
    assert np.allclose(z, [0.5, 0.5, 0.0], atol=1e-12)


def test_restricted_ls_rejects_bad_support():
    with pytest.raises(ValueError):
        restricted_least_squares(np.eye(3), [1, 2, 3], [5])


@settings(max_examples=60, deadline=None)
@given(
    st.integers(2, 7),
    st.integers(1, 6),
    st.integers(0, 2**31 - 1),
)
def test_restricted_ls_gradient_vanishes_on_support(n, k, seed):
    rng = make_rng(seed)
    d = 8
    A = rng.standard_normal((n, d))
    y = rng.standard_normal(n)
    F = sorted(rng.choice(d, size=min(k, n), replace=False).tolist())
    z = restricted_least_squares(A, y, F)
    g = 2 * A.T @ (A @ z - y)
    assert np.max(np.abs(g[F])) <= 1e-8 * (1 + np.max(np.abs(A.T @ y)))


def test_eig_extremes_trivial():
    assert symmetric_eig_extremes(np.eye(2)) == (1.0, 1.0)
    assert symmetric_eig_extremes([[2.0, 0.0], [0.0, 5.0]]) == (2.0, 5.0)


def test_eig_extremes_match_bisection():
    rng = make_rng(3)
    B = rng.standard_normal((5, 5))
    M = B + B.T
    lo, hi = symmetric_eig_extremes(M)
    ev = bisection_eigenvalues(M)
    assert abs(lo - ev[0]) <= 1e-8
    assert abs(hi - ev[-1]) <= 1e-8


def test_eig_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        symmetric_eig_extremes([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        symmetric_eig_extremes(np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(-10, 10)))
def test_jacobi_matches_reference(B):
    M = B + B.T
    ev = jacobi_eigenvalues(M)
    ref = np.linalg.eigvalsh(M)
    scale = 1 + np.max(np.abs(ref))
    assert np.max(np.abs(ev - ref)) <= 1e-10 * scale
    assert np.all(np.diff(ev) >= 0)


def test_jacobi_batched_and_sizes():
    rng = make_rng(0)
    for s in (1, 2, 3, 4, 7):
        B = rng.standard_normal((9, s, s))
        M = B + B.transpose(0, 2, 1)
        ev = jacobi_eigenvalues(M)
        assert ev.shape == (9, s)
        assert np.allclose(ev, np.linalg.eigvalsh(M), atol=1e-11)


def test_csv_round_trip(tmp_path):
    M = np.array([[1.0, -2.5], [1e-17, 3.0]])
    p = tmp_path / "m.csv"
    write_csv(p, M)
    assert p.read_text().splitlines()[0] == "2,2"
    assert np.array_equal(read_csv(p), M)
    assert format_csv(np.array([1.0, 2.0])).splitlines()[0] == "2,1"


def test_csv_header_mismatch(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("2,2\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(p)
