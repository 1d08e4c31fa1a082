import numpy as np
import pytest
from hypothesis import given, strategies as st

from curveflow.simplex import basis_rows, pair_direction, reference_vectors


@pytest.mark.parametrize("k", range(2, 9))
def test_frame_identities(k):
    v = reference_vectors(k).vectors
    gram = v @ v.T
    assert v.shape == (k, k - 1)
    np.testing.assert_allclose(np.diag(gram), 1.0, atol=1e-12)
    off = gram[~np.eye(k, dtype=bool)]
    np.testing.assert_allclose(off, 1.0 / (1 - k), atol=1e-12)
    np.testing.assert_allclose(v.sum(axis=0), 0.0, atol=1e-12)


def test_two_phase_frame_is_plus_minus_one():
    np.testing.assert_array_equal(reference_vectors(2).vectors, [[1.0], [-1.0]])


@pytest.mark.parametrize("k", range(2, 7))
def test_basis_orthonormal_and_in_hyperplane(k):
    q = basis_rows(k)
    np.testing.assert_allclose(q @ q.T, np.eye(k - 1), atol=1e-14)
    np.testing.assert_allclose(q.sum(axis=1), 0.0, atol=1e-14)


@pytest.mark.parametrize("bad", [1, 0, -3, 2.5])
def test_rejects_bad_phase_count(bad):
    with pytest.raises(ValueError):
        reference_vectors(bad)


def test_frame_is_read_only():
    f = reference_vectors(3)
    with pytest.raises(ValueError):
        f.vectors[0, 0] = 2.0


@given(st.integers(3, 8), st.data())
def test_pair_direction_unit_and_antisymmetric_scores(k, data):
    f = reference_vectors(k)
    i = data.draw(st.integers(0, k - 2))
    j = data.draw(st.integers(i + 1, k - 1))
    d = pair_direction(f, i, j)
    assert abs(np.linalg.norm(d) - 1.0) < 1e-14
    # every other vector is equidistant from p_i and p_j
    for m in set(range(k)) - {i, j}:
        assert abs(f.vectors[m] @ d) < 1e-13


def test_pair_direction_order_checked():
    with pytest.raises(ValueError):
        pair_direction(reference_vectors(3), 2, 1)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_scores_argmax_recovers_vertex(k, seed):
    f = reference_vectors(k)
    i = seed % k
    assert np.argmax(f.scores(f.vectors[i])) == i
