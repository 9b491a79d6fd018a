from itertools import combinations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chmp.solvers import simplex_project


def brute_project(y):
    """Try every support set S: x_S = y_S - (sum(y_S) - 1)/|S|, zero elsewhere.
    Keep the feasible candidate nearest to y."""
    n = len(y)
    best, best_d = None, np.inf
    for k in range(1, n + 1):
        for S in combinations(range(n), k):
            S = list(S)
            x = np.zeros(n)
            x[S] = y[S] - (y[S].sum() - 1.0) / k
            if x.min() < -1e-14:
                continue
            d = np.linalg.norm(x - y)
            if d < best_d:
                best, best_d = x, d
    return best


def kkt_ok(x, y, tol=1e-10):
    if x.min() < 0 or abs(x.sum() - 1.0) > tol:
        return False
    pos = x > 0
    tau = float(np.mean(y[pos] - x[pos]))
    return np.allclose(x, np.maximum(y - tau, 0.0), atol=tol)


def test_examples():
    np.testing.assert_allclose(simplex_project([0.5, 0.5, 0.5]), [1 / 3] * 3, rtol=1e-15)
    np.testing.assert_array_equal(simplex_project([1.0, 0.0, 0.0]), [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(simplex_project([2.0, 0.0]), [1.0, 0.0])


def test_brute_oracle_on_examples():
    np.testing.assert_allclose(brute_project(np.array([2.0, 0.0])), [1.0, 0.0])
    np.testing.assert_allclose(brute_project(np.array([0.5, 0.5, 0.5])), [1 / 3] * 3)


@settings(max_examples=400, deadline=None)
@given(arrays(np.float64, st.integers(1, 8), elements=st.floats(-50, 50)))
def test_matches_bruteforce_and_kkt(y):
    x = simplex_project(y)
    assert kkt_ok(x, y)
    assert np.max(np.abs(x - brute_project(y))) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e3, 1e3)), st.floats(-100, 100))
def test_shift_invariance(y, c):
    np.testing.assert_allclose(simplex_project(y + c), simplex_project(y), atol=1e-9)
