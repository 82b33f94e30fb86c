import numpy as np
import pytest

from graphlcp import _accel
from graphlcp.graph import load_graph
from graphlcp.ppr import TransitionView

from oracles import random_connected_graph

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba unavailable or disabled")


def transition(seed=0, n=50):
    rng = np.random.default_rng(seed)
    return TransitionView(load_graph(random_connected_graph(rng, n, 2 * n), n))


@needs_numba
def test_ppr_backends_agree():
    t = transition()
    args = (t.indptr, t.indices, t.probs, t.isolated, 3, 0.3, 30)
    np.testing.assert_allclose(_accel.ppr_numba(*args), _accel.ppr_numpy(*args), atol=1e-15)


@needs_numba
def test_walk_backends_identical():
    t = transition(1)
    rng = np.random.default_rng(0)
    starts = rng.integers(0, 50, 200)
    lengths = rng.integers(0, 12, 200)
    u = rng.random(int(lengths.sum()))
    a = _accel.walk_many_numba(t.indptr, t.indices, t.keys, starts, lengths, u)
    b = _accel.walk_many_numpy(t.indptr, t.indices, t.keys, starts, lengths, u)
    np.testing.assert_array_equal(a, b)
    assert _accel.walk_numba(t.indptr, t.indices, t.keys, 5, u[:9]) == _accel.walk_numpy(t.indptr, t.indices, t.keys, 5, u[:9])


@needs_numba
def test_pair_scan_backends_identical():
    z = np.random.default_rng(2).normal(size=(120, 3))
    a = _accel.pair_scan_numba(z, 1.5)
    b = _accel.pair_scan_numpy(z, 1.5, block_elems=1000)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    np.testing.assert_allclose(a[2], b[2], rtol=1e-12)


@needs_numba
def test_min_window_backends_identical():
    v = (np.random.default_rng(3).random(300) < 0.7).astype(np.int64)
    assert _accel.min_window_numba(v, 60) == _accel.min_window_numpy(v, 60)


def test_walk_stays_on_isolated():
    t = TransitionView(load_graph([(0, 1)], 3))
    assert _accel.random_walk(t.indptr, t.indices, t.keys, 2, np.full(5, 0.5)) == 2


def test_backend_name():
    assert _accel.BACKEND in ("numba", "numpy")
