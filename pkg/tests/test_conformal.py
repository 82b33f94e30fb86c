import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphlcp.conformal import (
    CalibrationProfile,
    ScoreFunction,
    build_output,
    label_scores,
    predict_graphlcp,
    predict_rlcp,
    predict_scp,
    rlcp_weights,
    scores,
    scp_quantile,
    weighted_quantile,
)
from graphlcp.errors import InputError, ParameterError
from graphlcp.graph import load_graph
from graphlcp.ppr import TransitionView

from oracles import order_statistic_quantile, random_connected_graph, weighted_quantile_bruteforce

APS = ScoreFunction("aps", "classification")
THR = ScoreFunction("thr", "classification")
ABS = ScoreFunction("abs", "regression")


def test_weighted_quantile_small_cases():
    assert weighted_quantile([1, 2, 3], [0.5, 0.3, 0.1], 0.1, 0.2) == 2.0
    assert weighted_quantile([5.0], [0.95], 0.05, 0.1) == 5.0
    assert weighted_quantile([5.0], [0.5], 0.5, 0.1) == math.inf
    assert weighted_quantile([], [], 1.0, 0.1) == math.inf


def test_weighted_quantile_pools_ties():
    # ties at 1 together carry 0.9
    assert weighted_quantile([1, 1, 1, 2], [0.3, 0.3, 0.3, 0.05], 0.05, 0.1) == 1.0


def test_weighted_quantile_validation():
    with pytest.raises(InputError):
        weighted_quantile([1, 2], [0.5, 0.2], 0.1, 0.1)
    with pytest.raises(InputError):
        weighted_quantile([1], [-0.1], 1.1, 0.1)
    with pytest.raises(ParameterError):
        weighted_quantile([1], [0.5], 0.5, 0.0)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(0, 6), min_size=0, max_size=15),
    st.lists(st.floats(0.0, 1.0), min_size=16, max_size=16),
    st.sampled_from([0.05, 0.1, 0.2, 0.5]),
)
def test_weighted_quantile_property(score_list, raw, alpha):
    n = len(score_list)
    w = np.array(raw[: n + 1]) + 1e-3
    w /= w.sum()
    got = weighted_quantile(score_list, w[:n], w[n], alpha)
    assert got == weighted_quantile_bruteforce(score_list, w[:n], w[n], alpha)


@pytest.mark.parametrize("alpha", [0.05, 0.1, 0.2])
def test_scp_small_n(alpha):
    profile = CalibrationProfile(np.arange(9), np.arange(9, dtype=float)[::-1], ABS)
    assert scp_quantile(profile, alpha) == order_statistic_quantile(profile.scores, alpha)


def test_scp_infinite_when_too_few():
    profile = CalibrationProfile(np.arange(5), np.ones(5), ABS)
    assert scp_quantile(profile, 0.1) == math.inf


def test_label_scores():
    p = np.array([[0.5, 0.3, 0.2]])
    np.testing.assert_allclose(label_scores(APS, p), [[0.5, 0.8, 1.0]])
    np.testing.assert_allclose(label_scores(THR, p), [[0.5, 0.7, 0.8]])
    assert scores(APS, p, [1])[0] == pytest.approx(0.8)


def test_aps_ties_share_score():
    p = np.array([[0.4, 0.4, 0.2]])
    np.testing.assert_allclose(label_scores(APS, p), [[0.4, 0.4, 1.0]])


def test_score_validation():
    with pytest.raises(ParameterError):
        ScoreFunction("abs", "classification")
    with pytest.raises(InputError):
        scores(APS, [[0.6, 0.6]], [0])
    with pytest.raises(InputError):
        scores(APS, [[0.5, 0.5]], [2])


def test_regression_interval():
    out = build_output(ABS, 3, 1.5, 0.25)
    assert (out.lower, out.upper) == (1.25, 1.75)
    assert out.contains(1.75) and not out.contains(1.8)
    assert out.size == 0.5


def test_classification_set():
    out = build_output(APS, 0, [0.5, 0.3, 0.2], 0.8)
    assert out.label_set == (0, 1)
    full = build_output(APS, 0, [0.5, 0.3, 0.2], math.inf)
    assert full.label_set == (0, 1, 2)


def regression_problem(seed=0, n=60):
    rng = np.random.default_rng(seed)
    g = load_graph(random_connected_graph(rng, n, n), n)
    x = rng.normal(size=(n, 3))
    y = x[:, 0] + 0.3 * rng.normal(size=n)
    calib = np.arange(0, 30)
    test = np.arange(30, n)
    profile = CalibrationProfile.build(ABS, calib, np.zeros(30), y[calib])
    return g, x, y, profile, test


def test_predict_scp_shared_quantile():
    _, _, _, profile, test = regression_problem()
    outs = predict_scp(profile, test, np.zeros(test.size), 0.1)
    assert len({o.quantile for o in outs}) == 1


def test_rlcp_weights_sum_and_limit():
    rng = np.random.default_rng(0)
    cx, tx = rng.normal(size=(10, 2)), rng.normal(size=2)
    w = rlcp_weights(cx, tx, tx, 1.0)
    assert w.sum() == pytest.approx(1.0)
    w_small = rlcp_weights(cx, tx, tx, 1e-9)
    assert w_small[-1] == 1.0


def test_rlcp_deterministic_and_parallel():
    _, x, _, profile, test = regression_problem()
    args = (profile, x[profile.node_ids], test, x[test], np.zeros(test.size), 1.0, 0.1, 5)
    a = predict_rlcp(*args)
    b = predict_rlcp(*args, workers=3)
    assert [o.quantile for o in a] == [o.quantile for o in b]


def test_graphlcp_trace_and_parallel():
    g, x, _, profile, test = regression_problem()
    t = TransitionView(g)
    tr1, tr2 = [], []
    a = predict_graphlcp(profile, t, test, np.zeros(test.size), seed=3, trace=tr1)
    b = predict_graphlcp(profile, t, test, np.zeros(test.size), seed=3, trace=tr2, workers=4)
    assert [o.quantile for o in a] == [o.quantile for o in b]
    assert [r["anchor"] for r in tr1] == [r["anchor"] for r in tr2]
    for r in tr1:
        assert sum(r["calib_weights"]) + r["test_weight"] == pytest.approx(1.0)


def test_graphlcp_gss_variant():
    from graphlcp.embed import AnisotropicKernel, fit_pca, project

    g, x, _, profile, test = regression_problem()
    model = fit_pca(x[profile.node_ids], 2)
    z = project(model, x)
    kern = AnisotropicKernel.from_pca(model, 1.0)
    outs = predict_graphlcp(profile, TransitionView(g), test, np.zeros(test.size), variant="gss", z=z, kernel=kern)
    assert len(outs) == test.size
    with pytest.raises(ParameterError):
        predict_graphlcp(profile, TransitionView(g), test, np.zeros(test.size), variant="gss")


def test_quantile_limit_cases():
    assert weighted_quantile([1.0, 2.0], [0.0, 0.0], 1.0, 0.1) == math.inf
    one = CalibrationProfile(np.arange(1), np.array([0.7]), ABS)
    assert scp_quantile(one, 0.5) == 0.7
    nine = CalibrationProfile(np.arange(9), np.array([9, 3, 5, 1, 7, 2, 8, 4, 6.0]), ABS)
    assert scp_quantile(nine, 0.1) == 9.0
    assert scp_quantile(nine, 1e-15) == math.inf
    assert scp_quantile(CalibrationProfile(np.arange(0), np.zeros(0), ABS), 0.1) == math.inf


def test_score_trivial_values():
    assert scores(ABS, [1.25], [1.25])[0] == 0.0
    assert scores(THR, [[0.0, 1.0]], [1])[0] == 0.0


def test_infinite_quantile_outputs():
    out = build_output(ABS, 0, 0.0, 2.0)
    assert (out.lower, out.upper, out.size) == (-2.0, 2.0, 4.0)
    inf = build_output(ABS, 0, 0.0, math.inf)
    assert inf.size == math.inf and inf.contains(1e300)


def small_regression(seed=0, n=50, d=3):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    y = x.sum(axis=1) + rng.normal(size=n)
    preds = x.sum(axis=1)
    calib, test = np.arange(0, 40), np.arange(40, n)
    profile = CalibrationProfile.build(ABS, calib, preds[calib], y[calib])
    return x, preds, profile, calib, test


def diameter(pts):
    return max(np.linalg.norm(a - b) for a in pts for b in pts)


def test_rlcp_limits_against_scp():
    x, preds, profile, calib, test = small_regression()
    diam = diameter(x)
    wide = predict_rlcp(profile, x[calib], test, x[test], preds[test], 1e6 * diam, 0.1)
    q_scp = scp_quantile(profile, 0.1)
    assert all(o.quantile == q_scp for o in wide)
    narrow = predict_rlcp(profile, x[calib], test, x[test], preds[test], 1e-9 * diam, 0.1)
    assert all(o.quantile == math.inf for o in narrow)


def test_rlcp_replay():
    from graphlcp.rng import node_stream

    x, preds, profile, calib, test = small_regression(1)
    h, seed = 0.8, 11
    trace = []
    outs = predict_rlcp(profile, x[calib], test, x[test], preds[test], h, 0.1, seed, trace)
    for k, node in enumerate(test):
        rng = node_stream(seed, int(node))
        anchor = x[node] + h * rng.standard_normal(x.shape[1])
        pts = np.vstack([x[calib], x[node]])
        dens = np.exp(-np.sum((pts - anchor) ** 2, axis=1) / (2 * h * h)) / (2 * np.pi * h * h) ** (x.shape[1] / 2)
        w = dens / dens.sum()
        np.testing.assert_allclose(trace[k]["calib_weights"], w[:-1], rtol=1e-12)
        assert trace[k]["test_weight"] == pytest.approx(w[-1], rel=1e-12)
        assert outs[k].quantile == weighted_quantile_bruteforce(profile.scores, w[:-1], w[-1], 0.1)


def dense_walk(a, start, uniforms):
    p = a / np.where(a.sum(axis=1, keepdims=True) > 0, a.sum(axis=1, keepdims=True), 1.0)
    node = start
    for u in uniforms:
        row = p[node]
        nbrs = np.nonzero(row)[0]
        if nbrs.size == 0:
            continue
        cum = np.cumsum(row[nbrs])
        node = int(nbrs[min(np.searchsorted(cum, u, side="right"), nbrs.size - 1)])
    return node


def test_graphlcp_replay_on_sbm():
    from graphlcp.rng import node_stream
    from graphlcp.synth import SbmSpec, generate_sbm

    from oracles import dense_adjacency, truncated_ppr_dense

    g, _, _ = generate_sbm(SbmSpec(num_nodes=30, num_blocks=2, intra_prob=0.3, inter_prob=0.05, seed=4))
    rng = np.random.default_rng(4)
    y = rng.normal(size=30)
    calib, test = np.arange(0, 30, 2), np.arange(1, 30, 2)
    profile = CalibrationProfile.build(ABS, calib, np.zeros(calib.size), y[calib])
    beta, K, seed = 0.3, 30, 21
    trace = []
    outs = predict_graphlcp(profile, TransitionView(g), test, np.zeros(test.size), beta, K, 0.1, seed, trace=trace)
    a = dense_adjacency(g)
    deg = a.sum(axis=1)
    for k, node in enumerate(test):
        gen = node_stream(seed, int(node))
        while True:
            steps = int(gen.geometric(beta)) - 1
            if steps <= K:
                break
        anchor = dense_walk(a, int(node), gen.random(steps))
        assert trace[k]["anchor"] == anchor
        mass = truncated_ppr_dense(a, anchor, beta, K)
        ids = np.append(calib, node)
        raw = np.where(deg[ids] > 0, mass[ids] / np.where(deg[ids] > 0, deg[ids], 1.0), mass[ids])
        w = raw / raw.sum() if raw.sum() > 0 else np.eye(ids.size)[-1]
        np.testing.assert_allclose(trace[k]["calib_weights"], w[:-1], rtol=1e-10, atol=1e-15)
        assert outs[k].quantile == weighted_quantile_bruteforce(profile.scores, w[:-1], w[-1], 0.1)


def test_graphlcp_isolated_test_node():
    g = load_graph([(0, 1), (1, 2), (2, 0)], 4)
    profile = CalibrationProfile.build(APS, np.array([0, 1, 2]), np.full((3, 2), 0.5), [0, 1, 0])
    outs = predict_graphlcp(profile, TransitionView(g), [3], np.array([[0.9, 0.1]]))
    assert outs[0].quantile == math.inf
    assert outs[0].label_set == (0, 1)


def test_graphlcp_complete_graph_small_restart():
    # on a complete graph the non-anchor weights are uniform; with little
    # restart mass the anchor's excess is too small to move the quantile
    n = 30
    g = load_graph([(i, j) for i in range(n) for j in range(i + 1, n)], n)
    rng = np.random.default_rng(2)
    y = rng.normal(size=n)
    # 24 calibration points: level 0.9 is reached at 23/25, well clear of the excess
    calib, test = np.arange(24), np.arange(24, n)
    profile = CalibrationProfile.build(ABS, calib, np.zeros(24), y[calib])
    trace = []
    outs = predict_graphlcp(profile, TransitionView(g), test, np.zeros(6), beta=0.001, num_steps=5000, trace=trace)
    q = scp_quantile(profile, 0.1)
    assert all(o.quantile == q for o in outs)
    for r in trace:
        others = np.delete(r["calib_weights"], np.nonzero(calib == r["anchor"])[0])
        assert np.ptp(others) <= 1e-15
