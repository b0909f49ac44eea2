from __future__ import annotations

import numpy as np
import pytest

from conftest import make_utt
from uttrescore.graph import AffinityGraph, build_label_space
from uttrescore.labelprop import (
    LpConfig,
    closed_form,
    decode,
    normalize_symmetric,
    propagate,
    rescore_cluster,
)


def graph_from(w):
    w = np.asarray(w, dtype=float)
    return AffinityGraph(W=w, node_ids=[f"n{i}" for i in range(len(w))], theta=1.0, prune_limit=4)


def random_instance(rng, m_max=50, c_max=20):
    m = int(rng.integers(2, m_max + 1))
    c = int(rng.integers(1, c_max + 1))
    w = rng.integers(0, 2, size=(m, m)).astype(float)
    w = np.triu(w, 1)
    w = w + w.T
    y0 = rng.random((m, c))
    y0 /= np.maximum(y0.sum(axis=1, keepdims=True), 1.0)
    return w, y0


def test_lpconfig_validation_and_lambda():
    with pytest.raises(ValueError):
        LpConfig(alpha=1.0)
    with pytest.raises(ValueError):
        LpConfig(alpha=0.0)
    cfg = LpConfig(alpha=0.8)
    assert cfg.lam == pytest.approx(0.25)


def test_normalize_two_node_graph():
    s = normalize_symmetric(graph_from([[0, 1], [1, 0]]))
    assert s.tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_normalize_isolated_node_zero_row():
    s = normalize_symmetric(graph_from([[0, 1, 0], [1, 0, 0], [0, 0, 0]]))
    assert s[2].tolist() == [0.0, 0.0, 0.0]
    assert s[:, 2].tolist() == [0.0, 0.0, 0.0]


def test_normalize_triangle():
    s = normalize_symmetric(graph_from([[0, 1, 1], [1, 0, 1], [1, 1, 0]]))
    expected = 1.0 / np.sqrt(2 * 2)
    for i in range(3):
        for j in range(3):
            assert s[i, j] == pytest.approx(0.0 if i == j else expected)


def test_propagate_alpha_near_zero_keeps_argmax():
    rng = np.random.default_rng(1)
    w, y0 = random_instance(rng, m_max=10, c_max=5)
    s = normalize_symmetric(w)
    y_inf, _, converged = propagate(s, y0, LpConfig(alpha=1e-12))
    assert converged
    np.testing.assert_allclose(y_inf, (1 - 1e-12) * y0, atol=1e-10)
    assert np.array_equal(np.argmax(y_inf, axis=1), np.argmax(y0, axis=1))


def test_propagate_edgeless_graph():
    rng = np.random.default_rng(2)
    y0 = rng.random((4, 3))
    s = np.zeros((4, 4))
    y_inf, iters, converged = propagate(s, y0, LpConfig(alpha=0.7))
    assert converged
    np.testing.assert_allclose(y_inf, 0.3 * y0, atol=1e-7)


@pytest.mark.parametrize("alpha", [0.5, 0.9, 0.99])
def test_propagate_matches_closed_form(alpha):
    rng = np.random.default_rng(13)
    for _ in range(5):
        w, y0 = random_instance(rng)
        s = normalize_symmetric(w)
        cfg = LpConfig(alpha=alpha, tol=1e-10, max_iter=5000)
        y_inf, _, converged = propagate(s, y0, cfg)
        assert converged
        y_star = closed_form(s, y0, alpha)
        assert np.max(np.abs(y_inf - y_star)) < 1e-6


def test_propagate_nonnegative_and_contractive():
    rng = np.random.default_rng(21)
    w, y0 = random_instance(rng, m_max=20, c_max=8)
    s = normalize_symmetric(w)
    alpha = 0.9
    keep = (1 - alpha) * y0
    y = y0.copy()
    prev_delta = None
    for _ in range(50):
        y_next = alpha * (s @ y) + keep
        delta = np.max(np.abs(y_next - y))
        assert np.all(y_next >= 0)
        if prev_delta is not None:
            assert delta <= alpha * prev_delta + 1e-12
        prev_delta = delta
        y = y_next


def test_propagate_rejects_nonfinite():
    with pytest.raises(ValueError):
        propagate(np.array([[np.nan]]), np.ones((1, 1)), LpConfig())


def test_closed_form_zero_graph():
    y0 = np.array([[0.2, 0.8], [0.5, 0.0]])
    np.testing.assert_allclose(closed_form(np.zeros((2, 2)), y0, 0.4), 0.6 * y0)


def test_closed_form_two_node_analytic():
    s = np.array([[0.0, 1.0], [1.0, 0.0]])
    y0 = np.array([[1.0, 0.0], [0.0, 0.0]])
    alpha = 0.5
    # (I - 0.5 S)^{-1} = (1/0.75) [[1, 0.5],[0.5, 1]] scaled appropriately
    inv = np.linalg.inv(np.eye(2) - alpha * s)
    expected = (1 - alpha) * inv @ y0
    np.testing.assert_allclose(closed_form(s, y0, alpha), expected)
    hand = 0.5 * np.array([[1.0 / 0.75, 0.0], [0.5 / 0.75, 0.0]])
    np.testing.assert_allclose(expected, hand)


def test_closed_form_residual():
    rng = np.random.default_rng(8)
    w, y0 = random_instance(rng, m_max=30, c_max=10)
    s = normalize_symmetric(w)
    alpha = 0.9
    y_star = closed_form(s, y0, alpha)
    residual = (np.eye(len(s)) - alpha * s) @ y_star - (1 - alpha) * y0
    assert np.max(np.abs(residual)) < 1e-10


def two_utterances():
    a = make_utt("a", [[0.0, 0.0]], [("x", -0.1), ("y", -0.8)])
    b = make_utt("b", [[0.0, 0.0]], [("z", -0.1), ("w", -0.8)])
    return [a, b]


def test_decode_inside_own_mask_same_under_both_modes():
    utts = two_utterances()
    space = build_label_space(utts, n_top=2)
    y = np.array([[0.6, 0.2, 0.1, 0.1], [0.1, 0.1, 0.7, 0.1]])
    for sharing in (True, False):
        choices = decode(y, space, utts, sharing)
        assert [c.text for c in choices] == ["x", "z"]
        assert all(c.source == "own_nbest" for c in choices)


def test_decode_sharing_picks_global_max():
    utts = two_utterances()
    space = build_label_space(utts, n_top=2)
    # utterance a's global max sits on a label owned only by b
    y = np.array([[0.1, 0.2, 0.6, 0.1], [0.0, 0.0, 0.9, 0.1]])
    shared = decode(y, space, utts, sharing=True)
    assert shared[0].text == "z"
    assert shared[0].source == "shared"
    restricted = decode(y, space, utts, sharing=False)
    assert restricted[0].text == "y"
    assert restricted[0].source == "own_nbest"


def test_decode_tie_breaks_to_smaller_index():
    utts = two_utterances()
    space = build_label_space(utts, n_top=2)
    y = np.array([[0.4, 0.4, 0.0, 0.0], [0.0, 0.0, 0.4, 0.4]])
    choices = decode(y, space, utts, sharing=True)
    assert choices[0].label_index == 0
    assert choices[1].label_index == 2


def test_decode_zero_row_falls_back_to_baseline():
    utts = two_utterances()
    space = build_label_space(utts, n_top=2)
    y = np.zeros((2, 4))
    choices = decode(y, space, utts, sharing=True)
    assert [c.text for c in choices] == ["x", "z"]
    assert all(c.source == "own_nbest" for c in choices)


def test_decode_scale_invariant():
    rng = np.random.default_rng(17)
    utts = two_utterances()
    space = build_label_space(utts, n_top=2)
    y = rng.random((2, 4))
    base = [c.label_index for c in decode(y, space, utts, sharing=True)]
    for c in (1e-6, 3.7, 1e6):
        scaled = [ch.label_index for ch in decode(c * y, space, utts, sharing=True)]
        assert scaled == base


def test_rescore_singleton_cluster_is_baseline():
    utt = make_utt("solo", [[1.0, 2.0]], [("hello there", -0.2), ("hallo there", -0.9)])
    result = rescore_cluster([utt], LpConfig(), theta=0.5)
    assert result.chosen[0].text == "hello there"
    assert result.chosen[0].source == "own_nbest"
    assert result.n_flipped == 0


def test_rescore_agreeing_second_bests_win():
    # 1-bests differ; both 2nd-bests agree. After propagation over the
    # connecting edge, the shared hypothesis accumulates more mass.
    frames = [[0.0, 0.0], [1.0, 0.0]]
    a = make_utt("a", frames, [("alpha one", -0.60), ("common ground", -0.75)])
    b = make_utt("b", frames, [("beta two", -0.60), ("common ground", -0.75)])
    cfg = LpConfig(alpha=0.9, sharing=True)
    result = rescore_cluster([a, b], cfg, theta=0.5)
    assert result.graph.W[0, 1] == 1
    assert [c.text for c in result.chosen] == ["common ground", "common ground"]
    # verify against the closed-form fixed point
    from uttrescore.graph import init_soft_labels
    from uttrescore.labelprop import normalize_symmetric

    space = result.label_space
    y0 = init_soft_labels(sorted([a, b], key=lambda u: u.id), space, 3)
    y_star = closed_form(normalize_symmetric(result.graph.W), y0, 0.9)
    assert np.max(np.abs(result.y_final - y_star)) < 1e-6
    assert [int(np.argmax(r)) for r in y_star] == [c.label_index for c in result.chosen]


def test_rescore_majority_flips_wrong_onebest():
    rng = np.random.default_rng(33)
    frames = rng.standard_normal((3, 2))
    correct = "the right words"
    utts = []
    for k in range(4):
        utts.append(
            make_utt(f"good{k}", frames + rng.normal(0, 0.01, frames.shape),
                     [(correct, -0.2), (f"junk {k}", -2.0)])
        )
    wrong = make_utt(
        "wrong", frames + rng.normal(0, 0.01, frames.shape),
        [("the wrong words", -0.3), (correct, -0.6), ("other junk", -2.5)],
    )
    result = rescore_cluster(utts + [wrong], LpConfig(alpha=0.9), theta=0.5)
    by_id = {c.id: c for c in result.chosen}
    assert by_id["wrong"].text == correct
    assert all(by_id[f"good{k}"].text == correct for k in range(4))
    assert result.n_flipped == 1


def test_rescore_empty_cluster_rejected():
    with pytest.raises(ValueError):
        rescore_cluster([], LpConfig(), theta=0.5)
