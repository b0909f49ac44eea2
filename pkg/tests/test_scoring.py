from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_utt
from oracles import levenshtein_recursive
from uttrescore.corpus import Corpus
from uttrescore.scoring import (
    EditStats,
    oracle_nbest_wer,
    score_corpus,
    word_edit,
)

tokens = st.lists(st.sampled_from(["a", "b", "c", "d"]), max_size=7)


def test_word_edit_identical():
    stats = word_edit(["a", "b", "c"], ["a", "b", "c"])
    assert (stats.substitutions, stats.deletions, stats.insertions) == (0, 0, 0)
    assert stats.ref_len == 3


def test_word_edit_all_deletions():
    stats = word_edit(["a", "b", "c"], [])
    assert (stats.substitutions, stats.deletions, stats.insertions) == (0, 3, 0)
    assert stats.distance == 3


def test_word_edit_all_insertions_empty_ref():
    stats = word_edit([], ["x", "y"])
    assert (stats.substitutions, stats.deletions, stats.insertions) == (0, 0, 2)
    assert stats.ref_len == 0


def test_word_edit_prefers_substitution():
    stats = word_edit(["a"], ["b"])
    assert (stats.substitutions, stats.deletions, stats.insertions) == (1, 0, 0)


def test_word_edit_random_matches_recursive_bruteforce():
    rng = random.Random(0)
    vocab = ["a", "b", "c", "d"]
    for _ in range(100):
        ref = rng.choices(vocab, k=rng.randrange(0, 8))
        hyp = rng.choices(vocab, k=rng.randrange(0, 8))
        assert word_edit(ref, hyp).distance == levenshtein_recursive(tuple(ref), tuple(hyp))


@settings(max_examples=60, deadline=None)
@given(a=tokens, b=tokens, c=tokens)
def test_word_edit_metric_properties(a, b, c):
    dab = word_edit(a, b).distance
    assert dab == word_edit(b, a).distance
    assert dab <= word_edit(a, c).distance + word_edit(c, b).distance
    assert word_edit(a, a).distance == 0


def test_word_edit_counts_sum_to_distance():
    stats = word_edit(["a", "b", "c", "d"], ["a", "x", "d", "e"])
    assert stats.distance == stats.substitutions + stats.deletions + stats.insertions


def test_score_corpus_all_correct():
    report = score_corpus({"u1": "a b"}, {"u1": "a b"})
    assert report.overall.wer == 0.0
    assert report.overall.ser == 0.0


def test_score_corpus_arithmetic():
    choices = {"u1": "a b c d x", "u2": "p q r s t"}
    refs = {"u1": "a b c d e", "u2": "p q r s t"}
    report = score_corpus(choices, refs)
    assert report.overall.wer == pytest.approx(0.1)
    assert report.overall.ser == pytest.approx(0.5)


def test_score_corpus_group_additivity():
    choices = {"u1": "a x", "u2": "b b", "u3": "c c c"}
    refs = {"u1": "a b", "u2": "b b", "u3": "c c d"}
    groups = {"u1": "g1", "u2": "g1", "u3": "g2"}
    report = score_corpus(choices, refs, groups)
    assert sum(g.n_errors for g in report.per_group.values()) == report.overall.n_errors
    assert sum(g.n_utts for g in report.per_group.values()) == report.overall.n_utts
    assert sum(g.n_ref_words for g in report.per_group.values()) == report.overall.n_ref_words


def test_score_corpus_unmapped_goes_to_others():
    report = score_corpus({"u1": "a"}, {"u1": "a"}, groups={})
    assert list(report.per_group) == ["Others"]


def test_score_corpus_missing_reference():
    with pytest.raises(ValueError, match="reference"):
        score_corpus({"u1": "a"}, {})


def test_score_corpus_normalization():
    report = score_corpus({"u1": "Hello, World"}, {"u1": "hello world"})
    assert report.overall.wer == 0.0


def nbest_corpus():
    utts = [
        make_utt("u1", [[0.0]], [("a b", -0.1), ("a b c", -0.5)], reference="a b c"),
        make_utt("u2", [[0.0]], [("x y z", -0.1), ("x q z", -0.5)], reference="x y z"),
    ]
    return Corpus(utterances=utts, dim=1)


def test_oracle_nbest_equals_onebest_at_n1():
    corpus = nbest_corpus()
    report = score_corpus(
        {u.id: u.nbest[0].text for u in corpus}, {u.id: u.reference for u in corpus}
    )
    assert oracle_nbest_wer(corpus, 1) == pytest.approx(report.overall.wer)


def test_oracle_nbest_zero_when_truth_in_list():
    corpus = nbest_corpus()
    assert oracle_nbest_wer(corpus, 2) == 0.0


def test_oracle_nbest_monotone_in_n():
    corpus = nbest_corpus()
    values = [oracle_nbest_wer(corpus, n) for n in (1, 2, 3)]
    assert values == sorted(values, reverse=True)


def test_edit_stats_distance_property():
    assert EditStats(1, 2, 3, 10).distance == 6
