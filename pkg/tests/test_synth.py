from __future__ import annotations

import numpy as np
import pytest

from uttrescore.distance import ddtw_norm
from uttrescore.scoring import score_corpus
from uttrescore.synth import SynthConfig, generate


def small_cfg(**kw):
    base = dict(n_groups=5, group_size_range=(4, 6), seed=0)
    base.update(kw)
    return SynthConfig(**base)


def test_deterministic_for_fixed_seed():
    c1 = generate(small_cfg())
    c2 = generate(small_cfg())
    assert c1.ids == c2.ids
    for a, b in zip(c1, c2):
        assert np.array_equal(a.frames, b.frames)
        assert a.nbest == b.nbest
        assert a.metadata == b.metadata


def test_different_seed_differs():
    c1 = generate(small_cfg(seed=1))
    c2 = generate(small_cfg(seed=2))
    assert any(not np.array_equal(a.frames, b.frames) for a, b in zip(c1, c2))


def test_clean_group_identical_frames():
    corpus = generate(small_cfg(noise_sigma=0.0, warp_prob=0.0, n_accents=1))
    groups = {}
    for utt in corpus:
        groups.setdefault(utt.reference, []).append(utt)
    for members in groups.values():
        first = members[0]
        for other in members[1:]:
            assert np.array_equal(first.frames, other.frames)
            assert ddtw_norm(first.frames, other.frames) == 0.0


def test_zero_corruption_gives_zero_baseline_wer():
    corpus = generate(small_cfg(corruption_rate=0.0))
    report = score_corpus(
        {u.id: u.nbest[0].text for u in corpus}, {u.id: u.reference for u in corpus}
    )
    assert report.overall.wer == 0.0


def test_corrupted_utterances_carry_truth_in_top3():
    corpus = generate(SynthConfig(n_groups=50, group_size_range=(8, 12), corruption_rate=0.35, seed=4))
    n_corrupted = 0
    for utt in corpus:
        ref = utt.reference.split()
        top3 = [list(h.tokens) for h in utt.nbest[:3]]
        if top3[0] != ref:
            n_corrupted += 1
            assert ref in top3[1:]
    assert n_corrupted > 0


def test_nbest_distinct_and_sorted():
    corpus = generate(small_cfg())
    for utt in corpus:
        texts = [h.text for h in utt.nbest]
        assert len(set(texts)) == len(texts)
        scores = [h.log_likelihood for h in utt.nbest]
        assert scores == sorted(scores, reverse=True)


def test_accent_metadata_present():
    cfg = small_cfg(n_accents=3)
    corpus = generate(cfg)
    accents = {u.metadata["accent"] for u in corpus}
    assert accents <= {"accent0", "accent1", "accent2"}
    assert len(accents) > 1


def test_intra_group_distances_smaller_than_inter():
    corpus = generate(small_cfg(noise_sigma=0.1, warp_prob=0.3))
    rng = np.random.default_rng(0)
    utts = list(corpus)
    intra, inter = [], []
    for _ in range(150):
        i, j = rng.integers(len(utts), size=2)
        if i == j:
            continue
        d = ddtw_norm(utts[i].frames, utts[j].frames)
        (intra if utts[i].reference == utts[j].reference else inter).append(d)
    violations = sum(1 for a in intra for b in inter if a >= b)
    assert violations <= 0.01 * len(intra) * len(inter)


def test_infeasible_config_rejected():
    with pytest.raises(ValueError, match="warp_prob"):
        SynthConfig(warp_prob=1.5).validate()
    with pytest.raises(ValueError, match="n_groups"):
        SynthConfig(n_groups=0).validate()
    with pytest.raises(ValueError, match="beam"):
        SynthConfig(beam=2).validate()
