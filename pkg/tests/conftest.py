from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from uttrescore.corpus import Corpus, Hypothesis, Utterance


def make_utt(utt_id, frames, hyps, **meta):
    """hyps: list of (text, log_likelihood)."""
    return Utterance(
        id=utt_id,
        frames=np.asarray(frames, dtype=float),
        nbest=[Hypothesis.from_text(t, s) for t, s in hyps],
        metadata=dict(meta),
    )


@pytest.fixture
def tiny_corpus():
    utts = [
        make_utt("u1", [[0.0, 0.0], [1.0, 1.0]], [("a b", -0.1), ("a c", -0.5)], reference="a b"),
        make_utt("u2", [[0.1, 0.0], [1.0, 1.1]], [("a b", -0.2), ("x y", -0.9)], reference="a b"),
        make_utt("u3", [[5.0, 5.0], [6.0, 6.0]], [("p q", -0.1), ("p r", -0.4)], reference="p q"),
        make_utt("u4", [[5.1, 5.0], [6.0, 6.1]], [("p q", -0.3), ("z z", -1.0)], reference="p q"),
    ]
    return Corpus(utterances=utts, dim=2)


def random_sequences(rng, max_t=6, max_d=3):
    d = int(rng.integers(1, max_d + 1))
    t1 = int(rng.integers(1, max_t + 1))
    t2 = int(rng.integers(1, max_t + 1))
    return rng.standard_normal((t1, d)), rng.standard_normal((t2, d))
