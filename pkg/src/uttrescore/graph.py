"""Per-cluster graph assembly: shared hypothesis label space, soft-label
initialization from beam scores, and the binarized affinity matrix."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Utterance
from .scoring import word_edit


@dataclass
class LabelSpace:
    """Ordered unique hypotheses pooled from the cluster's top-N lists.

    ``hyps`` holds normalized hypothesis texts in first-appearance order
    (utterance input order, then n-best rank). ``own_mask`` maps each
    utterance id to the label indices its own top-N contributed.
    """

    hyps: list[str]
    own_mask: dict[str, tuple[int, ...]]

    @property
    def size(self) -> int:
        return len(self.hyps)


@dataclass
class AffinityGraph:
    W: np.ndarray  # (M, M) entries in {0, 1}, zero diagonal
    node_ids: list[str]
    theta: float
    prune_limit: int


def build_label_space(utterances: list[Utterance], n_top: int = 3) -> LabelSpace:
    if n_top < 1:
        raise ValueError("n_top must be >= 1")
    order: dict[tuple[str, ...], int] = {}
    own_mask: dict[str, tuple[int, ...]] = {}
    for utt in utterances:
        indices = []
        for hyp in utt.nbest[:n_top]:
            key = hyp.key()
            if key not in order:
                order[key] = len(order)
            idx = order[key]
            if idx not in indices:
                indices.append(idx)
        own_mask[utt.id] = tuple(indices)
    hyps = [" ".join(key) for key in order]
    return LabelSpace(hyps=hyps, own_mask=own_mask)


def init_soft_labels(
    utterances: list[Utterance], label_space: LabelSpace, n_top: int = 3
) -> np.ndarray:
    """Initial (M, C) soft-label matrix.

    Each utterance's beam scores are softmaxed over all B entries
    (max-shifted for stability); the probabilities of its top-N entries are
    written at their label indices, summing when two beam entries normalize
    to the same hypothesis. Row sums are <= 1 since the tail of the beam is
    dropped.
    """
    y0 = np.zeros((len(utterances), label_space.size))
    key_index = {hyp: i for i, hyp in enumerate(label_space.hyps)}
    for row, utt in enumerate(utterances):
        scores = np.array([h.log_likelihood for h in utt.nbest])
        if not np.all(np.isfinite(scores)):
            raise ValueError(f"utterance {utt.id!r}: non-finite beam scores")
        shifted = np.exp(scores - scores.max())
        probs = shifted / shifted.sum()
        for hyp, p in zip(utt.nbest[:n_top], probs[:n_top]):
            y0[row, key_index[" ".join(hyp.key())]] += p
    return y0


def min_hyp_edit_distance(utt_a: Utterance, utt_b: Utterance, n_top: int = 3) -> int:
    """Minimum word-level edit distance over the top-N x top-N hypothesis
    pairs of two utterances."""
    best = None
    for ha in utt_a.nbest[:n_top]:
        ta = list(ha.key())
        for hb in utt_b.nbest[:n_top]:
            d = word_edit(ta, list(hb.key())).distance
            if best is None or d < best:
                best = d
            if best == 0:
                return 0
    return best


def build_affinity(
    utterances: list[Utterance],
    distances: np.ndarray,
    theta: float,
    prune_limit: int = 4,
    n_top: int = 3,
) -> AffinityGraph:
    """Binary affinity: an edge exists iff the acoustic distance is below
    theta and the minimum top-N hypothesis edit distance is <= prune_limit."""
    m = len(utterances)
    if distances.shape != (m, m):
        raise ValueError(f"distance matrix shape {distances.shape} != ({m}, {m})")
    w = np.zeros((m, m), dtype=np.float64)
    for i in range(m):
        for j in range(i + 1, m):
            if distances[i, j] < theta:
                if min_hyp_edit_distance(utterances[i], utterances[j], n_top) <= prune_limit:
                    w[i, j] = w[j, i] = 1.0
    return AffinityGraph(
        W=w, node_ids=[u.id for u in utterances], theta=theta, prune_limit=prune_limit
    )


def write_graph_csv(graph: AffinityGraph, label_space: LabelSpace, prefix: Path | str) -> None:
    """Dump the edge list and label-space listing next to ``prefix``."""
    prefix = Path(prefix)
    with open(prefix.with_suffix(".edges.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id_a", "id_b"])
        m = len(graph.node_ids)
        for i in range(m):
            for j in range(i + 1, m):
                if graph.W[i, j] > 0:
                    w.writerow([graph.node_ids[i], graph.node_ids[j]])
    with open(prefix.with_suffix(".labels.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["index", "hypothesis"])
        for i, hyp in enumerate(label_space.hyps):
            w.writerow([i, hyp])
