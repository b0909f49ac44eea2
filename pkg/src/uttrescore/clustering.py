"""Pooling utterances into graph-sized groups.

Utterances are embedded by tf-idf over their 1-best hypothesis tokens and
clustered with DBSCAN under cosine distance. Unclustered (noise)
utterances bypass rescoring and keep their baseline 1-best.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, normalize_tokens

TfIdfVector = dict[str, float]


@dataclass
class Clustering:
    clusters: list[list[str]]
    noise: list[str]
    eps: float
    min_pts: int

    def labels(self) -> dict[str, int]:
        """id -> cluster index, -1 for noise."""
        out = {i: -1 for i in self.noise}
        for ci, members in enumerate(self.clusters):
            for i in members:
                out[i] = ci
        return out


def tfidf_vectors(
    corpus: Corpus, casefold: bool = True, strip_punct: bool = True
) -> dict[str, TfIdfVector]:
    """tf-idf over each utterance's normalized 1-best tokens.

    tf is the raw count, idf = ln((1+M)/(1+df)) + 1 (smooth), and the
    resulting vector is l2-normalized. An empty 1-best yields a zero vector.
    """
    docs = {
        u.id: normalize_tokens(u.nbest[0].text, casefold, strip_punct) for u in corpus
    }
    m = len(docs)
    df: Counter[str] = Counter()
    for tokens in docs.values():
        df.update(set(tokens))
    idf = {tok: math.log((1 + m) / (1 + n)) + 1.0 for tok, n in df.items()}

    vectors: dict[str, TfIdfVector] = {}
    for utt_id, tokens in docs.items():
        counts = Counter(tokens)
        vec = {tok: cnt * idf[tok] for tok, cnt in counts.items()}
        norm = math.sqrt(sum(w * w for w in vec.values()))
        if norm > 0:
            vec = {tok: w / norm for tok, w in vec.items()}
        vectors[utt_id] = vec
    return vectors


def cosine_distance(a: TfIdfVector, b: TfIdfVector) -> float:
    """1 - cosine similarity for l2-normalized sparse vectors."""
    if len(b) < len(a):
        a, b = b, a
    sim = sum(w * b.get(tok, 0.0) for tok, w in a.items())
    return 1.0 - sim


def dbscan(vectors: dict[str, TfIdfVector], eps: float, min_pts: int) -> Clustering:
    """DBSCAN under cosine distance, deterministic in the given id order.

    Core points have >= min_pts neighbors within eps (self included);
    clusters expand over density-reachable points; border points go to the
    first cluster discovered that reaches them; the rest is noise.
    """
    if eps <= 0 or min_pts < 1:
        raise ValueError("eps must be > 0 and min_pts >= 1")
    ids = list(vectors)
    index = {i: k for k, i in enumerate(ids)}
    neighbors: list[list[int]] = [[] for _ in ids]
    for i, id_a in enumerate(ids):
        neighbors[i].append(i)
        for j in range(i + 1, len(ids)):
            if cosine_distance(vectors[id_a], vectors[ids[j]]) <= eps:
                neighbors[i].append(j)
                neighbors[j].append(i)

    assignment = [None] * len(ids)
    clusters: list[list[str]] = []
    for seed in range(len(ids)):
        if assignment[seed] is not None or len(neighbors[seed]) < min_pts:
            continue
        cluster_idx = len(clusters)
        members: list[str] = []
        queue = [seed]
        assignment[seed] = cluster_idx
        while queue:
            p = queue.pop(0)
            members.append(ids[p])
            if len(neighbors[p]) < min_pts:
                continue  # border point: claimed but not expanded
            for q in neighbors[p]:
                if assignment[q] is None:
                    assignment[q] = cluster_idx
                    queue.append(q)
        members.sort(key=index.get)
        clusters.append(members)
    noise = [ids[k] for k in range(len(ids)) if assignment[k] is None]
    return Clustering(clusters=clusters, noise=noise, eps=eps, min_pts=min_pts)


def tune_dbscan(
    vectors: dict[str, TfIdfVector],
    eps_grid: list[float],
    min_pts_grid: list[int],
    size_lo: int = 4,
    size_hi: int = 800,
) -> tuple[float, int, int]:
    """Grid search maximizing the number of clusters with size in
    [size_lo, size_hi]; ties broken by fewer noise points, then smaller eps,
    then smaller min_pts."""
    if not eps_grid or not min_pts_grid:
        raise ValueError("empty parameter grid")
    best = None
    for eps in sorted(eps_grid):
        for min_pts in sorted(min_pts_grid):
            clustering = dbscan(vectors, eps, min_pts)
            objective = sum(
                1 for c in clustering.clusters if size_lo <= len(c) <= size_hi
            )
            key = (-objective, len(clustering.noise), eps, min_pts)
            if best is None or key < best[0]:
                best = (key, (eps, min_pts, objective))
    return best[1]


def passthrough_ids(clustering: Clustering) -> list[str]:
    """Ids that bypass graph rescoring and keep their baseline 1-best."""
    return list(clustering.noise)


def write_clustering_csv(clustering: Clustering, path: Path | str) -> None:
    labels = clustering.labels()
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "cluster_index"])
        for utt_id in sorted(labels):
            w.writerow([utt_id, labels[utt_id]])
