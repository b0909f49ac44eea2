"""Label propagation over the per-cluster affinity graph.

The iterative update y(t+1) = alpha * S y(t) + (1 - alpha) * y(0) is a
contraction for alpha in (0, 1); its fixed point also solves the linear
system (I - alpha S) y = (1 - alpha) y0, used as an exact oracle at test
scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Utterance
from .distance import DistanceMetric, MetricKind, pairwise_distances
from .graph import AffinityGraph, LabelSpace, build_affinity, build_label_space, init_soft_labels


@dataclass
class LpConfig:
    alpha: float = 0.9
    tol: float = 1e-8
    max_iter: int = 1000
    sharing: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("tol must be > 0 and max_iter >= 1")

    @property
    def lam(self) -> float:
        """Regularization weight of the equivalent smoothness objective."""
        return (1.0 - self.alpha) / self.alpha


@dataclass
class Choice:
    id: str
    label_index: int
    text: str
    source: str  # "own_nbest" or "shared"


@dataclass
class PropagationResult:
    y_final: np.ndarray
    iterations: int
    converged: bool
    chosen: list[Choice]
    label_space: LabelSpace | None = None
    graph: AffinityGraph | None = None

    @property
    def n_shared(self) -> int:
        return sum(1 for c in self.chosen if c.source == "shared")

    @property
    def n_flipped(self) -> int:
        """Utterances whose decoded hypothesis differs from their 1-best."""
        if self.label_space is None:
            raise ValueError("label space not recorded")
        return sum(
            1
            for c in self.chosen
            if c.label_index != self.label_space.own_mask[c.id][0]
        )


def normalize_symmetric(graph: AffinityGraph | np.ndarray) -> np.ndarray:
    """S = Delta^{-1/2} W Delta^{-1/2} with zero-degree rows/columns mapped
    to zero."""
    w = graph.W if isinstance(graph, AffinityGraph) else np.asarray(graph, dtype=np.float64)
    deg = w.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    return inv_sqrt[:, None] * w * inv_sqrt[None, :]


def propagate(S: np.ndarray, y0: np.ndarray, cfg: LpConfig) -> tuple[np.ndarray, int, bool]:
    """Iterate the diffusion update from y0 until the max-abs elementwise
    change drops below cfg.tol, or max_iter is reached."""
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(y0))):
        raise ValueError("non-finite input to propagate")
    y = y0.copy()
    keep = (1.0 - cfg.alpha) * y0
    for it in range(1, cfg.max_iter + 1):
        y_next = cfg.alpha * (S @ y) + keep
        delta = np.max(np.abs(y_next - y)) if y.size else 0.0
        y = y_next
        if delta < cfg.tol:
            return y, it, True
    return y, cfg.max_iter, False


def closed_form(S: np.ndarray, y0: np.ndarray, alpha: float) -> np.ndarray:
    """Exact fixed point of the diffusion update: solves
    (I - alpha S) y = (1 - alpha) y0."""
    m = S.shape[0]
    return np.linalg.solve(np.eye(m) - alpha * S, (1.0 - alpha) * y0)


def decode(
    y_inf: np.ndarray,
    label_space: LabelSpace,
    utterances: list[Utterance],
    sharing: bool,
) -> list[Choice]:
    """Pick each utterance's final hypothesis from its propagated row.

    With sharing the argmax ranges over the whole label space; without, it
    is restricted to the utterance's own top-N contributions. Ties go to
    the smallest label index. A degenerate all-zero restricted row falls
    back to the baseline 1-best.
    """
    choices = []
    for row, utt in zip(y_inf, utterances):
        mask = label_space.own_mask[utt.id]
        if sharing:
            idx = int(np.argmax(row))
        else:
            sub = row[list(mask)]
            idx = mask[int(np.argmax(sub))]
        if row[idx] <= 0.0:
            idx = mask[0]
            source = "own_nbest"
        else:
            source = "own_nbest" if idx in mask else "shared"
        choices.append(
            Choice(id=utt.id, label_index=idx, text=label_space.hyps[idx], source=source)
        )
    return choices


DEFAULT_METRIC = DistanceMetric(MetricKind.DEPENDENT_DTW, normalized=True)


def rescore_cluster(
    utterances: list[Utterance],
    cfg: LpConfig,
    theta: float,
    n_top: int = 3,
    prune_limit: int = 4,
    metric: DistanceMetric = DEFAULT_METRIC,
) -> PropagationResult:
    """Full per-cluster pipeline: pairwise distances, affinity, label
    space, soft-label initialization, propagation, decoding. Node order is
    the utterance id order."""
    if not utterances:
        raise ValueError("empty cluster")
    utts = sorted(utterances, key=lambda u: u.id)
    distances = pairwise_distances(utts, metric)
    graph = build_affinity(utts, distances, theta, prune_limit, n_top)
    label_space = build_label_space(utts, n_top)
    y0 = init_soft_labels(utts, label_space, n_top)
    s = normalize_symmetric(graph)
    y_inf, iterations, converged = propagate(s, y0, cfg)
    chosen = decode(y_inf, label_space, utts, cfg.sharing)
    return PropagationResult(
        y_final=y_inf,
        iterations=iterations,
        converged=converged,
        chosen=chosen,
        label_space=label_space,
        graph=graph,
    )
