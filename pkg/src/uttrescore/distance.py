"""Pairwise utterance distance kernels.

The production metric is length-normalized dependent DTW over frame
embeddings. Last-frame Euclidean distance and two readings of traditional
DTW are provided as comparison metrics for EER-based selection.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Utterance

_STEPS = ((-1, -1), (-1, 0), (0, -1))  # match, insert, delete


class MetricKind(str, enum.Enum):
    LAST_FRAME_EUCLIDEAN = "lfe"
    TRADITIONAL_DTW = "dtw"
    DEPENDENT_DTW = "ddtw"


@dataclass(frozen=True)
class DistanceMetric:
    """A selected distance kernel plus its length-normalization flag.

    ``dtw_variant`` only matters for the traditional-DTW kind: "independent"
    runs one univariate DTW per embedding dimension and sums the costs,
    "linear_dependent" runs a single path linearly accumulating Euclidean
    frame distances.
    """

    kind: MetricKind
    normalized: bool = True
    dtw_variant: str = "independent"

    @property
    def name(self) -> str:
        base = self.kind.value
        if self.kind is MetricKind.TRADITIONAL_DTW and self.dtw_variant != "independent":
            base += f"-{self.dtw_variant}"
        return base + ("-norm" if self.normalized else "")

    def raw(self, x: np.ndarray, y: np.ndarray) -> float:
        if self.kind is MetricKind.LAST_FRAME_EUCLIDEAN:
            return frame_distance(x[-1], y[-1])
        if self.kind is MetricKind.TRADITIONAL_DTW:
            return traditional_dtw(x, y, variant=self.dtw_variant)
        return ddtw(x, y, return_path=False)

    def __call__(self, x: np.ndarray, y: np.ndarray) -> float:
        value = self.raw(x, y)
        if self.normalized:
            value /= max(len(x), len(y))
        return value


def frame_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two D-dimensional frame vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def _check_pair(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.shape[0] < 1 or y.shape[0] < 1:
        raise ValueError("empty sequence")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: D={x.shape[1]} vs D={y.shape[1]}")
    return x, y


def _sq_cost_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # direct differences so that identical frames cost exactly zero
    diff = x[:, None, :] - y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _accumulate(cost: np.ndarray) -> np.ndarray:
    """Standard DTW accumulation with steps {match, insert, delete}."""
    t1, t2 = cost.shape
    acc = np.empty((t1, t2))
    acc[0, 0] = cost[0, 0]
    for j in range(1, t2):
        acc[0, j] = acc[0, j - 1] + cost[0, j]
    for i in range(1, t1):
        acc[i, 0] = acc[i - 1, 0] + cost[i, 0]
        row = acc[i]
        prev = acc[i - 1]
        c = cost[i]
        for j in range(1, t2):
            row[j] = c[j] + min(prev[j - 1], prev[j], row[j - 1])
    return acc


def _backtrack(acc: np.ndarray) -> list[tuple[int, int]]:
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            candidates = [(acc[i + di, j + dj], di, dj) for di, dj in _STEPS]
            _, di, dj = min(candidates)
            i, j = i + di, j + dj
        path.append((i, j))
    path.reverse()
    return path


def ddtw(x: np.ndarray, y: np.ndarray, return_path: bool = True):
    """Dependent DTW: the minimum over warping paths of
    sqrt(sum of squared frame distances along the path).

    Returns ``(cost, path)`` with 0-based index pairs, or just the cost when
    ``return_path`` is false.
    """
    x, y = _check_pair(x, y)
    acc = _accumulate(_sq_cost_matrix(x, y))
    cost = math.sqrt(acc[-1, -1])
    if not return_path:
        return cost
    return cost, _backtrack(acc)


def ddtw_norm(x: np.ndarray, y: np.ndarray) -> float:
    """Length-normalized dependent DTW: ddtw cost / max(T1, T2)."""
    x, y = _check_pair(x, y)
    return ddtw(x, y, return_path=False) / max(x.shape[0], y.shape[0])


def traditional_dtw(x: np.ndarray, y: np.ndarray, variant: str = "independent") -> float:
    """Comparison DTW with linear cost accumulation.

    "independent": per-dimension univariate DTW on absolute differences,
    costs summed over dimensions. "linear_dependent": one path accumulating
    Euclidean frame distances.
    """
    x, y = _check_pair(x, y)
    if variant == "independent":
        total = 0.0
        for d in range(x.shape[1]):
            cost = np.abs(x[:, d][:, None] - y[:, d][None, :])
            total += float(_accumulate(cost)[-1, -1])
        return total
    if variant == "linear_dependent":
        cost = np.sqrt(_sq_cost_matrix(x, y))
        return float(_accumulate(cost)[-1, -1])
    raise ValueError(f"unknown traditional_dtw variant {variant!r}")


def last_frame_distance(x: np.ndarray, y: np.ndarray, normalized: bool = False) -> float:
    """Euclidean distance between the final frames of two sequences."""
    x, y = _check_pair(x, y)
    d = frame_distance(x[-1], y[-1])
    if normalized:
        d /= max(x.shape[0], y.shape[0])
    return d


def pairwise_distances(utterances: list[Utterance], metric: DistanceMetric) -> np.ndarray:
    """Symmetric M x M distance matrix over ``utterances``; zero diagonal.
    Only the upper triangle is evaluated."""
    m = len(utterances)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            d = metric(utterances[i].frames, utterances[j].frames)
            out[i, j] = out[j, i] = d
    return out


def write_distance_csv(matrix: np.ndarray, ids: list[str], path: Path | str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id"] + list(ids))
        for utt_id, row in zip(ids, matrix):
            w.writerow([utt_id] + [repr(float(v)) for v in row])


ALL_METRICS: tuple[DistanceMetric, ...] = tuple(
    DistanceMetric(kind, normalized)
    for kind in MetricKind
    for normalized in (False, True)
)
