"""EER harness for selecting the utterance-utterance distance metric.

Trials pair utterances with the same (positive) or different (negative)
ground-truth transcripts; a good metric assigns positives smaller
distances. The equal error rate per candidate metric drives selection.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, normalize_tokens
from .distance import DistanceMetric


@dataclass(frozen=True)
class Trial:
    id_a: str
    id_b: str
    positive: bool


@dataclass
class TrialSet:
    pairs: list[Trial]
    seed: int
    pos_shortfall: int = 0  # requested positives that could not be sampled
    neg_shortfall: int = 0


@dataclass
class EerResult:
    eer: float
    threshold: float
    far_curve: np.ndarray | None = None
    frr_curve: np.ndarray | None = None


def _transcript_key(utt, casefold: bool = True, strip_punct: bool = True) -> tuple[str, ...]:
    ref = utt.reference
    if ref is None:
        raise ValueError(f"utterance {utt.id!r} has no reference transcript")
    return tuple(normalize_tokens(ref, casefold, strip_punct))


def generate_trials(corpus: Corpus, n_pos: int, n_neg: int, seed: int) -> TrialSet:
    """Sample same-transcript and different-transcript utterance pairs,
    uniformly without replacement. If fewer eligible pairs exist than
    requested, all are taken and the shortfall is recorded."""
    groups: dict[tuple[str, ...], list[str]] = {}
    for utt in corpus:
        groups.setdefault(_transcript_key(utt), []).append(utt.id)

    pos_pairs = []
    for ids in groups.values():
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                pos_pairs.append((ids[i], ids[j]))
    keys = list(groups)
    neg_pairs = []
    for gi in range(len(keys)):
        for gj in range(gi + 1, len(keys)):
            for a in groups[keys[gi]]:
                for b in groups[keys[gj]]:
                    neg_pairs.append((a, b))

    rng = random.Random(seed)
    take_pos = min(n_pos, len(pos_pairs))
    take_neg = min(n_neg, len(neg_pairs))
    sampled_pos = rng.sample(pos_pairs, take_pos)
    sampled_neg = rng.sample(neg_pairs, take_neg)
    pairs = [Trial(a, b, True) for a, b in sampled_pos]
    pairs += [Trial(a, b, False) for a, b in sampled_neg]
    return TrialSet(
        pairs=pairs,
        seed=seed,
        pos_shortfall=n_pos - take_pos,
        neg_shortfall=n_neg - take_neg,
    )


def compute_eer(scores: list[tuple[float, bool]], keep_curves: bool = False) -> EerResult:
    """Equal error rate over (distance, is_positive) trials.

    Candidate thresholds are the midpoints between consecutive distinct
    distances, plus one candidate below all scores and one above. At a
    threshold t, FAR = fraction of negatives with distance < t and
    FRR = fraction of positives with distance >= t. The threshold minimizing
    |FAR - FRR| is picked (ties toward the smaller threshold) and
    EER = (FAR + FRR) / 2 there.
    """
    pos = np.array(sorted(d for d, p in scores if p))
    neg = np.array(sorted(d for d, p in scores if not p))
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("compute_eer needs at least one positive and one negative trial")

    distinct = np.unique(np.concatenate([pos, neg]))
    candidates = [distinct[0]]
    candidates += [(a + b) / 2.0 for a, b in zip(distinct[:-1], distinct[1:])]
    candidates.append(distinct[-1] + 1.0)

    fars = np.array([int(np.searchsorted(neg, t, side="left")) / len(neg) for t in candidates])
    frrs = np.array(
        [(len(pos) - int(np.searchsorted(pos, t, side="left"))) / len(pos) for t in candidates]
    )
    best = int(np.argmin(np.abs(fars - frrs)))  # first minimum = smallest threshold
    result = EerResult(
        eer=float((fars[best] + frrs[best]) / 2.0),
        threshold=float(candidates[best]),
    )
    if keep_curves:
        result.far_curve = fars
        result.frr_curve = frrs
    return result


def metric_selection_report(
    corpus: Corpus, trials: TrialSet, metrics: list[DistanceMetric]
) -> list[dict]:
    """One EER per metric variant on a shared trial set. Raw kernel values
    are computed once per pair and reused across normalization variants."""
    utts = {u.id: u for u in corpus}
    raw_cache: dict[tuple[str, str, str], float] = {}
    rows = []
    for metric in metrics:
        scores = []
        for trial in trials.pairs:
            cache_key = (trial.id_a, trial.id_b, metric.name.removesuffix("-norm"))
            raw = raw_cache.get(cache_key)
            if raw is None:
                raw = metric.raw(utts[trial.id_a].frames, utts[trial.id_b].frames)
                raw_cache[cache_key] = raw
            value = raw
            if metric.normalized:
                value /= max(utts[trial.id_a].num_frames, utts[trial.id_b].num_frames)
            scores.append((value, trial.positive))
        res = compute_eer(scores)
        rows.append(
            {
                "metric": metric.kind.value,
                "length_normalized": metric.normalized,
                "eer_percent": res.eer * 100.0,
                "threshold": res.threshold,
            }
        )
    return rows


def write_metric_report_csv(rows: list[dict], path: Path | str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["metric", "length_normalized", "eer_percent", "threshold"])
        for r in rows:
            w.writerow(
                [
                    r["metric"],
                    int(r["length_normalized"]),
                    repr(float(r["eer_percent"])),
                    repr(float(r["threshold"])),
                ]
            )
