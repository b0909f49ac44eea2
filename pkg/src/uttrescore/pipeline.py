"""End-to-end rescoring pipeline with an sklearn-style estimator surface."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .clustering import dbscan, tfidf_vectors, tune_dbscan
from .corpus import Corpus
from .distance import DistanceMetric, MetricKind
from .labelprop import Choice, LpConfig, rescore_cluster


@dataclass
class PipelineConfig:
    """Resolved configuration of a rescoring run; serialized next to every
    output so the run can be reproduced exactly."""

    metric: str = "ddtw"
    normalized: bool = True
    dtw_variant: str = "independent"
    theta: float = 1.5
    alpha: float = 0.9
    tol: float = 1e-8
    max_iter: int = 1000
    n_top: int = 3
    prune_limit: int = 4
    sharing: bool = True
    eps: float = 0.4
    min_pts: int = 2
    eps_grid: list[float] | None = None
    min_pts_grid: list[int] | None = None
    size_lo: int = 4
    size_hi: int = 800
    casefold: bool = True
    strip_punct: bool = True
    seed: int = 0
    workers: int = 1

    def distance_metric(self) -> DistanceMetric:
        return DistanceMetric(MetricKind(self.metric), self.normalized, self.dtw_variant)

    def lp_config(self) -> LpConfig:
        return LpConfig(
            alpha=self.alpha, tol=self.tol, max_iter=self.max_iter, sharing=self.sharing
        )

    @classmethod
    def from_file(cls, path: Path | str) -> "PipelineConfig":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**data)
        if cfg.eps_grid is not None:
            cfg.eps_grid = [float(v) for v in cfg.eps_grid]
        if cfg.min_pts_grid is not None:
            cfg.min_pts_grid = [int(v) for v in cfg.min_pts_grid]
        return cfg

    def to_file(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    def with_overrides(self, **overrides) -> "PipelineConfig":
        data = asdict(self)
        for key, value in overrides.items():
            if value is not None:
                if key not in data:
                    raise ValueError(f"unknown config field {key!r}")
                data[key] = value
        return PipelineConfig(**data)


class HypothesisClusterer(ClusterMixin, BaseEstimator):
    """DBSCAN over tf-idf vectors of 1-best hypotheses.

    ``fit`` accepts a :class:`Corpus`; ``labels_`` holds one cluster index
    per utterance in corpus order, -1 for noise. When parameter grids are
    given, eps/min_pts are tuned to maximize the number of clusters with
    size inside [size_lo, size_hi].
    """

    def __init__(
        self,
        eps: float = 0.4,
        min_pts: int = 2,
        eps_grid=None,
        min_pts_grid=None,
        size_lo: int = 4,
        size_hi: int = 800,
        casefold: bool = True,
        strip_punct: bool = True,
    ):
        self.eps = eps
        self.min_pts = min_pts
        self.eps_grid = eps_grid
        self.min_pts_grid = min_pts_grid
        self.size_lo = size_lo
        self.size_hi = size_hi
        self.casefold = casefold
        self.strip_punct = strip_punct

    def fit(self, X: Corpus, y=None):
        vectors = tfidf_vectors(X, self.casefold, self.strip_punct)
        eps, min_pts = self.eps, self.min_pts
        if self.eps_grid and self.min_pts_grid:
            eps, min_pts, objective = tune_dbscan(
                vectors, self.eps_grid, self.min_pts_grid, self.size_lo, self.size_hi
            )
            self.tuned_objective_ = objective
        self.eps_, self.min_pts_ = eps, min_pts
        self.clustering_ = dbscan(vectors, eps, min_pts)
        labels = self.clustering_.labels()
        self.labels_ = np.array([labels[u.id] for u in X])
        return self


def _rescore_one(args):
    utts, lp_cfg, theta, n_top, prune_limit, metric = args
    return rescore_cluster(utts, lp_cfg, theta, n_top, prune_limit, metric)


class GraphLpRescorer(BaseEstimator):
    """Cross-utterance N-best rescorer.

    ``fit`` clusters the corpus, builds one affinity graph per cluster, and
    runs label propagation; ``predict`` returns the chosen hypothesis text
    per utterance in corpus order. Noise utterances keep their baseline
    1-best.
    """

    def __init__(self, config: PipelineConfig | None = None):
        self.config = config

    def fit(self, X: Corpus, y=None):
        cfg = self.config or PipelineConfig()
        self.config_ = cfg
        clusterer = HypothesisClusterer(
            eps=cfg.eps,
            min_pts=cfg.min_pts,
            eps_grid=cfg.eps_grid,
            min_pts_grid=cfg.min_pts_grid,
            size_lo=cfg.size_lo,
            size_hi=cfg.size_hi,
            casefold=cfg.casefold,
            strip_punct=cfg.strip_punct,
        ).fit(X)
        self.clustering_ = clusterer.clustering_
        by_id = {u.id: u for u in X}

        jobs = [
            (
                [by_id[i] for i in members],
                cfg.lp_config(),
                cfg.theta,
                cfg.n_top,
                cfg.prune_limit,
                cfg.distance_metric(),
            )
            for members in self.clustering_.clusters
        ]
        if cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(_rescore_one, jobs))
        else:
            results = [_rescore_one(job) for job in jobs]
        self.results_ = results

        choices: dict[str, Choice] = {}
        cluster_of: dict[str, int] = {}
        for ci, result in enumerate(results):
            for choice in result.chosen:
                choices[choice.id] = choice
                cluster_of[choice.id] = ci
        for utt_id in self.clustering_.noise:
            utt = by_id[utt_id]
            choices[utt_id] = Choice(
                id=utt_id, label_index=0, text=utt.nbest[0].text, source="own_nbest"
            )
            cluster_of[utt_id] = -1
        self.choices_ = choices
        self.cluster_of_ = cluster_of
        self.diagnostics_ = [
            {
                "cluster": ci,
                "size": len(members),
                "iterations": res.iterations,
                "converged": res.converged,
                "n_flipped": res.n_flipped,
                "n_shared": res.n_shared,
            }
            for ci, (members, res) in enumerate(zip(self.clustering_.clusters, results))
        ]
        return self

    def predict(self, X: Corpus) -> list[str]:
        return [self.choices_[u.id].text for u in X]

    def fit_predict(self, X: Corpus, y=None) -> list[str]:
        return self.fit(X).predict(X)
