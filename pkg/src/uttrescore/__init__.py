"""Cross-utterance ASR N-best rescoring via graph label propagation."""

from .corpus import Corpus, CorpusError, Hypothesis, Utterance, load_corpus, normalize_tokens, write_corpus
from .distance import DistanceMetric, MetricKind, ddtw, ddtw_norm, pairwise_distances
from .labelprop import LpConfig, PropagationResult, rescore_cluster
from .pipeline import GraphLpRescorer, HypothesisClusterer, PipelineConfig
from .scoring import EvalReport, oracle_nbest_wer, score_corpus, word_edit
from .synth import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "CorpusError",
    "DistanceMetric",
    "EvalReport",
    "GraphLpRescorer",
    "Hypothesis",
    "HypothesisClusterer",
    "LpConfig",
    "MetricKind",
    "PipelineConfig",
    "PropagationResult",
    "SynthConfig",
    "Utterance",
    "ddtw",
    "ddtw_norm",
    "generate",
    "load_corpus",
    "normalize_tokens",
    "oracle_nbest_wer",
    "pairwise_distances",
    "rescore_cluster",
    "score_corpus",
    "word_edit",
    "write_corpus",
]
