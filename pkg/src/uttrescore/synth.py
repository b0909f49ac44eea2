"""Seeded synthetic corpus generator.

Produces desk-scale corpora with known ground truth: transcript groups,
pseudo-acoustic frame embeddings built from per-word prototype sequences
(with accent offsets, Gaussian noise, and random frame duplication as time
warping), and corrupted N-best lists whose correct transcript is kept
within reach of rescoring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Hypothesis, Utterance


@dataclass
class SynthConfig:
    n_groups: int = 50
    group_size_range: tuple[int, int] = (8, 12)
    vocab_size: int = 40
    sentence_len_range: tuple[int, int] = (4, 8)
    dim: int = 8
    frames_per_word_range: tuple[int, int] = (2, 4)
    warp_prob: float = 0.3
    noise_sigma: float = 0.1
    n_accents: int = 4
    accent_offset_sigma: float = 0.2
    corruption_rate: float = 0.35
    beam: int = 5
    seed: int = 0

    def validate(self) -> None:
        for name in ("n_groups", "vocab_size", "dim", "n_accents", "beam"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("group_size_range", "sentence_len_range", "frames_per_word_range"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} must be an increasing range of counts >= 1")
        for name in ("warp_prob", "corruption_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("noise_sigma", "accent_offset_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.beam < 3:
            raise ValueError("beam must be >= 3 to place corrupted truths at rank 2-3")


def _substitute(tokens: list[str], n_subs: int, vocab: list[str], rng) -> list[str]:
    out = list(tokens)
    positions = rng.choice(len(out), size=min(n_subs, len(out)), replace=False)
    for pos in positions:
        choices = [w for w in vocab if w != out[pos]]
        out[pos] = choices[rng.integers(len(choices))]
    return out


def _distinct_variant(base: list[str], n_subs: int, vocab, taken: set, rng) -> list[str]:
    for _ in range(100):
        cand = _substitute(base, n_subs, vocab, rng)
        if tuple(cand) not in taken:
            return cand
        n_subs = min(n_subs + 1, len(base))
    raise ValueError("vocabulary too small to generate distinct hypotheses")


def generate(cfg: SynthConfig) -> Corpus:
    """Generate a corpus with references; bit-identical for a fixed seed."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    vocab = [f"w{i:03d}" for i in range(cfg.vocab_size)]

    # fixed prototype frame sequence per word
    prototypes = {}
    for word in vocab:
        n_frames = int(rng.integers(cfg.frames_per_word_range[0], cfg.frames_per_word_range[1] + 1))
        prototypes[word] = rng.standard_normal((n_frames, cfg.dim))

    references: list[list[str]] = []
    seen = set()
    for _ in range(cfg.n_groups):
        for _ in range(1000):
            length = int(rng.integers(cfg.sentence_len_range[0], cfg.sentence_len_range[1] + 1))
            sent = [vocab[k] for k in rng.integers(cfg.vocab_size, size=length)]
            if tuple(sent) not in seen:
                seen.add(tuple(sent))
                references.append(sent)
                break
        else:
            raise ValueError("cannot sample distinct group references; enlarge vocab_size")

    accents = [f"accent{a}" for a in range(cfg.n_accents)]
    offsets = rng.normal(0.0, cfg.accent_offset_sigma, size=(cfg.n_accents, cfg.dim))

    utterances = []
    for gi, ref in enumerate(references):
        size = int(rng.integers(cfg.group_size_range[0], cfg.group_size_range[1] + 1))
        for ui in range(size):
            accent_idx = int(rng.integers(cfg.n_accents))
            frames = np.concatenate([prototypes[w] for w in ref], axis=0)
            frames = frames + offsets[accent_idx]
            frames = frames + rng.normal(0.0, cfg.noise_sigma, size=frames.shape)
            if cfg.warp_prob > 0:
                dup = rng.random(frames.shape[0]) < cfg.warp_prob
                rows = []
                for t in range(frames.shape[0]):
                    rows.append(frames[t])
                    if dup[t]:
                        rows.append(frames[t])
                frames = np.stack(rows, axis=0)

            taken = {tuple(ref)}
            texts: list[list[str]] = [None] * cfg.beam
            if rng.random() < cfg.corruption_rate:
                n_subs = int(rng.integers(1, 3))
                texts[0] = _distinct_variant(ref, n_subs, vocab, set(), rng)
                taken.add(tuple(texts[0]))
                truth_rank = int(rng.integers(1, 3))  # rank 2 or 3 (0-based 1 or 2)
                texts[truth_rank] = list(ref)
            else:
                texts[0] = list(ref)
            for rank in range(cfg.beam):
                if texts[rank] is None:
                    texts[rank] = _distinct_variant(ref, 2 + rank, vocab, taken, rng)
                    taken.add(tuple(texts[rank]))

            scores = -np.sort(rng.uniform(0.5, 8.0, size=cfg.beam))
            nbest = [
                Hypothesis(tuple(toks), float(s)) for toks, s in zip(texts, scores)
            ]
            utterances.append(
                Utterance(
                    id=f"g{gi:03d}u{ui:02d}",
                    frames=frames,
                    nbest=nbest,
                    metadata={
                        "speaker": f"spk{gi:03d}_{ui:02d}",
                        "accent": accents[accent_idx],
                        "reference": " ".join(ref),
                    },
                )
            )
    return Corpus(utterances=utterances, dim=cfg.dim)
