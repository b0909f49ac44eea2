"""Data model and file I/O for utterances, N-best lists, and frame embeddings.

A corpus file is JSON-lines: one utterance record per line with fields
``id``, ``frames`` (nested arrays) or ``frames_file`` (binary matrix file),
``nbest`` (list of ``{text, log_likelihood}``), and optional ``meta``
(``speaker``, ``accent``, ``reference``).
"""

from __future__ import annotations

import json
import math
import string
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EMBEDDING_MAGIC = b"FEM1"

_PUNCT = string.punctuation


class CorpusError(ValueError):
    """Malformed corpus input (bad record, dimension mismatch, duplicate id)."""


def normalize_tokens(text: str, casefold: bool = True, strip_punct: bool = True) -> list[str]:
    """Whitespace-tokenize ``text``, optionally lowercasing and stripping
    leading/trailing punctuation from each token. Tokens emptied by
    punctuation stripping are dropped."""
    tokens = []
    for tok in text.split():
        if casefold:
            tok = tok.lower()
        if strip_punct:
            tok = tok.strip(_PUNCT)
        if tok:
            tokens.append(tok)
    return tokens


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple[str, ...]
    log_likelihood: float

    def __post_init__(self):
        if not math.isfinite(self.log_likelihood):
            raise CorpusError(f"non-finite log_likelihood {self.log_likelihood!r}")

    @classmethod
    def from_text(cls, text: str, log_likelihood: float) -> "Hypothesis":
        return cls(tuple(text.split()), float(log_likelihood))

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def key(self, casefold: bool = True, strip_punct: bool = True) -> tuple[str, ...]:
        """Identity of this hypothesis for label-space deduplication."""
        return tuple(normalize_tokens(self.text, casefold, strip_punct))


@dataclass
class Utterance:
    id: str
    frames: np.ndarray  # (T, D) float64
    nbest: list[Hypothesis]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1 or self.frames.shape[1] < 1:
            raise CorpusError(f"utterance {self.id!r}: frames must be a T x D matrix with T, D >= 1")
        if not self.nbest:
            raise CorpusError(f"utterance {self.id!r}: empty nbest list")
        # tolerate unsorted input; stable sort keeps tie order
        self.nbest = sorted(self.nbest, key=lambda h: -h.log_likelihood)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    @property
    def reference(self) -> str | None:
        return self.metadata.get("reference")


@dataclass
class Corpus:
    utterances: list[Utterance]
    dim: int

    def __post_init__(self):
        seen = set()
        for utt in self.utterances:
            if utt.id in seen:
                raise CorpusError(f"duplicate utterance id {utt.id!r}")
            seen.add(utt.id)
            if utt.dim != self.dim:
                raise CorpusError(
                    f"utterance {utt.id!r}: frame dimension {utt.dim} != corpus dimension {self.dim}"
                )

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def by_id(self, utt_id: str) -> Utterance:
        for utt in self.utterances:
            if utt.id == utt_id:
                return utt
        raise KeyError(utt_id)

    @property
    def ids(self) -> list[str]:
        return [u.id for u in self.utterances]


def read_embedding(path: Path | str) -> np.ndarray:
    """Read a binary frame matrix: magic "FEM1", uint32-LE T and D, then
    T*D float32-LE values row-major."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != EMBEDDING_MAGIC:
        raise CorpusError(f"{path}: not a FEM1 embedding file")
    t, d = struct.unpack("<II", data[4:12])
    expected = 12 + 4 * t * d
    if len(data) != expected:
        raise CorpusError(f"{path}: expected {expected} bytes for {t}x{d}, got {len(data)}")
    mat = np.frombuffer(data, dtype="<f4", offset=12).reshape(t, d)
    return mat.astype(np.float64)


def write_embedding(path: Path | str, frames: np.ndarray) -> None:
    frames = np.asarray(frames)
    t, d = frames.shape
    with open(path, "wb") as f:
        f.write(EMBEDDING_MAGIC)
        f.write(struct.pack("<II", t, d))
        f.write(frames.astype("<f4").tobytes(order="C"))


def _parse_record(rec: dict, lineno: int, embedding_dir: Path | None) -> Utterance:
    try:
        utt_id = rec["id"]
        if "frames" in rec:
            frames = np.asarray(rec["frames"], dtype=np.float64)
        elif "frames_file" in rec:
            if embedding_dir is None:
                raise CorpusError("record references frames_file but no embedding_dir given")
            fpath = embedding_dir / rec["frames_file"]
            if not fpath.exists():
                raise CorpusError(f"missing embedding file {fpath}")
            frames = read_embedding(fpath)
        else:
            raise CorpusError("record has neither 'frames' nor 'frames_file'")
        nbest = [Hypothesis.from_text(h["text"], h["log_likelihood"]) for h in rec["nbest"]]
        meta = dict(rec.get("meta", {}))
        return Utterance(id=utt_id, frames=frames, nbest=nbest, metadata=meta)
    except CorpusError as e:
        raise CorpusError(f"record {lineno}: {e}") from None
    except (KeyError, TypeError, ValueError) as e:
        raise CorpusError(f"record {lineno}: malformed record ({e})") from None


def load_corpus(path: Path | str, embedding_dir: Path | str | None = None) -> Corpus:
    """Load a JSON-lines corpus file. Raises :class:`CorpusError` with the
    offending record number on malformed input."""
    path = Path(path)
    emb_dir = Path(embedding_dir) if embedding_dir is not None else None
    utterances = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"record {lineno}: invalid JSON ({e})") from None
            utterances.append(_parse_record(rec, lineno, emb_dir))
    if not utterances:
        raise CorpusError(f"{path}: empty corpus")
    dims = {u.dim for u in utterances}
    if len(dims) > 1:
        bad = next(u for u in utterances if u.dim != utterances[0].dim)
        raise CorpusError(
            f"record {utterances.index(bad) + 1}: frame dimension {bad.dim} "
            f"differs from corpus dimension {utterances[0].dim}"
        )
    return Corpus(utterances=utterances, dim=utterances[0].dim)


def write_corpus(corpus: Corpus, path: Path | str, embedding_dir: Path | str | None = None) -> None:
    """Write a corpus as JSON-lines. Frames are inlined unless
    ``embedding_dir`` is given, in which case they go to binary files."""
    path = Path(path)
    emb_dir = Path(embedding_dir) if embedding_dir is not None else None
    if emb_dir is not None:
        emb_dir.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for utt in corpus:
            rec: dict = {"id": utt.id}
            if emb_dir is not None:
                fname = f"{utt.id}.fem"
                write_embedding(emb_dir / fname, utt.frames)
                rec["frames_file"] = fname
            else:
                rec["frames"] = utt.frames.tolist()
            rec["nbest"] = [
                {"text": h.text, "log_likelihood": h.log_likelihood} for h in utt.nbest
            ]
            if utt.metadata:
                rec["meta"] = utt.metadata
            f.write(json.dumps(rec) + "\n")
