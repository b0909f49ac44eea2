"""Word/sentence error rate scoring and oracle N-best WER."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, normalize_tokens


@dataclass
class EditStats:
    substitutions: int
    deletions: int
    insertions: int
    ref_len: int

    @property
    def distance(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def word_edit(ref: list[str], hyp: list[str]) -> EditStats:
    """Minimal unit-cost word alignment between reference and hypothesis.

    Among cost-minimal alignments, the counts follow the standard DP with
    substitution preferred over an insert+delete pair.
    """
    m, n = len(ref), len(hyp)
    # dp[j] = (cost, subs, dels, ins) best for ref[:i], hyp[:j]
    dp = [(j, 0, 0, j) for j in range(n + 1)]
    for i in range(1, m + 1):
        prev = dp
        dp = [(i, 0, i, 0)] + [None] * n
        for j in range(1, n + 1):
            if ref[i - 1] == hyp[j - 1]:
                dp[j] = prev[j - 1]
                continue
            sc, ss, sd, si = prev[j - 1]
            dc, ds_, dd, di = prev[j]
            ic, is_, id_, ii = dp[j - 1]
            # preference on cost ties: substitution, then deletion, then insertion
            best = (sc + 1, ss + 1, sd, si)
            if dc + 1 < best[0]:
                best = (dc + 1, ds_, dd + 1, di)
            if ic + 1 < best[0]:
                best = (ic + 1, is_, id_, ii + 1)
            dp[j] = best
    cost, subs, dels, ins = dp[n]
    assert cost == subs + dels + ins
    return EditStats(substitutions=subs, deletions=dels, insertions=ins, ref_len=m)


@dataclass
class GroupScore:
    n_utts: int = 0
    n_ref_words: int = 0
    n_errors: int = 0
    n_err_utts: int = 0

    def add(self, stats: EditStats) -> None:
        self.n_utts += 1
        self.n_ref_words += stats.ref_len
        self.n_errors += stats.distance
        if stats.distance > 0:
            self.n_err_utts += 1

    @property
    def wer(self) -> float:
        if self.n_ref_words == 0:
            return float("nan") if self.n_errors else 0.0
        return self.n_errors / self.n_ref_words

    @property
    def ser(self) -> float:
        return self.n_err_utts / self.n_utts if self.n_utts else 0.0


@dataclass
class EvalReport:
    overall: GroupScore
    per_group: dict[str, GroupScore] = field(default_factory=dict)
    oracle_nbest_wer: float | None = None


def score_corpus(
    choices: dict[str, str],
    references: dict[str, str],
    groups: dict[str, str] | None = None,
    casefold: bool = True,
    strip_punct: bool = True,
) -> EvalReport:
    """Aggregate WER/SER for per-utterance hypothesis choices against
    references, optionally broken down by group ("Others" when unmapped)."""
    overall = GroupScore()
    per_group: dict[str, GroupScore] = {}
    for utt_id in choices:
        if utt_id not in references:
            raise ValueError(f"utterance {utt_id!r} has no reference")
        ref = normalize_tokens(references[utt_id], casefold, strip_punct)
        hyp = normalize_tokens(choices[utt_id], casefold, strip_punct)
        stats = word_edit(ref, hyp)
        overall.add(stats)
        if groups is not None:
            group = groups.get(utt_id, "Others")
            per_group.setdefault(group, GroupScore()).add(stats)
    return EvalReport(overall=overall, per_group=per_group)


def oracle_nbest_wer(
    corpus: Corpus, n: int, casefold: bool = True, strip_punct: bool = True
) -> float:
    """WER attainable by always picking the best of each utterance's top-n
    hypotheses (ties go to the higher-ranked one)."""
    total = GroupScore()
    for utt in corpus:
        if utt.reference is None:
            raise ValueError(f"utterance {utt.id!r} has no reference")
        ref = normalize_tokens(utt.reference, casefold, strip_punct)
        best = None
        for hyp in utt.nbest[:n]:
            stats = word_edit(ref, normalize_tokens(hyp.text, casefold, strip_punct))
            if best is None or stats.distance < best.distance:
                best = stats
        total.add(best)
    return total.wer


def write_report_csv(report: EvalReport, path: Path | str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["group", "n_utterances", "n_ref_words", "wer_percent", "ser_percent"])
        for name in sorted(report.per_group):
            g = report.per_group[name]
            w.writerow([name, g.n_utts, g.n_ref_words, repr(g.wer * 100), repr(g.ser * 100)])
        o = report.overall
        w.writerow(["Overall", o.n_utts, o.n_ref_words, repr(o.wer * 100), repr(o.ser * 100)])


def format_comparison_table(
    baseline: EvalReport, rescored: EvalReport, group_header: str = "Group"
) -> str:
    """Human-readable side-by-side table (group, #utts, baseline WER/SER,
    rescored WER/SER)."""
    rows = []
    names = sorted(set(baseline.per_group) | set(rescored.per_group))
    for name in names + ["Overall"]:
        if name == "Overall":
            b, r = baseline.overall, rescored.overall
        else:
            b = baseline.per_group.get(name, GroupScore())
            r = rescored.per_group.get(name, GroupScore())
        rows.append(
            (name, b.n_utts, b.wer * 100, b.ser * 100, r.wer * 100, r.ser * 100)
        )
    header = f"{group_header:<20} {'#Utts':>7} {'Base WER':>9} {'Base SER':>9} {'LP WER':>9} {'LP SER':>9}"
    lines = [header, "-" * len(header)]
    for name, n, bw, bs, rw, rs in rows:
        lines.append(f"{name:<20} {n:>7} {bw:>9.2f} {bs:>9.2f} {rw:>9.2f} {rs:>9.2f}")
    return "\n".join(lines)


def write_comparison_csv(
    baseline: EvalReport, rescored: EvalReport, path: Path | str, group_header: str = "group"
) -> None:
    names = sorted(set(baseline.per_group) | set(rescored.per_group))
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            [group_header, "n_utterances", "baseline_wer", "baseline_ser", "rescored_wer", "rescored_ser"]
        )
        for name in names + ["Overall"]:
            if name == "Overall":
                b, r = baseline.overall, rescored.overall
            else:
                b = baseline.per_group.get(name, GroupScore())
                r = rescored.per_group.get(name, GroupScore())
            w.writerow(
                [name, b.n_utts, repr(b.wer * 100), repr(b.ser * 100), repr(r.wer * 100), repr(r.ser * 100)]
            )
