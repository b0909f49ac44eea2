"""Command line interface: rescore, eer, eval, synth, distance, cluster.

Configuration precedence is flags > config file > defaults, and every run
writes the fully resolved config next to its outputs. Exit codes: 0 on
success, 1 on input errors, 2 on internal invariant violations.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from .clustering import write_clustering_csv
from .corpus import Corpus, CorpusError, load_corpus, write_corpus
from .distance import ALL_METRICS, DistanceMetric, MetricKind, pairwise_distances, write_distance_csv
from .pipeline import GraphLpRescorer, HypothesisClusterer, PipelineConfig
from .scoring import (
    format_comparison_table,
    oracle_nbest_wer,
    score_corpus,
    write_comparison_csv,
)
from .simeval import generate_trials, metric_selection_report, write_metric_report_csv
from .synth import SynthConfig, generate

CLUSTER_SIZE_BANDS = ((1, 5), (6, 10), (11, 50), (51, None))


def _band_name(size: int) -> str:
    for lo, hi in CLUSTER_SIZE_BANDS:
        if hi is None and size >= lo:
            return f"n>{lo - 1}"
        if hi is not None and lo <= size <= hi:
            return f"{lo - 1}<n<={hi}" if lo > 1 else f"n<={hi}"
    raise AssertionError(f"size {size} fits no band")


def _resolve_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        cfg = PipelineConfig.from_file(args.config)
    overrides = {
        key: getattr(args, key)
        for key in (
            "metric",
            "normalized",
            "theta",
            "alpha",
            "n_top",
            "prune_limit",
            "sharing",
            "eps",
            "min_pts",
            "seed",
            "workers",
        )
        if hasattr(args, key)
    }
    return cfg.with_overrides(**overrides)


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args: argparse.Namespace) -> Corpus:
    return load_corpus(args.corpus, getattr(args, "embedding_dir", None))


def _read_choices(path: Path | str) -> tuple[dict[str, str], dict[str, int]]:
    """Read a choice CSV (id, text[, source, cluster])."""
    choices: dict[str, str] = {}
    clusters: dict[str, int] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or "id" not in reader.fieldnames or "text" not in reader.fieldnames:
            raise CorpusError(f"{path}: choice file needs 'id' and 'text' columns")
        for row in reader:
            choices[row["id"]] = row["text"]
            if "cluster" in row and row["cluster"] not in (None, ""):
                clusters[row["id"]] = int(row["cluster"])
    return choices, clusters


def cmd_rescore(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    corpus = _load(args)
    out = _out_dir(args)
    rescorer = GraphLpRescorer(config=cfg).fit(corpus)
    cfg.to_file(out / "resolved_config.json")
    with open(out / "rescored.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "text", "source", "cluster"])
        for utt_id in sorted(rescorer.choices_):
            choice = rescorer.choices_[utt_id]
            w.writerow([utt_id, choice.text, choice.source, rescorer.cluster_of_[utt_id]])
    with open(out / "diagnostics.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["cluster", "size", "iterations", "converged", "n_flipped", "n_shared"])
        for d in rescorer.diagnostics_:
            w.writerow(
                [d["cluster"], d["size"], d["iterations"], int(d["converged"]), d["n_flipped"], d["n_shared"]]
            )
    return 0


def cmd_eer(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    corpus = _load(args)
    out = _out_dir(args)
    trials = generate_trials(corpus, args.n_pos, args.n_neg, cfg.seed)
    rows = metric_selection_report(corpus, trials, list(ALL_METRICS))
    cfg.to_file(out / "resolved_config.json")
    write_metric_report_csv(rows, out / "eer_report.csv")
    if trials.pos_shortfall or trials.neg_shortfall:
        print(
            f"warning: trial shortfall (+{trials.pos_shortfall} pos, +{trials.neg_shortfall} neg)",
            file=sys.stderr,
        )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    corpus = _load(args)
    out = _out_dir(args)
    baseline, _ = _read_choices(args.baseline)
    rescored, clusters = _read_choices(args.rescored)
    corpus_ids = set(corpus.ids)
    if set(baseline) != corpus_ids or set(rescored) != corpus_ids:
        raise CorpusError("choice files do not cover exactly the corpus ids")
    references = {u.id: u.metadata["reference"] for u in corpus}

    groups = {u.id: u.metadata.get(args.group_by, "Others") for u in corpus} if args.group_by else None
    base_report = score_corpus(baseline, references, groups, cfg.casefold, cfg.strip_punct)
    resc_report = score_corpus(rescored, references, groups, cfg.casefold, cfg.strip_punct)
    resc_report.oracle_nbest_wer = oracle_nbest_wer(corpus, cfg.n_top, cfg.casefold, cfg.strip_punct)

    cfg.to_file(out / "resolved_config.json")
    write_comparison_csv(base_report, resc_report, out / "comparison.csv")
    table = format_comparison_table(base_report, resc_report)

    if clusters:
        sizes: dict[int, int] = {}
        for ci in clusters.values():
            if ci >= 0:
                sizes[ci] = sizes.get(ci, 0) + 1
        bands = {
            utt_id: _band_name(sizes[ci]) for utt_id, ci in clusters.items() if ci >= 0
        }
        clustered = sorted(bands)
        base_bands = score_corpus(
            {i: baseline[i] for i in clustered}, references, bands, cfg.casefold, cfg.strip_punct
        )
        resc_bands = score_corpus(
            {i: rescored[i] for i in clustered}, references, bands, cfg.casefold, cfg.strip_punct
        )
        write_comparison_csv(base_bands, resc_bands, out / "comparison_by_cluster_size.csv", "band")
        table += "\n\n" + format_comparison_table(base_bands, resc_bands, "Cluster size band")

    (out / "comparison.txt").write_text(table + "\n")
    print(table)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = SynthConfig()
    if args.config:
        data = json.loads(Path(args.config).read_text())
        known = {f.name for f in dataclasses.fields(SynthConfig)}
        unknown = set(data) - known
        if unknown:
            raise CorpusError(f"unknown synth config fields: {sorted(unknown)}")
        for key in ("group_size_range", "sentence_len_range", "frames_per_word_range"):
            if key in data:
                data[key] = tuple(data[key])
        cfg = SynthConfig(**data)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.n_groups is not None:
        cfg.n_groups = args.n_groups
    try:
        cfg.validate()
    except ValueError as e:
        raise CorpusError(str(e)) from None
    corpus = generate(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_corpus(corpus, out)
    resolved = dataclasses.asdict(cfg)
    Path(str(out) + ".config.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_distance(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    corpus = _load(args)
    out = _out_dir(args)
    metric = DistanceMetric(MetricKind(cfg.metric), cfg.normalized, cfg.dtw_variant)
    if args.ids:
        wanted = args.ids.split(",")
        utts = [corpus.by_id(i) for i in wanted]
    else:
        utts = list(corpus)
    matrix = pairwise_distances(utts, metric)
    cfg.to_file(out / "resolved_config.json")
    write_distance_csv(matrix, [u.id for u in utts], out / "distances.csv")
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    corpus = _load(args)
    out = _out_dir(args)
    clusterer = HypothesisClusterer(
        eps=cfg.eps,
        min_pts=cfg.min_pts,
        eps_grid=cfg.eps_grid,
        min_pts_grid=cfg.min_pts_grid,
        size_lo=cfg.size_lo,
        size_hi=cfg.size_hi,
        casefold=cfg.casefold,
        strip_punct=cfg.strip_punct,
    ).fit(corpus)
    cfg = cfg.with_overrides(eps=clusterer.eps_, min_pts=clusterer.min_pts_)
    cfg.to_file(out / "resolved_config.json")
    write_clustering_csv(clusterer.clustering_, out / "clustering.csv")
    return 0


def _add_common(p: argparse.ArgumentParser, corpus: bool = True) -> None:
    p.add_argument("--config", help="pipeline config JSON file")
    p.add_argument("--out-dir", default=".", help="directory for outputs")
    if corpus:
        p.add_argument("corpus", help="corpus JSON-lines file")
        p.add_argument("--embedding-dir", help="directory with binary frame files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uttrescore",
        description="Cross-utterance N-best rescoring via graph label propagation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rescore", help="cluster a corpus and rescore each cluster")
    _add_common(p)
    p.add_argument("--metric", choices=[k.value for k in MetricKind])
    p.add_argument("--theta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-top", dest="n_top", type=int)
    p.add_argument("--prune-limit", dest="prune_limit", type=int)
    p.add_argument("--sharing", dest="sharing", action="store_true", default=None)
    p.add_argument("--no-sharing", dest="sharing", action="store_false", default=None)
    p.add_argument("--eps", type=float)
    p.add_argument("--min-pts", dest="min_pts", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_rescore)

    p = sub.add_parser("eer", help="EER metric-selection report")
    _add_common(p)
    p.add_argument("--n-pos", dest="n_pos", type=int, default=10000)
    p.add_argument("--n-neg", dest="n_neg", type=int, default=50000)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_eer)

    p = sub.add_parser("eval", help="compare baseline and rescored choices")
    _add_common(p)
    p.add_argument("--baseline", required=True, help="baseline choice CSV (id,text)")
    p.add_argument("--rescored", required=True, help="rescored choice CSV (id,text[,source,cluster])")
    p.add_argument("--group-by", default="accent", help="metadata key for group rows ('' disables)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--config", help="synth config JSON file")
    p.add_argument("--out", required=True, help="output corpus file")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-groups", dest="n_groups", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("distance", help="export a pairwise distance matrix")
    _add_common(p)
    p.add_argument("--metric", choices=[k.value for k in MetricKind])
    p.add_argument("--ids", help="comma-separated utterance ids (default: all)")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("cluster", help="dump the tf-idf/DBSCAN clustering")
    _add_common(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--min-pts", dest="min_pts", type=int)
    p.set_defaults(func=cmd_cluster)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "group_by", None) == "":
        args.group_by = None
    try:
        return args.func(args)
    except (CorpusError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except AssertionError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
