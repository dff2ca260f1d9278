"""Command-line pipeline: synth, ingest, build, train, eval, sweep.

Every subcommand is deterministic under ``--seed``: stage-level seeds are
derived from the master seed by stable hashing of stage names, and each run
writes a manifest (resolved settings, inputs, output hashes) next to its
outputs.  Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import glob
import hashlib
import json
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import corpus as corpus_mod
from . import encoder as encoder_mod
from . import evaluate as eval_mod
from . import ingest as ingest_mod
from . import optim as optim_mod
from . import synth as synth_mod
from .errors import DataError, NumericError, UsageError
from .textproc import build_vocab

BENCH_FOR_DATASET = {"qt": "dq", "rp": "dr", "coqt": "cq", "corp": "cr"}

CONFIG_DEFAULTS: dict[str, object] = {
    # training
    "loss": optim_mod.MULTIPLE_NEGATIVES,
    "margin": 1.0,
    "scale": 20.0,
    "similarity": "cosine",
    "batch_size": 50,
    "learning_rate": 1e-3,
    "warmup_fraction": 0.10,
    "epochs": 1,
    "weight_decay": 0.01,
    # encoder
    "dim": 64,
    "use_block": True,
    "normalize_output": False,
    "max_len": 64,
    "vocab_size": 2000,
}

_TRAIN_KEYS = (
    "loss",
    "margin",
    "scale",
    "similarity",
    "batch_size",
    "learning_rate",
    "warmup_fraction",
    "epochs",
    "weight_decay",
)


def derive_seed(master_seed: int, stage: str) -> int:
    """Stable per-stage seed: one master seed controls the whole experiment."""
    digest = hashlib.sha256(f"{master_seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    directory: Path,
    subcommand: str,
    settings: dict,
    inputs: list[str],
    outputs: list[Path],
    seed: int,
) -> Path:
    manifest = {
        "subcommand": subcommand,
        "seed": seed,
        "settings": settings,
        "inputs": sorted(str(p) for p in inputs),
        "outputs": [
            {"path": str(p), "sha256": _sha256_file(Path(p))} for p in sorted(outputs, key=str)
        ],
        "created": datetime.now(timezone.utc).isoformat(),
    }
    path = directory / f"manifest_{subcommand}.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


# --- config handling ----------------------------------------------------------


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` config; '#' starts a comment, blank lines ignored."""
    values: dict[str, str] = {}
    problems: list[str] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            problems.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    if problems:
        raise UsageError(f"{path}: " + "; ".join(problems))
    return values


def _coerce(key: str, raw: object, problems: list[str]):
    default = CONFIG_DEFAULTS[key]
    if isinstance(raw, str):
        try:
            if isinstance(default, bool):
                lowered = raw.lower()
                if lowered in ("true", "1", "yes", "on"):
                    return True
                if lowered in ("false", "0", "no", "off"):
                    return False
                raise ValueError(f"not a boolean: {raw!r}")
            if isinstance(default, int):
                return int(raw)
            if isinstance(default, float):
                return float(raw)
        except ValueError as exc:
            problems.append(f"{key}: {exc}")
            return default
        return raw
    return raw


def resolve_settings(
    config_path: str | Path | None, overrides: dict[str, object], seed: int
) -> dict[str, object]:
    """Merge defaults, config file, and CLI overrides; report every problem at once."""
    problems: list[str] = []
    settings = dict(CONFIG_DEFAULTS)
    if config_path is not None:
        for key, raw in parse_config_file(config_path).items():
            if key not in CONFIG_DEFAULTS:
                problems.append(f"unknown config key {key!r} (valid: {', '.join(sorted(CONFIG_DEFAULTS))})")
                continue
            settings[key] = _coerce(key, raw, problems)
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in CONFIG_DEFAULTS:
            problems.append(f"unknown override {key!r}")
            continue
        settings[key] = _coerce(key, value, problems)

    train_config = optim_mod.TrainConfig(
        **{k: settings[k] for k in _TRAIN_KEYS}, seed=derive_seed(seed, "train")
    )
    problems.extend(train_config.validate())
    if settings["dim"] < 2:
        problems.append(f"dim must be >= 2; got {settings['dim']}")
    if settings["max_len"] < 1:
        problems.append(f"max_len must be >= 1; got {settings['max_len']}")
    if settings["vocab_size"] < 2:
        problems.append(f"vocab_size must be >= 2; got {settings['vocab_size']}")
    if problems:
        raise UsageError("invalid configuration: " + "; ".join(problems))
    settings["_train_config"] = train_config
    return settings


# --- subcommands ---------------------------------------------------------------


def cmd_synth(args) -> int:
    records = synth_mod.generate_records(
        topics=args.topics,
        pairs_per_topic=args.pairs_per_topic,
        vocab_size=args.vocab_size,
        noise=args.noise,
        seed=derive_seed(args.seed, "synth"),
        responses_per_target=args.responses_per_target,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    count = synth_mod.write_store(records, out)
    write_manifest(
        out.parent,
        "synth",
        {
            "topics": args.topics,
            "pairs_per_topic": args.pairs_per_topic,
            "vocab_size": args.vocab_size,
            "noise": args.noise,
            "responses_per_target": args.responses_per_target,
        },
        inputs=[],
        outputs=[out],
        seed=args.seed,
    )
    print(f"synth: wrote {count} records to {out}")
    return 0


def cmd_ingest(args) -> int:
    paths = sorted({p for pattern in args.inputs for p in glob.glob(pattern)})
    if not paths:
        raise UsageError(f"no input files match {args.inputs}")
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            parses = list(pool.map(lambda p: ingest_mod.parse_stream_file(p, args.lang), paths))
    else:
        parses = [ingest_mod.parse_stream_file(p, args.lang) for p in paths]
    records, totals = ingest_mod.merge_runs(parses)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    ingest_mod.write_records(records, out)
    stats = {
        "per_file": {path: parse[1].as_dict() for path, parse in zip(paths, parses)},
        "totals": totals.as_dict(),
        "records_kept": len(records),
    }
    stats_path = out.with_suffix(out.suffix + ".stats.json")
    stats_path.write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
    write_manifest(
        out.parent,
        "ingest",
        {"lang": args.lang, "threads": args.threads},
        inputs=paths,
        outputs=[out, stats_path],
        seed=args.seed,
    )
    print(
        f"ingest: {len(records)} records from {len(paths)} files "
        f"(malformed {totals.malformed}, filtered {totals.filtered_lang}, "
        f"duplicates {totals.duplicate_ids})"
    )
    return 0


def cmd_build(args) -> int:
    records = ingest_mod.read_records(args.records)
    edges = ingest_mod.extract_relations(records)
    edges, dropped_replies = ingest_mod.join_reply_targets(edges, ingest_mod.index_records(records))

    datasets = list(corpus_mod.PAIR_DATASETS) if args.dataset == "all" else [args.dataset]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []
    counts: dict[str, object] = {"dropped_unresolved_replies": dropped_replies}

    if args.edges_out:
        edges_path = Path(args.edges_out)
        edges_path.parent.mkdir(parents=True, exist_ok=True)
        counts["edges_written"] = ingest_mod.write_edges(edges, edges_path)
        outputs.append(edges_path)

    banned: set[str] = set()
    if args.bench_queries > 0:
        for dataset in datasets:
            name = BENCH_FOR_DATASET[dataset]
            bench = corpus_mod.build_benchmark(
                edges,
                name,
                num_queries=args.bench_queries,
                seed=derive_seed(args.seed, f"bench:{name}"),
                banned=banned,
            )
            banned |= bench.involved_ids()
            bench_path = out_dir / f"bench_{name}.jsonl"
            corpus_mod.write_benchmark(bench, bench_path)
            outputs.append(bench_path)
            counts[f"bench_{name}_queries"] = len(bench.queries)

    all_pairs: list[corpus_mod.PairExample] = []
    for dataset in datasets:
        if dataset in ("qt", "rp"):
            pairs = corpus_mod.build_pairs(edges, dataset, seed=derive_seed(args.seed, f"pairs:{dataset}"))
        else:
            pairs = corpus_mod.build_co_pairs(edges, dataset, seed=derive_seed(args.seed, f"pairs:{dataset}"))
        pairs = corpus_mod.exclude_ids(pairs, banned)
        counts[f"{dataset}_available"] = len(pairs)
        if args.pairs_per_dataset is not None:
            pairs = corpus_mod.sample_corpus(
                pairs, args.pairs_per_dataset, seed=derive_seed(args.seed, f"sample:{dataset}")
            )
        pair_path = out_dir / f"pairs_{dataset}.tsv"
        corpus_mod.write_pairs(pairs, pair_path)
        outputs.append(pair_path)
        counts[f"{dataset}_written"] = len(pairs)
        all_pairs.extend(pairs)

    if args.dataset == "all":
        all_path = out_dir / "pairs_all.tsv"
        corpus_mod.write_pairs(all_pairs, all_path)
        outputs.append(all_path)
        counts["all_written"] = len(all_pairs)

    counts_path = out_dir / "build_counts.json"
    counts_path.write_text(json.dumps(counts, indent=2) + "\n", encoding="utf-8")
    outputs.append(counts_path)
    write_manifest(
        out_dir,
        "build",
        {
            "dataset": args.dataset,
            "pairs_per_dataset": args.pairs_per_dataset,
            "bench_queries": args.bench_queries,
        },
        inputs=[args.records],
        outputs=outputs,
        seed=args.seed,
    )
    print(f"build: {json.dumps(counts)}")
    return 0


def _train_overrides(args) -> dict[str, object]:
    return {
        "loss": args.loss,
        "margin": args.margin,
        "scale": args.scale,
        "similarity": args.similarity,
        "batch_size": args.batch_size,
        "learning_rate": args.learning_rate,
        "warmup_fraction": args.warmup_fraction,
        "epochs": args.epochs,
        "weight_decay": args.weight_decay,
        "dim": args.dim,
        "use_block": args.use_block,
        "normalize_output": args.normalize_output,
        "max_len": args.max_len,
        "vocab_size": args.vocab_size,
    }


def cmd_train(args) -> int:
    settings = resolve_settings(args.config, _train_overrides(args), args.seed)
    train_config: optim_mod.TrainConfig = settings["_train_config"]

    pairs = corpus_mod.read_pairs(args.pairs)
    texts = [p.anchor_text for p in pairs] + [p.positive_text for p in pairs]
    vocab = build_vocab(texts, max_size=settings["vocab_size"])
    model = encoder_mod.init_model(
        vocab,
        dim=settings["dim"],
        use_block=settings["use_block"],
        seed=derive_seed(args.seed, "encoder-init"),
        normalize_output=settings["normalize_output"],
        max_len=settings["max_len"],
    )
    model, log = optim_mod.train(model, pairs, train_config)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    encoder_mod.save_checkpoint(model, out)
    log_path = out.with_suffix(out.suffix + ".log.jsonl")
    with open(log_path, "w", encoding="utf-8") as handle:
        for entry in log:
            handle.write(json.dumps(entry) + "\n")
    public = {k: v for k, v in settings.items() if not k.startswith("_")}
    write_manifest(
        out.parent,
        "train",
        public,
        inputs=[args.pairs] + ([args.config] if args.config else []),
        outputs=[out, log_path],
        seed=args.seed,
    )
    losses = [entry["loss"] for entry in log]
    print(
        f"train: {len(log)} steps on {len(pairs)} pairs; "
        f"first-batch loss {losses[0]:.4f}, last-batch loss {losses[-1]:.4f}; checkpoint {out}"
    )
    return 0


def _config_hash(model: encoder_mod.EncoderModel) -> str:
    blob = json.dumps(
        {
            "dim": model.dim,
            "use_block": model.use_block,
            "normalize_output": model.normalize_output,
            "max_len": model.max_len,
            "vocab": len(model.vocab),
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def cmd_eval(args) -> int:
    model = encoder_mod.load_checkpoint(args.checkpoint)
    checkpoint_id = _sha256_file(Path(args.checkpoint))[:12]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    rows = []
    for input_path in args.inputs:
        path = Path(input_path)
        if path.suffix == ".jsonl":
            bench = corpus_mod.read_benchmark(path)
            report = eval_mod.eval_ranking(model, bench, at_k=args.at_k)
        elif path.suffix == ".tsv":
            data = eval_mod.load_graded_tsv(path)
            report = eval_mod.eval_graded(model, data)
        else:
            raise UsageError(
                f"{path}: cannot infer input type; use .jsonl for ranking benchmarks "
                f"or .tsv for graded pairs"
            )
        report.meta.update(
            {
                "checkpoint": checkpoint_id,
                "config_hash": _config_hash(model),
                "timestamp": datetime.now(timezone.utc).isoformat(),
            }
        )
        report_path = out_dir / f"report_{report.benchmark}.json"
        report.write(report_path)
        outputs.append(report_path)
        rows.append((report.benchmark, report.metric, report.value))

    # table convention: scores reported x100
    width = max(len("benchmark"), max(len(name) for name, _, _ in rows))
    print(f"{'benchmark'.ljust(width)}  metric   value x100")
    for name, metric, value in rows:
        print(f"{name.ljust(width)}  {metric:<8} {100.0 * value:10.1f}")
    write_manifest(
        out_dir,
        "eval",
        {"at_k": args.at_k, "checkpoint": str(args.checkpoint)},
        inputs=[str(args.checkpoint)] + list(args.inputs),
        outputs=outputs,
        seed=args.seed,
    )
    return 0


def cmd_sweep(args) -> int:
    values = args.values
    if len(values) != len(set(values)):
        raise UsageError(f"duplicate sweep values: {values}")
    if values != sorted(values):
        raise UsageError(f"sweep values must be ascending: {values}")

    settings = resolve_settings(args.config, _train_overrides(args), args.seed)
    pool = corpus_mod.read_pairs(args.pairs)
    bench = corpus_mod.read_benchmark(args.benchmark)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # one shuffle, points take prefixes: corpus size stays the only variable
    order = random.Random(derive_seed(args.seed, "sweep-corpus-order")).sample(pool, len(pool))

    def run_point(value: int) -> tuple[float, float | None]:
        if args.axis == "corpus_size":
            if value > len(pool):
                raise DataError(f"sweep value {value} exceeds pair pool of {len(pool)}")
            subset = order[:value]
            batch_size = settings["batch_size"]
        else:
            subset = pool
            batch_size = value
        # the untrained baseline row keeps the full-pool vocab so its
        # embeddings are not degenerate
        vocab_source = subset if value > 0 else pool
        texts = [p.anchor_text for p in vocab_source] + [p.positive_text for p in vocab_source]
        vocab = build_vocab(texts, max_size=settings["vocab_size"])
        model = encoder_mod.init_model(
            vocab,
            dim=settings["dim"],
            use_block=settings["use_block"],
            seed=derive_seed(args.seed, f"sweep:{args.axis}:{value}:init"),
            normalize_output=settings["normalize_output"],
            max_len=settings["max_len"],
        )
        final_loss = None
        if value > 0:
            train_config = optim_mod.TrainConfig(
                **{k: settings[k] for k in _TRAIN_KEYS},
                seed=derive_seed(args.seed, f"sweep:{args.axis}:{value}:train"),
            )
            train_config.batch_size = batch_size
            model, log = optim_mod.train(model, subset, train_config)
            final_loss = log[-1]["loss"]
        report = eval_mod.eval_ranking(model, bench)
        report.meta["sweep"] = {"axis": args.axis, "value": value}
        report.write(out_dir / f"report_{args.axis}_{value}.json")
        return report.value, final_loss

    points = list(values)
    if args.axis == "corpus_size" and args.include_baseline:
        points = [0] + points  # untrained encoder as the floor of the curve

    results = []
    for value in points:
        ndcg_value, final_loss = run_point(value)
        results.append({"axis": args.axis, "value": value, "ndcg": ndcg_value, "final_loss": final_loss})

    summary_path = out_dir / "sweep_summary.csv"
    with open(summary_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=["axis", "value", "ndcg", "final_loss"])
        writer.writeheader()
        writer.writerows(results)

    print(f"{'value':>8}  ndcg x100")
    for row in results:
        print(f"{row['value']:>8}  {100.0 * row['ndcg']:9.1f}")
    write_manifest(
        out_dir,
        "sweep",
        {
            "axis": args.axis,
            "values": values,
            "include_baseline": args.include_baseline,
            **{k: v for k, v in settings.items() if not k.startswith("_")},
        },
        inputs=[args.pairs, args.benchmark] + ([args.config] if args.config else []),
        outputs=[summary_path],
        seed=args.seed,
    )
    return 0


# --- argument parsing -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; usage problems are exit 1 here
        raise UsageError(message)


def _add_train_flags(sub) -> None:
    sub.add_argument("--config", default=None, help="flat key = value config file")
    sub.add_argument("--loss", default=None, choices=optim_mod.LOSS_NAMES)
    sub.add_argument("--margin", default=None, type=float)
    sub.add_argument("--scale", default=None, type=float)
    sub.add_argument("--similarity", default=None, choices=optim_mod.SIMILARITY_MODES)
    sub.add_argument("--batch-size", dest="batch_size", default=None, type=int)
    sub.add_argument("--learning-rate", dest="learning_rate", default=None, type=float)
    sub.add_argument("--warmup-fraction", dest="warmup_fraction", default=None, type=float)
    sub.add_argument("--epochs", default=None, type=int)
    sub.add_argument("--weight-decay", dest="weight_decay", default=None, type=float)
    sub.add_argument("--dim", default=None, type=int)
    sub.add_argument("--use-block", dest="use_block", action="store_true", default=None)
    sub.add_argument("--no-block", dest="use_block", action="store_false")
    sub.add_argument("--normalize-output", dest="normalize_output", action="store_true", default=None)
    sub.add_argument("--max-len", dest="max_len", default=None, type=int)
    sub.add_argument("--vocab-size", dest="vocab_size", default=None, type=int)


def build_parser() -> _Parser:
    parser = _Parser(prog="weakpairs", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="master seed for every stage")
    parser.add_argument("--threads", type=int, default=1, help="file-parse parallelism for ingest")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        default=True,
        help="single-threaded numerics (always on; flag kept for interface stability)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("synth", help="generate a synthetic tweet store")
    p.add_argument("--topics", type=int, required=True)
    p.add_argument("--pairs-per-topic", dest="pairs_per_topic", type=int, required=True)
    p.add_argument("--vocab-size", dest="vocab_size", type=int, default=600)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument(
        "--responses-per-target",
        dest="responses_per_target",
        type=int,
        default=1,
        help="responses per target tweet; >= 6 makes all four benchmarks constructible",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = commands.add_parser("ingest", help="parse stream files into a record store")
    p.add_argument("--inputs", nargs="+", required=True, help="file paths or globs")
    p.add_argument("--lang", default="en")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = commands.add_parser("build", help="build pair corpora and ranking benchmarks")
    p.add_argument("--records", required=True)
    p.add_argument("--dataset", default="all", choices=list(corpus_mod.PAIR_DATASETS) + ["all"])
    p.add_argument(
        "--pairs-per-dataset",
        dest="pairs_per_dataset",
        type=int,
        default=None,
        help="sample size per dataset; omit to keep every available pair",
    )
    p.add_argument("--bench-queries", dest="bench_queries", type=int, default=0)
    p.add_argument(
        "--edges-out",
        dest="edges_out",
        default=None,
        help="also dump the joined relation edges as a TSV",
    )
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_build)

    p = commands.add_parser("train", help="train an encoder on a pair file")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = commands.add_parser("eval", help="evaluate a checkpoint on benchmarks/graded files")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--at-k", dest="at_k", type=int, default=None)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_eval)

    p = commands.add_parser("sweep", help="ablate corpus size or batch size")
    p.add_argument("--axis", required=True, choices=["corpus_size", "batch_size"])
    p.add_argument("--values", type=int, nargs="+", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--benchmark", required=True)
    p.add_argument(
        "--include-baseline",
        dest="include_baseline",
        action="store_true",
        help="also evaluate the untrained encoder (corpus_size axis only)",
    )
    p.add_argument("--out-dir", dest="out_dir", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
