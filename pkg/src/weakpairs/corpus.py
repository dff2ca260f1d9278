"""Build training pair corpora and held-out ranking benchmarks from relation edges.

Four pair corpora exist: ``qt`` (quoted tweet, quote), ``rp`` (tweet, reply),
``coqt`` (two quotes of the same tweet) and ``corp`` (two replies of the same
tweet).  Each target tweet contributes at most one pair per corpus, which
keeps viral tweets from dominating.  The matching ranking benchmarks are
``dq``, ``dr`` (query = target tweet, candidates = its responses) and ``cq``,
``cr`` (query = one response, positives = co-responses).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError
from .ingest import QUOTE, REPLY, RelationEdge, escape_field, unescape_field
from .textproc import clean

MIN_CHARS = 20

PAIR_DATASETS = ("qt", "rp", "coqt", "corp")
BENCHMARK_NAMES = ("dq", "dr", "cq", "cr")

# each pair corpus / benchmark draws on one underlying relation kind
_RELATION_FOR = {
    "qt": QUOTE,
    "rp": REPLY,
    "coqt": QUOTE,
    "corp": REPLY,
    "dq": QUOTE,
    "dr": REPLY,
    "cq": QUOTE,
    "cr": REPLY,
}

POSITIVES_PER_QUERY = 5
NEGATIVES_PER_QUERY = 25


@dataclass
class PairExample:
    """One weakly-similar training pair of cleaned texts."""

    anchor_text: str
    positive_text: str
    dataset: str
    anchor_id: str
    positive_id: str


@dataclass
class BenchmarkQuery:
    query_text: str
    positives: list[str]
    negatives: list[str]
    involved_ids: set[str] = field(default_factory=set)


@dataclass
class RankingBenchmark:
    name: str
    queries: list[BenchmarkQuery]

    def involved_ids(self) -> set[str]:
        ids: set[str] = set()
        for query in self.queries:
            ids |= query.involved_ids
        return ids


def _valid_cleaned(text: str | None) -> str | None:
    if not text:
        return None
    cleaned = clean(text)
    return cleaned if len(cleaned) >= MIN_CHARS else None


def build_pairs(edges: Iterable[RelationEdge], kind: str, seed: int) -> list[PairExample]:
    """Build direct pairs (anchor = target text, positive = response text).

    Texts are cleaned first and pairs with either side shorter than 20
    characters are dropped.  When several responses survive for one target,
    exactly one is chosen uniformly at random under the seed.
    """
    if kind not in ("qt", "rp"):
        raise ValueError(f"kind must be 'qt' or 'rp', got {kind!r}")
    relation = _RELATION_FOR[kind]
    by_target: dict[str, list[tuple[str, str, str]]] = {}
    for edge in edges:
        if edge.kind != relation:
            continue
        anchor = _valid_cleaned(edge.target_text)
        positive = _valid_cleaned(edge.response_text)
        if anchor is None or positive is None:
            continue
        by_target.setdefault(edge.target_id, []).append((edge.response_id, anchor, positive))
    rng = random.Random(seed)
    pairs = []
    for target_id in sorted(by_target):
        candidates = sorted(by_target[target_id])
        response_id, anchor, positive = candidates[rng.randrange(len(candidates))]
        pairs.append(
            PairExample(
                anchor_text=anchor,
                positive_text=positive,
                dataset=kind,
                anchor_id=target_id,
                positive_id=response_id,
            )
        )
    return pairs


def build_co_pairs(edges: Iterable[RelationEdge], kind: str, seed: int) -> list[PairExample]:
    """Build co-response pairs: two distinct responses to the same target.

    Only targets with at least two surviving responses yield a pair, and each
    target yields exactly one; anchor/positive order is the draw order.
    """
    if kind not in ("coqt", "corp"):
        raise ValueError(f"kind must be 'coqt' or 'corp', got {kind!r}")
    relation = _RELATION_FOR[kind]
    by_target: dict[str, dict[str, str]] = {}
    for edge in edges:
        if edge.kind != relation:
            continue
        text = _valid_cleaned(edge.response_text)
        if text is None:
            continue
        by_target.setdefault(edge.target_id, {}).setdefault(edge.response_id, text)
    rng = random.Random(seed)
    pairs = []
    for target_id in sorted(by_target):
        responses = sorted(by_target[target_id].items())
        if len(responses) < 2:
            continue
        (a_id, a_text), (p_id, p_text) = rng.sample(responses, 2)
        pairs.append(
            PairExample(
                anchor_text=a_text,
                positive_text=p_text,
                dataset=kind,
                anchor_id=a_id,
                positive_id=p_id,
            )
        )
    return pairs


def sample_corpus(pairs: Sequence[PairExample], n: int, seed: int) -> list[PairExample]:
    """Uniform sample of n pairs without replacement; output order is the shuffled draw order."""
    if n < 0:
        raise ValueError(f"sample size must be >= 0, got {n}")
    if n > len(pairs):
        raise DataError(f"requested {n} pairs but only {len(pairs)} are available")
    return random.Random(seed).sample(list(pairs), n)


def exclude_ids(pairs: Iterable[PairExample], banned: set[str]) -> list[PairExample]:
    """Drop every pair that touches a banned tweet id on either side."""
    return [p for p in pairs if p.anchor_id not in banned and p.positive_id not in banned]


def _response_pools(
    edges: Iterable[RelationEdge], relation: str, banned: set[str]
) -> tuple[dict[str, list[tuple[str, str]]], dict[str, str]]:
    """Per-target response candidates (text-deduplicated) plus cleaned target texts."""
    raw: dict[str, dict[str, str]] = {}
    target_texts: dict[str, str] = {}
    for edge in edges:
        if edge.kind != relation or edge.response_id in banned:
            continue
        text = _valid_cleaned(edge.response_text)
        if text is None:
            continue
        raw.setdefault(edge.target_id, {}).setdefault(edge.response_id, text)
        if edge.target_id not in target_texts:
            anchor = _valid_cleaned(edge.target_text)
            if anchor is not None:
                target_texts[edge.target_id] = anchor
    pools: dict[str, list[tuple[str, str]]] = {}
    for target_id, responses in raw.items():
        seen_texts: set[str] = set()
        unique: list[tuple[str, str]] = []
        for response_id, text in sorted(responses.items()):
            if text not in seen_texts:
                seen_texts.add(text)
                unique.append((response_id, text))
        pools[target_id] = unique
    return pools, target_texts


def build_benchmark(
    edges: Iterable[RelationEdge],
    name: str,
    num_queries: int,
    seed: int,
    banned: set[str] | frozenset[str] = frozenset(),
) -> RankingBenchmark:
    """Assemble a held-out ranking benchmark of 5-positive / 25-negative queries.

    For ``dq``/``dr`` the query is a target tweet and positives are its own
    responses; for ``cq``/``cr`` the query is itself a response and positives
    are five co-responses of the same target.  Negatives always come from
    responses of other targets.  Within one query no candidate text repeats
    and no negative duplicates the query text.  Ids listed in ``banned``
    (e.g. from previously built benchmarks) never appear.
    """
    if name not in BENCHMARK_NAMES:
        raise ValueError(f"benchmark name must be one of {BENCHMARK_NAMES}, got {name!r}")
    banned = set(banned)
    relation = _RELATION_FOR[name]
    co_style = name in ("cq", "cr")
    need = POSITIVES_PER_QUERY + (1 if co_style else 0)

    pools, target_texts = _response_pools(edges, relation, banned)
    eligible = []
    for target_id in sorted(pools):
        if len(pools[target_id]) < need:
            continue
        if not co_style and (target_id in banned or target_id not in target_texts):
            continue
        eligible.append(target_id)
    if len(eligible) < num_queries:
        raise DataError(
            f"benchmark {name}: need {num_queries} queries but only {len(eligible)} "
            f"eligible targets (>= {need} distinct valid responses required)"
        )

    rng = random.Random(seed)
    chosen = rng.sample(eligible, num_queries)
    all_candidates = [
        (target_id, response_id, text)
        for target_id in sorted(pools)
        for response_id, text in pools[target_id]
    ]

    queries = []
    for target_id in chosen:
        involved: set[str] = set()
        if co_style:
            picks = rng.sample(pools[target_id], need)
            query_id, query_text = picks[0]
            positives = picks[1:]
            involved.add(query_id)
        else:
            query_text = target_texts[target_id]
            positives = rng.sample(pools[target_id], POSITIVES_PER_QUERY)
            involved.add(target_id)

        used_texts = {text for _, text in positives} | {query_text}
        negatives: list[tuple[str, str]] = []
        for cand_target, cand_id, cand_text in rng.sample(all_candidates, len(all_candidates)):
            if len(negatives) == NEGATIVES_PER_QUERY:
                break
            if cand_target == target_id or cand_text in used_texts:
                continue
            negatives.append((cand_id, cand_text))
            used_texts.add(cand_text)
        if len(negatives) < NEGATIVES_PER_QUERY:
            raise DataError(
                f"benchmark {name}: query target {target_id} found only "
                f"{len(negatives)} of {NEGATIVES_PER_QUERY} negatives"
            )

        involved.update(rid for rid, _ in positives)
        involved.update(rid for rid, _ in negatives)
        queries.append(
            BenchmarkQuery(
                query_text=query_text,
                positives=[text for _, text in positives],
                negatives=[text for _, text in negatives],
                involved_ids=involved,
            )
        )
    return RankingBenchmark(name=name, queries=queries)


# --- on-disk formats ---------------------------------------------------------


def write_pairs(pairs: Iterable[PairExample], path: str | Path) -> int:
    """Pair file: TSV of anchor_id, positive_id, dataset, anchor_text, positive_text."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for pair in pairs:
            row = (
                pair.anchor_id,
                pair.positive_id,
                pair.dataset,
                escape_field(pair.anchor_text),
                escape_field(pair.positive_text),
            )
            handle.write("\t".join(row) + "\n")
            count += 1
    return count


def read_pairs(path: str | Path) -> list[PairExample]:
    pairs = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise DataError(f"{path}: pair line {lineno} has {len(parts)} fields, expected 5")
            anchor_id, positive_id, dataset, anchor_text, positive_text = parts
            pairs.append(
                PairExample(
                    anchor_text=unescape_field(anchor_text),
                    positive_text=unescape_field(positive_text),
                    dataset=dataset,
                    anchor_id=anchor_id,
                    positive_id=positive_id,
                )
            )
    return pairs


def write_benchmark(bench: RankingBenchmark, path: str | Path) -> int:
    """Benchmark file: JSON-lines, one query object per line."""
    with open(path, "w", encoding="utf-8") as handle:
        for query in bench.queries:
            obj = {
                "query": query.query_text,
                "positives": query.positives,
                "negatives": query.negatives,
                "ids": sorted(query.involved_ids),
            }
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")
    return len(bench.queries)


def read_benchmark(path: str | Path, name: str | None = None) -> RankingBenchmark:
    """Load a benchmark file, validating the 5-positive / 25-negative shape per line."""
    queries = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: benchmark line {lineno}: {exc}") from exc
            if not isinstance(obj, dict) or not isinstance(obj.get("query"), str):
                raise DataError(f"{path}: benchmark line {lineno}: missing query text")
            positives = obj.get("positives")
            negatives = obj.get("negatives")
            if not isinstance(positives, list) or len(positives) != POSITIVES_PER_QUERY:
                raise DataError(
                    f"{path}: benchmark line {lineno}: expected {POSITIVES_PER_QUERY} positives"
                )
            if not isinstance(negatives, list) or len(negatives) != NEGATIVES_PER_QUERY:
                raise DataError(
                    f"{path}: benchmark line {lineno}: expected {NEGATIVES_PER_QUERY} negatives"
                )
            queries.append(
                BenchmarkQuery(
                    query_text=obj["query"],
                    positives=list(positives),
                    negatives=list(negatives),
                    involved_ids=set(obj.get("ids", [])),
                )
            )
    return RankingBenchmark(name=name or Path(path).stem, queries=queries)
