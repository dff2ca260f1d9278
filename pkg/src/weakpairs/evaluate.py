"""Ranking evaluation (nDCG over cosine-ranked candidates) and graded-pair Pearson.

Per ranking query the 30 candidates are sorted by descending cosine
similarity to the query embedding, ties broken by original candidate index
(positives listed before negatives).  nDCG uses the standard base-2 log
discount over the full candidate list unless a cutoff is requested.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import RankingBenchmark
from .encoder import EncoderModel, embed_text
from .errors import DataError, NumericError


@dataclass
class GradedPairDataset:
    """Sentence pairs with human-graded similarity scores in a declared range."""

    pairs: list[tuple[str, str, float]]
    score_range: tuple[float, float] = (0.0, 5.0)
    name: str = "graded"


@dataclass
class EvalReport:
    benchmark: str
    metric: str
    value: float
    per_query: list[float] | None = None
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "benchmark": self.benchmark,
                "metric": self.metric,
                "value": self.value,
                "per_query": self.per_query,
                "meta": self.meta,
            },
            ensure_ascii=False,
        )

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"vector shapes differ: {u.shape} vs {v.shape}")
    norm_u = np.linalg.norm(u)
    norm_v = np.linalg.norm(v)
    if norm_u == 0.0 or norm_v == 0.0:
        raise NumericError("cosine similarity undefined for zero vectors")
    return float(np.dot(u, v) / (norm_u * norm_v))


def dcg(relevances: Sequence[float]) -> float:
    rel = np.asarray(relevances, dtype=np.float64)
    ranks = np.arange(1, rel.size + 1)
    return float(np.sum(rel / np.log2(ranks + 1)))


def ndcg(relevances_in_ranked_order: Sequence[float], at_k: int | None = None) -> float:
    """Normalized discounted cumulative gain of one ranked relevance list."""
    rel = np.asarray(relevances_in_ranked_order, dtype=np.float64)
    if rel.size == 0:
        raise ValueError("empty relevance list")
    if np.any(rel < 0):
        raise ValueError("relevances must be non-negative")
    ideal = np.sort(rel)[::-1]
    if at_k is not None:
        if at_k < 1:
            raise ValueError(f"at_k must be >= 1, got {at_k}")
        rel = rel[:at_k]
        ideal = ideal[:at_k]
    ideal_dcg = dcg(ideal)
    if ideal_dcg == 0.0:
        raise NumericError("nDCG undefined: all relevances are zero")
    return dcg(rel) / ideal_dcg


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation; errors on constant input where it is undefined."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"need two equal-length 1-d sequences, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("need at least 2 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = np.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    if denom == 0.0:
        raise NumericError("Pearson correlation undefined for constant sequences")
    return float(np.sum(dx * dy) / denom)


def rank_candidates(similarities: Sequence[float]) -> list[int]:
    """Indices sorted by descending similarity; ties keep original index order."""
    sims = np.asarray(similarities, dtype=np.float64)
    return list(np.argsort(-sims, kind="stable"))


def eval_ranking(model: EncoderModel, bench: RankingBenchmark, at_k: int | None = None) -> EvalReport:
    """Mean nDCG over a benchmark: candidates ranked by cosine to the query embedding."""
    per_query = []
    for qi, query in enumerate(bench.queries):
        try:
            query_vec = embed_text(model, query.query_text)
            candidates = list(query.positives) + list(query.negatives)
            sims = [cosine_similarity(query_vec, embed_text(model, text)) for text in candidates]
        except (NumericError, ValueError) as exc:
            raise DataError(f"benchmark {bench.name}, query {qi}: {exc}") from exc
        order = rank_candidates(sims)
        relevances = [1.0 if idx < len(query.positives) else 0.0 for idx in order]
        per_query.append(ndcg(relevances, at_k=at_k))
    if not per_query:
        raise DataError(f"benchmark {bench.name} has no queries")
    return EvalReport(
        benchmark=bench.name,
        metric="ndcg",
        value=float(np.mean(per_query)),
        per_query=per_query,
        meta={"queries": len(per_query), "at_k": at_k},
    )


def eval_graded(model: EncoderModel, data: GradedPairDataset) -> EvalReport:
    """Pearson's r between cosine similarities and the gold graded scores."""
    predicted = []
    gold = []
    for text1, text2, score in data.pairs:
        predicted.append(cosine_similarity(embed_text(model, text1), embed_text(model, text2)))
        gold.append(score)
    return EvalReport(
        benchmark=data.name,
        metric="pearson",
        value=pearson(predicted, gold),
        per_query=None,
        meta={"pairs": len(gold), "score_range": list(data.score_range)},
    )


def permutation_ndcg_baseline(
    num_positives: int = 5, num_negatives: int = 25, draws: int = 10_000, seed: int = 0
) -> float:
    """Monte-Carlo mean nDCG of uniformly random rankings of the benchmark shape."""
    rng = random.Random(seed)
    rel = [1.0] * num_positives + [0.0] * num_negatives
    total = 0.0
    for _ in range(draws):
        rng.shuffle(rel)
        total += ndcg(rel)
    return total / draws


def load_graded_tsv(
    path: str | Path, score_range: tuple[float, float] = (0.0, 5.0), name: str | None = None
) -> GradedPairDataset:
    """Read a graded-pair file: plain TSV rows of text1, text2, score."""
    path = Path(path)
    lo, hi = score_range
    pairs = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}: graded line {lineno} has {len(parts)} fields, expected 3")
            try:
                score = float(parts[2])
            except ValueError as exc:
                raise DataError(f"{path}: graded line {lineno}: bad score {parts[2]!r}") from exc
            if not lo <= score <= hi:
                raise DataError(
                    f"{path}: graded line {lineno}: score {score} outside declared range [{lo}, {hi}]"
                )
            pairs.append((parts[0], parts[1], score))
    if len(pairs) < 2:
        raise DataError(f"{path}: need at least 2 graded pairs, got {len(pairs)}")
    if len({score for _, _, score in pairs}) < 2:
        raise DataError(f"{path}: gold scores are constant; Pearson is undefined")
    return GradedPairDataset(pairs=pairs, score_range=score_range, name=name or path.stem)
