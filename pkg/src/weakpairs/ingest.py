"""Parse archived tweet-stream JSON-lines files and extract quote/reply relations.

Input files hold one JSON object per line (optionally gzip/bzip2 compressed,
detected by extension).  Only a minimal field set is read: ``id_str``,
``text`` (falling back to ``full_text``), ``lang``,
``in_reply_to_status_id_str`` and ``quoted_status.{id_str,text}``; everything
else in the archive objects is ignored.  Malformed lines are tallied, never
fatal.
"""

from __future__ import annotations

import bz2
import gzip
import json
import re
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError

QUOTE = "quote"
REPLY = "reply"


@dataclass
class TweetRecord:
    """One parsed tweet, reduced to the fields the pipeline needs."""

    id: str
    text: str
    lang: str
    reply_to: str | None = None
    quoted_id: str | None = None
    quoted_text: str | None = None


@dataclass
class RelationEdge:
    """A (target, response) link derived from a quote or reply."""

    kind: str
    target_id: str
    response_id: str
    target_text: str | None
    response_text: str


@dataclass
class ParseStats:
    """Line-level accounting for one or more stream files."""

    lines: int = 0
    parsed: int = 0
    filtered_lang: int = 0
    malformed: int = 0
    no_text: int = 0
    duplicate_ids: int = 0

    def add(self, other: "ParseStats") -> None:
        self.lines += other.lines
        self.parsed += other.parsed
        self.filtered_lang += other.filtered_lang
        self.malformed += other.malformed
        self.no_text += other.no_text
        self.duplicate_ids += other.duplicate_ids

    def as_dict(self) -> dict:
        return asdict(self)


def _open_stream(path: Path):
    name = path.name.lower()
    if name.endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8", errors="replace")
    if name.endswith(".bz2"):
        return bz2.open(path, "rt", encoding="utf-8", errors="replace")
    return open(path, "r", encoding="utf-8", errors="replace")


def _record_from_obj(obj: dict) -> TweetRecord | None:
    """Build a TweetRecord from a raw archive object; None for deletion notices."""
    text = obj.get("text")
    if text is None:
        text = obj.get("full_text")
    if text is None:
        return None
    if not isinstance(text, str):
        raise ValueError("text field is not a string")
    tweet_id = obj.get("id_str")
    if tweet_id is None or str(tweet_id) == "":
        raise ValueError("missing id_str")
    reply_to = obj.get("in_reply_to_status_id_str")
    quoted = obj.get("quoted_status")
    quoted_id = quoted_text = None
    if isinstance(quoted, dict):
        quoted_id = quoted.get("id_str")
        quoted_text = quoted.get("text")
        if quoted_text is None:
            quoted_text = quoted.get("full_text")
    return TweetRecord(
        id=str(tweet_id),
        text=text,
        lang=str(obj.get("lang") or ""),
        reply_to=str(reply_to) if reply_to else None,
        quoted_id=str(quoted_id) if quoted_id else None,
        quoted_text=quoted_text if isinstance(quoted_text, str) else None,
    )


def parse_stream_file(path: str | Path, lang_filter: str = "en") -> tuple[list[TweetRecord], ParseStats]:
    """Parse one stream file, keeping records whose ``lang`` equals the filter.

    Line-level JSON errors are counted in the returned stats; an unreadable
    file raises the underlying OSError (which names the path).
    """
    path = Path(path)
    records: list[TweetRecord] = []
    stats = ParseStats()
    with _open_stream(path) as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            stats.lines += 1
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("line is not a JSON object")
                record = _record_from_obj(obj)
            except (json.JSONDecodeError, ValueError):
                stats.malformed += 1
                continue
            if record is None:
                stats.no_text += 1
                continue
            if record.lang != lang_filter:
                stats.filtered_lang += 1
                continue
            stats.parsed += 1
            records.append(record)
    return records, stats


def merge_runs(per_file: Sequence[tuple[list[TweetRecord], ParseStats]]) -> tuple[list[TweetRecord], ParseStats]:
    """Concatenate per-file parses, dropping duplicate ids (first occurrence wins)."""
    seen: set[str] = set()
    merged: list[TweetRecord] = []
    totals = ParseStats()
    for records, stats in per_file:
        totals.add(stats)
        for record in records:
            if record.id in seen:
                totals.duplicate_ids += 1
                continue
            seen.add(record.id)
            merged.append(record)
    return merged, totals


def extract_relations(records: Iterable[TweetRecord]) -> list[RelationEdge]:
    """Emit one Quote edge per quoting record and one Reply edge per replying record.

    A record carrying both relations emits two edges.  Degenerate self-links
    (target equal to response) are skipped to keep the edge invariant intact.
    """
    edges: list[RelationEdge] = []
    for record in records:
        if record.quoted_id and record.quoted_id != record.id:
            edges.append(
                RelationEdge(
                    kind=QUOTE,
                    target_id=record.quoted_id,
                    response_id=record.id,
                    target_text=record.quoted_text,
                    response_text=record.text,
                )
            )
        if record.reply_to and record.reply_to != record.id:
            edges.append(
                RelationEdge(
                    kind=REPLY,
                    target_id=record.reply_to,
                    response_id=record.id,
                    target_text=None,
                    response_text=record.text,
                )
            )
    return edges


def index_records(records: Iterable[TweetRecord]) -> dict[str, TweetRecord]:
    index: dict[str, TweetRecord] = {}
    for record in records:
        index.setdefault(record.id, record)
    return index


def join_reply_targets(
    edges: Iterable[RelationEdge], records_by_id: Mapping[str, TweetRecord]
) -> tuple[list[RelationEdge], int]:
    """Fill reply-edge target texts from the record index.

    Replies do not embed the replied text, so a second pass over the parsed
    records is needed.  Reply edges whose target is absent from the index are
    dropped; the count of dropped edges is returned.  Quote edges pass
    through untouched.
    """
    joined: list[RelationEdge] = []
    dropped = 0
    for edge in edges:
        if edge.kind != REPLY:
            joined.append(edge)
            continue
        target = records_by_id.get(edge.target_id)
        if target is None:
            dropped += 1
            continue
        joined.append(
            RelationEdge(
                kind=REPLY,
                target_id=edge.target_id,
                response_id=edge.response_id,
                target_text=target.text,
                response_text=edge.response_text,
            )
        )
    return joined, dropped


# --- on-disk formats ---------------------------------------------------------

_RECORD_FIELDS = ("id", "text", "lang", "reply_to", "quoted_id", "quoted_text")
_UNESCAPE_RE = re.compile(r"\\[\\tnr]")
_UNESCAPE_MAP = {"\\\\": "\\", "\\t": "\t", "\\n": "\n", "\\r": "\r"}


def escape_field(value: str) -> str:
    """Escape backslashes, tabs and newlines so text survives a TSV round trip."""
    return (
        value.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def unescape_field(value: str) -> str:
    return _UNESCAPE_RE.sub(lambda m: _UNESCAPE_MAP[m.group(0)], value)


def write_records(records: Iterable[TweetRecord], path: str | Path) -> int:
    """Write the intermediate record store: JSON-lines with exactly the six record fields."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(asdict(record), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_records(path: str | Path) -> list[TweetRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                records.append(TweetRecord(**{k: obj.get(k) for k in _RECORD_FIELDS}))
            except (json.JSONDecodeError, TypeError) as exc:
                raise DataError(f"{path}: bad record store line {lineno}: {exc}") from exc
    return records


def write_edges(edges: Iterable[RelationEdge], path: str | Path) -> int:
    """Dump edges as TSV: kind, target_id, response_id, target_text, response_text."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for edge in edges:
            row = (
                edge.kind,
                edge.target_id,
                edge.response_id,
                escape_field(edge.target_text or ""),
                escape_field(edge.response_text),
            )
            handle.write("\t".join(row) + "\n")
            count += 1
    return count


def read_edges(path: str | Path) -> list[RelationEdge]:
    edges = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise DataError(f"{path}: edge line {lineno} has {len(parts)} fields, expected 5")
            kind, target_id, response_id, target_text, response_text = parts
            edges.append(
                RelationEdge(
                    kind=kind,
                    target_id=target_id,
                    response_id=response_id,
                    target_text=unescape_field(target_text) or None,
                    response_text=unescape_field(response_text),
                )
            )
    return edges
