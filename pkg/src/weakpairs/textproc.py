"""Tweet text cleaning, word-level tokenization, and vocabulary handling.

Cleaning lowercases, strips URLs (``https?://\\S+``) and @-mentions
(``@\\w+``), collapses every run of unicode whitespace to a single space and
trims the ends.  Removal is iterated to a fixpoint so that cleaning is
idempotent even when stripping one pattern uncovers another (e.g.
``http@x://y``).
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

URL_RE = re.compile(r"https?://\S+")
MENTION_RE = re.compile(r"@\w+")
WHITESPACE_RE = re.compile(r"\s+")
# a token is a run of word characters, or a single punctuation character
TOKEN_RE = re.compile(r"\w+|[^\w\s]")

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1


def clean(text: str) -> str:
    """Normalize raw tweet text for pairing and encoding."""
    text = text.lower()
    previous = None
    while previous != text:
        previous = text
        text = URL_RE.sub("", text)
        text = MENTION_RE.sub("", text)
    text = WHITESPACE_RE.sub(" ", text)
    return text.strip()


def tokenize(text: str) -> list[str]:
    """Split cleaned text into word tokens, peeling punctuation off as single-char tokens."""
    return TOKEN_RE.findall(text)


@dataclass
class Vocabulary:
    """Token-to-id table with PAD=0 and UNK=1 always present.

    ``tokens`` is the full ordered list including the two specials, so the
    position of a token is its id.
    """

    tokens: list[str]
    max_size: int
    token_to_id: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.tokens[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise ValueError("vocabulary must start with the PAD and UNK specials")
        self.token_to_id = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.token_to_id) != len(self.tokens):
            raise ValueError("vocabulary contains duplicate tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def id_for(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def to_json(self) -> str:
        return json.dumps({"tokens": self.tokens, "max_size": self.max_size})

    @classmethod
    def from_json(cls, payload: str) -> "Vocabulary":
        raw = json.loads(payload)
        return cls(tokens=list(raw["tokens"]), max_size=int(raw["max_size"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_vocab(corpus: Iterable[str], max_size: int) -> Vocabulary:
    """Build a vocabulary from cleaned training text.

    The ``max_size - 2`` most frequent tokens get ids 2 upward; frequency ties
    break lexicographically so the result is deterministic.  Texts equal to
    the special token strings are never counted.
    """
    if max_size < 2:
        raise ValueError(f"max_size must be >= 2, got {max_size}")
    counts: Counter[str] = Counter()
    for text in corpus:
        for token in tokenize(text):
            if token not in (PAD_TOKEN, UNK_TOKEN):
                counts[token] += 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    kept = [token for token, _ in ranked[: max_size - 2]]
    return Vocabulary(tokens=[PAD_TOKEN, UNK_TOKEN] + kept, max_size=max_size)


def encode_ids(vocab: Vocabulary, text: str, max_len: int = 64) -> list[int]:
    """Map cleaned text to token ids, truncated to ``max_len``.

    Empty text maps to a single UNK id so downstream mean pooling always has
    at least one token to average.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    ids = [vocab.id_for(token) for token in tokenize(text)[:max_len]]
    return ids if ids else [UNK_ID]
