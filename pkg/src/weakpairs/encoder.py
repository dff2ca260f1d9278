"""A small trainable sentence encoder with analytic gradients.

The forward pass is: token-embedding lookup, optionally one self-attention +
feed-forward block (single head, residual connections, no positional
encodings), then a MEAN pool over token positions.  Everything is plain
float64 numpy so gradients can be derived by hand and checked against
central finite differences.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .textproc import PAD_ID, Vocabulary, clean, encode_ids

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1
INIT_SCALE = 0.05

# parameter serialization order; the block matrices are absent when use_block is off
PARAM_ORDER = ("embedding", "w_q", "w_k", "w_v", "w_1", "w_2")


@dataclass
class EncoderModel:
    vocab: Vocabulary
    dim: int
    use_block: bool
    normalize_output: bool
    max_len: int
    params: dict[str, np.ndarray]
    version: int = 0

    def param_names(self) -> tuple[str, ...]:
        return tuple(name for name in PARAM_ORDER if name in self.params)

    def frozen_masks(self) -> dict[str, np.ndarray]:
        """Trainability masks per parameter; the PAD embedding row is frozen."""
        mask = np.ones_like(self.params["embedding"], dtype=bool)
        mask[PAD_ID, :] = False
        return {"embedding": mask}

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(arr) for name, arr in self.params.items()}


@dataclass
class ForwardTrace:
    """Activations captured during encode, sufficient to backpropagate exactly."""

    ids: tuple[int, ...]
    x: np.ndarray
    h2: np.ndarray
    pooled: np.ndarray
    model_version: int
    # block activations (None when the block is off)
    attn: np.ndarray | None = None
    q: np.ndarray | None = None
    k: np.ndarray | None = None
    v: np.ndarray | None = None
    h1: np.ndarray | None = None
    z: np.ndarray | None = None
    # output normalization bookkeeping
    norm: float | None = None
    zero_norm: bool = False


def init_model(
    vocab: Vocabulary,
    dim: int = 64,
    use_block: bool = True,
    seed: int = 0,
    normalize_output: bool = False,
    max_len: int = 64,
) -> EncoderModel:
    """Fresh encoder with parameters drawn i.i.d. uniform in [-0.05, 0.05].

    The PAD embedding row is zeroed and stays frozen for the model's life.
    """
    if dim < 2:
        raise ValueError(f"embedding dimension must be >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {
        "embedding": rng.uniform(-INIT_SCALE, INIT_SCALE, size=(len(vocab), dim))
    }
    if use_block:
        hidden = 2 * dim
        params["w_q"] = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(dim, dim))
        params["w_k"] = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(dim, dim))
        params["w_v"] = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(dim, dim))
        params["w_1"] = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(dim, hidden))
        params["w_2"] = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(hidden, dim))
    params["embedding"][PAD_ID, :] = 0.0
    return EncoderModel(
        vocab=vocab,
        dim=dim,
        use_block=use_block,
        normalize_output=normalize_output,
        max_len=max_len,
        params=params,
    )


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=1, keepdims=True)


def _forward(model: EncoderModel, ids, want_trace: bool):
    ids = tuple(int(i) for i in ids)
    if len(ids) == 0:
        raise ValueError("cannot encode an empty id sequence")
    if len(ids) > model.max_len:
        raise ValueError(f"id sequence of length {len(ids)} exceeds max_len {model.max_len}")
    p = model.params
    x = p["embedding"][list(ids), :]
    attn = q = k = v = h1 = z = None
    if model.use_block:
        q = x @ p["w_q"]
        k = x @ p["w_k"]
        v = x @ p["w_v"]
        attn = _softmax_rows((q @ k.T) / np.sqrt(model.dim))
        h1 = x + attn @ v
        z = h1 @ p["w_1"]
        h2 = h1 + np.maximum(z, 0.0) @ p["w_2"]
    else:
        h2 = x
    pooled = h2.mean(axis=0)
    norm = None
    zero_norm = False
    if model.normalize_output:
        norm = float(np.linalg.norm(pooled))
        if norm > 0.0:
            out = pooled / norm
        else:
            zero_norm = True
            out = pooled.copy()
            logger.warning("normalize_output hit a zero-norm pooled vector; returning zeros")
    else:
        out = pooled
    if not want_trace:
        return out, None
    trace = ForwardTrace(
        ids=ids,
        x=x,
        h2=h2,
        pooled=pooled,
        model_version=model.version,
        attn=attn,
        q=q,
        k=k,
        v=v,
        h1=h1,
        z=z,
        norm=norm,
        zero_norm=zero_norm,
    )
    return out, trace


def encode(model: EncoderModel, ids) -> np.ndarray:
    """Sentence embedding: mean over token positions of the last layer."""
    out, _ = _forward(model, ids, want_trace=False)
    return out


def encode_with_trace(model: EncoderModel, ids) -> tuple[np.ndarray, ForwardTrace]:
    return _forward(model, ids, want_trace=True)


def embed_text(model: EncoderModel, text: str) -> np.ndarray:
    """Text in, sentence vector out: clean, map to ids under the model's vocab, encode.

    Cleaning is idempotent, so already-cleaned pipeline text passes through
    unchanged while raw external text (e.g. graded pair files) gets the same
    normalization the training corpus had.
    """
    return encode(model, encode_ids(model.vocab, clean(text), model.max_len))


def backprop(model: EncoderModel, trace: ForwardTrace, grad_out: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients of <grad_out, embedding> with respect to every parameter.

    Untouched embedding rows get zero gradient and the PAD row is forced to
    zero.  The trace must come from the current parameter version.
    """
    if trace.model_version != model.version:
        raise ValueError(
            f"stale trace: captured at model version {trace.model_version}, "
            f"parameters now at version {model.version}"
        )
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if grad_out.shape != (model.dim,):
        raise ValueError(f"grad_out must have shape ({model.dim},), got {grad_out.shape}")

    grads = model.zero_grads()
    p = model.params
    n_tokens = len(trace.ids)

    if model.normalize_output:
        if trace.zero_norm:
            d_pooled = np.zeros_like(trace.pooled)
        else:
            unit = trace.pooled / trace.norm
            d_pooled = (grad_out - np.dot(grad_out, unit) * unit) / trace.norm
    else:
        d_pooled = grad_out

    # mean pool spreads the gradient evenly over token positions
    d_h2 = np.tile(d_pooled / n_tokens, (n_tokens, 1))

    if model.use_block:
        relu = np.maximum(trace.z, 0.0)
        grads["w_2"] += relu.T @ d_h2
        d_relu = d_h2 @ p["w_2"].T
        d_z = d_relu * (trace.z > 0.0)
        grads["w_1"] += trace.h1.T @ d_z
        d_h1 = d_h2 + d_z @ p["w_1"].T

        d_attn_out = d_h1
        d_attn = d_attn_out @ trace.v.T
        d_v = trace.attn.T @ d_attn_out
        # softmax backward, row-wise
        d_scores = trace.attn * (d_attn - (d_attn * trace.attn).sum(axis=1, keepdims=True))
        scale = 1.0 / np.sqrt(model.dim)
        d_q = (d_scores @ trace.k) * scale
        d_k = (d_scores.T @ trace.q) * scale
        grads["w_q"] += trace.x.T @ d_q
        grads["w_k"] += trace.x.T @ d_k
        grads["w_v"] += trace.x.T @ d_v
        d_x = d_h1 + d_q @ p["w_q"].T + d_k @ p["w_k"].T + d_v @ p["w_v"].T
    else:
        d_x = d_h2

    np.add.at(grads["embedding"], list(trace.ids), d_x)
    grads["embedding"][PAD_ID, :] = 0.0
    return grads


# --- checkpoint format --------------------------------------------------------


def save_checkpoint(model: EncoderModel, path: str | Path) -> None:
    """Write a checkpoint: one JSON header line, then float64 little-endian payload."""
    names = model.param_names()
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "dim": model.dim,
        "use_block": model.use_block,
        "normalize_output": model.normalize_output,
        "max_len": model.max_len,
        "model_version": model.version,
        "vocab": {"tokens": model.vocab.tokens, "max_size": model.vocab.max_size},
        "params": [{"name": name, "shape": list(model.params[name].shape)} for name in names],
    }
    with open(path, "wb") as handle:
        handle.write(json.dumps(header, ensure_ascii=False).encode("utf-8"))
        handle.write(b"\n")
        for name in names:
            handle.write(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> EncoderModel:
    path = Path(path)
    with open(path, "rb") as handle:
        header_line = handle.readline()
        payload = handle.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
        version = header["format_version"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, AttributeError) as exc:
        raise DataError(f"{path}: not a recognizable checkpoint (no format version header)") from exc
    if version != CHECKPOINT_FORMAT_VERSION:
        raise DataError(
            f"{path}: unsupported checkpoint format version {version!r}, "
            f"expected {CHECKPOINT_FORMAT_VERSION}"
        )
    declared = [(entry["name"], tuple(entry["shape"])) for entry in header["params"]]
    expected_bytes = sum(int(np.prod(shape)) * 8 for _, shape in declared)
    if len(payload) != expected_bytes:
        raise DataError(
            f"{path}: parameter payload is {len(payload)} bytes, header declares {expected_bytes}"
        )
    try:
        params: dict[str, np.ndarray] = {}
        offset = 0
        for name, shape in declared:
            size = int(np.prod(shape))
            flat = np.frombuffer(payload, dtype="<f8", count=size, offset=offset)
            params[name] = flat.astype(np.float64).reshape(shape).copy()
            offset += size * 8
        vocab = Vocabulary(
            tokens=list(header["vocab"]["tokens"]), max_size=int(header["vocab"]["max_size"])
        )
        return EncoderModel(
            vocab=vocab,
            dim=int(header["dim"]),
            use_block=bool(header["use_block"]),
            normalize_output=bool(header["normalize_output"]),
            max_len=int(header["max_len"]),
            params=params,
            version=int(header.get("model_version", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed checkpoint contents: {exc}") from exc
