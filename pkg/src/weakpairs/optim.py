"""Training objectives, AdamW, the warm-up/decay schedule and the epoch loop.

Two losses are provided.  The triplet loss hinges on Euclidean distances:
``max(||s_a - s_p|| - ||s_a - s_n|| + margin, 0)``.  The multiple-negatives
loss treats every in-batch pairing (a_i, p_j) with i != j as a negative and
minimizes the negative log-likelihood of the matching pair under a row-wise
softmax over scaled cosine scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import PairExample
from .encoder import EncoderModel, backprop, encode_with_trace
from .errors import DataError, NumericError
from .textproc import encode_ids

TRIPLET = "triplet"
MULTIPLE_NEGATIVES = "multiple_negatives"
LOSS_NAMES = (TRIPLET, MULTIPLE_NEGATIVES)

SIMILARITY_MODES = ("cosine", "dot")


@dataclass
class TrainConfig:
    loss: str = MULTIPLE_NEGATIVES
    margin: float = 1.0
    scale: float = 20.0
    similarity: str = "cosine"
    batch_size: int = 50
    learning_rate: float = 1e-3
    warmup_fraction: float = 0.10
    epochs: int = 1
    weight_decay: float = 0.01
    seed: int = 0

    def validate(self) -> list[str]:
        """Collect every config problem instead of stopping at the first."""
        problems = []
        if self.loss not in LOSS_NAMES:
            problems.append(f"loss must be one of {', '.join(LOSS_NAMES)}; got {self.loss!r}")
        if self.similarity not in SIMILARITY_MODES:
            problems.append(
                f"similarity must be one of {', '.join(SIMILARITY_MODES)}; got {self.similarity!r}"
            )
        if self.margin < 0:
            problems.append(f"margin must be >= 0; got {self.margin}")
        if self.scale <= 0:
            problems.append(f"scale must be > 0; got {self.scale}")
        if self.batch_size < 1:
            problems.append(f"batch_size must be >= 1; got {self.batch_size}")
        if self.loss == MULTIPLE_NEGATIVES and self.batch_size < 2:
            problems.append("batch_size must be >= 2 for the multiple-negatives loss")
        if self.learning_rate <= 0:
            problems.append(f"learning_rate must be > 0; got {self.learning_rate}")
        if not 0.0 <= self.warmup_fraction <= 1.0:
            problems.append(f"warmup_fraction must be in [0, 1]; got {self.warmup_fraction}")
        if self.epochs < 1:
            problems.append(f"epochs must be >= 1; got {self.epochs}")
        if self.weight_decay < 0:
            problems.append(f"weight_decay must be >= 0; got {self.weight_decay}")
        return problems


@dataclass
class OptimizerState:
    """AdamW accumulators: first/second moments per parameter plus the step count."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_optimizer(params: dict[str, np.ndarray]) -> OptimizerState:
    return OptimizerState(
        m={name: np.zeros_like(arr) for name, arr in params.items()},
        v={name: np.zeros_like(arr) for name, arr in params.items()},
    )


def triplet_loss(
    s_a: np.ndarray, s_p: np.ndarray, s_n: np.ndarray, margin: float = 1.0
) -> tuple[float, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Euclidean triplet loss and its gradients w.r.t. the three embeddings.

    The subgradient is zero exactly at the hinge point, and the direction of
    a zero-length difference vector is taken as zero.
    """
    s_a = np.asarray(s_a, dtype=np.float64)
    s_p = np.asarray(s_p, dtype=np.float64)
    s_n = np.asarray(s_n, dtype=np.float64)
    if not (s_a.shape == s_p.shape == s_n.shape):
        raise ValueError(
            f"embedding dimensions differ: {s_a.shape}, {s_p.shape}, {s_n.shape}"
        )
    diff_p = s_a - s_p
    diff_n = s_a - s_n
    dist_p = float(np.linalg.norm(diff_p))
    dist_n = float(np.linalg.norm(diff_n))
    hinge = dist_p - dist_n + margin
    zeros = np.zeros_like(s_a)
    if hinge <= 0.0:
        return 0.0, (zeros, zeros.copy(), zeros.copy())
    unit_p = diff_p / dist_p if dist_p > 0.0 else zeros.copy()
    unit_n = diff_n / dist_n if dist_n > 0.0 else zeros.copy()
    return hinge, (unit_p - unit_n, -unit_p, unit_n)


def mn_loss(
    anchors: np.ndarray,
    positives: np.ndarray,
    scale: float = 20.0,
    similarity: str = "cosine",
) -> tuple[float, np.ndarray, np.ndarray]:
    """Multiple-negatives loss over a batch of n (anchor, positive) pairs.

    Scores are ``scale * sim(a_i, p_j)``; the loss is the mean over rows of
    the negative log-likelihood of the diagonal entry under a row softmax.
    Returns (loss, grads w.r.t. anchors, grads w.r.t. positives).
    """
    anchors = np.asarray(anchors, dtype=np.float64)
    positives = np.asarray(positives, dtype=np.float64)
    if anchors.ndim != 2 or anchors.shape != positives.shape:
        raise ValueError(
            f"anchors and positives must be matching (n, dim) arrays, "
            f"got {anchors.shape} and {positives.shape}"
        )
    n = anchors.shape[0]
    if n < 1:
        raise ValueError("need at least one pair")
    if similarity not in SIMILARITY_MODES:
        raise ValueError(f"similarity must be one of {SIMILARITY_MODES}, got {similarity!r}")

    if similarity == "cosine":
        a_norms = np.linalg.norm(anchors, axis=1, keepdims=True)
        p_norms = np.linalg.norm(positives, axis=1, keepdims=True)
        if np.any(a_norms == 0.0) or np.any(p_norms == 0.0):
            raise NumericError("cosine similarity undefined for zero-norm embeddings")
        a_hat = anchors / a_norms
        p_hat = positives / p_norms
        scores = scale * (a_hat @ p_hat.T)
    else:
        scores = scale * (anchors @ positives.T)

    shifted = scores - scores.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-np.trace(log_probs) / n)

    probs = np.exp(log_probs)
    d_scores = (probs - np.eye(n)) / n
    if similarity == "cosine":
        d_a_hat = scale * (d_scores @ p_hat)
        d_p_hat = scale * (d_scores.T @ a_hat)
        # back through the row normalizations
        grad_a = (d_a_hat - (d_a_hat * a_hat).sum(axis=1, keepdims=True) * a_hat) / a_norms
        grad_p = (d_p_hat - (d_p_hat * p_hat).sum(axis=1, keepdims=True) * p_hat) / p_norms
    else:
        grad_a = scale * (d_scores @ positives)
        grad_p = scale * (d_scores.T @ anchors)
    return loss, grad_a, grad_p


def adamw_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    lr: float,
    weight_decay: float = 0.0,
    masks: dict[str, np.ndarray] | None = None,
) -> OptimizerState:
    """One AdamW update in place: bias-corrected moments plus decoupled decay.

    ``masks`` marks trainable entries per parameter (missing = all trainable);
    masked-off entries, like the PAD embedding row, are left untouched.
    """
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite gradient for parameter {name!r}")
    state.step += 1
    t = state.step
    bias1 = 1.0 - state.beta1**t
    bias2 = 1.0 - state.beta2**t
    for name, param in params.items():
        grad = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(grad)
        update = lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
        update += lr * weight_decay * param
        if masks is not None and name in masks:
            update = np.where(masks[name], update, 0.0)
        param -= update
    return state


def lr_at(step: int, total_steps: int, base_lr: float, warmup_fraction: float = 0.10) -> float:
    """Linear warm-up to base_lr, then linear decay to zero at total_steps."""
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    warmup_steps = math.ceil(warmup_fraction * total_steps)
    if step >= total_steps:
        return 0.0
    if step < warmup_steps:
        return base_lr * step / warmup_steps
    return base_lr * (total_steps - step) / (total_steps - warmup_steps)


def _encode_batch(model: EncoderModel, texts: Sequence[str]):
    traces = []
    vectors = np.empty((len(texts), model.dim))
    for i, text in enumerate(texts):
        ids = encode_ids(model.vocab, text, model.max_len)
        vec, trace = encode_with_trace(model, ids)
        vectors[i] = vec
        traces.append(trace)
    return vectors, traces


def train_epoch(
    model: EncoderModel,
    pairs: Sequence[PairExample],
    config: TrainConfig,
    state: OptimizerState | None = None,
    rng: np.random.Generator | None = None,
    step_offset: int = 0,
    total_steps: int | None = None,
) -> tuple[EncoderModel, list[dict]]:
    """One pass over the pairs: shuffle, batch, compute loss, backprop, AdamW step.

    The final partial batch is dropped so the in-batch negative distribution
    stays fixed.  With a fresh default rng this is fully deterministic in
    (pairs, config); ``state``/``rng``/``step_offset`` let a multi-epoch
    driver keep one optimizer and one schedule across epochs.
    """
    n = config.batch_size
    if n < 2:
        raise DataError("both losses draw negatives in-batch, so batch_size must be >= 2")
    num_batches = len(pairs) // n
    if num_batches < 1:
        raise DataError(
            f"need at least one full batch of {n} pairs, got only {len(pairs)}"
        )
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if state is None:
        state = init_optimizer(model.params)
    if total_steps is None:
        total_steps = num_batches
    masks = model.frozen_masks()
    order = rng.permutation(len(pairs))
    log: list[dict] = []

    for b in range(num_batches):
        batch = [pairs[i] for i in order[b * n : (b + 1) * n]]
        step = step_offset + b
        lr = lr_at(step, total_steps, config.learning_rate, config.warmup_fraction)

        anchor_vecs, anchor_traces = _encode_batch(model, [p.anchor_text for p in batch])
        pos_vecs, pos_traces = _encode_batch(model, [p.positive_text for p in batch])

        if config.loss == MULTIPLE_NEGATIVES:
            loss, grad_a, grad_p = mn_loss(
                anchor_vecs, pos_vecs, scale=config.scale, similarity=config.similarity
            )
        else:
            grad_a = np.zeros_like(anchor_vecs)
            grad_p = np.zeros_like(pos_vecs)
            loss = 0.0
            for i in range(n):
                # the negative is a positive text of a different anchor
                j = int((i + 1 + rng.integers(0, n - 1)) % n)
                li, (ga, gp, gn) = triplet_loss(
                    anchor_vecs[i], pos_vecs[i], pos_vecs[j], margin=config.margin
                )
                loss += li / n
                grad_a[i] += ga / n
                grad_p[i] += gp / n
                grad_p[j] += gn / n

        grads = model.zero_grads()
        for vec_grads, traces in ((grad_a, anchor_traces), (grad_p, pos_traces)):
            for i, trace in enumerate(traces):
                contribution = backprop(model, trace, vec_grads[i])
                for name in grads:
                    grads[name] += contribution[name]

        adamw_step(model.params, grads, state, lr=lr, weight_decay=config.weight_decay, masks=masks)
        model.version += 1
        log.append({"step": step, "lr": lr, "loss": float(loss)})
    return model, log


def train(
    model: EncoderModel, pairs: Sequence[PairExample], config: TrainConfig
) -> tuple[EncoderModel, list[dict]]:
    """Run ``config.epochs`` epochs with one optimizer and one lr schedule throughout."""
    problems = config.validate()
    if problems:
        raise ValueError("invalid training config: " + "; ".join(problems))
    batches_per_epoch = len(pairs) // config.batch_size
    if batches_per_epoch < 1:
        raise DataError(
            f"need at least one full batch of {config.batch_size} pairs, got only {len(pairs)}"
        )
    total_steps = batches_per_epoch * config.epochs
    rng = np.random.default_rng(config.seed)
    state = init_optimizer(model.params)
    log: list[dict] = []
    for epoch in range(config.epochs):
        model, epoch_log = train_epoch(
            model,
            pairs,
            config,
            state=state,
            rng=rng,
            step_offset=epoch * batches_per_epoch,
            total_steps=total_steps,
        )
        log.extend(epoch_log)
    return model, log
