"""Finite-difference utilities shared by the gradient tests.

Central differences are only trustworthy away from non-smooth points (relu
and hinge kinks, zero-norm vectors), so the random-config samplers here
resample until every pre-activation clears a safety margin well above the
perturbation step.
"""

from __future__ import annotations

import numpy as np

from weakpairs.encoder import EncoderModel, encode, init_model
from weakpairs.textproc import PAD_TOKEN, UNK_TOKEN, Vocabulary

FD_STEP = 1e-5
# |a - n| / max(|a|, |n|, FLOOR): the floor keeps sub-1e-6 gradients, where
# central differences are pure roundoff noise (~1e-12), from dominating.
REL_FLOOR = 1e-6
KINK_MARGIN = 1e-3  # min |pre-activation| so no +-1e-5 perturbation can cross a kink


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = REL_FLOOR) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def central_diff_grad(func, array: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """d func / d array by central differences, perturbing one entry at a time."""
    grad = np.zeros_like(array, dtype=np.float64)
    flat = array.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        up = func()
        flat[i] = original - step
        down = func()
        flat[i] = original
        grad.reshape(-1)[i] = (up - down) / (2.0 * step)
    return grad


def toy_vocab(num_tokens: int) -> Vocabulary:
    tokens = [PAD_TOKEN, UNK_TOKEN] + [f"tok{i:03d}" for i in range(num_tokens)]
    return Vocabulary(tokens=tokens, max_size=len(tokens))


def random_model(
    rng: np.random.Generator,
    vocab_tokens: int = 20,
    dim: int | None = None,
    use_block: bool | None = None,
    normalize_output: bool | None = None,
) -> EncoderModel:
    if dim is None:
        dim = int(rng.integers(2, 9))
    if use_block is None:
        use_block = bool(rng.integers(0, 2))
    if normalize_output is None:
        normalize_output = bool(rng.integers(0, 2))
    return init_model(
        toy_vocab(vocab_tokens),
        dim=dim,
        use_block=use_block,
        seed=int(rng.integers(0, 2**31)),
        normalize_output=normalize_output,
        max_len=16,
    )


def _min_preactivation(model: EncoderModel, ids) -> float:
    """Smallest |relu pre-activation| (and pooled norm if normalizing) on this input."""
    p = model.params
    x = p["embedding"][list(ids), :]
    margins = [np.inf]
    if model.use_block:
        q = x @ p["w_q"]
        k = x @ p["w_k"]
        v = x @ p["w_v"]
        scores = (q @ k.T) / np.sqrt(model.dim)
        shifted = scores - scores.max(axis=1, keepdims=True)
        attn = np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)
        h1 = x + attn @ v
        z = h1 @ p["w_1"]
        margins.append(float(np.min(np.abs(z))))
        h2 = h1 + np.maximum(z, 0.0) @ p["w_2"]
    else:
        h2 = x
    if model.normalize_output:
        margins.append(float(np.linalg.norm(h2.mean(axis=0))))
    return min(margins)


def sample_smooth_case(rng: np.random.Generator, **model_kwargs):
    """A (model, ids, grad_out) triple whose forward pass sits clear of every kink."""
    while True:
        model = random_model(rng, **model_kwargs)
        n_tokens = int(rng.integers(1, 7))
        ids = [int(t) for t in rng.integers(1, len(model.vocab), size=n_tokens)]
        if _min_preactivation(model, ids) > KINK_MARGIN:
            grad_out = rng.standard_normal(model.dim)
            return model, ids, grad_out


def scalar_objective(model: EncoderModel, ids, grad_out: np.ndarray) -> float:
    return float(np.dot(grad_out, encode(model, ids)))
