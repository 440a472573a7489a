"""Per-word state encodings s = [l; g] built from frozen embeddings and learnable biases."""

import hashlib
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from app.models.editing import NUM_ACTIONS, EditState, StateInputs, StateVector
from app.models.text import Sentence
from app.services.language_model import MaskedLM

logger = logging.getLogger(__name__)

ATTENTION_EPS = 1e-12
UNKNOWN_VECTOR_SCALE = 0.1


@dataclass
class EncoderParams:
    """Bias tables: one row per edit action and one per prediction status."""

    action_bias: np.ndarray
    status_bias: np.ndarray

    @classmethod
    def zeros(cls, dim: int) -> "EncoderParams":
        return cls(
            action_bias=np.zeros((NUM_ACTIONS, dim)), status_bias=np.zeros((2, dim))
        )

    @property
    def dim(self) -> int:
        return int(self.action_bias.shape[1])

    def parameters(self) -> List[np.ndarray]:
        return [self.action_bias, self.status_bias]

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.action_bias.copy(), self.status_bias.copy())


def unknown_word_vector(surface: str, dim: int) -> np.ndarray:
    """A fixed zero-mean vector derived from a hash of the surface form."""
    digest = hashlib.sha256(surface.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    vector = rng.normal(0.0, UNKNOWN_VECTOR_SCALE, size=dim)
    return vector - vector.mean()


def token_embedding(x: Sentence, lm: MaskedLM) -> np.ndarray:
    """
    Embed each word of ``x`` once per episode.

    Returns:
        ``(N, d)`` matrix; unknown words get their hash-derived vector
    """
    dim = lm.embedding_dim
    rows = []
    for token in x:
        if lm.vocab.lookup(token.surface) == 0:
            rows.append(unknown_word_vector(token.surface, dim))
        else:
            rows.append(np.asarray(lm.embed_word(token), dtype=np.float64))
    if not rows:
        return np.zeros((0, dim))
    return np.vstack(rows)


def local_encoding(
    e_i: np.ndarray, action: int, status: bool, params: EncoderParams
) -> np.ndarray:
    """l = e + b^a + b^u."""
    return e_i + params.action_bias[int(action)] + params.status_bias[int(status)]


def attention_weights(all_l: np.ndarray, i: int) -> np.ndarray:
    """ReLU-normalized dot-product weights of position ``i`` over all positions."""
    scores = np.maximum(all_l @ all_l[i], 0.0)
    denominator = scores.sum()
    if denominator < ATTENTION_EPS:
        return np.full(all_l.shape[0], 1.0 / all_l.shape[0])
    return scores / denominator


def global_encoding(all_l: np.ndarray, i: int) -> np.ndarray:
    """g = Σ_j w_j l_j."""
    if all_l.shape[0] == 0:
        raise ValueError("global_encoding needs at least one local encoding")
    return attention_weights(all_l, i) @ all_l


def local_encodings(
    embeddings: np.ndarray,
    actions: Sequence[int],
    statuses: Sequence[bool],
    params: EncoderParams,
) -> np.ndarray:
    action_idx = np.asarray([int(a) for a in actions], dtype=np.int64)
    status_idx = np.asarray([int(u) for u in statuses], dtype=np.int64)
    return embeddings + params.action_bias[action_idx] + params.status_bias[status_idx]


def encode_all(
    x: Sentence, edit: EditState, embeddings: np.ndarray, params: EncoderParams
) -> List[StateVector]:
    """Build the state of every word for the current step."""
    if not (x.n == len(edit.actions) == embeddings.shape[0]):
        raise ValueError(
            f"Length mismatch: sentence {x.n}, actions {len(edit.actions)}, "
            f"embeddings {embeddings.shape[0]}"
        )
    all_l = local_encodings(embeddings, edit.actions, edit.statuses, params)
    scores = np.maximum(all_l @ all_l.T, 0.0)
    denominators = scores.sum(axis=1, keepdims=True)
    uniform = np.full_like(scores, 1.0 / max(x.n, 1))
    safe = np.where(denominators < ATTENTION_EPS, 1.0, denominators)
    weights = np.where(denominators < ATTENTION_EPS, uniform, scores / safe)
    all_g = weights @ all_l
    return [StateVector(all_l[i].copy(), all_g[i].copy()) for i in range(x.n)]


def encode_from_inputs(inputs: StateInputs, params: EncoderParams) -> StateVector:
    """Rebuild one recorded state under (possibly updated) encoder biases."""
    all_l = local_encodings(inputs.embeddings, inputs.actions, inputs.statuses, params)
    return StateVector(all_l[inputs.index].copy(), global_encoding(all_l, inputs.index))


def encoder_backward(
    inputs: StateInputs, params: EncoderParams, state_grad: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradients of ``state_grad · s`` with respect to both bias tables.

    Args:
        inputs: Cached embeddings, actions, statuses and the position of s
        params: Encoder biases the state was built with
        state_grad: Gradient with respect to s = [l_i; g_i]

    Returns:
        (gradient for action_bias, gradient for status_bias)
    """
    all_l = local_encodings(inputs.embeddings, inputs.actions, inputs.statuses, params)
    n, dim = all_l.shape
    i = inputs.index
    grad_l_i = state_grad[:dim]
    grad_g = state_grad[dim:]

    grad_all_l = np.zeros_like(all_l)
    grad_all_l[i] += grad_l_i

    scores_pre = all_l @ all_l[i]
    scores = np.maximum(scores_pre, 0.0)
    denominator = scores.sum()
    if denominator < ATTENTION_EPS:
        grad_all_l += grad_g / n
    else:
        weights = scores / denominator
        grad_all_l += np.outer(weights, grad_g)
        grad_weights = all_l @ grad_g
        grad_scores = (grad_weights - np.dot(weights, grad_weights)) / denominator
        grad_pre = grad_scores * (scores_pre > 0)
        grad_all_l += np.outer(grad_pre, all_l[i])
        grad_all_l[i] += grad_pre @ all_l

    grad_action = np.zeros_like(params.action_bias)
    grad_status = np.zeros_like(params.status_bias)
    np.add.at(grad_action, np.asarray(inputs.actions, dtype=np.int64), grad_all_l)
    np.add.at(
        grad_status, np.asarray([int(u) for u in inputs.statuses], dtype=np.int64), grad_all_l
    )
    return grad_action, grad_status
