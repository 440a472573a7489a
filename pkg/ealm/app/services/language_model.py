"""Masked language model used by the LM converter and the summary assessment."""

import logging
import math
from abc import ABC, abstractmethod
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.models.text import UNKNOWN_ID, Sentence, Token, Vocabulary
from app.services.corpus import build_vocab

logger = logging.getLogger(__name__)

# Context-only padding symbols; never predicted and never in the vocabulary.
BOS = -1
EOS = -2

Context = Tuple[int, ...]


@dataclass(frozen=True)
class MaskedSequence:
    """A body of words and masks (``None``), optionally after a prefixed context."""

    body: Tuple[Optional[Token], ...]
    prefix: Sentence = Sentence()

    def __post_init__(self):
        if not self.body:
            raise ValueError("A masked sequence needs at least one body slot")

    @classmethod
    def masked_at(cls, sentence: Sentence, positions: Iterable[int]) -> "MaskedSequence":
        masked = set(positions)
        return cls(
            tuple(None if i in masked else token for i, token in enumerate(sentence))
        )

    @property
    def mask_positions(self) -> List[int]:
        return [i for i, slot in enumerate(self.body) if slot is None]

    def filled(self, position: int, token: Token) -> "MaskedSequence":
        body = list(self.body)
        body[position] = token
        return MaskedSequence(tuple(body), self.prefix)


@dataclass(frozen=True, eq=False)
class WordDistribution:
    """A full distribution over predictable word ids, ranked by probability."""

    ids: np.ndarray
    probs: np.ndarray

    @classmethod
    def from_probabilities(cls, probs: np.ndarray) -> "WordDistribution":
        """Rank ``probs`` (index j is word id j+1); ties go to the lower id."""
        order = np.argsort(-probs, kind="stable")
        return cls(ids=order + 1, probs=probs[order])

    def best(self) -> Tuple[int, float]:
        return int(self.ids[0]), float(self.probs[0])

    def top_k(self, k: int) -> List[int]:
        return [int(i) for i in self.ids[:k]]

    def prob_of(self, vocab_id: int) -> float:
        hits = np.flatnonzero(self.ids == vocab_id)
        if hits.size == 0:
            return 0.0
        return float(self.probs[hits[0]])


@dataclass(frozen=True)
class FillStep:
    """One committed mask of an autoregressive fill."""

    position: int
    vocab_id: int
    probability: float


class MaskedLM(ABC):
    """Capability every LM behind the converter must provide."""

    @property
    @abstractmethod
    def vocab(self) -> Vocabulary: ...

    @property
    @abstractmethod
    def embedding_dim(self) -> int: ...

    @abstractmethod
    def predict(self, seq: MaskedSequence, position: int) -> WordDistribution:
        """Distribution of the word at a masked body position."""

    @abstractmethod
    def embed_word(self, token: Token) -> np.ndarray:
        """Frozen word vector; zero for unknown words."""

    def best_word(self, seq: MaskedSequence, position: int) -> Tuple[int, float]:
        """The ``L`` selector: most probable word and its probability."""
        return self.predict(seq, position).best()

    def top_k(self, seq: MaskedSequence, position: int, k: int) -> List[int]:
        """The ``L^k`` selector."""
        return self.predict(seq, position).top_k(k)

    def fill_steps(self, seq: MaskedSequence) -> Iterator[Tuple[MaskedSequence, FillStep]]:
        """
        Autoregressive mask filling.

        Each iteration computes the best word for every remaining mask and
        commits the one whose best word is most probable (lowest position on
        ties). Yields the sequence as it was before each commit.
        """
        current = seq
        remaining = current.mask_positions
        while remaining:
            chosen: Optional[FillStep] = None
            for position in remaining:
                vocab_id, prob = self.best_word(current, position)
                if chosen is None or prob > chosen.probability:
                    chosen = FillStep(position, vocab_id, prob)
            assert chosen is not None
            yield current, chosen
            current = current.filled(
                chosen.position, self.vocab.token_for_id(chosen.vocab_id)
            )
            remaining = [p for p in remaining if p != chosen.position]

    def fill_masks(self, seq: MaskedSequence, top_only: bool = True) -> Sentence:
        """
        Realize every mask of ``seq`` and return the body (prefix excluded).

        Args:
            seq: Masked sequence
            top_only: Commit only the most confident mask per iteration
                (autoregressive). ``False`` fills all masks in one pass from
                their independent predictions.
        """
        if not top_only:
            body = list(seq.body)
            for position in seq.mask_positions:
                vocab_id, _ = self.best_word(seq, position)
                body[position] = self.vocab.token_for_id(vocab_id)
            return Sentence(tuple(body))  # type: ignore[arg-type]

        current = seq
        for before, step in self.fill_steps(seq):
            current = before.filled(
                step.position, self.vocab.token_for_id(step.vocab_id)
            )
        return Sentence(tuple(current.body))  # type: ignore[arg-type]

    def loglikelihood_raw(self, y: Sentence) -> float:
        """Mean log-probability of each word with itself masked out."""
        if y.n == 0:
            return -math.inf

        total = 0.0
        for i, token in enumerate(y):
            dist = self.predict(MaskedSequence.masked_at(y, [i]), i)
            vocab_id = self.vocab.lookup(token.surface)
            if vocab_id == UNKNOWN_ID:
                prob = float(dist.probs[-1])
            else:
                prob = dist.prob_of(vocab_id)
            total += math.log(prob)
        return total / y.n

    def embed_sentence(self, sentence: Sentence) -> np.ndarray:
        """L2-normalized mean of the known words' vectors (zero if none)."""
        vectors = [
            self.embed_word(token)
            for token in sentence
            if self.vocab.lookup(token.surface) != UNKNOWN_ID
        ]
        if not vectors:
            return np.zeros(self.embedding_dim)
        mean = np.mean(vectors, axis=0)
        norm = np.linalg.norm(mean)
        if norm == 0.0:
            return np.zeros(self.embedding_dim)
        return mean / norm


def llh(y: Sentence, lm: MaskedLM, threshold: float = 0.005, mode: str = "geo") -> int:
    """
    Thresholded fluency score.

    ``geo`` compares the geometric-mean token probability with the threshold;
    ``raw`` compares the mean log-probability itself.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    raw = lm.loglikelihood_raw(y)
    if raw == -math.inf:
        return 0
    score = math.exp(raw) if mode == "geo" else raw
    return int(score > threshold)


def sim(x: Sentence, y: Sentence, lm: MaskedLM) -> float:
    """Cosine similarity of sentence embeddings mapped to [0, 1]."""
    ex = lm.embed_sentence(x)
    ey = lm.embed_sentence(y)
    nx = np.linalg.norm(ex)
    ny = np.linalg.norm(ey)
    if nx == 0.0 or ny == 0.0:
        return 0.5
    cosine = float(np.dot(ex, ey) / (nx * ny))
    return min(1.0, max(0.0, (cosine + 1.0) / 2.0))


class NGramMaskedLM(MaskedLM):
    """
    Interpolated left/right add-k n-gram model answering masked queries.

    The left model conditions on up to ``order - 1`` preceding symbols and the
    right model on up to ``order - 1`` following symbols. A context stops at the
    first mask and backs off to the longest suffix seen in training. A prefix is
    placed before the body with the separator between them.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        order: int,
        smoothing: float,
        lambda_left: float,
        left_counts: Dict[Context, Dict[int, int]],
        right_counts: Dict[Context, Dict[int, int]],
        embeddings: np.ndarray,
    ):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if not 0.0 <= lambda_left <= 1.0:
            raise ValueError(f"lambda_left must be in [0, 1], got {lambda_left}")
        if smoothing <= 0.0:
            raise ValueError(f"smoothing must be > 0, got {smoothing}")

        self._vocab = vocab
        self.order = order
        self.smoothing = smoothing
        self.lambda_left = lambda_left
        self.left_counts = left_counts
        self.right_counts = right_counts
        self.embeddings = embeddings
        self._side_probs = lru_cache(maxsize=16384)(self._compute_side_probs)

    @property
    def vocab(self) -> Vocabulary:
        return self._vocab

    @property
    def embedding_dim(self) -> int:
        return int(self.embeddings.shape[1])

    @property
    def lambda_right(self) -> float:
        return 1.0 - self.lambda_left

    def _compute_side_probs(self, side: str, context: Context) -> np.ndarray:
        tables = self.left_counts if side == "left" else self.right_counts
        num_words = self._vocab.num_words
        probs = np.full(num_words, self.smoothing, dtype=np.float64)
        counts = tables.get(context)
        total = 0
        if counts:
            ids = np.fromiter(counts.keys(), dtype=np.int64)
            values = np.fromiter(counts.values(), dtype=np.float64)
            probs[ids - 1] += values
            total = int(values.sum())
        return probs / (total + self.smoothing * num_words)

    def _backoff(self, side: str, available: Sequence[int]) -> Context:
        """Longest usable context; ``available`` is ordered nearest-last (left) or nearest-first (right)."""
        tables = self.left_counts if side == "left" else self.right_counts
        for length in range(len(available), 0, -1):
            if side == "left":
                context = tuple(available[len(available) - length :])
            else:
                context = tuple(available[:length])
            if context in tables:
                return context
        return ()

    def _symbols(self, seq: MaskedSequence) -> Tuple[List[Optional[int]], int]:
        pad = [BOS] * (self.order - 1)
        if seq.prefix.n:
            head = pad + [self._vocab.lookup(t.surface) for t in seq.prefix]
            head.append(self._vocab.separator_id)
        else:
            head = pad
        body = [
            None if slot is None else self._vocab.lookup(slot.surface)
            for slot in seq.body
        ]
        symbols: List[Optional[int]] = head + body + [EOS] * (self.order - 1)  # type: ignore[operator]
        return symbols, len(head)

    def predict(self, seq: MaskedSequence, position: int) -> WordDistribution:
        if not 0 <= position < len(seq.body) or seq.body[position] is not None:
            raise ValueError(f"Body position {position} is not a mask")

        symbols, offset = self._symbols(seq)
        p = offset + position
        width = self.order - 1

        left: List[int] = []
        for q in range(p - 1, max(p - 1 - width, -1), -1):
            if symbols[q] is None:
                break
            left.insert(0, symbols[q])  # type: ignore[arg-type]
        right: List[int] = []
        for q in range(p + 1, min(p + 1 + width, len(symbols))):
            if symbols[q] is None:
                break
            right.append(symbols[q])  # type: ignore[arg-type]

        probs_left = self._side_probs("left", self._backoff("left", left))
        probs_right = self._side_probs("right", self._backoff("right", right))
        probs = self.lambda_left * probs_left + self.lambda_right * probs_right
        return WordDistribution.from_probabilities(probs)

    def embed_word(self, token: Token) -> np.ndarray:
        return self.embeddings[self._vocab.lookup(token.surface)]


def _count_contexts(
    sentences: List[List[int]], order: int, separator_id: int
) -> Tuple[Dict[Context, Dict[int, int]], Dict[Context, Dict[int, int]]]:
    width = order - 1
    left: Dict[Context, Counter] = defaultdict(Counter)
    right: Dict[Context, Counter] = defaultdict(Counter)

    for ids in sentences:
        n = len(ids)
        padded_left = [BOS] * width + ids
        padded_right = ids + [EOS] * width
        for i, word in enumerate(ids):
            if word == UNKNOWN_ID:
                continue
            for length in range(0, width + 1):
                start = i + width - length
                left[tuple(padded_left[start : i + width])][word] += 1
                right[tuple(padded_right[i + 1 : i + 1 + length])][word] += 1

        # Self-prefixed pass: the sentence as its own prefix teaches the model
        # what follows the separator. Only contexts that reach the separator
        # are new.
        prefixed = [BOS] * width + ids + [separator_id] + ids
        body_start = width + n + 1
        for i in range(min(width, n)):
            word = ids[i]
            if word == UNKNOWN_ID:
                continue
            p = body_start + i
            for length in range(i + 1, width + 1):
                left[tuple(prefixed[p - length : p])][word] += 1

    def freeze(tables: Dict[Context, Counter]) -> Dict[Context, Dict[int, int]]:
        return {ctx: dict(sorted(c.items())) for ctx, c in sorted(tables.items())}

    return freeze(left), freeze(right)


def ppmi_embeddings(
    sentences: List[List[int]], vocab: Vocabulary, dim: int, window: int
) -> np.ndarray:
    """
    PPMI co-occurrence vectors reduced with a truncated SVD.

    Returns a ``(vocab.size, dim)`` matrix; rows for the unknown word and the
    separator are zero.
    """
    num_words = vocab.num_words
    cooc = np.zeros((num_words, num_words), dtype=np.float64)
    for ids in sentences:
        for i, word in enumerate(ids):
            if word == UNKNOWN_ID:
                continue
            for j in range(max(0, i - window), min(len(ids), i + window + 1)):
                if j != i and ids[j] != UNKNOWN_ID:
                    cooc[word - 1, ids[j] - 1] += 1.0

    embeddings = np.zeros((vocab.size, dim), dtype=np.float64)
    total = cooc.sum()
    if total == 0.0:
        return embeddings

    row_totals = cooc.sum(axis=1)
    col_totals = cooc.sum(axis=0)
    expected = np.outer(row_totals, col_totals) / total
    with np.errstate(divide="ignore", invalid="ignore"):
        pmi = np.log(cooc / expected)
    pmi[~np.isfinite(pmi)] = 0.0
    pmi[pmi < 0] = 0.0

    u, s, _ = np.linalg.svd(pmi)
    rank = min(dim, s.shape[0])
    vectors = u[:, :rank] * np.sqrt(s[:rank])
    for col in range(rank):
        pivot = np.argmax(np.abs(vectors[:, col]))
        if vectors[pivot, col] < 0:
            vectors[:, col] = -vectors[:, col]
    embeddings[1 : num_words + 1, :rank] = vectors
    return embeddings


def train_lm(
    corpus: List[Sentence],
    order: int = 3,
    smoothing: float = 0.1,
    vocab: Optional[Vocabulary] = None,
    lambda_left: float = 0.5,
    embedding_dim: int = 64,
    window: int = 2,
) -> NGramMaskedLM:
    """
    Train the reference masked LM.

    Args:
        corpus: Training sentences
        order: n-gram order (1 gives a context-free unigram model)
        smoothing: Add-k constant
        vocab: Vocabulary to use; built from ``corpus`` when omitted
        lambda_left: Weight of the left-context model
        embedding_dim: Size of the word vectors
        window: Co-occurrence window for the word vectors

    Returns:
        The trained model
    """
    if not corpus:
        raise ValueError("Cannot train a language model on an empty corpus")
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")

    vocab = vocab or build_vocab(corpus, min_freq=1)
    if vocab.num_words == 0:
        raise ValueError("The vocabulary has no predictable words")
    sentences = [[vocab.lookup(token.surface) for token in s] for s in corpus]

    left, right = _count_contexts(sentences, order, vocab.separator_id)
    embeddings = ppmi_embeddings(sentences, vocab, embedding_dim, window)

    logger.info(
        f"Trained order-{order} masked LM on {len(corpus)} sentences "
        f"({len(left)} left / {len(right)} right contexts, dim {embedding_dim})"
    )
    return NGramMaskedLM(
        vocab=vocab,
        order=order,
        smoothing=smoothing,
        lambda_left=lambda_left,
        left_counts=left,
        right_counts=right,
        embeddings=embeddings,
    )
