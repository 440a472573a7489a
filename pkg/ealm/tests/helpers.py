"""Test doubles shared by several test modules."""

from typing import Dict, List, Sequence, Tuple

import numpy as np
from app.models.editing import EditAction, StateVector
from app.models.text import Sentence, Token, Vocabulary
from app.services.corpus import build_vocab, tokenize
from app.services.language_model import MaskedLM, MaskedSequence, WordDistribution


class ScriptedLM(MaskedLM):
    """
    Masked LM whose fills are looked up by the number of masks.

    ``fills[m]`` lists the words written into the masks, left to right, when a
    sequence has ``m`` masks. Embeddings are zero and every sentence scores a
    log-likelihood of ``raw_llh``.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        fills: Dict[int, List[str]],
        dim: int = 4,
        raw_llh: float = 0.0,
    ):
        self._vocab = vocab
        self.fills = fills
        self.dim = dim
        self.raw_llh = raw_llh
        self.fill_calls = 0

    @property
    def vocab(self) -> Vocabulary:
        return self._vocab

    @property
    def embedding_dim(self) -> int:
        return self.dim

    def predict(self, seq: MaskedSequence, position: int) -> WordDistribution:
        probs = np.full(self._vocab.num_words, 1.0 / self._vocab.num_words)
        return WordDistribution.from_probabilities(probs)

    def embed_word(self, token: Token) -> np.ndarray:
        return np.zeros(self.dim)

    def fill_masks(self, seq: MaskedSequence, top_only: bool = True) -> Sentence:
        self.fill_calls += 1
        words = iter(self.fills[len(seq.mask_positions)])
        body = [slot if slot is not None else Token(next(words)) for slot in seq.body]
        return Sentence(tuple(body))

    def loglikelihood_raw(self, y: Sentence) -> float:
        return self.raw_llh


class ScriptedPolicy:
    """Plays a fixed list of (index, action) moves, one per step."""

    def __init__(self, moves: Sequence[Tuple[int, EditAction]]):
        self.moves = list(moves)

    def choose(
        self,
        params,
        states: Sequence[StateVector],
        statuses: Sequence[bool],
        rng: np.random.Generator,
    ) -> Tuple[int, EditAction]:
        return self.moves[sum(statuses)]


def force_example() -> Tuple[Sentence, ScriptedLM, ScriptedPolicy]:
    """Remove the first three words of a six-word sentence, then keep the rest."""
    x = tokenize("May the force be with you")
    lm = ScriptedLM(
        build_vocab([x]),
        fills={
            1: ["May"],
            2: ["May", "the"],
            3: ["I", "will", "always"],
        },
    )
    moves = [
        (0, EditAction.REMOVE),
        (1, EditAction.REMOVE),
        (2, EditAction.REMOVE),
        (3, EditAction.KEEP),
        (4, EditAction.KEEP),
        (5, EditAction.KEEP),
    ]
    return x, lm, ScriptedPolicy(moves)


def surfaces(sentence: Sentence) -> List[str]:
    return list(sentence.surfaces)
