"""Deterministic compression and reconstruction driven by edit actions."""

import logging
from typing import Dict, FrozenSet, Optional, Sequence, Tuple

from app.models.editing import EditAction, Skeleton
from app.models.text import Sentence
from app.services.language_model import MaskedLM, MaskedSequence

logger = logging.getLogger(__name__)


def _check_lengths(n: int, actions: Sequence[EditAction]) -> None:
    if len(actions) != n:
        raise ValueError(f"Got {len(actions)} actions for {n} words")


def make_skeleton(x: Sentence, actions: Sequence[EditAction]) -> Skeleton:
    """Keep positions hold the original word; all others hold the null token."""
    _check_lengths(x.n, actions)
    return tuple(
        token if action == EditAction.KEEP else None
        for token, action in zip(x, actions)
    )


def compress(
    x: Sentence, actions: Sequence[EditAction], lm: MaskedLM, top_only: bool = True
) -> Sentence:
    """
    Realize the summary y.

    Remove positions are dropped, Replace positions become masks and are
    filled by the LM with ``x`` as the prefixed context.
    """
    _check_lengths(x.n, actions)
    body = tuple(
        token if action == EditAction.KEEP else None
        for token, action in zip(x, actions)
        if action != EditAction.REMOVE
    )
    if not body:
        return Sentence()
    if all(slot is not None for slot in body):
        return Sentence(body)  # type: ignore[arg-type]
    return lm.fill_masks(MaskedSequence(body, prefix=x), top_only=top_only)


def reconstruction_input(y: Sentence, skeleton: Skeleton) -> MaskedSequence:
    """Masks at every null slot, with the summary as the prefixed context."""
    return MaskedSequence(tuple(skeleton), prefix=y)


def reconstruct(
    y: Sentence,
    skeleton: Skeleton,
    actions: Sequence[EditAction],
    lm: MaskedLM,
    top_only: bool = True,
) -> Sentence:
    """Realize x̂ from the skeleton, filling every null slot."""
    _check_lengths(len(skeleton), actions)
    if all(slot is not None for slot in skeleton):
        return Sentence(tuple(skeleton))  # type: ignore[arg-type]
    return lm.fill_masks(reconstruction_input(y, skeleton), top_only=top_only)


def relaxed_recovery(
    x: Sentence,
    y: Sentence,
    skeleton: Skeleton,
    lm: MaskedLM,
    stopwords: FrozenSet[str],
    k: int,
) -> Tuple[int, int]:
    """
    Count non-stopword positions whose original word is in the LM's top-k.

    Keep positions are credited without querying the LM.

    Returns:
        (recovered, eligible)
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    masked = reconstruction_input(y, skeleton)
    recovered = 0
    eligible = 0
    for i, token in enumerate(x):
        if token.surface in stopwords:
            continue
        eligible += 1
        if skeleton[i] is not None:
            recovered += 1
            continue
        vocab_id = lm.vocab.lookup(token.surface)
        if vocab_id and vocab_id in lm.top_k(masked, i, k):
            recovered += 1
    return recovered, eligible


class LMConverter:
    """
    Per-sentence converter with results memoized by action vector.

    Conversions are deterministic, so identical action vectors at different
    steps share their y and x̂.
    """

    def __init__(self, x: Sentence, lm: MaskedLM, top_only: bool = True):
        self.x = x
        self.lm = lm
        self.top_only = top_only
        self._cache: Dict[Tuple[int, ...], Tuple[Sentence, Sentence]] = {}
        self._relaxed: Dict[Tuple[Tuple[int, ...], int], Tuple[int, int]] = {}

    def convert(self, actions: Sequence[EditAction]) -> Tuple[Sentence, Sentence]:
        """Return (y, x̂) for an action vector."""
        key = tuple(int(a) for a in actions)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        y = compress(self.x, actions, self.lm, self.top_only)
        skeleton = make_skeleton(self.x, actions)
        x_hat = reconstruct(y, skeleton, actions, self.lm, self.top_only)
        self._cache[key] = (y, x_hat)
        return y, x_hat

    def relaxed_rr(
        self,
        actions: Sequence[EditAction],
        stopwords: FrozenSet[str],
        k: int,
        y: Optional[Sentence] = None,
    ) -> float:
        key = (tuple(int(a) for a in actions), k)
        counts = self._relaxed.get(key)
        if counts is None:
            if y is None:
                y, _ = self.convert(actions)
            counts = relaxed_recovery(
                self.x, y, make_skeleton(self.x, actions), self.lm, stopwords, k
            )
            self._relaxed[key] = counts
        recovered, eligible = counts
        if eligible == 0:
            return 1.0
        return recovered / eligible
