"""Corpus loading, tokenization, vocabulary and stopword handling."""

import logging
from collections import Counter
from pathlib import Path
from typing import FrozenSet, Iterable, List, Optional

import numpy as np

from app.models.text import (
    RESERVED_SURFACES,
    SEPARATOR_SURFACE,
    UNKNOWN_SURFACE,
    Sentence,
    Token,
    Vocabulary,
)

logger = logging.getLogger(__name__)


class CorpusError(Exception):
    """Raised when a corpus or evaluation file cannot be used."""


def tokenize(line: str, vocab: Optional[Vocabulary] = None) -> Sentence:
    """
    Split a pre-tokenized line on whitespace.

    Args:
        line: One sentence
        vocab: Optional vocabulary used to assign ids and stopword flags

    Returns:
        The sentence; empty when the line holds no tokens
    """
    fields = line.split()
    if vocab is None:
        return Sentence(tuple(Token(surface) for surface in fields))
    return Sentence(tuple(vocab.make_token(surface) for surface in fields))


def read_lines(path: str | Path) -> List[str]:
    """Read a UTF-8 text file into lines without trailing newlines."""
    file_path = Path(path)
    try:
        with file_path.open("r", encoding="utf-8") as handle:
            return [line.rstrip("\n") for line in handle]
    except (OSError, UnicodeDecodeError) as e:
        raise CorpusError(f"Cannot read corpus file {file_path}: {e}") from e


def load_corpus(
    path: str | Path,
    max_len: int,
    sample_size: int,
    seed: int,
    vocab: Optional[Vocabulary] = None,
) -> List[Sentence]:
    """
    Sample training sentences shorter than ``max_len`` words.

    The eligible sentences are shuffled with ``seed`` and the first
    ``sample_size`` are returned, so the sample and its order are reproducible.

    Args:
        path: Corpus file, one pre-tokenized sentence per line
        max_len: Exclusive upper bound on sentence length
        sample_size: Maximum number of sentences to return
        seed: Shuffle seed
        vocab: Optional vocabulary for token ids

    Returns:
        List of sampled sentences

    Raises:
        CorpusError: If the file cannot be read
        ValueError: On invalid bounds
    """
    if max_len < 2:
        raise ValueError(f"max_len must be >= 2, got {max_len}")
    if sample_size < 1:
        raise ValueError(f"sample_size must be >= 1, got {sample_size}")

    eligible = []
    skipped_empty = 0
    for line in read_lines(path):
        sentence = tokenize(line, vocab)
        if not sentence.is_trainable:
            skipped_empty += 1
            continue
        if sentence.n < max_len:
            eligible.append(sentence)

    if skipped_empty:
        logger.info(f"Skipped {skipped_empty} empty lines in {path}")

    order = np.random.default_rng(seed).permutation(len(eligible))
    eligible = [eligible[int(i)] for i in order]

    if len(eligible) < sample_size:
        logger.warning(
            f"Only {len(eligible)} eligible sentences in {path} "
            f"(requested {sample_size}); using all of them"
        )
        return eligible

    logger.info(f"Sampled {sample_size} of {len(eligible)} sentences from {path}")
    return eligible[:sample_size]


def build_vocab(corpus: Iterable[Sentence], min_freq: int = 1) -> Vocabulary:
    """
    Build a vocabulary from a corpus.

    Words are ordered by descending frequency, then alphabetically, so two
    builds over the same corpus assign the same ids.

    Args:
        corpus: Sentences to count
        min_freq: Minimum frequency for a word to receive an id

    Returns:
        Vocabulary with frequencies recorded for every word seen

    Raises:
        ValueError: If the corpus is empty or no word reaches ``min_freq``
    """
    counts: Counter = Counter()
    for sentence in corpus:
        counts.update(
            token.surface for token in sentence if token.surface not in RESERVED_SURFACES
        )

    if not counts:
        raise ValueError("Cannot build a vocabulary from an empty corpus")

    known = sorted(
        (word for word, count in counts.items() if count >= min_freq),
        key=lambda word: (-counts[word], word),
    )
    if not known:
        raise ValueError(f"No word occurs at least min_freq={min_freq} times")
    vocab = Vocabulary(
        id_to_word=(UNKNOWN_SURFACE, *known, SEPARATOR_SURFACE),
        frequencies=dict(counts),
    )
    logger.info(
        f"Built vocabulary with {vocab.num_words} words "
        f"({len(counts) - vocab.num_words} below min_freq={min_freq})"
    )
    return vocab


def load_stopwords(
    path: str | Path | None, vocab: Vocabulary, rare_cutoff: int = 3
) -> FrozenSet[str]:
    """
    Build the stopword set W.

    W is the union of the listed words and every corpus word whose frequency is
    below ``rare_cutoff``.

    Args:
        path: Optional file with one stopword per line; a missing file is skipped
        vocab: Vocabulary carrying corpus frequencies
        rare_cutoff: Frequency threshold for the infrequent-word rule

    Returns:
        Frozen set of stopword surfaces
    """
    listed: set = set()
    if path is not None:
        stopword_path = Path(path)
        if stopword_path.exists():
            listed = {
                line.strip()
                for line in stopword_path.read_text(encoding="utf-8").splitlines()
                if line.strip() and not line.startswith("#")
            }
        else:
            logger.warning(
                f"Stopword file {stopword_path} not found; using frequency rule only"
            )

    rare = {word for word, count in vocab.frequencies.items() if count < rare_cutoff}
    return frozenset(listed | rare)
