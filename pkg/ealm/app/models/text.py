"""Word-level text types shared by every service."""

from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterator, Tuple

UNKNOWN_ID = 0
UNKNOWN_SURFACE = "<unk>"
SEPARATOR_SURFACE = "<sep>"
RESERVED_SURFACES = frozenset({UNKNOWN_SURFACE, SEPARATOR_SURFACE})


@dataclass(frozen=True)
class Token:
    """A single whitespace-delimited word."""

    surface: str
    vocab_id: int = UNKNOWN_ID
    is_stopword: bool = False

    def __post_init__(self):
        if not self.surface or any(ch.isspace() for ch in self.surface):
            raise ValueError(f"Invalid token surface: {self.surface!r}")

    @property
    def is_unknown(self) -> bool:
        return self.vocab_id == UNKNOWN_ID


@dataclass(frozen=True)
class Sentence:
    """An ordered, immutable run of tokens."""

    tokens: Tuple[Token, ...] = ()

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def surfaces(self) -> Tuple[str, ...]:
        return tuple(token.surface for token in self.tokens)

    @property
    def text(self) -> str:
        return " ".join(self.surfaces)

    @property
    def is_trainable(self) -> bool:
        """Empty sentences are skipped by the loaders."""
        return self.n >= 1

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def __getitem__(self, index: int) -> Token:
        return self.tokens[index]


@dataclass(frozen=True)
class Vocabulary:
    """
    Dense word ids plus corpus frequencies and the stopword set W.

    Id 0 is the unknown word and the last id is the separator used between a
    prefixed context and the masked body. Known words occupy ids
    ``1..num_words``.
    """

    id_to_word: Tuple[str, ...]
    frequencies: Dict[str, int] = field(default_factory=dict)
    stopwords: FrozenSet[str] = frozenset()

    def __post_init__(self):
        if not self.id_to_word or self.id_to_word[0] != UNKNOWN_SURFACE:
            raise ValueError("Vocabulary must reserve id 0 for the unknown word")
        if self.id_to_word[-1] != SEPARATOR_SURFACE:
            raise ValueError("Vocabulary must end with the separator entry")
        object.__setattr__(
            self,
            "_word_to_id",
            {word: idx for idx, word in enumerate(self.id_to_word)},
        )

    @property
    def size(self) -> int:
        """Number of ids including the unknown word and the separator."""
        return len(self.id_to_word)

    @property
    def separator_id(self) -> int:
        return len(self.id_to_word) - 1

    @property
    def num_words(self) -> int:
        """Number of predictable (known) words."""
        return len(self.id_to_word) - 2

    def lookup(self, surface: str) -> int:
        if surface in RESERVED_SURFACES:
            return UNKNOWN_ID
        return self._word_to_id.get(surface, UNKNOWN_ID)  # type: ignore[attr-defined]

    def word(self, vocab_id: int) -> str:
        return self.id_to_word[vocab_id]

    def frequency(self, surface: str) -> int:
        return self.frequencies.get(surface, 0)

    def make_token(self, surface: str) -> Token:
        return Token(
            surface=surface,
            vocab_id=self.lookup(surface),
            is_stopword=surface in self.stopwords,
        )

    def token_for_id(self, vocab_id: int) -> Token:
        if not 1 <= vocab_id <= self.num_words:
            raise ValueError(f"Id {vocab_id} is not a predictable word")
        return self.make_token(self.id_to_word[vocab_id])

    def encode(self, sentence: Sentence) -> Sentence:
        """Re-key a sentence's tokens against this vocabulary."""
        return Sentence(tuple(self.make_token(token.surface) for token in sentence))

    def with_stopwords(self, stopwords: FrozenSet[str]) -> "Vocabulary":
        return replace(self, stopwords=frozenset(stopwords))
