"""Test fixtures and configuration."""

from pathlib import Path

import numpy as np
import pytest
from app.config import Config, RewardConfig
from app.services.agent import AgentParams
from app.services.corpus import build_vocab, load_stopwords, read_lines, tokenize
from app.services.language_model import train_lm

DATA_DIR = Path(__file__).parent.parent / "data"
TOY_CORPUS = DATA_DIR / "toy_corpus.txt"
TOY_HELDOUT = DATA_DIR / "toy_heldout.txt"
STOPWORDS = DATA_DIR / "stopwords.txt"

SMALL_DIM = 16


@pytest.fixture(scope="session")
def toy_corpus():
    """The bundled templated corpus as sentences."""
    return [tokenize(line) for line in read_lines(TOY_CORPUS) if line.strip()]


@pytest.fixture(scope="session")
def toy_heldout():
    return [tokenize(line) for line in read_lines(TOY_HELDOUT) if line.strip()]


@pytest.fixture(scope="session")
def toy_vocab(toy_corpus):
    vocab = build_vocab(toy_corpus)
    return vocab.with_stopwords(load_stopwords(STOPWORDS, vocab, rare_cutoff=3))


@pytest.fixture(scope="session")
def toy_lm(toy_corpus, toy_vocab):
    """Order-3 masked LM with small embeddings, trained once per session."""
    return train_lm(toy_corpus, order=3, vocab=toy_vocab, embedding_dim=SMALL_DIM)


@pytest.fixture
def small_params():
    """A randomly initialized agent small enough for gradient checks."""
    return AgentParams.create(SMALL_DIM, np.random.default_rng(7), hidden_size=8)


@pytest.fixture
def reward_cfg():
    return RewardConfig()


@pytest.fixture
def small_config():
    """Defaults shrunk for fast training tests."""
    return Config(
        embedding_dim=SMALL_DIM,
        hidden_size=16,
        batch_size=8,
        buffer_capacity=64,
        episodes=12,
        checkpoint_period=4,
        target_sync_period=4,
        seed=3,
    )
