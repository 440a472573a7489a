"""Tests for model persistence."""

import numpy as np
import pytest
from app.config import RewardConfig
from app.services.agent import AgentParams
from app.services.language_model import MaskedSequence
from app.services.model_store import (
    AGENT_MAGIC,
    LM_MAGIC,
    ModelFormatError,
    load_agent,
    load_lm,
    save_agent,
    save_lm,
)


def test_lm_survives_a_save_and_load(tmp_path, toy_lm, toy_corpus):
    path = save_lm(toy_lm, tmp_path / "lm.model")
    loaded = load_lm(path)

    assert loaded.vocab.id_to_word == toy_lm.vocab.id_to_word
    assert loaded.vocab.stopwords == toy_lm.vocab.stopwords
    assert np.array_equal(loaded.embeddings, toy_lm.embeddings)
    seq = MaskedSequence.masked_at(toy_corpus[0], [1, 3])
    assert np.array_equal(loaded.predict(seq, 1).probs, toy_lm.predict(seq, 1).probs)
    assert loaded.loglikelihood_raw(toy_corpus[1]) == toy_lm.loglikelihood_raw(toy_corpus[1])


def test_saving_twice_is_byte_identical(tmp_path, toy_lm):
    first = save_lm(toy_lm, tmp_path / "a.model")
    second = save_lm(load_lm(first), tmp_path / "b.model")
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text().splitlines()[0] == LM_MAGIC


def test_agent_survives_a_save_and_load(tmp_path, small_params):
    small_params.encoder.action_bias[...] = 0.25
    reward_cfg = RewardConfig(tau=0.6, rr_mode="exact")
    path = save_agent(small_params, reward_cfg, tmp_path / "nested" / "agent.model")

    params, loaded_cfg = load_agent(path)
    assert loaded_cfg == reward_cfg
    for a, b in zip(params.parameters(), small_params.parameters()):
        assert np.array_equal(a, b)
    assert [layer.activation for layer in params.net.layers] == ["relu", "relu", "identity"]

    again = save_agent(params, loaded_cfg, tmp_path / "again.model")
    assert again.read_bytes() == path.read_bytes()


def test_wrong_magic_is_rejected(tmp_path, toy_lm, small_params):
    lm_path = save_lm(toy_lm, tmp_path / "lm.model")
    agent_path = save_agent(small_params, RewardConfig(), tmp_path / "agent.model")

    with pytest.raises(ModelFormatError):
        load_agent(lm_path)
    with pytest.raises(ModelFormatError):
        load_lm(agent_path)


@pytest.mark.parametrize(
    "body",
    ["", "not json\n", "[1, 2]\n", '{"version": 1}\n'],
)
def test_malformed_agent_payload_is_rejected(tmp_path, body):
    path = tmp_path / "agent.model"
    path.write_text(AGENT_MAGIC + "\n" + body)
    with pytest.raises(ModelFormatError):
        load_agent(path)


def test_missing_file_is_a_format_error(tmp_path):
    with pytest.raises(ModelFormatError):
        load_lm(tmp_path / "absent.model")


def test_agent_dimension_mismatch_is_rejected(tmp_path):
    params = AgentParams.zeros(4, hidden_size=3)
    path = save_agent(params, RewardConfig(), tmp_path / "agent.model")
    text = path.read_text().replace('"embedding_dim":4', '"embedding_dim":5')
    path.write_text(text)
    with pytest.raises(ModelFormatError):
        load_agent(path)
