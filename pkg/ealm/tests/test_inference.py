"""Tests for greedy inference and the stopping rule."""

import numpy as np
import pytest
from app.models.editing import EditAction
from app.services.agent import AgentParams
from app.services.corpus import tokenize
from app.services.inference import explain, summarize


def _always(action, dim):
    """An agent that prefers ``action`` for every word."""
    params = AgentParams.zeros(dim, hidden_size=4)
    params.net.layers[-1].bias[int(action)] = 1.0
    return params


def test_always_keep_emits_the_input(toy_lm, toy_corpus, reward_cfg):
    x = toy_corpus[0]
    result = summarize(x, _always(EditAction.KEEP, toy_lm.embedding_dim), toy_lm, reward_cfg)

    assert result.t_star == 0
    assert result.y.surfaces == x.surfaces
    assert result.balance == [1.0] * (x.n + 1)


def test_always_remove_runs_every_step(toy_lm, toy_corpus, reward_cfg):
    x = toy_corpus[3]
    result = summarize(x, _always(EditAction.REMOVE, toy_lm.embedding_dim), toy_lm, reward_cfg)

    assert [step.index for step in result.trace.steps] == list(range(x.n))
    assert result.cr[-1] == 1.0
    assert len(result.cr) == len(result.rr) == x.n + 1


def test_t_star_is_first_best_balance(toy_lm, toy_heldout, reward_cfg, small_params):
    for x in toy_heldout[:10]:
        result = summarize(x, small_params, toy_lm, reward_cfg)
        best = max(result.balance)
        assert result.balance[result.t_star] == best
        assert all(value < best for value in result.balance[: result.t_star])
        if result.t_star:
            assert result.y == result.trace.steps[result.t_star - 1].outcome.y


def test_summarize_is_deterministic(toy_lm, toy_heldout, reward_cfg, small_params):
    x = toy_heldout[4]
    first = summarize(x, small_params, toy_lm, reward_cfg)
    second = summarize(x, small_params, toy_lm, reward_cfg)
    assert first.t_star == second.t_star
    assert first.y.surfaces == second.y.surfaces
    assert first.cr == second.cr and first.rr == second.rr


def test_relaxed_stopping_rule_is_available(toy_lm, toy_heldout, reward_cfg, small_params):
    result = summarize(toy_heldout[0], small_params, toy_lm, reward_cfg, rr_mode="relaxed")
    assert all(0.0 <= rate <= 1.0 for rate in result.rr)


def test_summarize_rejects_empty_sentence(toy_lm, reward_cfg, small_params):
    with pytest.raises(ValueError):
        summarize(tokenize(""), small_params, toy_lm, reward_cfg)


def test_explain_marks_the_emitted_step(toy_lm, toy_corpus, reward_cfg):
    x = toy_corpus[0]
    table = explain(x, _always(EditAction.KEEP, toy_lm.embedding_dim), toy_lm, reward_cfg)
    lines = table.splitlines()

    assert lines[0] == f"x = {x.text}"
    assert lines[2].startswith("  0*")
    assert lines[-1] == f"summary (t*=0) = {x.text}"
    assert len(lines) == x.n + 4
    assert np.sum(["!" in line for line in lines[3:-1]]) == x.n
