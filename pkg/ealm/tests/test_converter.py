"""Tests for the LM converter."""

import numpy as np
import pytest
from app.models.editing import EditAction
from app.services.converter import (
    LMConverter,
    compress,
    make_skeleton,
    reconstruct,
    reconstruction_input,
)
from app.services.corpus import build_vocab, tokenize
from tests.helpers import ScriptedLM

R, K, P = EditAction.REMOVE, EditAction.KEEP, EditAction.REPLACE


def test_skeleton_keeps_only_keep_positions():
    x = tokenize("a b c")
    skeleton = make_skeleton(x, [K, R, P])
    assert skeleton[0].surface == "a"
    assert skeleton[1] is None and skeleton[2] is None


def test_skeleton_rejects_length_mismatch():
    with pytest.raises(ValueError):
        make_skeleton(tokenize("a b"), [K])


def test_all_keep_is_identity(toy_lm, toy_corpus):
    x = toy_corpus[0]
    actions = [K] * x.n
    y = compress(x, actions, toy_lm)
    x_hat = reconstruct(y, make_skeleton(x, actions), actions, toy_lm)
    assert y.surfaces == x.surfaces
    assert x_hat.surfaces == x.surfaces


def test_all_remove_gives_empty_summary(toy_lm, toy_corpus):
    x = toy_corpus[1]
    actions = [R] * x.n
    y = compress(x, actions, toy_lm)
    assert y.n == 0
    x_hat = reconstruct(y, make_skeleton(x, actions), actions, toy_lm)
    assert x_hat.n == x.n


def test_reconstruction_input_prefixes_summary(toy_corpus):
    x = toy_corpus[0]
    y = tokenize("john said")
    seq = reconstruction_input(y, make_skeleton(x, [R] + [K] * (x.n - 1)))
    assert seq.prefix == y
    assert seq.mask_positions == [0]


@pytest.mark.parametrize("seed", range(10))
def test_conversion_invariants(toy_lm, toy_corpus, seed):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        x = toy_corpus[int(rng.integers(len(toy_corpus)))]
        actions = [EditAction(int(a)) for a in rng.integers(0, 3, size=x.n)]
        converter = LMConverter(x, toy_lm)

        y, x_hat = converter.convert(actions)

        assert y.n == x.n - actions.count(R)
        assert x_hat.n == x.n
        kept = [token for token, action in zip(x, actions) if action != R]
        for token, action, out in zip(kept, [a for a in actions if a != R], y):
            if action == K:
                assert out.surface == token.surface
        for token, action, out in zip(x, actions, x_hat):
            if action == K:
                assert out.surface == token.surface

        again = LMConverter(x, toy_lm).convert(actions)
        assert again[0].surfaces == y.surfaces
        assert again[1].surfaces == x_hat.surfaces


def test_converter_memoizes_by_action_vector(toy_corpus):
    x = toy_corpus[0]
    lm = ScriptedLM(build_vocab([x]), fills={1: ["x"], 2: ["x", "y"]})
    converter = LMConverter(x, lm)
    actions = [P] + [K] * (x.n - 1)

    first = converter.convert(actions)
    calls = lm.fill_calls
    second = converter.convert(list(actions))
    assert second is first
    assert lm.fill_calls == calls


def test_relaxed_rate_is_memoized(toy_lm, toy_corpus):
    x = toy_corpus[4]
    converter = LMConverter(x, toy_lm)
    actions = [R, P] + [K] * (x.n - 2)
    stopwords = toy_lm.vocab.stopwords

    rate = converter.relaxed_rr(actions, stopwords, 10)
    assert 0.0 <= rate <= 1.0
    assert converter.relaxed_rr(actions, stopwords, 10) == rate
