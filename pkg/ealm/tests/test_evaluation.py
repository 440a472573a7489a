"""Tests for summary evaluation."""

import numpy as np
import pytest
from app.models.text import Sentence, Token
from app.services.corpus import tokenize
from app.services.evaluation import (
    EvaluationError,
    byte_cap,
    count_new_words,
    evaluate,
    evaluate_files,
    format_report,
    lcs_length,
    lead_n,
    rouge_l,
    rouge_n,
)


def _words(text):
    return text.split()


def test_rouge1_partial_overlap():
    precision, recall, f1 = rouge_n(_words("the cat sat"), [_words("the cat")], 1)
    assert precision == pytest.approx(2 / 3)
    assert recall == pytest.approx(1.0)
    assert f1 == pytest.approx(0.8)


def test_rouge2_counts_bigrams():
    _, _, f1 = rouge_n(_words("the cat sat"), [_words("the cat")], 2)
    assert f1 == pytest.approx(2 / 3)


def test_rouge_clips_repeated_ngrams():
    precision, _, _ = rouge_n(_words("the the the"), [_words("the cat")], 1)
    assert precision == pytest.approx(1 / 3)


def test_rouge_l_uses_subsequence():
    assert lcs_length(_words("a c b"), _words("a b c")) == 2
    _, _, f1 = rouge_l(_words("a c b"), [_words("a b c")])
    assert f1 == pytest.approx(2 / 3)


@pytest.mark.parametrize("metric", [lambda c, r: rouge_n(c, r, 1), lambda c, r: rouge_n(c, r, 2), rouge_l])
def test_rouge_extremes(metric):
    text = _words("john said the company would cut jobs")
    assert metric(text, [text])[2] == pytest.approx(1.0)
    assert metric(text, [_words("nothing here overlaps at all")])[2] == 0.0
    assert metric([], [text])[2] == 0.0


def test_rouge_takes_best_reference():
    candidate = _words("the cat sat")
    scores = rouge_n(candidate, [_words("dogs bark"), _words("the cat sat")], 1)
    assert scores[2] == pytest.approx(1.0)


def test_rouge_requires_references():
    with pytest.raises(ValueError):
        rouge_n(_words("a"), [], 1)
    with pytest.raises(ValueError):
        rouge_l(_words("a"), [])


def test_byte_cap_keeps_whole_tokens():
    capped = byte_cap(tokenize(" ".join(["aaaa"] * 20)))
    assert capped.n == 15
    assert len(capped.text.encode("utf-8")) == 74


def test_byte_cap_below_first_token_is_empty():
    assert byte_cap(tokenize("extraordinarily long"), limit=5).n == 0


def test_byte_cap_short_sentence_is_unchanged():
    x = tokenize("short one")
    assert byte_cap(x) == x


@pytest.mark.parametrize("seed", range(5))
def test_byte_cap_handles_multibyte_text(seed):
    rng = np.random.default_rng(seed)
    alphabet = ["a", "é", "ß", "中", "文", "😀", "z"]
    words = [
        "".join(rng.choice(alphabet, size=int(rng.integers(1, 6)))) for _ in range(int(rng.integers(1, 40)))
    ]
    x = Sentence(tuple(Token(word) for word in words))

    capped = byte_cap(x)
    assert len(capped.text.encode("utf-8")) <= 75
    assert capped.surfaces == x.surfaces[: capped.n]
    if capped.n < x.n:
        longer = Sentence(x.tokens[: capped.n + 1])
        assert len(longer.text.encode("utf-8")) > 75


def test_byte_cap_rejects_bad_limit():
    with pytest.raises(ValueError):
        byte_cap(tokenize("a"), limit=0)


def test_count_new_words():
    x = tokenize("john said the company would cut jobs")
    assert count_new_words(x, tokenize("company cut jobs")) == 0
    assert count_new_words(x, tokenize("firm cut jobs")) == 1
    assert count_new_words(x, tokenize("firm firm jobs")) == 2
    assert count_new_words(x, Sentence()) == 0


def test_lead_n():
    x = tokenize("a b c d e f g h i j")
    assert lead_n(x).surfaces == tuple("abcdefgh")
    assert lead_n(tokenize("a b"), 8).surfaces == ("a", "b")
    assert lead_n(x, 3).n == 3
    with pytest.raises(ValueError):
        lead_n(x, 0)


def test_lead_baseline_introduces_no_new_words(toy_heldout):
    candidates = [lead_n(x) for x in toy_heldout]
    report = evaluate(candidates, toy_heldout, [[x] for x in toy_heldout], system="lead-8")
    assert report.mean_nw == 0.0
    assert report.mean_len <= 8
    assert report.rouge1.precision == pytest.approx(1.0)


def test_evaluate_length_uses_uncapped_summary():
    long_summary = tokenize(" ".join(["aaaa"] * 20))
    report = evaluate([long_summary], [long_summary], [[tokenize("aaaa")]], cap=75)
    assert report.mean_len == 20
    assert report.rouge1.precision == pytest.approx(1.0)
    assert report.count == 1


def test_evaluate_rejects_bad_inputs():
    x = tokenize("a b")
    with pytest.raises(EvaluationError):
        evaluate([], [], [])
    with pytest.raises(EvaluationError):
        evaluate([x, x], [x], [[x], [x]])
    with pytest.raises(EvaluationError):
        evaluate([x], [x], [[]])


def test_evaluate_files(tmp_path):
    cand = tmp_path / "cand.txt"
    src = tmp_path / "src.txt"
    ref_a = tmp_path / "ref_a.txt"
    ref_b = tmp_path / "ref_b.txt"
    cand.write_text("company cuts jobs\nrain falls\n")
    src.write_text("the company cuts many jobs\nheavy rain falls today\n")
    ref_a.write_text("company cuts jobs\nsnow\n")
    ref_b.write_text("nothing\nrain falls\n")

    report = evaluate_files(cand, src, [ref_a, ref_b])
    assert report.count == 2
    assert report.rouge1.f1 == pytest.approx(1.0)
    assert report.system == "cand.txt"
    assert report.mean_nw == 0.0


def test_evaluate_files_names_misaligned_files(tmp_path):
    cand = tmp_path / "cand.txt"
    src = tmp_path / "src.txt"
    ref = tmp_path / "ref.txt"
    cand.write_text("a\nb\n")
    src.write_text("a\nb\n")
    ref.write_text("a\n")

    with pytest.raises(EvaluationError) as exc_info:
        evaluate_files(cand, src, [ref])
    assert "ref.txt (1)" in str(exc_info.value)
    assert "cand.txt (2)" in str(exc_info.value)


def test_format_report():
    x = tokenize("the cat sat")
    report = evaluate([x], [x], [[x]], system="mine")
    text = format_report(report)
    lines = text.splitlines()

    assert lines[0].startswith("# ROUGE on summaries capped at 75 bytes")
    assert lines[2].split() == ["mine", "100.00", "100.00", "100.00", "3.00", "0.00", "1"]
    assert "rouge1_f=1.000000" not in text

    machine = format_report(report, machine=True)
    assert "rouge1_f=1.000000" in machine
    assert "len=3.000000" in machine
