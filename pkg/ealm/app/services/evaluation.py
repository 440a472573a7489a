"""Summary evaluation: byte capping, ROUGE-1/2/L, LEN, NW and the Lead-N baseline."""

import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

from app.models.text import Sentence
from app.services.corpus import CorpusError, read_lines, tokenize

logger = logging.getLogger(__name__)

DEFAULT_BYTE_CAP = 75

Scores = Tuple[float, float, float]


class EvaluationError(Exception):
    """Raised when evaluation inputs are empty or not line-aligned."""


def byte_cap(s: Sentence, limit: int = DEFAULT_BYTE_CAP) -> Sentence:
    """Longest token prefix whose space-joined UTF-8 form fits in ``limit`` bytes."""
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    used = 0
    kept = 0
    for token in s:
        width = len(token.surface.encode("utf-8")) + (1 if kept else 0)
        if used + width > limit:
            break
        used += width
        kept += 1
    return Sentence(s.tokens[:kept])


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ngrams(words: Sequence[str], n: int) -> Counter:
    return Counter(tuple(words[i : i + n]) for i in range(len(words) - n + 1))


def _best(scores: List[Scores]) -> Scores:
    best = scores[0]
    for score in scores[1:]:
        if score[2] > best[2]:
            best = score
    return best


def rouge_n(
    candidate: Sequence[str], references: Sequence[Sequence[str]], n: int
) -> Scores:
    """
    Clipped n-gram overlap as (precision, recall, F1).

    With several references the one giving the best F1 is reported.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not references:
        raise ValueError("rouge_n needs at least one reference")

    cand = _ngrams(candidate, n)
    cand_total = sum(cand.values())
    scores = []
    for reference in references:
        ref = _ngrams(reference, n)
        ref_total = sum(ref.values())
        if cand_total == 0 or ref_total == 0:
            scores.append((0.0, 0.0, 0.0))
            continue
        overlap = sum((cand & ref).values())
        precision = overlap / cand_total
        recall = overlap / ref_total
        scores.append((precision, recall, _f1(precision, recall)))
    return _best(scores)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b):
            if x == y:
                current.append(previous[j] + 1)
            else:
                current.append(max(previous[j + 1], current[j]))
        previous = current
    return previous[-1]


def rouge_l(candidate: Sequence[str], references: Sequence[Sequence[str]]) -> Scores:
    """Longest-common-subsequence precision, recall and F1 (best reference)."""
    if not references:
        raise ValueError("rouge_l needs at least one reference")
    scores = []
    for reference in references:
        if not candidate or not reference:
            scores.append((0.0, 0.0, 0.0))
            continue
        common = lcs_length(candidate, reference)
        precision = common / len(candidate)
        recall = common / len(reference)
        scores.append((precision, recall, _f1(precision, recall)))
    return _best(scores)


def count_new_words(x: Sentence, y: Sentence) -> int:
    """Occurrences of summary words that never appear in the source."""
    seen = set(x.surfaces)
    return sum(1 for surface in y.surfaces if surface not in seen)


def lead_n(x: Sentence, n: int = 8) -> Sentence:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return Sentence(x.tokens[:n])


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    """Corpus means over one system's summaries."""

    system: str
    rouge1: RougeScore
    rouge2: RougeScore
    rouge_l: RougeScore
    mean_len: float
    mean_nw: float
    count: int
    cap: int = DEFAULT_BYTE_CAP


def _mean(scores: List[Scores]) -> RougeScore:
    count = len(scores)
    return RougeScore(
        precision=sum(s[0] for s in scores) / count,
        recall=sum(s[1] for s in scores) / count,
        f1=sum(s[2] for s in scores) / count,
    )


def evaluate(
    candidates: Sequence[Sentence],
    sources: Sequence[Sentence],
    references: Sequence[Sequence[Sentence]],
    cap: int = DEFAULT_BYTE_CAP,
    system: str = "system",
) -> EvalReport:
    """
    Score line-aligned summaries.

    ROUGE is computed on byte-capped candidates; LEN and NW use the uncapped
    summaries.

    Args:
        candidates: One summary per line
        sources: The input sentence of each line
        references: The reference summaries of each line
        cap: Byte limit applied before ROUGE
        system: Name shown in the report

    Returns:
        The aggregated report

    Raises:
        EvaluationError: If there is nothing to score or the inputs are misaligned
    """
    if not candidates:
        raise EvaluationError("No candidate summaries to evaluate")
    if not len(candidates) == len(sources) == len(references):
        raise EvaluationError(
            f"Misaligned inputs: {len(candidates)} candidates, "
            f"{len(sources)} sources, {len(references)} reference lines"
        )

    r1: List[Scores] = []
    r2: List[Scores] = []
    rl: List[Scores] = []
    lengths = 0
    new_words = 0
    for candidate, source, refs in zip(candidates, sources, references):
        if not refs:
            raise EvaluationError("Every line needs at least one reference")
        capped = list(byte_cap(candidate, cap).surfaces)
        ref_words = [list(ref.surfaces) for ref in refs]
        r1.append(rouge_n(capped, ref_words, 1))
        r2.append(rouge_n(capped, ref_words, 2))
        rl.append(rouge_l(capped, ref_words))
        lengths += candidate.n
        new_words += count_new_words(source, candidate)

    count = len(candidates)
    return EvalReport(
        system=system,
        rouge1=_mean(r1),
        rouge2=_mean(r2),
        rouge_l=_mean(rl),
        mean_len=lengths / count,
        mean_nw=new_words / count,
        count=count,
        cap=cap,
    )


def _read_sentences(path: str | Path) -> List[Sentence]:
    try:
        return [tokenize(line) for line in read_lines(path)]
    except CorpusError as e:
        raise EvaluationError(str(e))


def evaluate_files(
    candidates_path: str | Path,
    sources_path: str | Path,
    reference_paths: Sequence[str | Path],
    cap: int = DEFAULT_BYTE_CAP,
) -> EvalReport:
    """Evaluate line-aligned files; every reference file contributes one reference per line."""
    candidates = _read_sentences(candidates_path)
    sources = _read_sentences(sources_path)
    reference_sets = [_read_sentences(path) for path in reference_paths]
    if not reference_sets:
        raise EvaluationError("At least one reference file is required")

    files = [candidates_path, sources_path, *reference_paths]
    counts = [len(candidates), len(sources)] + [len(refs) for refs in reference_sets]
    if len(set(counts)) != 1:
        listing = ", ".join(f"{path} ({count})" for path, count in zip(files, counts))
        raise EvaluationError(f"Line counts differ: {listing}")

    references = [list(refs) for refs in zip(*reference_sets)]
    logger.info(f"Evaluating {len(candidates)} summaries from {candidates_path}")
    return evaluate(
        candidates, sources, references, cap, system=Path(candidates_path).name
    )


def format_report(report: EvalReport, machine: bool = False) -> str:
    """Aligned plain-text table, optionally followed by a ``key=value`` block."""
    lines = [
        f"# ROUGE on summaries capped at {report.cap} bytes; LEN and NW on uncapped summaries",
        f"{'system':<24}{'R-1':>8}{'R-2':>8}{'R-L':>8}{'LEN':>8}{'NW':>8}{'N':>6}",
        f"{report.system[:24]:<24}"
        f"{report.rouge1.f1 * 100:>8.2f}"
        f"{report.rouge2.f1 * 100:>8.2f}"
        f"{report.rouge_l.f1 * 100:>8.2f}"
        f"{report.mean_len:>8.2f}"
        f"{report.mean_nw:>8.2f}"
        f"{report.count:>6d}",
    ]
    if machine:
        values = {
            "system": report.system,
            "count": report.count,
            "cap": report.cap,
            "len": f"{report.mean_len:.6f}",
            "nw": f"{report.mean_nw:.6f}",
        }
        for name, score in (
            ("rouge1", report.rouge1),
            ("rouge2", report.rouge2),
            ("rougeL", report.rouge_l),
        ):
            values[f"{name}_p"] = f"{score.precision:.6f}"
            values[f"{name}_r"] = f"{score.recall:.6f}"
            values[f"{name}_f"] = f"{score.f1:.6f}"
        lines.append("")
        lines.extend(f"{key}={value}" for key, value in values.items())
    return "\n".join(lines) + "\n"
