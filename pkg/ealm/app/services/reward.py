"""Compression/reconstruction rates, step reward, violation penalty and summary assessment."""

import logging
from typing import FrozenSet, List, Optional, Sequence

from app.config import RewardConfig
from app.models.editing import ActionTrace, EditAction, RewardedStep, Skeleton
from app.models.text import Sentence
from app.services.converter import compress, relaxed_recovery
from app.services.language_model import MaskedLM

logger = logging.getLogger(__name__)

VIOLATION_REWARD = -1.0


def compression_rate(x: Sentence, y: Sentence) -> float:
    """cr = 1 - |y| / |x|."""
    if x.n < 1:
        raise ValueError("compression_rate needs a non-empty source sentence")
    return 1.0 - y.n / x.n


def reconstruction_rate_exact(x: Sentence, x_hat: Sentence) -> float:
    """Fraction of positions where x̂ reproduces x."""
    if x.n != x_hat.n:
        raise ValueError(f"Length mismatch: x has {x.n} words, x_hat has {x_hat.n}")
    if x.n == 0:
        return 1.0
    matches = sum(a.surface == b.surface for a, b in zip(x, x_hat))
    return matches / x.n


def reconstruction_rate_relaxed(
    x: Sentence,
    skeleton: Skeleton,
    actions: Sequence[EditAction],
    lm: MaskedLM,
    stopwords: FrozenSet[str],
    k: int = 10,
    y: Optional[Sentence] = None,
) -> float:
    """
    Reconstruction rate over non-stopwords with top-k credit.

    Args:
        x: Source sentence
        skeleton: Skeleton built from ``actions``
        actions: Action vector
        lm: Masked LM
        stopwords: The excluded word set W
        k: Candidate list size
        y: Summary used as prefixed context; compressed from ``x`` when omitted

    Returns:
        Rate in [0, 1]; 1.0 when every word is a stopword
    """
    if y is None:
        y = compress(x, actions, lm)
    recovered, eligible = relaxed_recovery(x, y, skeleton, lm, stopwords, k)
    if eligible == 0:
        return 1.0
    return recovered / eligible


def tau_at(t: int, tau: float, n: int) -> float:
    """Reconstruction threshold τ_(t) = 1 - t(1 - τ)/N."""
    if n < 1 or not 0 <= t <= n:
        raise ValueError(f"Need 0 <= t <= N and N >= 1, got t={t}, N={n}")
    return 1.0 - t * (1.0 - tau) / n


def rho_at(t: int, rho: float, n: int) -> float:
    """Compression threshold ρ_(t) = tρ/N."""
    if n < 1 or not 0 <= t <= n:
        raise ValueError(f"Need 0 <= t <= N and N >= 1, got t={t}, N={n}")
    return t * rho / n


def step_reward(
    y_t: Sentence, y_prev: Sentence, rr_t: float, tau_t: float, mode: str = "formula"
) -> float:
    """
    r_SR = r_C × r_R.

    ``unit`` mode scores any length reduction as r_C = 1; ``formula`` uses
    r_C = 1 - |y_(t)| / |y_(t-1)|.
    """
    if y_prev.n < 1:
        raise ValueError("step_reward needs a non-empty previous summary")
    if y_t.n == y_prev.n:
        return 0.0
    r_c = 1.0 if mode == "unit" else 1.0 - y_t.n / y_prev.n
    r_r = 1.0 if rr_t > tau_t else -1.0
    return r_c * r_r


def check_violation(cr_t: float, rr_t: float, rho_t: float, tau_t: float) -> bool:
    """Both constraints are strict: cr must exceed ρ_(t) and rr must exceed τ_(t)."""
    return cr_t <= rho_t or rr_t <= tau_t


def summary_assessment(
    t_final: int,
    n: int,
    cr_final: float,
    rr_final: float,
    sim_xy: float,
    llh_y: float,
    alpha: float,
    beta: float,
) -> float:
    """r_SA = (T/N)·[cr·rr + α·sim + β·llh]."""
    if n < 1 or not 1 <= t_final <= n:
        raise ValueError(f"Need 1 <= T <= N, got T={t_final}, N={n}")
    return (t_final / n) * (cr_final * rr_final + alpha * sim_xy + beta * llh_y)


def score_episode(trace: ActionTrace, cfg: RewardConfig) -> List[RewardedStep]:
    """
    Turn an episode into rewarded steps.

    Steps after the first violation T are dropped, the step-T step reward is
    forced to -1 when T violated, and every surviving step receives the same
    r_SA computed from step-T quantities.
    """
    if not trace.steps:
        return []

    t_final = trace.final_step
    last = trace.steps[t_final - 1].outcome
    r_sa = summary_assessment(
        t_final,
        trace.n,
        last.cr,
        last.rr,
        trace.sim,
        trace.llh,
        cfg.alpha,
        cfg.beta,
    )

    rewarded = []
    for step in trace.steps[:t_final]:
        outcome = step.outcome
        r_sr = VIOLATION_REWARD if outcome.violated else outcome.r_sr
        rewarded.append(RewardedStep(t=outcome.t, r_sr=r_sr, r_sa=r_sa))
    return rewarded
