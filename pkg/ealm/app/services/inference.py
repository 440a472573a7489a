"""Greedy inference with the best-balance stopping rule."""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from app.config import RewardConfig
from app.models.editing import ActionTrace
from app.models.text import Sentence
from app.services.agent import AgentParams, ExplorationPolicy, run_episode
from app.services.language_model import MaskedLM

logger = logging.getLogger(__name__)


@dataclass
class SummaryResult:
    """The emitted summary and the per-step rates it was chosen from (index 0 is the untouched input)."""

    t_star: int
    y: Sentence
    cr: List[float]
    rr: List[float]
    trace: ActionTrace

    @property
    def balance(self) -> List[float]:
        return [c + r for c, r in zip(self.cr, self.rr)]


def summarize(
    x: Sentence,
    params: AgentParams,
    lm: MaskedLM,
    reward_cfg: RewardConfig,
    rr_mode: str = "exact",
) -> SummaryResult:
    """
    Run a greedy episode over every word and keep the best-balanced step.

    Args:
        x: Input sentence
        params: Trained agent
        lm: Masked LM
        reward_cfg: Reward settings (thresholds are only reported)
        rr_mode: Reconstruction rate used for the stopping rule

    Returns:
        y at t* = argmax_t cr_(t) + rr_(t), ties going to the earliest step
    """
    if x.n < 1:
        raise ValueError("Cannot summarize an empty sentence")

    cfg = reward_cfg.model_copy(update={"rr_mode": rr_mode})
    trace = run_episode(
        x,
        params,
        lm,
        cfg,
        ExplorationPolicy.greedy(),
        np.random.default_rng(0),
        cut_at_violation=False,
        assess=False,
    )
    cr = [0.0] + [step.outcome.cr for step in trace.steps]
    rr = [1.0] + [step.outcome.rr for step in trace.steps]
    t_star = int(np.argmax(np.asarray(cr) + np.asarray(rr)))
    y = x if t_star == 0 else trace.steps[t_star - 1].outcome.y
    return SummaryResult(t_star=t_star, y=y, cr=cr, rr=rr, trace=trace)


def explain(
    x: Sentence,
    params: AgentParams,
    lm: MaskedLM,
    reward_cfg: RewardConfig,
    rr_mode: str = "exact",
) -> str:
    """Step-by-step table of a greedy episode; ``*`` marks the emitted step."""
    result = summarize(x, params, lm, reward_cfg, rr_mode)
    header = f"{'t':>3} {'action':<8}{'word':<14} {'cr/rho':<13} {'rr/tau':<13}  y | x_hat"
    lines = [f"x = {x.text}", header]
    lines.append(
        f"{'0':>3}{'*' if result.t_star == 0 else ' '}{'':<8}{'':<14}"
        f" {0.0:>6.3f}/{'-':>6} {1.0:>6.3f}/{'-':>6}  {x.text} | {x.text}"
    )
    for step in result.trace.steps:
        outcome = step.outcome
        mark = "*" if outcome.t == result.t_star else " "
        flag = "  !" if outcome.violated else ""
        lines.append(
            f"{outcome.t:>3}{mark}{step.action.name.lower():<8}"
            f"{x[step.index].surface[:14]:<14}"
            f" {outcome.cr:>6.3f}/{outcome.rho_t:<6.3f}"
            f" {outcome.rr:>6.3f}/{outcome.tau_t:<6.3f}"
            f"  {outcome.y.text} | {outcome.x_hat.text}{flag}"
        )
    lines.append(f"summary (t*={result.t_star}) = {result.y.text}")
    return "\n".join(lines) + "\n"
