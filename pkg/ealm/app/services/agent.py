"""The editorial agent: Q-values over word states, action selection and episode rollout."""

import logging
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from app.config import RewardConfig
from app.models.editing import (
    NUM_ACTIONS,
    ActionTrace,
    EditAction,
    EditState,
    StateInputs,
    StateVector,
    StepOutcome,
    TraceStep,
)
from app.models.text import Sentence
from app.services.converter import LMConverter
from app.services.encoder import EncoderParams, encode_all, token_embedding
from app.services.language_model import MaskedLM, llh, sim
from app.services.numerics import DenseNet, forward, init_dense_net
from app.services.reward import (
    check_violation,
    compression_rate,
    reconstruction_rate_exact,
    rho_at,
    step_reward,
    tau_at,
)

logger = logging.getLogger(__name__)

LITERAL_ENTROPY_FLOOR = 1e-9


@dataclass
class AgentParams:
    """Q-network plus the encoder bias tables it is trained with."""

    net: DenseNet
    encoder: EncoderParams

    def __post_init__(self):
        if self.net.output_dim != NUM_ACTIONS:
            raise ValueError(f"Q-network must output {NUM_ACTIONS} values")
        if self.net.input_dim != 2 * self.encoder.dim:
            raise ValueError(
                f"Q-network input {self.net.input_dim} != 2 x embedding dim "
                f"{self.encoder.dim}"
            )

    @classmethod
    def create(
        cls,
        dim: int,
        rng: np.random.Generator,
        hidden_size: int = 200,
        hidden_layers: int = 2,
    ) -> "AgentParams":
        sizes = [2 * dim] + [hidden_size] * hidden_layers + [NUM_ACTIONS]
        return cls(init_dense_net(sizes, rng), EncoderParams.zeros(dim))

    @classmethod
    def zeros(
        cls, dim: int, hidden_size: int = 200, hidden_layers: int = 2
    ) -> "AgentParams":
        sizes = [2 * dim] + [hidden_size] * hidden_layers + [NUM_ACTIONS]
        return cls(DenseNet.zeros(sizes), EncoderParams.zeros(dim))

    def parameters(self) -> List[np.ndarray]:
        return self.net.parameters() + self.encoder.parameters()

    def copy(self) -> "AgentParams":
        return AgentParams(self.net.copy(), self.encoder.copy())


def q_values(params: AgentParams, s: StateVector) -> np.ndarray:
    """Q(s, ·) ordered (Remove, Keep, Replace)."""
    return forward(params.net, s.s)


def q_matrix(params: AgentParams, states: Sequence[StateVector]) -> np.ndarray:
    """Q-values of many states as an ``(N, 3)`` matrix."""
    return forward(params.net, np.vstack([s.s for s in states]))


def _unoperated(statuses: Sequence[bool]) -> np.ndarray:
    open_positions = np.flatnonzero(~np.asarray(statuses, dtype=bool))
    if open_positions.size == 0:
        raise ValueError("Every word has already been operated")
    return open_positions


def greedy_from_q(q: np.ndarray, statuses: Sequence[bool]) -> Tuple[int, EditAction]:
    """Joint argmax over open positions; ties go to the lower action, then the lower index."""
    _unoperated(statuses)
    masked = np.where(np.asarray(statuses, dtype=bool)[:, None], -np.inf, q)
    flat = int(np.argmax(masked.T))
    action, index = divmod(flat, q.shape[0])
    return index, EditAction(action)


def select_greedy(
    states: Sequence[StateVector], statuses: Sequence[bool], params: AgentParams
) -> Tuple[int, EditAction]:
    """The most confident (word, action) pair among unoperated words."""
    return greedy_from_q(q_matrix(params, states), statuses)


def state_entropy(q: np.ndarray, mode: str = "normalized") -> np.ndarray:
    """
    Entropy of each row of Q-values.

    ``normalized`` applies a softmax first; ``literal`` uses the Q-values as
    they are, clamped to a small positive floor.
    """
    if mode == "normalized":
        shifted = q - q.max(axis=-1, keepdims=True)
        probs = np.exp(shifted)
        probs /= probs.sum(axis=-1, keepdims=True)
    else:
        probs = np.maximum(q, LITERAL_ENTROPY_FLOOR)
    return -np.sum(probs * np.log(probs), axis=-1)


def entropy_pick(
    q: np.ndarray, statuses: Sequence[bool], mode: str = "normalized"
) -> Tuple[int, EditAction]:
    """The most uncertain open word, with its greedy action."""
    open_positions = _unoperated(statuses)
    entropy = state_entropy(q[open_positions], mode)
    index = int(open_positions[int(np.argmax(entropy))])
    return index, EditAction(int(np.argmax(q[index])))


@dataclass
class ExplorationPolicy:
    """Epsilon-greedy over both the prediction order and the action."""

    epsilon: float = 0.9
    floor: float = 0.03
    random_share: float = 0.5
    entropy_mode: str = "normalized"

    def __post_init__(self):
        if not self.floor <= self.epsilon <= 1.0:
            raise ValueError(
                f"epsilon {self.epsilon} must lie in [floor={self.floor}, 1]"
            )

    @classmethod
    def greedy(cls) -> "ExplorationPolicy":
        return cls(epsilon=0.0, floor=0.0)

    def choose(
        self,
        params: AgentParams,
        states: Sequence[StateVector],
        statuses: Sequence[bool],
        rng: np.random.Generator,
    ) -> Tuple[int, EditAction]:
        return select_explore(states, statuses, params, self, rng)


class Policy(Protocol):
    def choose(
        self,
        params: AgentParams,
        states: Sequence[StateVector],
        statuses: Sequence[bool],
        rng: np.random.Generator,
    ) -> Tuple[int, EditAction]: ...


def select_explore(
    states: Sequence[StateVector],
    statuses: Sequence[bool],
    params: AgentParams,
    policy: ExplorationPolicy,
    rng: np.random.Generator,
) -> Tuple[int, EditAction]:
    """
    Epsilon-greedy selection.

    With probability ε the agent explores: either a uniformly random open word
    and action, or the most uncertain open word with its greedy action.
    """
    q = q_matrix(params, states)
    if rng.random() >= policy.epsilon:
        return greedy_from_q(q, statuses)

    if rng.random() < policy.random_share:
        open_positions = _unoperated(statuses)
        index = int(rng.choice(open_positions))
        return index, EditAction(int(rng.integers(NUM_ACTIONS)))

    return entropy_pick(q, statuses, policy.entropy_mode)


def run_episode(
    x: Sentence,
    params: AgentParams,
    lm: MaskedLM,
    cfg: RewardConfig,
    policy: Policy,
    rng: np.random.Generator,
    stopwords: Optional[FrozenSet[str]] = None,
    cut_at_violation: bool = True,
    assess: bool = True,
) -> ActionTrace:
    """
    Let the agent edit ``x`` word by word.

    Every step re-encodes all states, picks one (word, action), applies it and
    records y, x̂ and the reward quantities for the new action vector.

    Args:
        x: Source sentence
        params: Agent parameters
        lm: Masked LM for conversion and assessment
        cfg: Reward settings
        policy: Anything with a ``choose`` method
        rng: Random stream for exploration
        stopwords: W for the relaxed reconstruction rate (defaults to the LM's)
        cut_at_violation: Stop at the first violation; later steps are never used
        assess: Compute sim and llh for the final summary

    Returns:
        The episode trace
    """
    if x.n < 1:
        raise ValueError("Cannot run an episode on an empty sentence")

    n = x.n
    embeddings = token_embedding(x, lm)
    edit = EditState.initial(n)
    converter = LMConverter(x, lm)
    words = stopwords if stopwords is not None else lm.vocab.stopwords
    trace = ActionTrace(x=x, embeddings=embeddings)
    y_prev = x

    for t in range(1, n + 1):
        states = encode_all(x, edit, embeddings, params.encoder)
        index, action = policy.choose(params, states, edit.statuses, rng)
        actions_before, statuses_before = edit.snapshot()
        edit.commit(index, action)

        y, x_hat = converter.convert(edit.actions)
        cr = compression_rate(x, y)
        if cfg.rr_mode == "exact":
            rr = reconstruction_rate_exact(x, x_hat)
        else:
            rr = converter.relaxed_rr(edit.actions, words, cfg.rr_topk, y)
        tau_t = tau_at(t, cfg.tau, n)
        rho_t = rho_at(t, cfg.rho, n)
        r_sr = (
            step_reward(y, y_prev, rr, tau_t, cfg.step_reward_mode) if y_prev.n else 0.0
        )
        violated = check_violation(cr, rr, rho_t, tau_t)

        trace.steps.append(
            TraceStep(
                index=index,
                action=action,
                state=states[index],
                inputs=StateInputs(embeddings, actions_before, statuses_before, index),
                outcome=StepOutcome(
                    t=t,
                    action=action,
                    y=y,
                    x_hat=x_hat,
                    cr=cr,
                    rr=rr,
                    tau_t=tau_t,
                    rho_t=rho_t,
                    r_sr=r_sr,
                    violated=violated,
                ),
            )
        )
        y_prev = y
        if violated and cut_at_violation:
            break

    if assess:
        y_final = trace.steps[trace.final_step - 1].outcome.y
        trace.sim = sim(x, y_final, lm)
        trace.llh = llh(y_final, lm, cfg.llh_threshold, cfg.llh_mode)
    return trace


def next_state_of(trace: ActionTrace, t: int) -> Optional[StateVector]:
    """The state selected at step t+1, or ``None`` when step t is terminal."""
    t_final = trace.final_step
    if not 1 <= t <= t_final:
        raise ValueError(f"Step {t} is outside 1..{t_final}")
    if t == t_final:
        return None
    return trace.steps[t].state
