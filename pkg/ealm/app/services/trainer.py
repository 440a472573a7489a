"""DQN training: replay buffer, TD targets, updates, epsilon schedule and model selection."""

import json
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Deque, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.config import Config, TrainerConfig
from app.models.editing import ActionTrace, Experience, RewardedStep
from app.models.text import Sentence
from app.services.agent import AgentParams, ExplorationPolicy, q_values, run_episode
from app.services.encoder import encode_from_inputs, encoder_backward
from app.services.language_model import MaskedLM
from app.services.numerics import (
    AdamState,
    adam_step,
    backward,
    clip_by_value,
    clip_global_norm,
    forward,
)
from app.services.reward import score_episode

logger = logging.getLogger(__name__)


class ReplayBuffer:
    """Fixed-capacity FIFO of experiences."""

    def __init__(self, capacity: int):
        """Initialize an empty buffer holding at most ``capacity`` experiences."""
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.inserted = 0
        self._items: Deque[Experience] = deque(maxlen=capacity)

    def push(self, experience: Experience) -> None:
        self._items.append(experience)
        self.inserted += 1

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Experience]:
        return iter(self._items)

    def __getitem__(self, index: int) -> Experience:
        return self._items[index]

    def mean_reward(self) -> float:
        if not self._items:
            return 0.0
        return float(np.mean([exp.reward for exp in self._items]))


def build_experiences(
    trace: ActionTrace, rewarded: Sequence[RewardedStep], episode_id: int = 0
) -> List[Experience]:
    """
    Pair every surviving step with the state selected next.

    The transition of the last surviving step is terminal.
    """
    experiences = []
    text = trace.x.text
    for item in rewarded:
        step = trace.steps[item.t - 1]
        following = trace.steps[item.t] if item.t < len(rewarded) else None
        experiences.append(
            Experience(
                state=step.state,
                inputs=step.inputs,
                action=step.action,
                reward=item.reward,
                next_state=following.state if following else None,
                next_inputs=following.inputs if following else None,
                episode_id=episode_id,
                text=text,
            )
        )
    return experiences


def push_episode(buffer: ReplayBuffer, experiences: Iterable[Experience]) -> None:
    """Append experiences in step order; the oldest are evicted first."""
    for experience in experiences:
        if not np.isfinite(experience.reward):
            raise ValueError(f"Non-finite reward {experience.reward}")
        buffer.push(experience)


def sample_batch(
    buffer: ReplayBuffer, batch_size: int, rng: np.random.Generator
) -> List[Experience]:
    """Uniform sample; with replacement only when the buffer is smaller than the batch."""
    if len(buffer) == 0:
        raise ValueError("Cannot sample from an empty replay buffer")
    if len(buffer) < batch_size:
        picks = rng.integers(0, len(buffer), size=batch_size)
    else:
        picks = rng.choice(len(buffer), size=batch_size, replace=False)
    return [buffer[int(i)] for i in picks]


def td_target(exp: Experience, target_params: AgentParams, gamma: float) -> float:
    """ψ = r for terminal transitions, else r + γ·max_a' Q̄(s', a')."""
    if exp.terminal:
        return exp.reward
    if exp.next_inputs is not None:
        next_state = encode_from_inputs(exp.next_inputs, target_params.encoder)
    else:
        next_state = exp.next_state
    return exp.reward + gamma * float(np.max(q_values(target_params, next_state)))


def loss_and_grads(
    params: AgentParams,
    target_params: AgentParams,
    batch: Sequence[Experience],
    gamma: float,
) -> Tuple[float, List[np.ndarray]]:
    """
    Mean squared TD error and its gradients.

    States are rebuilt from their cached inputs with the current encoder
    biases so the bias tables receive gradients; targets are constants.

    Returns:
        (loss, gradients ordered like ``params.parameters()``)
    """
    if not batch:
        raise ValueError("update needs a non-empty batch")

    states = np.vstack(
        [encode_from_inputs(exp.inputs, params.encoder).s for exp in batch]
    )
    actions = np.asarray([int(exp.action) for exp in batch], dtype=np.int64)
    targets = np.asarray([td_target(exp, target_params, gamma) for exp in batch])

    q = forward(params.net, states)
    rows = np.arange(len(batch))
    errors = q[rows, actions] - targets
    loss = float(np.mean(errors**2))

    output_grad = np.zeros_like(q)
    output_grad[rows, actions] = 2.0 * errors / len(batch)
    net_grads, state_grads = backward(params.net, states, output_grad)

    grad_action = np.zeros_like(params.encoder.action_bias)
    grad_status = np.zeros_like(params.encoder.status_bias)
    for exp, state_grad in zip(batch, state_grads):
        g_action, g_status = encoder_backward(exp.inputs, params.encoder, state_grad)
        grad_action += g_action
        grad_status += g_status

    return loss, net_grads + [grad_action, grad_status]


def update(
    params: AgentParams,
    target_params: AgentParams,
    batch: Sequence[Experience],
    adam_state: AdamState,
    cfg: TrainerConfig,
) -> float:
    """One clipped Adam step on the TD loss. Returns the loss before the step."""
    loss, grads = loss_and_grads(params, target_params, batch, cfg.gamma)
    if cfg.clip_mode == "value":
        grads = clip_by_value(grads, cfg.clip_norm)
    else:
        grads = clip_global_norm(grads, cfg.clip_norm)
    adam_step(adam_state, params.parameters(), grads)
    return loss


def sync_target(params: AgentParams, target_params: AgentParams) -> None:
    """Hard-copy every parameter into the target network in place."""
    for source, target in zip(params.parameters(), target_params.parameters()):
        target[...] = source


def epsilon_at(update_count: int, cfg: TrainerConfig) -> float:
    """max(floor, start · decay^⌊updates / period⌋)."""
    if update_count < 0:
        raise ValueError(f"update_count must be >= 0, got {update_count}")
    decayed = cfg.epsilon_start * cfg.epsilon_decay ** (
        update_count // cfg.epsilon_period
    )
    return max(cfg.epsilon_floor, decayed)


@dataclass
class Checkpoint:
    """Parameters snapshotted together with the buffer's mean reward."""

    update: int
    episode: int
    mean_reward: float
    params: AgentParams


def select_model(history: Sequence[Checkpoint]) -> Checkpoint:
    """Highest mean buffer reward; ties go to the earliest checkpoint."""
    if not history:
        raise ValueError("No checkpoint has been recorded")
    best = history[0]
    for checkpoint in history[1:]:
        if checkpoint.mean_reward > best.mean_reward:
            best = checkpoint
    return best


@dataclass
class TrainingResult:
    params: AgentParams
    selected: Checkpoint
    checkpoints: List[Checkpoint] = field(default_factory=list)
    log: List[Dict[str, float]] = field(default_factory=list)


class Trainer:
    """Runs episodes, fills the replay buffer and updates the agent."""

    def __init__(self, lm: MaskedLM, cfg: Config):
        """Initialize the agent, its target copy and the optimizer from ``cfg``."""
        self.lm = lm
        self.cfg = cfg
        self.settings = cfg.trainer
        self.reward_cfg = cfg.reward
        self.rng = np.random.default_rng(self.settings.seed)
        self.params = AgentParams.create(
            lm.embedding_dim, self.rng, cfg.hidden_size, cfg.hidden_layers
        )
        self.target_params = self.params.copy()
        self.buffer = ReplayBuffer(self.settings.buffer_capacity)
        self.adam = AdamState.for_params(
            self.params.parameters(), learning_rate=self.settings.learning_rate
        )
        self.policy = ExplorationPolicy(
            epsilon=self.settings.epsilon_start,
            floor=self.settings.epsilon_floor,
            random_share=cfg.explore_random_share,
            entropy_mode=cfg.entropy_mode,
        )
        self.update_count = 0
        self.checkpoints: List[Checkpoint] = []
        self.log: List[Dict[str, float]] = []

    def _sentences(self, corpus: Sequence[Sentence]) -> Iterator[Sentence]:
        while True:
            for index in self.rng.permutation(len(corpus)):
                yield corpus[int(index)]

    def _checkpoint(self, episode: int) -> None:
        mean_reward = self.buffer.mean_reward()
        self.checkpoints.append(
            Checkpoint(self.update_count, episode, mean_reward, self.params.copy())
        )
        logger.info(
            f"Checkpoint at update {self.update_count} (episode {episode}): "
            f"mean buffer reward {mean_reward:.4f}"
        )

    def run_training_episode(self, x: Sentence, episode: int) -> Optional[float]:
        """Collect one episode and perform at most one update. Returns the loss."""
        epsilon = epsilon_at(self.update_count, self.settings)
        trace = run_episode(
            x,
            self.params,
            self.lm,
            self.reward_cfg,
            replace(self.policy, epsilon=epsilon),
            self.rng,
            cut_at_violation=self.cfg.cut_at_violation,
        )
        rewarded = score_episode(trace, self.reward_cfg)
        push_episode(self.buffer, build_experiences(trace, rewarded, episode))
        if len(self.buffer) == 0:
            return None

        batch = sample_batch(self.buffer, self.settings.batch_size, self.rng)
        loss = update(self.params, self.target_params, batch, self.adam, self.settings)
        self.update_count += 1
        if self.update_count % self.settings.target_sync_period == 0:
            sync_target(self.params, self.target_params)
        self.log.append(
            {
                "episode": episode,
                "update": self.update_count,
                "loss": loss,
                "epsilon": epsilon,
                "buffer_mean_reward": self.buffer.mean_reward(),
            }
        )
        if self.update_count % self.settings.checkpoint_period == 0:
            self._checkpoint(episode)
        return loss

    def train(self, corpus: Sequence[Sentence]) -> TrainingResult:
        """
        Train for the configured number of episodes.

        Args:
            corpus: Training sentences, drawn in a seeded shuffled cycle

        Returns:
            Selected parameters with the checkpoint history and the log

        Raises:
            ValueError: If the corpus is empty or no episode is configured
        """
        if not corpus:
            raise ValueError("Cannot train on an empty corpus")
        if self.settings.episodes < 1:
            raise ValueError("At least one training episode is required")

        logger.info(
            f"Training for {self.settings.episodes} episodes on "
            f"{len(corpus)} sentences (seed {self.settings.seed})"
        )
        sentences = self._sentences(corpus)
        for episode in range(self.settings.episodes):
            self.run_training_episode(next(sentences), episode)

        if not self.checkpoints or self.checkpoints[-1].update != self.update_count:
            self._checkpoint(self.settings.episodes - 1)

        selected = select_model(self.checkpoints)
        logger.info(
            f"Selected checkpoint at update {selected.update} "
            f"(mean buffer reward {selected.mean_reward:.4f})"
        )
        return TrainingResult(
            params=selected.params,
            selected=selected,
            checkpoints=self.checkpoints,
            log=self.log,
        )


def train(corpus: Sequence[Sentence], lm: MaskedLM, cfg: Config) -> TrainingResult:
    """Train one agent from scratch."""
    return Trainer(lm, cfg).train(corpus)


def write_training_log(records: Iterable[Dict[str, float]], path: str | Path) -> None:
    """One JSON object per line, keys sorted."""
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + "\n")
