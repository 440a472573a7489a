"""Edit actions, agent states and the per-episode records built from them."""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Optional, Tuple

import numpy as np

from .text import Sentence, Token


class EditAction(IntEnum):
    """Per-word edit operation. Ordinals are fixed for tie-breaking and storage."""

    REMOVE = 0
    KEEP = 1
    REPLACE = 2


NUM_ACTIONS = len(EditAction)

# A skeleton slot holds the original token for Keep, otherwise None (the null token).
Skeleton = Tuple[Optional[Token], ...]


@dataclass
class EditState:
    """Actions and prediction statuses of one sentence at step t."""

    actions: List[EditAction]
    statuses: List[bool]

    @classmethod
    def initial(cls, n: int) -> "EditState":
        return cls(actions=[EditAction.KEEP] * n, statuses=[False] * n)

    @property
    def t(self) -> int:
        return sum(self.statuses)

    @property
    def finished(self) -> bool:
        return all(self.statuses)

    def commit(self, index: int, action: EditAction) -> None:
        if self.statuses[index]:
            raise ValueError(f"Position {index} has already been operated")
        self.actions[index] = action
        self.statuses[index] = True

    def snapshot(self) -> Tuple[Tuple[int, ...], Tuple[bool, ...]]:
        return tuple(int(a) for a in self.actions), tuple(self.statuses)


@dataclass(frozen=True, eq=False)
class StateVector:
    """s = [l; g] for one word at one step."""

    local: np.ndarray
    global_: np.ndarray

    @property
    def s(self) -> np.ndarray:
        return np.concatenate([self.local, self.global_])

    @property
    def dim(self) -> int:
        return self.local.shape[0] + self.global_.shape[0]


@dataclass(frozen=True, eq=False)
class StateInputs:
    """What is needed to rebuild a state with different encoder biases."""

    embeddings: np.ndarray
    actions: Tuple[int, ...]
    statuses: Tuple[bool, ...]
    index: int


@dataclass(frozen=True)
class StepOutcome:
    """Everything the reward engine needs about one step."""

    t: int
    action: EditAction
    y: Sentence
    x_hat: Sentence
    cr: float
    rr: float
    tau_t: float
    rho_t: float
    r_sr: float
    violated: bool


@dataclass(frozen=True, eq=False)
class TraceStep:
    """One committed decision of an episode."""

    index: int
    action: EditAction
    state: StateVector
    inputs: StateInputs
    outcome: StepOutcome


@dataclass(eq=False)
class ActionTrace:
    """The record of a full (or truncated) episode on one sentence."""

    x: Sentence
    embeddings: np.ndarray
    steps: List[TraceStep] = field(default_factory=list)
    sim: float = 0.5
    llh: int = 0

    @property
    def n(self) -> int:
        return self.x.n

    @property
    def final_step(self) -> int:
        """T: the first violating step, else the last recorded one."""
        for step in self.steps:
            if step.outcome.violated:
                return step.outcome.t
        return len(self.steps)

    @property
    def violated(self) -> bool:
        return any(step.outcome.violated for step in self.steps)

    def outcomes(self) -> List[StepOutcome]:
        return [step.outcome for step in self.steps]


@dataclass(frozen=True)
class RewardedStep:
    """A surviving step of a scored episode."""

    t: int
    r_sr: float
    r_sa: float

    @property
    def reward(self) -> float:
        return self.r_sr + self.r_sa


@dataclass(frozen=True, eq=False)
class Experience:
    """One (s, a, r, s', terminal) transition."""

    state: StateVector
    inputs: StateInputs
    action: EditAction
    reward: float
    next_state: Optional[StateVector] = None
    next_inputs: Optional[StateInputs] = None
    episode_id: int = 0
    # Debug metadata only.
    text: str = ""

    @property
    def terminal(self) -> bool:
        return self.next_state is None
