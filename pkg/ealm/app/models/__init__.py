"""Domain types for the edit-based summarizer."""

from .editing import (
    NUM_ACTIONS,
    ActionTrace,
    EditAction,
    EditState,
    Experience,
    RewardedStep,
    Skeleton,
    StateInputs,
    StateVector,
    StepOutcome,
    TraceStep,
)
from .text import (
    SEPARATOR_SURFACE,
    UNKNOWN_ID,
    UNKNOWN_SURFACE,
    Sentence,
    Token,
    Vocabulary,
)

__all__ = [
    "NUM_ACTIONS",
    "SEPARATOR_SURFACE",
    "UNKNOWN_ID",
    "UNKNOWN_SURFACE",
    "ActionTrace",
    "EditAction",
    "EditState",
    "Experience",
    "RewardedStep",
    "Sentence",
    "Skeleton",
    "StateInputs",
    "StateVector",
    "StepOutcome",
    "Token",
    "TraceStep",
    "Vocabulary",
]
