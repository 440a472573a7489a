"""Configuration models and loading."""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Literal, Mapping, Optional

import yaml  # type: ignore[import-untyped]
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

logger = logging.getLogger(__name__)


class ConfigError(Exception):
    """Raised when a configuration key is unknown, unparsable or out of range."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CorpusConfig(_Section):
    """Corpus sampling and vocabulary settings."""

    corpus_path: Optional[str] = None
    stopwords_path: Optional[str] = None
    max_len: int = Field(default=50, ge=2)
    sample_size: int = Field(default=30000, ge=1)
    min_freq: int = Field(default=1, ge=1)
    rare_cutoff: int = Field(default=3, ge=0)


class LMConfig(_Section):
    """Reference n-gram masked LM hyperparameters."""

    lm_order: int = Field(default=3, ge=1)
    lm_smoothing: float = Field(default=0.1, gt=0.0)
    lm_lambda_left: float = Field(default=0.5, ge=0.0, le=1.0)
    embedding_dim: int = Field(default=64, ge=1)
    cooccurrence_window: int = Field(default=2, ge=1)


class RewardConfig(_Section):
    """Reward engine settings."""

    tau: float = Field(default=0.5, ge=0.0, le=1.0)
    rho: float = Field(default=0.3, ge=0.0, le=1.0)
    alpha: float = Field(default=0.1, ge=0.0)
    beta: float = Field(default=0.1, ge=0.0)
    rr_mode: Literal["exact", "relaxed"] = "relaxed"
    rr_topk: int = Field(default=10, ge=1)
    llh_threshold: float = Field(default=0.005, gt=0.0, le=1.0)
    llh_mode: Literal["geo", "raw"] = "geo"
    step_reward_mode: Literal["formula", "unit"] = "formula"


class AgentConfig(_Section):
    """Q-network shape and exploration behaviour."""

    hidden_size: int = Field(default=200, ge=1)
    hidden_layers: int = Field(default=2, ge=1)
    entropy_mode: Literal["normalized", "literal"] = "normalized"
    explore_random_share: float = Field(default=0.5, ge=0.0, le=1.0)
    cut_at_violation: bool = True
    inference_rr_mode: Literal["exact", "relaxed"] = "exact"


class TrainerConfig(_Section):
    """DQN training loop settings."""

    gamma: float = Field(default=0.995, ge=0.0, le=1.0)
    batch_size: int = Field(default=128, ge=1)
    buffer_capacity: int = Field(default=2000, ge=1)
    learning_rate: float = Field(default=0.001, gt=0.0)
    clip_norm: float = Field(default=1.0, gt=0.0)
    clip_mode: Literal["global_norm", "value"] = "global_norm"
    target_sync_period: int = Field(default=100, ge=1)
    epsilon_start: float = Field(default=0.9, ge=0.0, le=1.0)
    epsilon_decay: float = Field(default=0.995, gt=0.0, le=1.0)
    epsilon_period: int = Field(default=100, ge=1)
    epsilon_floor: float = Field(default=0.03, ge=0.0, le=1.0)
    episodes: int = Field(default=2000, ge=0)
    checkpoint_period: int = Field(default=100, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check_epsilon(self) -> "TrainerConfig":
        if self.epsilon_floor > self.epsilon_start:
            raise ValueError("epsilon_floor must not exceed epsilon_start")
        return self


class Config(CorpusConfig, LMConfig, RewardConfig, AgentConfig, TrainerConfig):
    """Flat, fully resolved configuration."""

    def _section(self, model: type) -> Any:
        return model.model_validate(
            self.model_dump(include=set(model.model_fields))  # type: ignore[attr-defined]
        )

    @property
    def corpus(self) -> CorpusConfig:
        return self._section(CorpusConfig)

    @property
    def lm(self) -> LMConfig:
        return self._section(LMConfig)

    @property
    def reward(self) -> RewardConfig:
        return self._section(RewardConfig)

    @property
    def agent(self) -> AgentConfig:
        return self._section(AgentConfig)

    @property
    def trainer(self) -> TrainerConfig:
        return self._section(TrainerConfig)

    def echo_lines(self) -> list[str]:
        """One ``key=value`` line per key, sorted, for the run log."""
        return [f"{key}={value}" for key, value in sorted(self.model_dump().items())]


def parse_override(item: str) -> tuple[str, Any]:
    """Split ``key=value`` and parse the value as a YAML scalar."""
    if "=" not in item:
        raise ConfigError(f"Override must look like key=value: {item!r}")
    key, raw = item.split("=", 1)
    key = key.strip()
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as e:
        raise ConfigError(f"Unparsable value for {key}: {raw!r} ({e})", key=key)
    return key, value


def load_config_file(path: str | Path) -> Dict[str, Any]:
    """Read a flat YAML mapping; an empty file yields no keys."""
    config_path = Path(path)
    try:
        content = config_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config file {config_path}: {e}")

    try:
        data = yaml.safe_load(content)
    except yaml.YAMLError as e:
        raise ConfigError(f"Config file {config_path} is not valid YAML: {e}")

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {config_path} must contain a flat mapping")
    return data


def parse_config(
    path: str | Path | None = None,
    overrides: Iterable[str] = (),
    flags: Optional[Mapping[str, Any]] = None,
) -> Config:
    """
    Resolve a configuration.

    Precedence is flag > ``--set`` override > config file > default. When no
    path is given, ``EALM_CONFIG`` is consulted.

    Args:
        path: Optional YAML config file
        overrides: ``key=value`` strings
        flags: Values from dedicated CLI flags; ``None`` entries are ignored

    Returns:
        The validated configuration

    Raises:
        ConfigError: On unknown keys, bad values or constraint violations
    """
    values: Dict[str, Any] = {}

    path = path or os.getenv("EALM_CONFIG") or None
    if path:
        values.update(load_config_file(path))

    for item in overrides:
        key, value = parse_override(item)
        values[key] = value

    for key, value in (flags or {}).items():
        if value is not None:
            values[key] = value

    unknown = sorted(set(values) - set(Config.model_fields))
    if unknown:
        raise ConfigError(f"Unknown config key: {unknown[0]}", key=unknown[0])

    try:
        config = Config(**values)
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first["loc"][0]) if first.get("loc") else None
        raise ConfigError(f"Invalid value for {key}: {first['msg']}", key=key)

    logger.info("--- resolved config ---")
    for line in config.echo_lines():
        logger.info(line)
    logger.info("--- end config ---")
    return config
