"""Tests for configuration loading."""

from pathlib import Path

import pytest
from app.config import Config, ConfigError, parse_config, parse_override

DEFAULT_YAML = Path(__file__).parent.parent / "config" / "default.yaml"


@pytest.fixture(autouse=True)
def no_config_env(monkeypatch):
    monkeypatch.delenv("EALM_CONFIG", raising=False)


def test_defaults():
    config = parse_config()
    assert config.tau == 0.5
    assert config.rho == 0.3
    assert config.gamma == 0.995
    assert config.batch_size == 128
    assert config.buffer_capacity == 2000
    assert config.hidden_size == 200
    assert config.rr_mode == "relaxed"
    assert config.inference_rr_mode == "exact"


def test_bundled_file_matches_defaults():
    assert parse_config(DEFAULT_YAML).model_dump(exclude={"corpus_path", "stopwords_path"}) == Config().model_dump(
        exclude={"corpus_path", "stopwords_path"}
    )


def test_precedence(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("tau: 0.6\nrho: 0.2\nalpha: 0.3\n")

    config = parse_config(path, overrides=["rho=0.25", "alpha=0.4"], flags={"alpha": 0.5, "beta": None})
    assert config.tau == 0.6
    assert config.rho == 0.25
    assert config.alpha == 0.5
    assert config.beta == 0.1


def test_environment_names_the_config_file(tmp_path, monkeypatch):
    path = tmp_path / "env.yaml"
    path.write_text("episodes: 7\n")
    monkeypatch.setenv("EALM_CONFIG", str(path))
    assert parse_config().episodes == 7


def test_out_of_range_value_names_the_key():
    with pytest.raises(ConfigError) as exc_info:
        parse_config(overrides=["tau=1.5"])
    assert exc_info.value.key == "tau"


def test_unknown_key_is_rejected(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("learning_rat: 0.1\n")
    with pytest.raises(ConfigError) as exc_info:
        parse_config(path)
    assert exc_info.value.key == "learning_rat"


def test_bad_mode_is_rejected():
    with pytest.raises(ConfigError):
        parse_config(overrides=["rr_mode=fuzzy"])


def test_epsilon_floor_above_start_is_rejected():
    with pytest.raises(ConfigError):
        parse_config(overrides=["epsilon_start=0.02"])


def test_non_mapping_file_is_rejected(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- tau\n- rho\n")
    with pytest.raises(ConfigError):
        parse_config(path)


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert parse_config(path) == Config()


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "absent.yaml")


def test_parse_override():
    assert parse_override("tau=0.7") == ("tau", 0.7)
    assert parse_override("cut_at_violation=false") == ("cut_at_violation", False)
    assert parse_override("rr_mode=exact") == ("rr_mode", "exact")
    with pytest.raises(ConfigError):
        parse_override("tau")


def test_sections_split_the_flat_config():
    config = Config(tau=0.7, batch_size=4)
    assert config.reward.tau == 0.7
    assert config.trainer.batch_size == 4
    assert config.lm.embedding_dim == 64
    assert "tau=0.7" in config.echo_lines()
