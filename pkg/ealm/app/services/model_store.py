"""Versioned on-disk formats for the masked LM and the agent."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np

from app.config import RewardConfig
from app.models.text import Vocabulary
from app.services.agent import AgentParams
from app.services.encoder import EncoderParams
from app.services.language_model import Context, NGramMaskedLM
from app.services.numerics import DenseNet, Layer

logger = logging.getLogger(__name__)

LM_MAGIC = "EALM-LM1"
AGENT_MAGIC = "EALM-AG1"


class ModelFormatError(Exception):
    """Raised when a model file has the wrong magic or a malformed payload."""


def _write(path: str | Path, magic: str, payload: Dict[str, Any]) -> Path:
    destination = Path(path)
    destination.parent.mkdir(parents=True, exist_ok=True)
    with destination.open("w", encoding="utf-8") as output_file:
        output_file.write(magic + "\n")
        json.dump(payload, output_file, sort_keys=True, separators=(",", ":"))
        output_file.write("\n")
    return destination


def _read(path: str | Path, magic: str) -> Dict[str, Any]:
    source = Path(path)
    try:
        with source.open("r", encoding="utf-8") as input_file:
            header = input_file.readline().rstrip("\n")
            body = input_file.read()
    except OSError as e:
        raise ModelFormatError(f"Cannot read model file {source}: {e}")
    except UnicodeDecodeError:
        raise ModelFormatError(f"Model file {source} is not UTF-8 text")

    if header != magic:
        raise ModelFormatError(
            f"{source} does not start with {magic} (found {header[:16]!r})"
        )
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"Malformed payload in {source}: {e}")
    if not isinstance(payload, dict):
        raise ModelFormatError(f"Malformed payload in {source}: expected an object")
    return payload


def _tables_to_json(tables: Dict[Context, Dict[int, int]]) -> List[list]:
    return [
        [list(context), [[word, count] for word, count in counts.items()]]
        for context, counts in tables.items()
    ]


def _tables_from_json(rows: List[list]) -> Dict[Context, Dict[int, int]]:
    return {
        tuple(int(c) for c in context): {int(w): int(n) for w, n in counts}
        for context, counts in rows
    }


def save_lm(lm: NGramMaskedLM, path: str | Path) -> Path:
    """Write the LM with its vocabulary, stopwords, count tables and embeddings."""
    vocab = lm.vocab
    payload = {
        "version": 1,
        "vocabulary": list(vocab.id_to_word),
        "frequencies": vocab.frequencies,
        "stopwords": sorted(vocab.stopwords),
        "order": lm.order,
        "smoothing": lm.smoothing,
        "lambda_left": lm.lambda_left,
        "left_counts": _tables_to_json(lm.left_counts),
        "right_counts": _tables_to_json(lm.right_counts),
        "embeddings": lm.embeddings.tolist(),
    }
    destination = _write(path, LM_MAGIC, payload)
    logger.info(f"Wrote language model ({vocab.num_words} words) to {destination}")
    return destination


def load_lm(path: str | Path) -> NGramMaskedLM:
    """
    Read a model written by ``save_lm``.

    Raises:
        ModelFormatError: On a wrong magic line or a malformed payload
    """
    payload = _read(path, LM_MAGIC)
    try:
        vocab = Vocabulary(
            id_to_word=tuple(payload["vocabulary"]),
            frequencies={str(k): int(v) for k, v in payload["frequencies"].items()},
            stopwords=frozenset(payload["stopwords"]),
        )
        embeddings = np.asarray(payload["embeddings"], dtype=np.float64)
        if embeddings.ndim != 2 or embeddings.shape[0] != vocab.size:
            raise ValueError(f"embedding matrix has shape {embeddings.shape}")
        return NGramMaskedLM(
            vocab=vocab,
            order=int(payload["order"]),
            smoothing=float(payload["smoothing"]),
            lambda_left=float(payload["lambda_left"]),
            left_counts=_tables_from_json(payload["left_counts"]),
            right_counts=_tables_from_json(payload["right_counts"]),
            embeddings=embeddings,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"Malformed language model in {path}: {e}")


def save_agent(params: AgentParams, reward_cfg: RewardConfig, path: str | Path) -> Path:
    """Write the Q-network, the encoder biases and the reward settings used."""
    payload = {
        "version": 1,
        "embedding_dim": params.encoder.dim,
        "action_bias": params.encoder.action_bias.tolist(),
        "status_bias": params.encoder.status_bias.tolist(),
        "layers": [
            {
                "weight": layer.weight.tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation,
            }
            for layer in params.net.layers
        ],
        "reward_config": reward_cfg.model_dump(),
    }
    destination = _write(path, AGENT_MAGIC, payload)
    logger.info(
        f"Wrote agent ({params.net.parameter_count} network parameters) to {destination}"
    )
    return destination


def load_agent(path: str | Path) -> Tuple[AgentParams, RewardConfig]:
    """
    Read an agent written by ``save_agent``.

    Raises:
        ModelFormatError: On a wrong magic line or a malformed payload
    """
    payload = _read(path, AGENT_MAGIC)
    try:
        layers = [
            Layer(
                weight=np.asarray(item["weight"], dtype=np.float64),
                bias=np.asarray(item["bias"], dtype=np.float64),
                activation=item["activation"],
            )
            for item in payload["layers"]
        ]
        encoder = EncoderParams(
            action_bias=np.asarray(payload["action_bias"], dtype=np.float64),
            status_bias=np.asarray(payload["status_bias"], dtype=np.float64),
        )
        if encoder.dim != int(payload["embedding_dim"]):
            raise ValueError("bias width does not match embedding_dim")
        params = AgentParams(DenseNet(layers), encoder)
        reward_cfg = RewardConfig(**payload["reward_config"])
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise ModelFormatError(f"Malformed agent in {path}: {e}")
    return params, reward_cfg
