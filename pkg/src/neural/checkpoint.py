"""Named-tensor checkpoint files with a shape header and a config hash."""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import torch

from src.config.train_config import canonical_hash
from src.neural.exceptions import CheckpointError

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

TensorGroups = Dict[str, Dict[str, torch.Tensor]]


@dataclass
class CheckpointData:
    tensors: TensorGroups
    config: Dict[str, Any]
    config_hash: str
    meta: Dict[str, Any] = field(default_factory=dict)


def save_checkpoint(
    path: Union[str, Path],
    tensors: TensorGroups,
    config: Dict[str, Any],
    meta: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write groups of named float64 tensors (e.g. {"actor": state_dict}).

    Args:
        path: Target file
        tensors: Group name -> parameter name -> tensor
        config: JSON-compatible config the tensors were produced with
        meta: Extra JSON-compatible information (step, stage, ...)

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "config": config,
        "config_hash": canonical_hash(config),
        "shapes": {group: {name: list(t.shape) for name, t in named.items()} for group, named in tensors.items()},
        "tensors": {group: {name: t.detach().to(torch.float64).cpu().clone() for name, t in named.items()}
                    for group, named in tensors.items()},
        "meta": meta or {},
    }
    torch.save(payload, path)
    logger.debug(f"Saved checkpoint {path}")
    return path


def load_checkpoint(path: Union[str, Path], expected_hash: Optional[str] = None) -> CheckpointData:
    """
    Read a checkpoint and verify its config hash and shape header.

    Raises:
        CheckpointError: unreadable file, version mismatch, hash or shape mismatch
    """
    path = Path(path)
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e

    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {payload.get('format_version')!r}")
    config = payload["config"]
    if canonical_hash(config) != payload["config_hash"]:
        raise CheckpointError(f"{path}: stored config does not match its hash")
    if expected_hash is not None and payload["config_hash"] != expected_hash:
        raise CheckpointError(f"{path}: config hash {payload['config_hash'][:12]} != expected {expected_hash[:12]}")

    for group, named in payload["tensors"].items():
        for name, tensor in named.items():
            if list(tensor.shape) != payload["shapes"][group][name]:
                raise CheckpointError(f"{path}: {group}.{name} shape {list(tensor.shape)} "
                                      f"!= header {payload['shapes'][group][name]}")

    return CheckpointData(tensors=payload["tensors"], config=config,
                          config_hash=payload["config_hash"], meta=payload.get("meta", {}))
