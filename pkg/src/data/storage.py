"""Line-delimited dataset files.

Record 0 is the header {format_version, env_id, S, A, h, gamma, episode_count,
env_spec, metadata}; record k (k >= 1) is episode k-1 as
{init_mode, success, steps: [{state, action, reward, done}, ...]}. Floats are
written as decimal text with 17 significant digits.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, StrictBool, ValidationError

from src.config.enums import InitMode
from src.data.exceptions import CorruptRecordError, DimensionMismatchError, FormatVersionError
from src.data.models import Episode, OfflineDataset

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class DatasetHeader(BaseModel):
    """Record 0 of a dataset file."""
    model_config = ConfigDict(populate_by_name=True)

    format_version: int
    env_id: str
    state_dim: int = Field(..., alias="S", ge=1)
    action_dim: int = Field(..., alias="A", ge=1)
    h: int = Field(..., ge=1)
    gamma: float = Field(..., ge=0.0, le=1.0)
    episode_count: int = Field(..., ge=0)
    env_spec: Optional[Dict[str, Any]] = None
    metadata: Optional[Dict[str, Any]] = None


class StepRecord(BaseModel):
    state: List[float]
    action: List[float]
    reward: float = 0.0
    done: StrictBool = False


class EpisodeRecord(BaseModel):
    init_mode: InitMode = InitMode.RANDOM
    success: StrictBool = False
    steps: List[StepRecord]


def save_dataset(dataset: OfflineDataset, path: Union[str, Path]) -> Path:
    """
    Write a dataset as one header line plus one line per episode.

    Args:
        dataset: Dataset to persist
        path: Target file

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format_version": FORMAT_VERSION,
        "env_id": dataset.env_id,
        "S": dataset.state_dim,
        "A": dataset.action_dim,
        "h": dataset.h,
        "gamma": dataset.gamma,
        "episode_count": len(dataset.episodes),
        "env_spec": dataset.env_spec,
        "metadata": dataset.metadata,
    }
    with path.open("w", encoding="utf-8") as f:
        f.write(_dumps(header) + "\n")
        for episode in dataset.episodes:
            record = {
                "init_mode": episode.init_mode.value,
                "success": episode.success,
                "steps": [
                    {"state": s.state, "action": s.action, "reward": s.reward, "done": s.done}
                    for s in episode.steps
                ],
            }
            f.write(_dumps(record) + "\n")
    logger.info(f"Saved dataset with {len(dataset.episodes)} episodes to {path}")
    return path


def load_dataset(path: Union[str, Path]) -> OfflineDataset:
    """
    Read a dataset written by save_dataset.

    Nothing is returned unless every record is valid.

    Raises:
        FormatVersionError: unknown format_version in the header
        DimensionMismatchError: a state/action length disagrees with the header
        CorruptRecordError: unparsable or structurally invalid record
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        lines = [line for line in f.read().splitlines() if line.strip()]
    if not lines:
        raise CorruptRecordError("missing header", record_index=0)

    header = _parse_header(_loads(lines[0], 0))
    if len(lines) - 1 != header.episode_count:
        raise CorruptRecordError(
            f"header announces {header.episode_count} episodes, file holds {len(lines) - 1}",
            record_index=0,
        )

    episodes = [_parse_episode(_loads(line, index), index, header) for index, line in enumerate(lines[1:], 1)]

    try:
        dataset = OfflineDataset(
            env_id=header.env_id,
            state_dim=header.state_dim,
            action_dim=header.action_dim,
            h=header.h,
            gamma=header.gamma,
            episodes=episodes,
            env_spec=header.env_spec,
            metadata=header.metadata or {},
        )
    except ValidationError as e:
        raise CorruptRecordError(f"invalid header: {e}", record_index=0) from e
    logger.info(f"Loaded dataset {dataset.env_id} with {len(episodes)} episodes from {path}")
    return dataset


def _parse_header(record: Any) -> DatasetHeader:
    if not isinstance(record, dict):
        raise CorruptRecordError(f"header must be an object, got {type(record).__name__}", record_index=0)
    version = record.get("format_version")
    if version is not None and version != FORMAT_VERSION:
        raise FormatVersionError(f"unsupported format_version {version!r} (expected {FORMAT_VERSION})",
                                 record_index=0)
    try:
        return DatasetHeader.model_validate(record)
    except ValidationError as e:
        raise CorruptRecordError(f"invalid header: {e}", record_index=0) from e


def _parse_episode(record: Any, index: int, header: DatasetHeader) -> Episode:
    try:
        parsed = EpisodeRecord.model_validate(record)
    except ValidationError as e:
        raise CorruptRecordError(f"invalid episode record: {e}", record_index=index) from e
    for t, step in enumerate(parsed.steps):
        if len(step.state) != header.state_dim:
            raise DimensionMismatchError(
                f"step {t} state has length {len(step.state)}, header S={header.state_dim}", record_index=index)
        if len(step.action) != header.action_dim:
            raise DimensionMismatchError(
                f"step {t} action has length {len(step.action)}, header A={header.action_dim}", record_index=index)
    try:
        return Episode(
            env_id=header.env_id,
            init_mode=parsed.init_mode,
            success=parsed.success,
            steps=[step.model_dump() for step in parsed.steps],
        )
    except ValidationError as e:
        raise CorruptRecordError(f"invalid episode: {e}", record_index=index) from e


def _format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"cannot store non-finite float {value!r}")
    text = format(value, ".17g")
    # keep floats distinguishable from integers on reload
    return text if any(c in text for c in ".en") else text + ".0"


def _dumps(obj: Any) -> str:
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(key))}:{_dumps(value)}" for key, value in obj.items())
        return "{" + ",".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_dumps(value) for value in obj) + "]"
    return json.dumps(obj, allow_nan=False)


def _loads(line: str, index: int) -> Any:
    try:
        return json.loads(line)
    except json.JSONDecodeError as e:
        raise CorruptRecordError(f"not valid JSON: {e}", record_index=index) from e
