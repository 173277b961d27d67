"""Training hyperparameters and the plain-text ``key = value`` config format."""
import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.config.enums import ExecutionMode, InitMode
from src.config.exceptions import ConfigError
from src.envs.registry import ENV_IDS

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    """All hyperparameters of a CO-RFT run (both stages, evaluation and probes)."""

    model_config = ConfigDict(extra="forbid", frozen=True, use_enum_values=False)

    # Chunked TD / CalQL
    gamma: float = Field(0.99, ge=0.0, lt=1.0, description="Discount factor")
    h: int = Field(4, ge=1, description="Action chunk length")
    alpha: float = Field(1.0, ge=0.0, description="Weight of the calibrated conservative regularizer")
    tau: float = Field(0.005, gt=0.0, le=1.0, description="Target critic EMA rate")
    noise_scale: float = Field(0.1, ge=0.0, description="OOD policy noise std as a fraction of the action range")
    n_ood: int = Field(4, ge=1, description="OOD chunks per state for the regularizer")
    target_noise: float = Field(0.0, ge=0.0, description="TD3 target smoothing noise, fraction of action range")
    target_noise_clip: float = Field(0.5, ge=0.0, description="Clip for target smoothing noise, fraction of action range")

    # Optimisation
    lr_actor: float = Field(3e-4, gt=0.0)
    lr_critic: float = Field(3e-4, gt=0.0)
    batch_size: int = Field(64, ge=1)
    bc_steps: int = Field(5000, ge=0)
    rl_steps: int = Field(10000, ge=0)
    actor_delay: int = Field(2, ge=1, description="Critic updates per actor/target update")

    # Networks
    width: int = Field(64, ge=1, description="Critic model width")
    n_blocks: int = Field(2, ge=1, description="Causal attention blocks in the critic trunk")
    actor_hidden: List[int] = Field(default_factory=lambda: [128, 128])

    # Logging and evaluation
    log_every: int = Field(100, ge=1)
    eval_every: int = Field(1000, ge=1)
    eval_trials: int = Field(40, ge=1)
    execution_mode: ExecutionMode = ExecutionMode.OPEN_LOOP_CHUNK

    # Data collection
    env_id: str = "point-reach-2d"
    n_demos: int = Field(30, ge=1)
    upsample_k: int = Field(5, ge=0)
    init_mode: InitMode = InitMode.RANDOM
    keep_failed: bool = True

    # Value-propagation probe
    probe_budget: int = Field(20000, ge=1)
    probe_check_every: int = Field(50, ge=1)

    seed: int = 0

    @field_validator("env_id")
    @classmethod
    def _registered_env(cls, value: str) -> str:
        if value not in ENV_IDS:
            raise ValueError(f"unknown env_id {value!r}; available: {', '.join(ENV_IDS)}")
        return value

    @field_validator("actor_hidden", mode="before")
    @classmethod
    def _split_hidden(cls, value):
        if isinstance(value, str):
            parts = [p.strip() for p in value.split(",") if p.strip()]
            return [int(p) for p in parts]
        return value

    @field_validator("actor_hidden")
    @classmethod
    def _positive_hidden(cls, value: List[int]) -> List[int]:
        if not value or any(width < 1 for width in value):
            raise ValueError("actor_hidden needs at least one positive layer width")
        return value

    @classmethod
    def keys(cls) -> List[str]:
        return list(cls.model_fields)

    @classmethod
    def from_mapping(cls, values: Dict[str, object]) -> "TrainConfig":
        """Build a config, turning unknown keys and bad values into ConfigError."""
        unknown = [key for key in values if key not in cls.model_fields]
        if unknown:
            raise ConfigError(f"Unknown config key(s): {', '.join(sorted(unknown))}", cls.keys())
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(f"Invalid config value: {e}") from e

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        return cls.from_mapping(parse_config_text(text))

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "TrainConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read config file {path}: {e}") from e
        logger.info(f"Loaded config from {path}")
        return cls.from_text(text)

    def with_overrides(self, overrides: Union[Dict[str, object], Iterable[str]]) -> "TrainConfig":
        """Return a copy with ``key=value`` overrides applied (only known keys)."""
        if not isinstance(overrides, dict):
            overrides = parse_overrides(overrides)
        merged = self.model_dump()
        merged.update(overrides)
        return self.from_mapping(merged)

    def to_text(self) -> str:
        """Serialize every key in declaration order, one ``key = value`` per line."""
        lines = []
        for key in self.keys():
            lines.append(f"{key} = {_format_value(getattr(self, key))}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return canonical_hash(self.model_dump(mode="json"))


def canonical_hash(mapping: Dict[str, object]) -> str:
    """SHA-256 of the sorted, compact JSON form of a mapping."""
    canonical = json.dumps(mapping, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_config_text(text: str) -> Dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"Line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"Line {lineno}: empty key")
        if key in values:
            raise ConfigError(f"Line {lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def parse_overrides(pairs: Optional[Iterable[str]]) -> Dict[str, str]:
    """Parse CLI ``key=value`` override pairs, rejecting keys TrainConfig does not know."""
    overrides: Dict[str, str] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"Override {pair!r} is not of the form key=value", TrainConfig.keys())
        key, value = (part.strip() for part in pair.split("=", 1))
        if key not in TrainConfig.model_fields:
            raise ConfigError(f"Unknown override key {key!r}", TrainConfig.keys())
        overrides[key] = value
    return overrides


def _format_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (InitMode, ExecutionMode)):
        return value.value
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
