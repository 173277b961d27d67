"""Process settings loaded from environment variables using Pydantic settings."""
import logging
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Root directory for CLI runs when --out is not given
    output_root: Path = Field(
        default=Path("runs"),
        alias="CORFT_OUTPUT_ROOT",
        description="Default output root for run directories",
    )

    log_level: str = Field(default="INFO", alias="CORFT_LOG_LEVEL", description="Root logger level")
    log_file: str = Field(
        default="corft.log",
        alias="CORFT_LOG_FILE",
        description="Log file name written inside every run directory",
    )

    # Metric logs are only bit-reproducible with a fixed intra-op thread count
    torch_threads: int = Field(default=1, alias="CORFT_TORCH_THREADS", ge=1)

    model_config = SettingsConfigDict(
        env_file=Path(__file__).parent.parent.parent / ".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        populate_by_name=True,
        extra="ignore",
    )


try:
    env_file_path = Path(__file__).parent.parent.parent / ".env"
    if env_file_path.exists():
        logger.info(f"Loading .env file from: {env_file_path}")

    settings = Settings()

except Exception as e:
    logger.error(f"Failed to load settings: {e}")
    logger.error(f"Check CORFT_* variables in the environment or in {Path(__file__).parent.parent.parent / '.env'}")
    raise
