"""Append-only line-delimited metric records."""
import logging
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)


class MetricRecord(BaseModel):
    """One training-log line; absent fields are omitted from the file."""
    model_config = ConfigDict(frozen=True)

    step: int = Field(..., ge=0)
    stage: str = Field(..., description="bc or rl")
    td_error: Optional[float] = None
    q_data_mean: Optional[float] = None
    q_ood_mean: Optional[float] = None
    regularizer: Optional[float] = None
    actor_loss: Optional[float] = None
    bc_loss: Optional[float] = None
    sr: Optional[float] = None
    ct: Optional[float] = None

    def to_line(self) -> str:
        return self.model_dump_json(exclude_none=True)


class MetricsLog:
    """In-memory metric records, mirrored line by line to a file when a path is given."""

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path is not None else None
        self.records: List[MetricRecord] = []
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("", encoding="utf-8")

    def append(self, record: MetricRecord) -> MetricRecord:
        self.records.append(record)
        if self.path is not None:
            with self.path.open("a", encoding="utf-8") as f:
                f.write(record.to_line() + "\n")
        return record

    def __len__(self) -> int:
        return len(self.records)

    def lines(self) -> List[str]:
        return [record.to_line() for record in self.records]


def read_metrics(path: Union[str, Path]) -> List[MetricRecord]:
    path = Path(path)
    if not path.exists():
        return []
    with path.open("r", encoding="utf-8") as f:
        return [MetricRecord.model_validate_json(line) for line in f if line.strip()]
