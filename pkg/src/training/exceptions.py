from typing import Any, Dict, Optional

from src.agents.exceptions import NonFiniteLossError, TrainingError


class TrainingAbortedError(TrainingError):
    """Training stopped on divergence; carries the last good checkpoint and the failing step."""

    def __init__(self, message: str, step: int, last_good: Optional[Any] = None,
                 diagnostics: Optional[Dict[str, Any]] = None):
        self.step = step
        self.last_good = last_good
        self.diagnostics = dict(diagnostics or {})
        super().__init__(f"step {step}: {message}")


__all__ = ['TrainingError', 'NonFiniteLossError', 'TrainingAbortedError']
