from typing import Any, Dict, Optional


class TrainingError(Exception):
    """Base class for errors raised while optimizing a model."""
    pass


class NonFiniteLossError(TrainingError):
    """A loss evaluated to NaN or Inf; diagnostics name the terms involved."""

    def __init__(self, loss_name: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.loss_name = loss_name
        self.diagnostics = dict(diagnostics or {})
        details = ", ".join(f"{k}={v}" for k, v in self.diagnostics.items())
        super().__init__(f"non-finite {loss_name}" + (f" ({details})" if details else ""))
