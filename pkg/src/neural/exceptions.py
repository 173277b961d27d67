from typing import Optional


class NeuralError(Exception):
    pass


class ShapeMismatchError(NeuralError):
    """Input shape does not fit a layer."""

    def __init__(self, layer: str, expected, got):
        self.layer = layer
        super().__init__(f"{layer}: expected shape {expected}, got {tuple(got)}")


class NonScalarLossError(NeuralError):
    pass


class NonFiniteGradientError(NeuralError):
    """NaN or Inf in a gradient; names the offending parameter."""

    def __init__(self, parameter: str, message: Optional[str] = None):
        self.parameter = parameter
        super().__init__(message or f"non-finite gradient for parameter {parameter!r}")


class LayoutMismatchError(NeuralError):
    pass


class CheckpointError(NeuralError):
    pass
