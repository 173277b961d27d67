"""Named parameter and gradient containers."""
import hashlib
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import torch
from torch import nn

from src.neural.exceptions import LayoutMismatchError, NonFiniteGradientError


class ParamSet:
    """Named view over the parameters of a module.

    The tensors are the live module parameters, so optimizer and EMA updates
    through a ParamSet are visible to the module. Shapes are fixed at
    construction.
    """

    dtype = torch.float64

    def __init__(self, named: Mapping[str, torch.Tensor]):
        self._tensors: Dict[str, torch.Tensor] = dict(named)
        self._shapes: Dict[str, Tuple[int, ...]] = {name: tuple(t.shape) for name, t in self._tensors.items()}
        for name, tensor in self._tensors.items():
            if not torch.isfinite(tensor).all():
                raise ValueError(f"parameter {name!r} holds non-finite values")

    @classmethod
    def from_module(cls, module: nn.Module) -> "ParamSet":
        return cls(dict(module.named_parameters()))

    @property
    def names(self) -> List[str]:
        return list(self._tensors)

    @property
    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return dict(self._shapes)

    def tensors(self) -> List[torch.Tensor]:
        return list(self._tensors.values())

    def items(self) -> Iterator[Tuple[str, torch.Tensor]]:
        return iter(self._tensors.items())

    def __getitem__(self, name: str) -> torch.Tensor:
        return self._tensors[name]

    def __len__(self) -> int:
        return len(self._tensors)

    def check_layout(self, other) -> None:
        """Raise LayoutMismatchError unless other has the same names and shapes."""
        if list(self._shapes.items()) != list(other.shapes.items()):
            raise LayoutMismatchError(f"layouts differ: {self._shapes} vs {other.shapes}")

    def flat(self) -> torch.Tensor:
        """All parameters concatenated in name order (detached copy)."""
        if not self._tensors:
            return torch.zeros(0, dtype=self.dtype)
        return torch.cat([t.detach().reshape(-1) for t in self._tensors.values()])

    def checksum(self) -> str:
        return hashlib.sha256(self.flat().cpu().numpy().tobytes()).hexdigest()


class Gradients:
    """Gradients in the same named layout as a ParamSet; entries must be finite."""

    def __init__(self, grads: Mapping[str, torch.Tensor], params: Optional[ParamSet] = None):
        self._grads: Dict[str, torch.Tensor] = dict(grads)
        for name, grad in self._grads.items():
            if not torch.isfinite(grad).all():
                raise NonFiniteGradientError(name)
        if params is not None:
            params.check_layout(self)

    @classmethod
    def zeros_like(cls, params: ParamSet) -> "Gradients":
        return cls({name: torch.zeros_like(t) for name, t in params.items()})

    @property
    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: tuple(g.shape) for name, g in self._grads.items()}

    @property
    def names(self) -> List[str]:
        return list(self._grads)

    def items(self) -> Iterator[Tuple[str, torch.Tensor]]:
        return iter(self._grads.items())

    def __getitem__(self, name: str) -> torch.Tensor:
        return self._grads[name]

    def flat(self) -> torch.Tensor:
        if not self._grads:
            return torch.zeros(0, dtype=ParamSet.dtype)
        return torch.cat([g.reshape(-1) for g in self._grads.values()])

    def max_abs(self) -> float:
        flat = self.flat()
        return float(flat.abs().max()) if flat.numel() else 0.0
