"""Reverse-mode gradients of scalar losses with respect to a ParamSet."""
import logging
from contextlib import contextmanager
from typing import Iterator

import torch
from torch import nn

from src.neural.exceptions import NonScalarLossError
from src.neural.params import Gradients, ParamSet

logger = logging.getLogger(__name__)


def backward(loss: torch.Tensor, params: ParamSet, retain_graph: bool = False) -> Gradients:
    """
    Exact gradients of a scalar loss with respect to every parameter in params.

    Parameters the loss does not depend on get zero gradients; nothing is
    accumulated into ``.grad``.

    Args:
        loss: Scalar tensor carrying an autograd graph (or a constant)
        params: Parameters to differentiate with respect to
        retain_graph: Keep the graph for a further call

    Returns:
        Gradients in the layout of params

    Raises:
        NonScalarLossError: loss has more than one element
        NonFiniteGradientError: a gradient entry is NaN or Inf
    """
    if not isinstance(loss, torch.Tensor) or loss.numel() != 1 or loss.dim() > 0:
        shape = tuple(loss.shape) if isinstance(loss, torch.Tensor) else type(loss).__name__
        raise NonScalarLossError(f"backward needs a scalar loss, got shape {shape}")

    tensors = params.tensors()
    if not loss.requires_grad or not tensors:
        return Gradients.zeros_like(params)

    grads = torch.autograd.grad(loss, tensors, retain_graph=retain_graph, allow_unused=True)
    named = {
        name: (grad if grad is not None else torch.zeros_like(tensor))
        for (name, tensor), grad in zip(params.items(), grads)
    }
    return Gradients(named, params)


@contextmanager
def frozen(module: nn.Module) -> Iterator[nn.Module]:
    """Temporarily stop gradients into a module's parameters."""
    flags = [(p, p.requires_grad) for p in module.parameters()]
    for p, _ in flags:
        p.requires_grad_(False)
    try:
        yield module
    finally:
        for p, flag in flags:
            p.requires_grad_(flag)
