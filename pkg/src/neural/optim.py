"""Adaptive moment estimation steps and exponential-moving-average target updates."""
from typing import Optional

import torch

from src.neural.exceptions import NonFiniteGradientError
from src.neural.params import Gradients, ParamSet

BETAS = (0.9, 0.999)
EPS = 1e-8


class AdamState:
    """Moment estimates for one ParamSet (wraps torch.optim.Adam)."""

    def __init__(self, params: ParamSet, lr: float):
        self.params = params
        self.optimizer = torch.optim.Adam(params.tensors(), lr=lr, betas=BETAS, eps=EPS, foreach=False)


def opt_step(opt_state: AdamState, params: ParamSet, grads: Gradients, lr: Optional[float] = None) -> ParamSet:
    """
    Apply one bias-corrected Adam update (beta1=0.9, beta2=0.999, eps=1e-8) in place.

    Args:
        opt_state: Moment state created for params
        params: Parameters to update
        grads: Gradients in the layout of params
        lr: Learning rate for this step (defaults to the state's rate)

    Returns:
        The updated params
    """
    if opt_state.params is not params:
        params.check_layout(opt_state.params)
    params.check_layout(grads)
    for name, grad in grads.items():
        if not torch.isfinite(grad).all():
            raise NonFiniteGradientError(name)

    if lr is not None:
        for group in opt_state.optimizer.param_groups:
            group["lr"] = lr
    for name, tensor in params.items():
        tensor.grad = grads[name].detach().clone()
    opt_state.optimizer.step()
    for tensor in params.tensors():
        tensor.grad = None
    return params


@torch.no_grad()
def ema_update(target: ParamSet, online: ParamSet, tau: float) -> ParamSet:
    """target <- (1 - tau) * target + tau * online, elementwise and in place."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    target.check_layout(online)
    for t, o in zip(target.tensors(), online.tensors()):
        t.copy_((1.0 - tau) * t + tau * o)
    return target
