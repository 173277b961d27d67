"""Dense layers, single-head causal self-attention and the pre-norm attention block."""
import math
from typing import Sequence

import torch
from torch import nn

from src.neural.exceptions import ShapeMismatchError
from src.neural.params import ParamSet

DTYPE = ParamSet.dtype

ACTIVATIONS = {
    "gelu": nn.GELU,
    "relu": nn.ReLU,
    "tanh": nn.Tanh,
}


class MLP(nn.Module):
    """Stack of Linear layers with an activation between them (none after the last)."""

    def __init__(self, sizes: Sequence[int], activation: str = "gelu", name: str = "mlp"):
        super().__init__()
        if len(sizes) < 2:
            raise ValueError(f"{name}: an MLP needs at least input and output sizes, got {list(sizes)}")
        self.name = name
        self.sizes = list(sizes)
        layers = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            layers.append(nn.Linear(fan_in, fan_out, dtype=DTYPE))
            if i < len(sizes) - 2:
                layers.append(ACTIVATIONS[activation]())
        self.net = nn.Sequential(*layers)

    @property
    def in_features(self) -> int:
        return self.sizes[0]

    @property
    def out_features(self) -> int:
        return self.sizes[-1]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] != self.in_features:
            raise ShapeMismatchError(self.name, (..., self.in_features), x.shape)
        return self.net(x)


class CausalSelfAttention(nn.Module):
    """Single-head scaled dot-product self-attention.

    With ``causal=True`` scores above the diagonal are set to -inf before the
    softmax, so output token i depends only on input tokens 0..i.
    """

    mask: torch.Tensor

    def __init__(self, d_model: int, max_tokens: int, name: str = "attention"):
        super().__init__()
        self.name = name
        self.d_model = d_model
        self.W_query = nn.Linear(d_model, d_model, bias=False, dtype=DTYPE)
        self.W_key = nn.Linear(d_model, d_model, bias=False, dtype=DTYPE)
        self.W_value = nn.Linear(d_model, d_model, bias=False, dtype=DTYPE)
        self.W_out = nn.Linear(d_model, d_model, bias=False, dtype=DTYPE)
        self.register_buffer(
            "mask",
            torch.triu(torch.ones((max_tokens, max_tokens), dtype=torch.bool), diagonal=1),
            persistent=False,
        )

    def forward(self, x: torch.Tensor, causal: bool = True) -> torch.Tensor:
        if x.dim() < 2 or x.shape[-1] != self.d_model:
            raise ShapeMismatchError(self.name, (..., "tokens", self.d_model), x.shape)
        n_tokens = x.shape[-2]
        if n_tokens > self.mask.shape[0]:
            raise ShapeMismatchError(self.name, (..., f"<={self.mask.shape[0]}", self.d_model), x.shape)

        queries = self.W_query(x)
        keys = self.W_key(x)
        values = self.W_value(x)

        scores = queries @ keys.transpose(-2, -1) / math.sqrt(self.d_model)
        if causal:
            scores = scores.masked_fill(self.mask[:n_tokens, :n_tokens], float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        return self.W_out(weights @ values)


class AttentionBlock(nn.Module):
    """Pre-norm transformer block: x + attn(ln(x)), then x + mlp(ln(x))."""

    def __init__(self, d_model: int, max_tokens: int, mlp_ratio: int = 4, name: str = "block"):
        super().__init__()
        self.name = name
        self.ln_attn = nn.LayerNorm(d_model, dtype=DTYPE)
        self.attn = CausalSelfAttention(d_model, max_tokens, name=f"{name}.attn")
        self.ln_mlp = nn.LayerNorm(d_model, dtype=DTYPE)
        self.mlp = MLP([d_model, mlp_ratio * d_model, d_model], activation="gelu", name=f"{name}.mlp")

    def forward(self, x: torch.Tensor, causal: bool = True) -> torch.Tensor:
        x = x + self.attn(self.ln_attn(x), causal=causal)
        return x + self.mlp(self.ln_mlp(x))


def forward_mlp(mlp: MLP, x: torch.Tensor) -> torch.Tensor:
    return mlp(x)


def forward_attention_block(block: AttentionBlock, tokens: torch.Tensor, causal: bool = True) -> torch.Tensor:
    return block(tokens, causal=causal)
