"""Small float64 network toolkit on torch: layers, causal attention, gradients, Adam, EMA."""

from src.neural.params import ParamSet, Gradients
from src.neural.layers import MLP, CausalSelfAttention, AttentionBlock, forward_mlp, forward_attention_block
from src.neural.autodiff import backward, frozen
from src.neural.optim import AdamState, opt_step, ema_update
from src.neural.checkpoint import save_checkpoint, load_checkpoint, CheckpointData

DTYPE = ParamSet.dtype

__all__ = [
    'ParamSet', 'Gradients', 'MLP', 'CausalSelfAttention', 'AttentionBlock',
    'forward_mlp', 'forward_attention_block',
    'backward', 'frozen', 'AdamState', 'opt_step', 'ema_update',
    'save_checkpoint', 'load_checkpoint', 'CheckpointData', 'DTYPE',
]
