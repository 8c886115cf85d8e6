from .gradcheck import finite_diff_gradcheck
from .lstm import GATE_ORDER, LstmLayerParams, init_lstm_layer, lstm_step, zero_state
from .optim import AdamState, DivergenceError, adam_update, clip_global_norm
from .tensor import (
    GraphError,
    ShapeError,
    Tensor,
    absval,
    affine,
    concat,
    constant,
    gather_rows,
    matmul,
    narrow,
    no_grad,
    parameter,
    relu,
    reshape,
    sigmoid,
    softmax,
    softmax_nll,
    square,
    stop_gradient,
    straight_through,
    tanh,
    tmean,
    tsum,
)

__all__ = [
    "AdamState",
    "DivergenceError",
    "GATE_ORDER",
    "GraphError",
    "LstmLayerParams",
    "ShapeError",
    "Tensor",
    "absval",
    "adam_update",
    "affine",
    "clip_global_norm",
    "concat",
    "constant",
    "finite_diff_gradcheck",
    "gather_rows",
    "init_lstm_layer",
    "lstm_step",
    "matmul",
    "narrow",
    "no_grad",
    "parameter",
    "relu",
    "reshape",
    "sigmoid",
    "softmax",
    "softmax_nll",
    "square",
    "stop_gradient",
    "straight_through",
    "tanh",
    "tmean",
    "tsum",
    "zero_state",
]
