"""LSTM cell on top of the autodiff kernel.

Gate blocks inside the stacked [4H, ...] weight matrices are ordered
i, f, g, o. The order is arbitrary but frozen: checkpoints store raw
blobs and a reader must slice them identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import ShapeError, Tensor, _accum, _node, narrow, parameter

GATE_ORDER = "ifgo"


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LstmLayerParams:
    """One layer's weights: input_weights [4H, I], recurrent_weights [4H, H], biases [4H]."""

    input_weights: Tensor
    recurrent_weights: Tensor
    biases: Tensor

    @property
    def hidden_size(self) -> int:
        return self.recurrent_weights.shape[1]

    @property
    def input_size(self) -> int:
        return self.input_weights.shape[1]

    def tensors(self) -> list[Tensor]:
        return [self.input_weights, self.recurrent_weights, self.biases]


def init_lstm_layer(input_size: int, hidden_size: int, rng: np.random.Generator,
                    dtype=np.float32) -> LstmLayerParams:
    """Uniform(-1/sqrt(H)) weights, zero biases except forget gate at 1.0."""
    if input_size <= 0 or hidden_size <= 0:
        raise ShapeError("LSTM sizes must be positive")
    s = 1.0 / np.sqrt(hidden_size)
    w_x = rng.uniform(-s, s, size=(4 * hidden_size, input_size))
    w_h = rng.uniform(-s, s, size=(4 * hidden_size, hidden_size))
    b = np.zeros(4 * hidden_size)
    b[hidden_size:2 * hidden_size] = 1.0  # f-gate block in i,f,g,o order
    return LstmLayerParams(
        input_weights=parameter(w_x, dtype=dtype),
        recurrent_weights=parameter(w_h, dtype=dtype),
        biases=parameter(b, dtype=dtype),
    )


def lstm_step(params: LstmLayerParams, x_t: Tensor, h_prev: Tensor,
              c_prev: Tensor) -> tuple[Tensor, Tensor]:
    """One recurrence step on a [batch, I] input and [batch, H] state.

    c_t = sigmoid(f) * c_prev + sigmoid(i) * tanh(g)
    h_t = sigmoid(o) * tanh(c_t)

    The whole cell is one fused graph node (BPTT over 128 steps would
    otherwise spend more time in graph bookkeeping than in the matmuls);
    the backward below is the hand-derived chain rule for the recurrence.
    """
    H = params.hidden_size
    if x_t.data.ndim != 2 or x_t.shape[1] != params.input_size:
        raise ShapeError(f"lstm_step input {x_t.shape} does not match I={params.input_size}")
    if h_prev.shape != (x_t.shape[0], H) or c_prev.shape != (x_t.shape[0], H):
        raise ShapeError(f"lstm_step state {h_prev.shape}/{c_prev.shape} does not match H={H}")

    w_x, w_h, b = params.input_weights, params.recurrent_weights, params.biases
    z = x_t.data @ w_x.data.T + h_prev.data @ w_h.data.T + b.data
    i = _sigmoid(z[:, :H])
    f = _sigmoid(z[:, H:2 * H])
    g = np.tanh(z[:, 2 * H:3 * H])
    o = _sigmoid(z[:, 3 * H:])
    c = f * c_prev.data + i * g
    tc = np.tanh(c)
    out_data = np.concatenate([o * tc, c], axis=1)  # [h_t | c_t]

    def bwd(gout):
        dh, dc_in = gout[:, :H], gout[:, H:]
        dc = dc_in + dh * o * (1.0 - tc * tc)
        dz = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c_prev.data * f * (1.0 - f),
            dc * i * (1.0 - g * g),
            dh * tc * o * (1.0 - o),
        ], axis=1)
        _accum(x_t, dz @ w_x.data)
        _accum(h_prev, dz @ w_h.data)
        _accum(c_prev, dc * f)
        _accum(w_x, dz.T @ x_t.data)
        _accum(w_h, dz.T @ h_prev.data)
        _accum(b, dz.sum(axis=0))

    out = _node(out_data, (w_x, w_h, b, x_t, h_prev, c_prev), bwd)
    return narrow(out, 1, 0, H), narrow(out, 1, H, 2 * H)


def zero_state(batch: int, hidden_size: int, dtype=np.float32) -> tuple[Tensor, Tensor]:
    z = np.zeros((batch, hidden_size), dtype=dtype)
    return Tensor(z.copy()), Tensor(z.copy())
