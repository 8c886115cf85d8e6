"""Button-bottleneck sequence autoencoder: encoder, quantizers, decoder, losses.

Three configurations share one decoder code path:
  * "iqae": bidirectional encoder emits one real scalar per note, quantized
    to 8 fixed centroids evenly spaced in [-1, 1]; the backward pass treats
    the quantizer as the identity (straight-through).
  * "vq":   encoder emits a d-dim vector per note, quantized to the nearest
    row of a learned codebook, trained with codebook + commitment terms.
  * "none": no encoder at all; the decoder becomes a plain next-note
    language model.
The decoder is unidirectional so it can run incrementally at performance
time; "identity" (diagnostic) bypasses quantization so every loss is
finite-difference checkable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .nn import (
    LstmLayerParams,
    Tensor,
    absval,
    affine,
    concat,
    gather_rows,
    init_lstm_layer,
    lstm_step,
    narrow,
    parameter,
    relu,
    square,
    straight_through,
    tsum,
    zero_state,
)
from .sequences import NUM_DT_BUCKETS, NUM_KEYS

START_SYMBOL = NUM_KEYS  # decoder prev-key vocabulary is 89 wide
PREV_KEY_WIDTH = NUM_KEYS + 1

Quantizer = Literal["iqae", "vq", "none", "identity"]


@dataclass
class ModelConfig:
    hidden_size: int = 128
    num_layers: int = 2
    k_buttons: int = 8
    vocab: int = NUM_KEYS
    use_dt: bool = False
    quantizer: Quantizer = "iqae"
    contour_weight: float = 1.0
    margin_weight: float = 1.0
    window_n: int = 128
    vq_dim: int = 4
    vq_beta: float = 0.25

    def __post_init__(self):
        if self.vocab != NUM_KEYS:
            raise ValueError(f"vocab must be {NUM_KEYS}")
        if self.k_buttons != 8:
            raise ValueError("k_buttons must be 8")
        if self.quantizer not in ("iqae", "vq", "none", "identity"):
            raise ValueError(f"unknown quantizer {self.quantizer!r}")
        if self.contour_weight < 0 or self.margin_weight < 0:
            raise ValueError("loss weights must be >= 0")

    @property
    def has_encoder(self) -> bool:
        return self.quantizer != "none"

    @property
    def button_repr_width(self) -> int:
        if self.quantizer in ("iqae", "identity"):
            return 1
        if self.quantizer == "vq":
            return self.vq_dim
        return 0

    def to_dict(self) -> dict:
        from dataclasses import asdict
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def iqae_centroids(k: int = 8) -> np.ndarray:
    """k centroids evenly spaced between -1 and 1 inclusive: C[i] = -1 + 2i/(k-1)."""
    return np.linspace(-1.0, 1.0, k)


@dataclass
class EncoderOutput:
    """Pre-quantization scalars with their assigned buttons and centroid values."""

    enc_s: np.ndarray
    buttons: np.ndarray
    centroid_values: np.ndarray


def iqae_quantize(enc_s: np.ndarray, k: int = 8) -> EncoderOutput:
    """Nearest-centroid assignment of each scalar; ties round to the higher index.

    Inputs outside [-1, 1] are legal and clamp to the end buttons; the
    margin loss is what discourages them during training.
    """
    enc_s = np.asarray(enc_s, dtype=np.float64)
    c = iqae_centroids(k)
    d = np.abs(enc_s[..., None] - c)
    # argmin returns the first minimum; reversing the centroid axis makes
    # exact distance ties resolve to the higher index instead
    buttons = (k - 1) - np.argmin(d[..., ::-1], axis=-1)
    return EncoderOutput(enc_s=enc_s, buttons=buttons, centroid_values=c[buttons])


def vq_nearest(z_e: np.ndarray, codebook: np.ndarray) -> np.ndarray:
    """Nearest codebook row by L2 for each input row; ties take the lower index."""
    d2 = np.sum(np.square(z_e[:, None, :] - codebook[None, :, :]), axis=2)
    return np.argmin(d2, axis=1)


def vq_quantize(z_e: Tensor, codebook: Tensor) -> tuple[np.ndarray, Tensor, Tensor, Tensor]:
    """Quantize rows of z_e against the codebook.

    Returns (indices, z_q, codebook_loss, commitment_loss). z_q carries a
    straight-through gradient to z_e (none to the codebook); the codebook
    trains only through codebook_loss = sum ||sg(z_e) - E[idx]||^2, the
    encoder is additionally pulled by commitment_loss = sum ||z_e - sg(E[idx])||^2.
    """
    if z_e.data.ndim != 2 or z_e.shape[1] != codebook.shape[1]:
        raise ValueError(f"z_e {z_e.shape} does not match codebook {codebook.shape}")
    indices = vq_nearest(z_e.data, codebook.data)
    selected = gather_rows(codebook, indices)
    z_q = straight_through(z_e, selected.data)
    codebook_loss = tsum(square(selected - Tensor(z_e.data.copy())))
    commitment_loss = tsum(square(z_e - Tensor(selected.data.copy())))
    return indices, z_q, codebook_loss, commitment_loss


def loss_margin(enc_s: Tensor) -> Tensor:
    """sum over steps of max(|enc_s| - 1, 0)^2."""
    return tsum(square(relu(absval(enc_s) - 1.0)))


def loss_contour(keys: np.ndarray, enc_s: Tensor) -> Tensor:
    """sum over transitions of max(1 - dkeys * denc_s, 0)^2.

    dkeys is in semitones and enters as a constant, so a repeated pitch
    (dkeys = 0) contributes a constant 1 with exactly zero gradient.
    """
    keys = np.atleast_2d(np.asarray(keys, dtype=enc_s.data.dtype))
    e = enc_s if enc_s.data.ndim == 2 else _row(enc_s)
    n = e.shape[1]
    if n < 2:
        return Tensor(np.zeros((), dtype=e.data.dtype))
    dkeys = keys[:, 1:] - keys[:, :-1]
    de = narrow(e, 1, 1, n) - narrow(e, 1, 0, n - 1)
    return tsum(square(relu(1.0 - de * dkeys)))


def _row(t: Tensor) -> Tensor:
    from .nn import reshape
    return reshape(t, (1, t.data.size))


def one_hot(idx: np.ndarray, width: int, dtype=np.float32) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    out = np.zeros((idx.size, width), dtype=dtype)
    out[np.arange(idx.size), idx.reshape(-1)] = 1.0
    return out


class GenieModel:
    """Parameter container plus the forward passes and the training loss."""

    def __init__(self, config: ModelConfig, seed: int = 0, dtype=np.float32,
                 params: dict[str, Tensor] | None = None):
        self.config = config
        self.dtype = dtype
        if params is not None:
            self.params = params
            return
        rng = np.random.default_rng(seed)
        p: dict[str, Tensor] = {}
        h = config.hidden_size
        if config.has_encoder:
            enc_in = NUM_KEYS + (NUM_DT_BUCKETS if config.use_dt else 0)
            for i in range(config.num_layers):
                width = enc_in if i == 0 else 2 * h
                for direction in ("fwd", "bwd"):
                    layer = init_lstm_layer(width, h, rng, dtype=dtype)
                    p[f"enc.l{i}.{direction}.w_x"] = layer.input_weights
                    p[f"enc.l{i}.{direction}.w_h"] = layer.recurrent_weights
                    p[f"enc.l{i}.{direction}.b"] = layer.biases
            head_out = config.button_repr_width
            s = 1.0 / np.sqrt(2 * h)
            p["enc.head.w"] = parameter(rng.uniform(-s, s, size=(head_out, 2 * h)), dtype=dtype)
            p["enc.head.b"] = parameter(np.zeros(head_out), dtype=dtype)
            if config.quantizer == "vq":
                k = config.k_buttons
                p["vq.codebook"] = parameter(
                    rng.uniform(-1.0 / k, 1.0 / k, size=(k, config.vq_dim)), dtype=dtype)
        dec_in = PREV_KEY_WIDTH + config.button_repr_width + \
            (NUM_DT_BUCKETS if config.use_dt else 0)
        for i in range(config.num_layers):
            width = dec_in if i == 0 else h
            layer = init_lstm_layer(width, h, rng, dtype=dtype)
            p[f"dec.l{i}.w_x"] = layer.input_weights
            p[f"dec.l{i}.w_h"] = layer.recurrent_weights
            p[f"dec.l{i}.b"] = layer.biases
        s = 1.0 / np.sqrt(h)
        p["dec.head.w"] = parameter(rng.uniform(-s, s, size=(NUM_KEYS, h)), dtype=dtype)
        p["dec.head.b"] = parameter(np.zeros(NUM_KEYS), dtype=dtype)
        self.params = p

    # -- parameter plumbing ------------------------------------------------

    def _lstm(self, prefix: str) -> LstmLayerParams:
        return LstmLayerParams(
            input_weights=self.params[f"{prefix}.w_x"],
            recurrent_weights=self.params[f"{prefix}.w_h"],
            biases=self.params[f"{prefix}.b"],
        )

    def param_list(self) -> list[Tensor]:
        return [self.params[k] for k in sorted(self.params)]

    def grads(self) -> dict[str, np.ndarray]:
        return {k: self.params[k].grad for k in self.params}

    # -- encoder -------------------------------------------------------------

    def _encoder_inputs(self, keys: np.ndarray, dt: np.ndarray | None) -> list[Tensor]:
        b, n = keys.shape
        cols = []
        for t in range(n):
            x = one_hot(keys[:, t], NUM_KEYS, self.dtype)
            if self.config.use_dt:
                x = np.concatenate([x, one_hot(dt[:, t], NUM_DT_BUCKETS, self.dtype)], axis=1)
            cols.append(Tensor(x))
        return cols

    def encoder_forward(self, keys: np.ndarray, dt: np.ndarray | None = None) -> Tensor:
        """Per-note encoder output, [batch, n] scalars (iqae/identity) or
        [n*batch, d] rows in step-major order (vq)."""
        cfg = self.config
        if not cfg.has_encoder:
            raise ValueError("this configuration has no encoder")
        keys = np.atleast_2d(keys)
        if dt is not None:
            dt = np.atleast_2d(dt)
        if cfg.use_dt and dt is None:
            raise ValueError("config.use_dt requires dt buckets")
        b, n = keys.shape
        h = cfg.hidden_size
        steps = self._encoder_inputs(keys, dt)
        for i in range(cfg.num_layers):
            fwd_layer = self._lstm(f"enc.l{i}.fwd")
            bwd_layer = self._lstm(f"enc.l{i}.bwd")
            hf, cf = zero_state(b, h, self.dtype)
            fwd_states = []
            for t in range(n):
                hf, cf = lstm_step(fwd_layer, steps[t], hf, cf)
                fwd_states.append(hf)
            hb, cb = zero_state(b, h, self.dtype)
            bwd_states: list[Tensor] = [None] * n
            for t in reversed(range(n)):
                hb, cb = lstm_step(bwd_layer, steps[t], hb, cb)
                bwd_states[t] = hb
            steps = [concat([fwd_states[t], bwd_states[t]], axis=1) for t in range(n)]
        head_w, head_b = self.params["enc.head.w"], self.params["enc.head.b"]
        outs = [affine(head_w, head_b, steps[t]) for t in range(n)]
        if cfg.quantizer == "vq":
            return concat(outs, axis=0)  # [n*b, d], step-major
        return concat(outs, axis=1)      # [b, n]

    def quantize(self, enc_out: Tensor) -> tuple[np.ndarray, Tensor, Tensor | None, Tensor | None]:
        """Apply the configured bottleneck.

        Returns (buttons, decoder_repr, codebook_loss, commitment_loss);
        the aux losses are None outside vq mode.
        """
        cfg = self.config
        if cfg.quantizer in ("iqae",):
            q = iqae_quantize(enc_out.data, cfg.k_buttons)
            rep = straight_through(enc_out, q.centroid_values.astype(enc_out.data.dtype))
            return q.buttons, rep, None, None
        if cfg.quantizer == "identity":
            buttons = iqae_quantize(enc_out.data, cfg.k_buttons).buttons
            return buttons, enc_out, None, None
        if cfg.quantizer == "vq":
            indices, z_q, cb, commit = vq_quantize(enc_out, self.params["vq.codebook"])
            return indices, z_q, cb, commit
        raise ValueError("no quantizer in LM mode")

    # -- decoder -------------------------------------------------------------

    def _decoder_inputs(self, keys: np.ndarray, rep: Tensor | None,
                        dt: np.ndarray | None) -> list[Tensor]:
        cfg = self.config
        b, n = keys.shape
        prev = np.concatenate([np.full((b, 1), START_SYMBOL, dtype=np.int64),
                               keys[:, :-1].astype(np.int64)], axis=1)
        cols = []
        for t in range(n):
            parts = [Tensor(one_hot(prev[:, t], PREV_KEY_WIDTH, self.dtype))]
            if rep is not None:
                if cfg.quantizer == "vq":
                    parts.append(narrow(rep, 0, t * b, (t + 1) * b))
                else:
                    parts.append(narrow(rep, 1, t, t + 1))
            if cfg.use_dt:
                parts.append(Tensor(one_hot(dt[:, t], NUM_DT_BUCKETS, self.dtype)))
            cols.append(concat(parts, axis=1) if len(parts) > 1 else parts[0])
        return cols

    def decoder_forward(self, keys: np.ndarray, rep: Tensor | None = None,
                        dt: np.ndarray | None = None) -> list[Tensor]:
        """Teacher-forced logits, one [batch, 88] tensor per step.

        Step t sees only the previous key, this step's button representation
        and time bucket; nothing later (the live path replays the same
        recurrence one press at a time).
        """
        cfg = self.config
        keys = np.atleast_2d(keys)
        if dt is not None:
            dt = np.atleast_2d(dt)
        if cfg.use_dt and dt is None:
            raise ValueError("config.use_dt requires dt buckets")
        b, n = keys.shape
        h = cfg.hidden_size
        steps = self._decoder_inputs(keys, rep, dt)
        for i in range(cfg.num_layers):
            layer = self._lstm(f"dec.l{i}")
            hs, cs = zero_state(b, h, self.dtype)
            outs = []
            for t in range(n):
                hs, cs = lstm_step(layer, steps[t], hs, cs)
                outs.append(hs)
            steps = outs
        head_w, head_b = self.params["dec.head.w"], self.params["dec.head.b"]
        return [affine(head_w, head_b, s) for s in steps]

    def decode_step(self, prev_key: int, button_value: np.ndarray | float | None,
                    dt: int | None, state: list[tuple[np.ndarray, np.ndarray]] | None,
                    ) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
        """One incremental decoder step for live use; numpy state in/out."""
        cfg = self.config
        h = cfg.hidden_size
        if state is None:
            state = [(np.zeros((1, h), dtype=self.dtype), np.zeros((1, h), dtype=self.dtype))
                     for _ in range(cfg.num_layers)]
        parts = [one_hot(np.array([prev_key]), PREV_KEY_WIDTH, self.dtype)]
        if cfg.button_repr_width:
            rep = np.asarray(button_value, dtype=self.dtype).reshape(1, -1)
            if rep.shape[1] != cfg.button_repr_width:
                raise ValueError(f"button repr width {rep.shape[1]} != {cfg.button_repr_width}")
            parts.append(rep)
        if cfg.use_dt:
            parts.append(one_hot(np.array([dt]), NUM_DT_BUCKETS, self.dtype))
        x = Tensor(np.concatenate(parts, axis=1))
        new_state = []
        from .nn import no_grad
        with no_grad():
            for i in range(cfg.num_layers):
                layer = self._lstm(f"dec.l{i}")
                h_t, c_t = lstm_step(layer, x, Tensor(state[i][0]), Tensor(state[i][1]))
                new_state.append((h_t.data, c_t.data))
                x = h_t
            logits = affine(self.params["dec.head.w"], self.params["dec.head.b"], x)
        return logits.data[0], new_state

    # -- training loss -----------------------------------------------------------

    def loss_total(self, keys: np.ndarray, dt: np.ndarray | None = None,
                   ) -> tuple[Tensor, dict[str, float]]:
        """Mean-per-token reconstruction NLL plus the configured regularizers.

        Margin/contour (iqae) and codebook/commitment (vq) are averaged per
        step so exp(recons) is directly a per-note perplexity and the
        relative term weights match a summed formulation.
        """
        from .nn import softmax_nll
        cfg = self.config
        keys = np.atleast_2d(np.asarray(keys, dtype=np.int64))
        if dt is not None:
            dt = np.atleast_2d(np.asarray(dt, dtype=np.int64))
        b, n = keys.shape

        components: dict[str, float] = {}
        rep = None
        enc_out = None
        cb_loss = commit_loss = None
        if cfg.has_encoder:
            enc_out = self.encoder_forward(keys, dt)
            _, rep, cb_loss, commit_loss = self.quantize(enc_out)

        logits = self.decoder_forward(keys, rep, dt)
        total_nll = None
        for t in range(n):
            step_loss = tsum(softmax_nll(logits[t], keys[:, t]))
            total_nll = step_loss if total_nll is None else total_nll + step_loss
        recons = total_nll * (1.0 / (b * n))
        components["recons"] = float(recons.data)
        loss = recons

        if cfg.quantizer in ("iqae", "identity"):
            margin = loss_margin(enc_out) * (1.0 / (b * n))
            components["margin"] = float(margin.data)
            if cfg.margin_weight:
                loss = loss + cfg.margin_weight * margin
            if n >= 2:
                contour = loss_contour(keys, enc_out) * (1.0 / (b * (n - 1)))
            else:
                contour = Tensor(np.zeros((), dtype=self.dtype))
            components["contour"] = float(contour.data)
            if cfg.contour_weight:
                loss = loss + cfg.contour_weight * contour
        elif cfg.quantizer == "vq":
            cb = cb_loss * (1.0 / (b * n))
            commit = commit_loss * (1.0 / (b * n))
            components["codebook"] = float(cb.data)
            components["commitment"] = float(commit.data)
            loss = loss + cb + cfg.vq_beta * commit

        components["total"] = float(loss.data)
        return loss, components

    def encode_buttons(self, keys: np.ndarray, dt: np.ndarray | None = None) -> np.ndarray:
        """Quantized button indices for a window, [batch, n]."""
        from .nn import no_grad
        cfg = self.config
        keys = np.atleast_2d(keys)
        b, n = keys.shape
        with no_grad():
            enc_out = self.encoder_forward(keys, dt)
            buttons, _, _, _ = self.quantize(enc_out)
        if cfg.quantizer == "vq":
            return buttons.reshape(n, b).T  # undo step-major row layout
        return buttons.reshape(b, n)
