"""Live decoder sessions: press/release in, sampled note events out.

A session owns the recurrent state, the previous emitted key, a map of
currently-held buttons, and a seeded RNG, so a (seed, checkpoint,
timestamped press stream) triple fully determines every emitted event.
The wall clock is caller-supplied, never read internally.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .model import START_SYMBOL, GenieModel, iqae_centroids
from .nn import softmax
from .sequences import FIRST_NOTE_DT_BUCKET, dt_bucket

logger = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.25


class LookaheadUnsupportedError(RuntimeError):
    """Lookahead requires knowing inputs before the press; dt models can't."""


@dataclass
class NoteEvent:
    kind: str            # "on" | "off"
    key: int
    button: int
    timestamp: float

    def to_dict(self) -> dict:
        return {"kind": self.kind, "key": self.key, "button": self.button,
                "t": self.timestamp}


@dataclass
class DecoderSession:
    model: GenieModel
    temperature: float = DEFAULT_TEMPERATURE
    seed: int = 0
    state: list | None = None
    prev_key: int = START_SYMBOL
    last_event_time: float | None = None
    held: dict[int, int] = field(default_factory=dict)
    rng: np.random.Generator = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.model.config.quantizer == "vq":
            raise ValueError("live sessions need a scalar-button checkpoint (iqae)")
        if self.rng is None:
            self.rng = np.random.Generator(np.random.PCG64(self.seed))
        self._centroids = iqae_centroids(self.model.config.k_buttons)

    # -- internals -----------------------------------------------------------

    def _dt_for(self, wall_time: float) -> int:
        if self.last_event_time is None:
            return FIRST_NOTE_DT_BUCKET
        if wall_time < self.last_event_time:
            logger.warning("non-monotonic wall time %.6f < %.6f, clamped",
                           wall_time, self.last_event_time)
            wall_time = self.last_event_time
        return dt_bucket(wall_time - self.last_event_time)

    def _sample(self, logits: np.ndarray) -> int:
        if self.temperature == 0.0:
            return int(np.argmax(logits))  # lowest index wins ties
        probs = softmax(logits / self.temperature)
        idx = int(np.searchsorted(np.cumsum(probs), self.rng.random()))
        return min(idx, probs.size - 1)  # guards the cumsum != 1.0 edge

    def _step_distribution(self, button: int, dt: int | None) -> tuple[np.ndarray, list]:
        value = self._centroids[button] if self.model.config.button_repr_width else None
        logits, new_state = self.model.decode_step(self.prev_key, value, dt, self.state)
        return logits, new_state

    # -- spec operations ----------------------------------------------------------

    def press(self, button: int, wall_time: float) -> list[NoteEvent]:
        """Decode one press into a sampled key.

        Returns the emitted events: normally a single on-event; re-pressing
        a held button retriggers, emitting its off-event first. The last
        element is always the on-event.
        """
        if not 0 <= button < self.model.config.k_buttons:
            raise ValueError(f"button {button} out of range")
        dt = self._dt_for(wall_time) if self.model.config.use_dt else None
        logits, new_state = self._step_distribution(button, dt)
        key = self._sample(logits)
        self.state = new_state
        self.prev_key = key
        if self.last_event_time is None or wall_time > self.last_event_time:
            self.last_event_time = wall_time

        events = []
        if button in self.held:
            events.append(NoteEvent("off", self.held[button], button, wall_time))
        self.held[button] = key
        events.append(NoteEvent("on", key, button, wall_time))
        return events

    def release(self, button: int, wall_time: float) -> NoteEvent | None:
        """Stop the key this button triggered; stale releases are ignored."""
        key = self.held.pop(button, None)
        if key is None:
            return None
        return NoteEvent("off", key, button, wall_time)

    def lookahead(self) -> np.ndarray:
        """[8, 88] matrix: for each hypothetical next button, the softmax
        distribution one decoder step ahead. Session state is untouched."""
        if self.model.config.use_dt:
            raise LookaheadUnsupportedError(
                "dt-feature checkpoints must wait for the press to know the time delta")
        rows = []
        for button in range(self.model.config.k_buttons):
            logits, _ = self._step_distribution(button, None)
            rows.append(softmax(logits))
        return np.stack(rows)

    def reset(self, wall_time: float = 0.0) -> list[NoteEvent]:
        """Zero the recurrent state and release everything still sounding.

        The RNG is deliberately not reseeded: a reset continues the same
        random stream.
        """
        events = [NoteEvent("off", key, button, wall_time)
                  for button, key in sorted(self.held.items())]
        self.held.clear()
        self.state = None
        self.prev_key = START_SYMBOL
        self.last_event_time = None
        return events


def session_init(model: GenieModel, temperature: float = DEFAULT_TEMPERATURE,
                 seed: int = 0) -> DecoderSession:
    return DecoderSession(model=model, temperature=temperature, seed=seed)


def bench_press_latency(model: GenieModel, presses: int = 1000,
                        seed: int = 0) -> dict[str, float]:
    """Median/p99 wall-clock latency of press() over a random button stream."""
    session = session_init(model, seed=seed)
    rng = np.random.default_rng(seed)
    buttons = rng.integers(0, 8, size=presses)
    timings = np.empty(presses)
    t_wall = 0.0
    for i, b in enumerate(buttons):
        t0 = time.perf_counter()
        session.press(int(b), t_wall)
        timings[i] = time.perf_counter() - t0
        t_wall += 0.1
    return {
        "presses": presses,
        "p50_ms": float(np.percentile(timings, 50) * 1e3),
        "p99_ms": float(np.percentile(timings, 99) * 1e3),
        "mean_ms": float(timings.mean() * 1e3),
    }
