"""Monophonic note sequences: ordering, time-delta buckets, debug text I/O.

A sequence is a flat list of (key, onset) events where key indexes the 88
piano keys and onset is in seconds. Polyphony is already flattened: chords
appear as consecutive events with equal onsets, ascending by key.
"""

from __future__ import annotations

from dataclasses import dataclass, field

NUM_KEYS = 88
NUM_DT_BUCKETS = 32
# Convention: the first note of any window/session is treated as following
# a long rest and takes the top bucket.
FIRST_NOTE_DT_BUCKET = NUM_DT_BUCKETS - 1


@dataclass
class NoteSequence:
    """Ordered monophonic events: (key in [0,88), onset_seconds >= 0)."""

    events: list[tuple[int, float]] = field(default_factory=list)
    source_id: str = ""

    def __len__(self) -> int:
        return len(self.events)

    def keys(self) -> list[int]:
        return [k for k, _ in self.events]

    def onsets(self) -> list[float]:
        return [t for _, t in self.events]

    def to_text(self) -> str:
        """Debug serialization: one "key onset" line per event, 1e-6 s onsets."""
        lines = [f"# source_id: {self.source_id}"]
        lines += [f"{k} {t:.6f}" for k, t in self.events]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "NoteSequence":
        source_id = ""
        events: list[tuple[int, float]] = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "source_id:" in line:
                    source_id = line.split("source_id:", 1)[1].strip()
                continue
            k_str, t_str = line.split()
            events.append((int(k_str), float(t_str)))
        return cls(events=events, source_id=source_id)


def flatten_order(events: list[tuple[int, float]]) -> list[tuple[int, float]]:
    """Total order for polyphonic material: onset ascending, chord notes
    ascending by key. Idempotent, a permutation of the input."""
    return sorted(events, key=lambda e: (e[1], e[0]))


def dt_bucket(delta_seconds: float) -> int:
    """Quantize a time delta into 32 buckets evenly spanning 0-1 s.

    bucket = min(floor(delta * 32), 31); anything >= 1 s saturates at 31.
    """
    if delta_seconds < 0:
        raise ValueError(f"negative time delta: {delta_seconds}")
    return min(int(delta_seconds * NUM_DT_BUCKETS), NUM_DT_BUCKETS - 1)


def dt_buckets_for_window(onsets: list[float]) -> list[int]:
    """Per-note buckets inside a window; the first note takes bucket 31."""
    out = [FIRST_NOTE_DT_BUCKET]
    for prev, cur in zip(onsets, onsets[1:]):
        out.append(dt_bucket(max(0.0, cur - prev)))
    return out
