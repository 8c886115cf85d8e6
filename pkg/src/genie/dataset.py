"""Corpus plumbing: splits, training windows, shard files, synthetic data.

Shard layout (little-endian): header {magic "PGSD", version u32, n u32,
count u32} followed by count records of n key bytes then n dt-bucket
bytes. Keys and buckets both fit a u8.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .sequences import NUM_KEYS, NoteSequence, dt_buckets_for_window

SHARD_MAGIC = b"PGSD"
SHARD_VERSION = 1
TRANSPOSE_LO, TRANSPOSE_HI = -6, 6  # half-open [-6, 6)


@dataclass
class TrainingExample:
    """A fixed-length window of keys and dt buckets, post-transposition."""

    keys: np.ndarray          # u8 [n], each in [0, 88)
    dt_buckets: np.ndarray    # u8 [n], each in [0, 32)
    transpose_applied: int = 0

    def __post_init__(self):
        self.keys = np.asarray(self.keys, dtype=np.uint8)
        self.dt_buckets = np.asarray(self.dt_buckets, dtype=np.uint8)
        if self.keys.shape != self.dt_buckets.shape:
            raise ValueError("keys and dt_buckets must have equal length")


@dataclass
class CorpusSplit:
    train: list[str] = field(default_factory=list)
    validation: list[str] = field(default_factory=list)
    test: list[str] = field(default_factory=list)


def split_corpus(sequences: list[NoteSequence], seed: int) -> CorpusSplit:
    """Deterministic 8:1:1 split at whole-sequence granularity.

    validation and test each get floor(n/10) sequences, the rest train;
    corpora under 10 sequences therefore get empty validation/test.
    """
    if not sequences:
        raise ValueError("empty corpus")
    ids = [s.source_id for s in sequences]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    tenth = len(ids) // 10
    val_idx = order[:tenth]
    test_idx = order[tenth:2 * tenth]
    train_idx = order[2 * tenth:]
    return CorpusSplit(
        train=sorted(ids[i] for i in train_idx),
        validation=sorted(ids[i] for i in val_idx),
        test=sorted(ids[i] for i in test_idx),
    )


def valid_transposes(keys: np.ndarray) -> list[int]:
    """Shifts s in [-6, 6) that keep every key inside [0, 88)."""
    lo, hi = int(keys.min()), int(keys.max())
    return [s for s in range(TRANSPOSE_LO, TRANSPOSE_HI)
            if lo + s >= 0 and hi + s < NUM_KEYS]


def sample_window(seq: NoteSequence, n: int, rng: np.random.Generator) -> TrainingExample:
    """A random contiguous n-note window, randomly transposed.

    The shift is drawn uniformly from the [-6, 6) shifts that keep the
    window inside the keyboard (0 is always legal). dt buckets come from
    consecutive onset deltas inside the window; the first note gets 31.
    """
    if len(seq) < n:
        raise ValueError(f"sequence {seq.source_id!r} shorter than window ({len(seq)} < {n})")
    start = int(rng.integers(0, len(seq) - n + 1))
    window = seq.events[start:start + n]
    keys = np.array([k for k, _ in window], dtype=np.int16)
    shifts = valid_transposes(keys)
    shift = int(shifts[rng.integers(0, len(shifts))])
    dts = dt_buckets_for_window([t for _, t in window])
    return TrainingExample(
        keys=(keys + shift).astype(np.uint8),
        dt_buckets=np.array(dts, dtype=np.uint8),
        transpose_applied=shift,
    )


def windows_from_corpus(sequences: list[NoteSequence], n: int, seed: int,
                        per_sequence: int | None = None) -> list[TrainingExample]:
    """Sampled windows over all sequences long enough to hold one.

    per_sequence defaults to len(seq)//n so long performances contribute
    proportionally more windows.
    """
    rng = np.random.default_rng(seed)
    out: list[TrainingExample] = []
    for seq in sequences:
        if len(seq) < n:
            continue
        count = per_sequence if per_sequence is not None else max(1, len(seq) // n)
        for _ in range(count):
            out.append(sample_window(seq, n, rng))
    return out


# -- shard I/O -----------------------------------------------------------------


def write_shard(path: str | Path, examples: list[TrainingExample]) -> None:
    if not examples:
        raise ValueError("refusing to write an empty shard")
    n = len(examples[0].keys)
    for ex in examples:
        if len(ex.keys) != n:
            raise ValueError("all shard examples must share one window length")
    with open(path, "wb") as f:
        f.write(SHARD_MAGIC)
        f.write(struct.pack("<III", SHARD_VERSION, n, len(examples)))
        for ex in examples:
            f.write(ex.keys.tobytes())
            f.write(ex.dt_buckets.tobytes())


def read_shard(path: str | Path) -> list[TrainingExample]:
    raw = Path(path).read_bytes()
    if raw[:4] != SHARD_MAGIC:
        raise ValueError(f"{path}: not a shard file (bad magic)")
    version, n, count = struct.unpack("<III", raw[4:16])
    if version != SHARD_VERSION:
        raise ValueError(f"{path}: unsupported shard version {version}")
    expected = 16 + count * 2 * n
    if len(raw) < expected:
        raise ValueError(f"{path}: truncated shard ({len(raw)} < {expected} bytes)")
    out = []
    pos = 16
    for _ in range(count):
        keys = np.frombuffer(raw, dtype=np.uint8, count=n, offset=pos)
        dts = np.frombuffer(raw, dtype=np.uint8, count=n, offset=pos + n)
        pos += 2 * n
        out.append(TrainingExample(keys=keys.copy(), dt_buckets=dts.copy()))
    return out


def write_manifest(path: str | Path, split: CorpusSplit) -> None:
    """Plain-text sidecar: "<split> <relative-path>" per sequence."""
    lines = [f"train {p}" for p in split.train]
    lines += [f"validation {p}" for p in split.validation]
    lines += [f"test {p}" for p in split.test]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path: str | Path) -> CorpusSplit:
    split = CorpusSplit()
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        name, rel = line.split(maxsplit=1)
        getattr(split, name).append(rel)
    return split


# -- synthetic corpora ------------------------------------------------------------


def zigzag_corpus(num_sequences: int, notes_per_sequence: int, seed: int,
                  key_lo: int = 15, key_hi: int = 75,
                  run_lo: int = 3, run_hi: int = 4,
                  step_semitones: int = 2,
                  beat_seconds: float = 0.25) -> list[NoteSequence]:
    """Random monotone scale fragments: whole-tone runs of 3-4 notes that
    alternate direction, reflecting off the key range.

    Short runs with 2-semitone steps keep every full contour representable
    by 8 buttons (an interval of 2 asks the contour hinge for a scalar
    move of 1/2, comfortably above the 2/7 button cell width), which is
    what the contour-regularization experiments need.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(num_sequences):
        key = int(rng.integers(key_lo, key_hi))
        direction = 1 if rng.random() < 0.5 else -1
        events: list[tuple[int, float]] = []
        t = 0.0
        while len(events) < notes_per_sequence:
            run = int(rng.integers(run_lo, run_hi + 1))
            for _ in range(run):
                if len(events) >= notes_per_sequence:
                    break
                events.append((key, t))
                t += beat_seconds
                if not key_lo <= key + direction * step_semitones <= key_hi:
                    direction = -direction  # reflect off the range edge
                key += direction * step_semitones
            direction = -direction
        out.append(NoteSequence(events=events, source_id=f"zigzag-{i:03d}"))
    return out


def two_melody_corpus(notes_per_melody: int = 64) -> list[NoteSequence]:
    """Two fixed structured synthetic melodies for the overfit sanity check:
    a whole-tone scale loop and a rising arpeggio pattern."""
    scale = []
    key, direction = 30, 1
    for i in range(notes_per_melody):
        scale.append((key, 0.2 * i))
        if not 30 <= key + 2 * direction <= 58:
            direction = -direction
        key += 2 * direction
    arpeggio = []
    key = 45
    pattern = (4, 3, -2)
    for i in range(notes_per_melody):
        arpeggio.append((key, 0.25 * i))
        key += pattern[i % 3]
        if key > 70:
            key -= 24
    return [NoteSequence(events=scale, source_id="melody-scale"),
            NoteSequence(events=arpeggio, source_id="melody-arpeggio")]
