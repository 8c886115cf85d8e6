"""Evaluation suite: reconstruction perplexity, contour violation ratio,
and button-space MSE against hand-authored reference melodies."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .dataset import TrainingExample
from .model import GenieModel
from .sequences import NoteSequence, dt_buckets_for_window
from .training import mean_recons

logger = logging.getLogger(__name__)

DEFAULT_GOLD_TEMPO_BPM = 100.0


def eval_windows(sequences: list[NoteSequence], n: int) -> list[TrainingExample]:
    """Deterministic non-overlapping untransposed windows for evaluation."""
    out = []
    for seq in sequences:
        for lo in range(0, len(seq) - n + 1, n):
            window = seq.events[lo:lo + n]
            out.append(TrainingExample(
                keys=np.array([k for k, _ in window], dtype=np.uint8),
                dt_buckets=np.array(dt_buckets_for_window([t for _, t in window]),
                                    dtype=np.uint8),
            ))
    return out


def eval_ppl(model: GenieModel, examples: list[TrainingExample]) -> float:
    """exp(mean per-token NLL) under teacher forcing; 1 is perfect, 88 uniform."""
    if not examples:
        raise ValueError("empty evaluation split")
    return float(np.exp(mean_recons(model, examples)))


def _sign(x: np.ndarray) -> np.ndarray:
    return np.sign(x).astype(np.int64)


def eval_cvr(model: GenieModel, examples: list[TrainingExample],
             strict: bool = False) -> float:
    """Fraction of transitions where button-interval sign disagrees with
    key-interval sign (three-valued signs).

    strict=True counts only outright opposition (+/- or -/+), ignoring
    zero intervals on either side.
    """
    if not model.config.has_encoder:
        raise ValueError("CVR needs an encoder")
    violations = 0
    transitions = 0
    for ex in examples:
        keys = ex.keys.astype(np.int64)
        if keys.size < 2:
            continue
        dt = ex.dt_buckets.astype(np.int64) if model.config.use_dt else None
        buttons = model.encode_buttons(keys[None, :],
                                       dt[None, :] if dt is not None else None)[0]
        dk = _sign(np.diff(keys))
        db = _sign(np.diff(buttons))
        if strict:
            violations += int(np.sum(dk * db == -1))
        else:
            violations += int(np.sum(dk != db))
        transitions += dk.size
    return violations / max(transitions, 1)


@dataclass
class GoldMelody:
    """A familiar melody with a hand-authored reference button sequence."""

    name: str
    keys: list[int]
    gold_buttons: list[int]
    tempo_bpm: float = DEFAULT_GOLD_TEMPO_BPM

    def __post_init__(self):
        if len(self.keys) != len(self.gold_buttons):
            raise ValueError(f"{self.name}: keys and gold_buttons lengths differ")
        if any(not 0 <= b < 8 for b in self.gold_buttons):
            raise ValueError(f"{self.name}: gold buttons out of [0,8)")


def load_gold_melodies(path: str | Path | None = None) -> list[GoldMelody]:
    """Load fixtures; defaults to the set shipped inside the package."""
    if path is None:
        text = resources.files("genie").joinpath("fixtures/gold_melodies.json").read_text()
    else:
        text = Path(path).read_text()
    return [GoldMelody(**row) for row in json.loads(text)]


def eval_gold(model: GenieModel, melodies: list[GoldMelody],
              raw: bool = False) -> float:
    """Mean squared error in button space between encoder output and gold.

    dt-feature models get each melody's rhythm as one note per beat at its
    tempo_bpm. raw=True compares the unquantized scalar mapped linearly
    from [-1,1] onto [0,7] instead of the quantized button index.
    """
    if not model.config.has_encoder:
        raise ValueError("gold evaluation needs an encoder")
    total_sq = 0.0
    total_notes = 0
    for melody in melodies:
        if len(melody.keys) < 2:
            logger.warning("gold melody %r shorter than 2 notes, skipped", melody.name)
            continue
        keys = np.array(melody.keys, dtype=np.int64)
        dt = None
        if model.config.use_dt:
            beat = 60.0 / melody.tempo_bpm
            onsets = [i * beat for i in range(len(melody.keys))]
            dt = np.array(dt_buckets_for_window(onsets), dtype=np.int64)[None, :]
        if raw and model.config.quantizer in ("iqae", "identity"):
            from .nn import no_grad
            with no_grad():
                enc = model.encoder_forward(keys[None, :], dt)
            predicted = (enc.data[0] + 1.0) * 3.5
        else:
            predicted = model.encode_buttons(keys[None, :], dt)[0].astype(np.float64)
        gold = np.array(melody.gold_buttons, dtype=np.float64)
        total_sq += float(np.sum((predicted - gold) ** 2))
        total_notes += keys.size
    if total_notes == 0:
        raise ValueError("no usable gold melodies")
    return total_sq / total_notes


@dataclass
class EvalReport:
    name: str
    step: int
    ppl: float
    cvr: float | None = None
    gold_mse: float | None = None

    def __post_init__(self):
        if self.ppl < 1.0 - 1e-9:
            raise ValueError(f"perplexity below 1: {self.ppl}")
        if self.cvr is not None and not 0.0 <= self.cvr <= 1.0:
            raise ValueError(f"CVR outside [0,1]: {self.cvr}")


def evaluate_model(model: GenieModel, examples: list[TrainingExample],
                   melodies: list[GoldMelody] | None = None,
                   name: str = "model", step: int = 0) -> EvalReport:
    ppl = eval_ppl(model, examples)
    cvr = gold = None
    if model.config.has_encoder:
        cvr = eval_cvr(model, examples)
        if melodies:
            gold = eval_gold(model, melodies)
    return EvalReport(name=name, step=step, ppl=ppl, cvr=cvr, gold_mse=gold)


def report(reports: list[EvalReport]) -> tuple[str, list[dict]]:
    """Aligned comparison table plus machine-readable records.

    Metrics a configuration does not define (language models have no
    encoder) render as '-', never as zero.
    """
    if not reports:
        raise ValueError("nothing to report")
    headers = ["configuration", "PPL", "CVR", "Gold"]
    rows = []
    records = []
    for r in reports:
        rows.append([
            r.name,
            f"{r.ppl:.3f}",
            "-" if r.cvr is None else f"{r.cvr:.3f}",
            "-" if r.gold_mse is None else f"{r.gold_mse:.3f}",
        ])
        records.append({"name": r.name, "step": r.step, "ppl": r.ppl,
                        "cvr": r.cvr, "gold_mse": r.gold_mse})
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines), records
