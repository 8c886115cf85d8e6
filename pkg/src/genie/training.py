"""Training loop: minibatch sampling, clipped Adam steps, early stopping.

A run is deterministic given its seed: batch order comes from one
explicitly-seeded generator, parameters from another, so two runs with
the same config produce bit-identical loss curves in single-threaded f32.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import TrainingExample
from .model import GenieModel, ModelConfig
from .nn import AdamState, DivergenceError, adam_update, clip_global_norm


@dataclass
class TrainRunConfig:
    max_steps: int = 100_000
    batch_size: int = 32
    eval_every_steps: int = 1000
    patience_evals: int = 10
    seed: int = 0
    window_n: int = 128
    model: ModelConfig = field(default_factory=ModelConfig)
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float = 3.0

    def __post_init__(self):
        if isinstance(self.model, dict):
            self.model = ModelConfig.from_dict(self.model)
        for name in ("max_steps", "batch_size", "eval_every_steps", "patience_evals", "window_n"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TrainRunConfig":
        return cls(**json.loads(text))


@dataclass
class TrainResult:
    model: GenieModel
    best_val_recons: float
    best_step: int
    steps_run: int
    log: list[dict]


def _batch_arrays(examples: list[TrainingExample], idx: np.ndarray,
                  use_dt: bool) -> tuple[np.ndarray, np.ndarray | None]:
    keys = np.stack([examples[i].keys for i in idx]).astype(np.int64)
    dt = np.stack([examples[i].dt_buckets for i in idx]).astype(np.int64) if use_dt else None
    return keys, dt


def mean_recons(model: GenieModel, examples: list[TrainingExample],
                batch_size: int = 32) -> float:
    """Teacher-forced mean per-token NLL over a fixed example list."""
    from .nn import no_grad
    total, count = 0.0, 0
    with no_grad():
        for lo in range(0, len(examples), batch_size):
            chunk = examples[lo:lo + batch_size]
            idx = np.arange(len(chunk))
            keys, dt = _batch_arrays(chunk, idx, model.config.use_dt)
            _, comps = model.loss_total(keys, dt)
            total += comps["recons"] * keys.size
            count += keys.size
    return total / max(count, 1)


def train(config: TrainRunConfig,
          train_examples: list[TrainingExample],
          val_examples: list[TrainingExample],
          log_path: str | Path | None = None,
          stop_below_train_recons: float | None = None,
          model: GenieModel | None = None) -> TrainResult:
    """Run the loop; keeps the parameters with the lowest validation recons.

    Stops early after ``patience_evals`` evaluations without improvement,
    or immediately once the running train recons drops below
    ``stop_below_train_recons`` (overfit-style runs). Raises
    DivergenceError if the loss or a gradient goes non-finite.
    """
    if not train_examples:
        raise ValueError("no training examples")
    if not val_examples:
        raise ValueError("no validation examples")

    if model is None:
        model = GenieModel(config.model, seed=config.seed)
    state = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                      epsilon=config.epsilon)
    batch_rng = np.random.default_rng(config.seed + 1)

    best_val = float("inf")
    best_step = 0
    best_params = {k: t.data.copy() for k, t in model.params.items()}
    evals_since_improvement = 0
    log: list[dict] = []
    log_file = open(log_path, "a") if log_path else None

    def emit(record: dict) -> None:
        log.append(record)
        if log_file:
            log_file.write(json.dumps(record) + "\n")
            log_file.flush()

    step = 0
    try:
        while step < config.max_steps:
            step += 1
            idx = batch_rng.integers(0, len(train_examples), size=config.batch_size)
            keys, dt = _batch_arrays(train_examples, idx, config.model.use_dt)
            loss, comps = model.loss_total(keys, dt)
            if not np.isfinite(comps["total"]):
                raise DivergenceError(f"non-finite loss at step {step}: {comps}")
            loss.backward(params=model.param_list())
            grads = model.grads()
            norm = clip_global_norm(grads, config.clip_norm)
            adam_update(model.params, grads, state)

            record = {"step": step, "grad_norm": round(norm, 6)}
            record.update({k: round(v, 6) for k, v in comps.items()})

            if stop_below_train_recons is not None and \
                    comps["recons"] < stop_below_train_recons:
                emit(record)
                best_val = mean_recons(model, val_examples)
                best_step = step
                best_params = {k: t.data.copy() for k, t in model.params.items()}
                break

            if step % config.eval_every_steps == 0 or step == config.max_steps:
                val = mean_recons(model, val_examples)
                record["val_recons"] = round(val, 6)
                record["val_ppl"] = round(float(np.exp(val)), 6)
                if val < best_val:
                    best_val = val
                    best_step = step
                    best_params = {k: t.data.copy() for k, t in model.params.items()}
                    evals_since_improvement = 0
                else:
                    evals_since_improvement += 1
                emit(record)
                if evals_since_improvement >= config.patience_evals:
                    break
            else:
                emit(record)
    finally:
        if log_file:
            log_file.close()

    for k, t in model.params.items():
        t.data = best_params[k]
    return TrainResult(model=model, best_val_recons=best_val, best_step=best_step,
                       steps_run=step, log=log)
