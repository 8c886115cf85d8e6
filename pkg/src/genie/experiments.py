"""Desk-scale experiments: small-model comparisons on synthetic corpora.

Full-scale numbers need a real performance corpus and long training; these
runs only establish orderings between configurations (autoencoder beats
language model, contour regularization drives contour violations down and
button sequences toward hand-authored references).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dataset import split_corpus, windows_from_corpus, zigzag_corpus
from .evaluate import (
    EvalReport,
    eval_cvr,
    eval_gold,
    eval_ppl,
    eval_windows,
    load_gold_melodies,
)
from .model import ModelConfig
from .training import TrainRunConfig, TrainResult, train

DESK_CONFIGS = ("lm", "iqae_nocontour", "iqae_contour", "vq")


@dataclass
class DeskRun:
    name: str
    report: EvalReport
    result: TrainResult
    seconds: float


def desk_model_config(name: str, hidden_size: int = 32, window_n: int = 32) -> ModelConfig:
    quantizer = {"lm": "none", "vq": "vq"}.get(name, "iqae")
    contour = 1.0 if name == "iqae_contour" else 0.0
    # margin weight 4: at desk scale the contour pressure otherwise pushes
    # the scalar past +-1 where buttons pin at the extremes and stall
    return ModelConfig(hidden_size=hidden_size, num_layers=2, quantizer=quantizer,
                       contour_weight=contour, margin_weight=4.0, window_n=window_n)


def desk_corpus_windows(num_sequences: int = 40, notes_per_sequence: int = 256,
                        window_n: int = 32, seed: int = 11):
    """Zigzag corpus split 8:1:1, returned as (train, val, test) window lists."""
    corpus = zigzag_corpus(num_sequences, notes_per_sequence, seed=seed)
    split = split_corpus(corpus, seed=seed + 1)
    by_id = {s.source_id: s for s in corpus}
    train_ex = windows_from_corpus([by_id[i] for i in split.train], window_n,
                                   seed=seed + 2, per_sequence=8)
    val_ex = eval_windows([by_id[i] for i in split.validation], window_n)
    test_ex = eval_windows([by_id[i] for i in split.test], window_n)
    return train_ex, val_ex, test_ex


def run_desk_comparison(max_steps: int = 1500, hidden_size: int = 32,
                        window_n: int = 32, batch_size: int = 16,
                        lr: float = 1e-3, seed: int = 100,
                        configs=DESK_CONFIGS) -> dict[str, DeskRun]:
    """Equal-budget training of the compared configurations, then the metric
    suite on a shared held-out split and the bundled gold melodies."""
    train_ex, val_ex, test_ex = desk_corpus_windows(window_n=window_n)
    gold = load_gold_melodies()
    runs: dict[str, DeskRun] = {}
    for name in configs:
        t0 = time.time()
        run_config = TrainRunConfig(
            max_steps=max_steps, batch_size=batch_size, eval_every_steps=250,
            patience_evals=8, seed=seed, window_n=window_n, lr=lr,
            model=desk_model_config(name, hidden_size, window_n))
        result = train(run_config, train_ex, val_ex)
        model = result.model
        ppl = eval_ppl(model, test_ex)
        cvr = gold_mse = None
        if model.config.has_encoder:
            cvr = eval_cvr(model, test_ex)
            gold_mse = eval_gold(model, gold)
        report = EvalReport(name=name, step=result.best_step, ppl=ppl,
                            cvr=cvr, gold_mse=gold_mse)
        runs[name] = DeskRun(name=name, report=report, result=result,
                             seconds=time.time() - t0)
    return runs


def overfit_two_melodies(max_steps: int = 5000, seed: int = 0,
                         lr: float = 1e-3, batch_size: int = 2,
                         target_ppl: float = 1.05) -> tuple[TrainResult, float]:
    """Full-size (2x128) model memorizing two fixed 64-note melodies.

    Returns the result and the final training-set perplexity. Stops as
    soon as the running train reconstruction clears target_ppl.
    """
    from .dataset import two_melody_corpus

    corpus = two_melody_corpus(64)
    examples = eval_windows(corpus, 64)
    config = TrainRunConfig(
        max_steps=max_steps, batch_size=batch_size, eval_every_steps=500,
        patience_evals=100, seed=seed, window_n=64, lr=lr,
        model=ModelConfig(hidden_size=128, num_layers=2, quantizer="iqae",
                          contour_weight=1.0, margin_weight=1.0, window_n=64))
    result = train(config, examples, examples,
                   stop_below_train_recons=float(np.log(target_ppl)))
    return result, eval_ppl(result.model, examples)
