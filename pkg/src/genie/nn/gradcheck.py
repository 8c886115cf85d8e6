"""Central finite-difference gradient checking for the autodiff kernel."""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from .tensor import Tensor

# Relative error with an absolute floor: below the floor the comparison is
# effectively absolute, which keeps near-zero gradients from exploding the
# ratio while still catching real sign/scale bugs.
_DENOM_FLOOR = 1e-3


def finite_diff_gradcheck(model_fn: Callable[[], Tensor],
                          params: Iterable[Tensor],
                          h: float = 1e-4,
                          max_coords_per_param: int = 64,
                          rng: np.random.Generator | None = None) -> float:
    """Max relative error between backward() and (f(x+h)-f(x-h))/2h.

    ``model_fn`` rebuilds the loss graph from the params' current data on
    every call and must be deterministic. Run in float64: f32 roundoff is
    larger than the tolerances this harness is used with.
    """
    params = list(params)
    if rng is None:
        rng = np.random.default_rng(0)
    loss = model_fn()
    loss.backward(params=params)
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, a in zip(params, analytic):
        n = p.data.size
        if n <= max_coords_per_param:
            coords = np.arange(n)
        else:
            coords = rng.choice(n, size=max_coords_per_param, replace=False)
        flat = p.data.reshape(-1)
        aflat = a.reshape(-1)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + h
            f_plus = float(model_fn().data)
            flat[c] = orig - h
            f_minus = float(model_fn().data)
            flat[c] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            denom = max(abs(numeric), abs(aflat[c]), _DENOM_FLOOR)
            worst = max(worst, abs(numeric - aflat[c]) / denom)
    return worst
