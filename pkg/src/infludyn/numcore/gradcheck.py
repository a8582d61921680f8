"""Central-difference gradient checking."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import DomainError, NumericError
from .tensor import Tensor, no_grad


def grad_check(f: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-5) -> float:
    """Max relative error between tape gradients and central differences.

    ``f`` rebuilds a scalar from ``params`` on every call. The error per
    entry is ``|analytic - numeric| / max(1, |numeric|)``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    for p in params:
        p.grad = None
    out = f()
    if out.values.size != 1:
        raise ValueError(f"grad_check needs a scalar function, got shape {out.shape}")
    out.backward()
    analytic = [np.zeros_like(p.values) if p.grad is None else p.grad.copy() for p in params]

    def value() -> float:
        try:
            with no_grad():
                v = float(f().values)
        except (NumericError, DomainError) as exc:
            raise NumericError(f"grad_check: function evaluation failed: {exc}") from None
        if not np.isfinite(v):
            raise NumericError("grad_check: non-finite function value")
        return v

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.values.reshape(-1)
        a_flat = a.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            plus = value()
            flat[i] = saved - eps
            minus = value()
            flat[i] = saved
            numeric = (plus - minus) / (2.0 * eps)
            err = abs(a_flat[i] - numeric) / max(1.0, abs(numeric))
            worst = max(worst, err)
    for p in params:
        p.grad = None
    return worst
