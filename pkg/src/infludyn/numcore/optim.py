"""Adam with bias correction, in a functional core and a stateful wrapper."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..errors import ShapeError
from .tensor import Tensor


@dataclass(frozen=True)
class AdamState:
    m: tuple[np.ndarray, ...] = ()
    v: tuple[np.ndarray, ...] = ()
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, params: Sequence[np.ndarray], **hyper) -> "AdamState":
        m = tuple(np.zeros_like(np.asarray(p, dtype=np.float64)) for p in params)
        v = tuple(np.zeros_like(np.asarray(p, dtype=np.float64)) for p in params)
        return cls(m=m, v=v, t=0, **hyper)


def adam_step(
    params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState
) -> tuple[list[np.ndarray], AdamState]:
    """One Adam update. Returns new parameter arrays and the advanced state."""
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ShapeError(
            f"adam_step: {len(params)} params, {len(grads)} grads, {len(state.m)} moment slots"
        )
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        p = np.asarray(p, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"adam_step: param {p.shape} vs grad {g.shape} vs moment {m.shape}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        new_params.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, replace(state, m=tuple(new_m), v=tuple(new_v), t=t)


@dataclass
class Adam:
    """Optimizer over a fixed list of parameter tensors."""

    params: list[Tensor]
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    state: AdamState = field(init=False)

    def __post_init__(self):
        self.state = AdamState.fresh(
            [p.values for p in self.params], lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps
        )

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        grads = [p.grad if p.grad is not None else np.zeros_like(p.values) for p in self.params]
        new_values, self.state = adam_step([p.values for p in self.params], grads, self.state)
        for p, values in zip(self.params, new_values):
            p.values = values
