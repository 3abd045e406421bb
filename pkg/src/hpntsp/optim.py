from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    """Moment estimates for one parameter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def like(cls, param: Tensor, **kw) -> AdamState:
        return cls(np.zeros(param.shape), np.zeros(param.shape), **kw)


def adam_step(params: list[Tensor], states: list[AdamState], lr: float) -> None:
    """Bias-corrected Adam update in place, then clear the gradients.

    A parameter whose gradient is exactly zero everywhere is left untouched
    (moments included) so that zero-advantage batches are a no-op.
    """
    if len(params) != len(states):
        raise ValueError("params and states differ in length")
    for i, p in enumerate(params):
        if p.grad is None:
            raise ValueError(f"parameter {i} (shape {p.shape}) has no gradient")
        if states[i].m.shape != p.shape:
            raise ValueError(f"state shape {states[i].m.shape} does not match parameter {p.shape}")
    for p, s in zip(params, states):
        g = p.grad
        s.step += 1
        if g.any():
            s.m *= s.beta1
            s.m += (1.0 - s.beta1) * g
            s.v *= s.beta2
            s.v += (1.0 - s.beta2) * (g * g)
            mhat = s.m / (1.0 - s.beta1 ** s.step)
            vhat = s.v / (1.0 - s.beta2 ** s.step)
            p.data -= lr * mhat / (np.sqrt(vhat) + s.epsilon)
        p.grad = None


@dataclass
class Adam:
    params: list[Tensor]
    lr: float = 1e-4
    states: list[AdamState] = field(default_factory=list)

    def __post_init__(self):
        if not self.states:
            self.states = [AdamState.like(p) for p in self.params]

    def step(self) -> None:
        adam_step(self.params, self.states, self.lr)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
