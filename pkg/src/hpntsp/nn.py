"""Small module system on top of the tensor engine."""
from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from . import tensor as T
from .tensor import Tensor


class Module:
    training: bool = True
    buffer_names: tuple[str, ...] = ()

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(full + ".")
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{full}.{i}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def modules(self) -> Iterator[Module]:
        yield self
        for value in vars(self).values():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, list):
                for item in value:
                    if isinstance(item, Module):
                        yield from item.modules()

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name in self.buffer_names:
            yield f"{prefix}{name}", getattr(self, name)
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, Module):
                yield from value.named_buffers(full + ".")
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_buffers(f"{full}.{i}.")

    def train(self, mode: bool = True) -> Module:
        for m in self.modules():
            m.training = mode
        return self

    def eval(self) -> Module:
        return self.train(False)

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {name: p.data.copy() for name, p in self.named_parameters()}
        state.update({name: b.copy() for name, b in self.named_buffers()})
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        bufs = dict(self.named_buffers())
        expected = set(own) | set(bufs)
        if set(state) != expected:
            missing = sorted(expected - set(state))
            extra = sorted(set(state) - expected)
            raise KeyError(f"state mismatch: missing={missing} unexpected={extra}")
        for name, value in state.items():
            target = own[name].data if name in own else bufs[name]
            if target.shape != np.shape(value):
                raise ValueError(f"{name}: shape {np.shape(value)} != {target.shape}")
            target[...] = value

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None


def uniform_param(rng: np.random.Generator, shape, bound: float) -> Tensor:
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, bias: bool = True,
                 bound: float | None = None):
        bound = 1.0 / math.sqrt(d_in) if bound is None else bound
        self.weight = uniform_param(rng, (d_in, d_out), bound)
        self.bias = uniform_param(rng, (d_out,), bound) if bias else None

    def __call__(self, x) -> Tensor:
        y = T.matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y


class BatchNorm(Module):
    buffer_names = ("running_mean", "running_var")

    def __init__(self, d: int, momentum: float = 0.1, eps: float = 1e-5):
        self.weight = Tensor(np.ones(d), requires_grad=True)
        self.bias = Tensor(np.zeros(d), requires_grad=True)
        self.running_mean = np.zeros(d)
        self.running_var = np.ones(d)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x) -> Tensor:
        return T.batch_norm(x, self.weight, self.bias, self.running_mean, self.running_var,
                            self.training, self.momentum, self.eps)


class LSTMCell(Module):
    """Standard LSTM cell, gate order (input, forget, cell, output)."""

    def __init__(self, d_in: int, d_hidden: int, rng: np.random.Generator):
        bound = 1.0 / math.sqrt(d_hidden)
        self.d_hidden = d_hidden
        self.w_ih = uniform_param(rng, (d_in, 4 * d_hidden), bound)
        self.w_hh = uniform_param(rng, (d_hidden, 4 * d_hidden), bound)
        b = rng.uniform(-bound, bound, size=4 * d_hidden)
        b[d_hidden:2 * d_hidden] += 1.0
        self.bias = Tensor(b, requires_grad=True)

    def __call__(self, x, state: tuple[Tensor, Tensor]) -> tuple[Tensor, Tensor]:
        h, c = state
        gates = T.matmul(x, self.w_ih) + T.matmul(h, self.w_hh) + self.bias
        k = self.d_hidden
        i = T.sigmoid(gates[..., :k])
        f = T.sigmoid(gates[..., k:2 * k])
        g = T.tanh(gates[..., 2 * k:3 * k])
        o = T.sigmoid(gates[..., 3 * k:])
        c_new = f * c + i * g
        h_new = o * T.tanh(c_new)
        return h_new, c_new
