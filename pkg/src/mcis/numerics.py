"""Dense-vector helpers, seeded randomness, and the SGD update rule.

All arithmetic is float64. Randomness is numpy's PCG64 behind a
seed-splitting wrapper; the generator name is recorded in every report.
"""

import numpy as np

from .errors import DimMismatch, EmptyAggregate, NumericOverflow

GENERATOR_NAME = "numpy PCG64"


def vec_mean(vectors):
    """Component-wise mean, accumulated sequentially in input order."""
    vectors = list(vectors)
    if not vectors:
        raise EmptyAggregate("vec_mean of empty list")
    first = np.asarray(vectors[0], dtype=np.float64)
    acc = first.copy()
    for v in vectors[1:]:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != first.shape:
            raise DimMismatch(f"vec_mean: {v.shape} vs {first.shape}")
        acc += v
    return acc / len(vectors)


def affine_apply(weights, bias, x):
    """W @ x + b."""
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if weights.shape[1] != x.shape[0] or weights.shape[0] != bias.shape[0]:
        raise DimMismatch(
            f"affine_apply: W{weights.shape} b{bias.shape} x{x.shape}")
    return weights @ x + bias


def sgd_step(params, grads, lr):
    """p - lr * g, element-wise over aligned flat views."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape:
        raise DimMismatch(f"sgd_step: {params.shape} vs {grads.shape}")
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    if not np.all(np.isfinite(grads)):
        raise NumericOverflow("non-finite gradient in sgd_step")
    return params - lr * grads


class RngState:
    """Seedable PCG64 generator with documented child derivation.

    Children are derived through ``SeedSequence.spawn``, so parallel or
    staged consumers never share a stream.
    """

    def __init__(self, seed, _sequence=None):
        self.seed = int(seed) if _sequence is None else seed
        self._seq = _sequence if _sequence is not None else np.random.SeedSequence(int(seed))
        self.generator = np.random.Generator(np.random.PCG64(self._seq))

    def spawn(self, n):
        return [RngState(c.entropy, _sequence=c) for c in self._seq.spawn(n)]


def derive_seeds(root_seed, n):
    """Deterministic child integer seeds from one root seed."""
    state = np.random.SeedSequence(int(root_seed)).generate_state(n, dtype=np.uint64)
    return [int(s) for s in state]
