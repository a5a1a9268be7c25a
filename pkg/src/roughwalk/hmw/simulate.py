"""Seeded simulation of hidden Markov walks.

Every path owns a counter-based Philox stream keyed by ``(seed, path_index)``.
Each step consumes two uniforms from it, one for the transition and one for
the emission, so a path is bit-identical whether it is produced alone, in a
batch, or in pieces.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .._validation import check_seed
from ..signatures import IncrementSeq
from .model import HMWModel, validate

# paths simulated together in one vectorised time loop
BATCH_SIZE = 256


def path_stream(seed: int, path_index: int = 0) -> np.random.Generator:
    """Independent generator for path ``path_index`` of experiment ``seed``."""
    seed = check_seed(seed)
    if path_index < 0 or path_index >= 2**64:
        raise ValueError("path_index must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(key=seed + (int(path_index) << 64)))


def _cumulative(probs):
    """Cumulative rows; entries from the last positive one on are +inf.

    Sampling is ``count(cum <= u)``, which then never selects a
    zero-probability trailing entry however rounding falls.
    """
    cum = np.cumsum(np.atleast_2d(probs), axis=1)
    for row, p in zip(cum, np.atleast_2d(probs)):
        pos = np.flatnonzero(p > 0)
        row[pos[-1] if pos.size else 0:] = np.inf
    return cum


class _Tables:
    def __init__(self, model: HMWModel):
        validate(model)
        self.model = model
        self.cum_q = _cumulative(model.chain.Q)
        self.cum_q_rows = [row.tolist() for row in self.cum_q]
        self.cum_em = [_cumulative(em.p)[0] for em in model.emissions]
        self.vectors = [em.F for em in model.emissions]
        self.areas = [em.area for em in model.emissions]
        self.decorated = model.decorated
        init = model.chain.initial
        self.cum_init = None if init is None else _cumulative(init)[0].tolist()

    def emit(self, states, u):
        """Vectorised emission draw for an array of states and uniforms."""
        d = self.model.dimension
        steps = np.empty(states.shape + (d,))
        deco = np.zeros(states.shape + (d, d)) if self.decorated else None
        for s in range(self.model.n_states):
            mask = states == s
            if not mask.any():
                continue
            idx = np.searchsorted(self.cum_em[s], u[mask], side="right")
            steps[mask] = self.vectors[s][idx]
            if deco is not None:
                deco[mask] = self.areas[s][idx]
        return steps, deco


@dataclass(frozen=True, eq=False)
class SimulatedWalk:
    """States ``R_0..R_N`` and increments ``F_1..F_N`` (``F_k`` emitted in ``R_k``)."""

    states: np.ndarray
    increments: IncrementSeq

    @property
    def n_steps(self):
        return self.states.size - 1


class WalkSampler:
    """Incremental simulator for one path; successive ``advance`` calls continue it."""

    def __init__(self, model: HMWModel, seed: int, path_index: int = 0, _tables=None):
        self.tables = _tables or _Tables(model)
        self.rng = path_stream(seed, path_index)
        chain = model.chain
        if chain.deterministic_start:
            self.state = chain.start
        else:
            self.state = bisect_right(self.tables.cum_init, self.rng.random())
        self.initial_state = self.state

    def advance(self, n: int):
        """Simulate ``n`` more steps; returns ``(states R_{k+1..k+n}, steps, decorations)``."""
        u = self.rng.random((n, 2))
        ut = u[:, 0].tolist()
        rows = self.tables.cum_q_rows
        out = np.empty(n, dtype=np.int64)
        s = self.state
        for k in range(n):
            s = bisect_right(rows[s], ut[k])
            out[k] = s
        self.state = s
        steps, deco = self.tables.emit(out, u[:, 1])
        return out, steps, deco


def simulate(model: HMWModel, n_steps: int, seed: int, path_index: int = 0) -> SimulatedWalk:
    """Simulate ``n_steps`` steps of the walk.

    ``R_0`` is the start state, ``R_{k+1} ~ Q(R_k, .)`` and ``(F_k, a_k)`` is
    drawn from the emission law of ``R_k``.  Output is a pure function of
    ``(model, n_steps, seed, path_index)``.
    """
    sampler = WalkSampler(model, seed, path_index)
    states, steps, deco = sampler.advance(int(n_steps))
    return SimulatedWalk(np.concatenate([[sampler.initial_state], states]), IncrementSeq(steps, deco))


def simulate_batch(model: HMWModel, n_steps: int, seed: int, path_indices, _tables=None):
    """Simulate several paths at once with a time loop vectorised across paths.

    Returns ``(states, steps, decorations)`` with shapes ``(P, n+1)``,
    ``(P, n, d)`` and ``(P, n, d, d)`` (``None`` for undecorated models).
    Row ``i`` equals ``simulate(model, n_steps, seed, path_indices[i])``.
    """
    tables = _tables or _Tables(model)
    path_indices = list(path_indices)
    P, n = len(path_indices), int(n_steps)
    u = np.empty((P, n, 2))
    start = np.empty(P, dtype=np.int64)
    for i, idx in enumerate(path_indices):
        rng = path_stream(seed, idx)
        if model.chain.deterministic_start:
            start[i] = model.chain.start
        else:
            start[i] = bisect_right(tables.cum_init, rng.random())
        u[i] = rng.random((n, 2))
    states = np.empty((P, n + 1), dtype=np.int64)
    states[:, 0] = start
    cum_q = tables.cum_q
    s = start
    for k in range(n):
        s = np.sum(cum_q[s] <= u[:, k, :1], axis=1)
        states[:, k + 1] = s
    steps, deco = tables.emit(states[:, 1:], u[:, :, 1])
    return states, steps, deco


def iter_batches(model: HMWModel, n_steps: int, seed: int, n_paths: int, batch_size=BATCH_SIZE):
    """Yield ``(path_indices, states, steps, decorations)`` over fixed-size batches."""
    tables = _Tables(model)
    for lo in range(0, n_paths, batch_size):
        idx = range(lo, min(lo + batch_size, n_paths))
        yield (idx,) + simulate_batch(model, n_steps, seed, idx, _tables=tables)
