"""Pseudo-excursion decomposition and the excursion statistics built on it.

The excursion times are the successive returns of the chain to its initial
state, ``T_0 = 0`` and ``T_n = inf{k > T_{n-1} : R_k = R_0}``.  Excursion
``j`` collects the increments ``F_{T_j + 1} .. F_{T_{j+1}}``; these blocks are
i.i.d., which turns every limit statistic into a plain sample mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from ..signatures import IncrementSeq, as_increments
from ..tensor_group import antisym
from .model import HMWModel, validate
from .simulate import WalkSampler


class DegenerateExcursionError(ValueError):
    """Raised when the excursion covariance has non-positive trace (C <= 0)."""


class ResidualMassError(RuntimeError):
    """Raised when truncated enumeration leaves more probability unexplored than allowed."""


def excursion_times(states) -> np.ndarray:
    """Return ``[T_0 = 0, T_1, T_2, ...]``, the returns to ``states[0]``."""
    states = np.asarray(states)
    if states.size == 0:
        return np.zeros(0, dtype=np.int64)
    returns = np.flatnonzero(states[1:] == states[0]) + 1
    return np.concatenate([[0], returns]).astype(np.int64)


@dataclass(frozen=True)
class ExcursionRecord:
    length: int
    sum_f: np.ndarray
    pair: np.ndarray
    square: np.ndarray
    area_deco: np.ndarray

    @property
    def signed_area(self):
        """Levy area of the excursion, ``Anti(pair)``."""
        return antisym(self.pair)


@dataclass(frozen=True, eq=False)
class ExcursionBatch:
    """Aggregates of ``K`` complete excursions, stored column-wise.

    ``pair`` is ``sum_{k1<k2} F (x) F`` within the excursion, ``square`` is
    ``sum F (x) F`` and ``area_deco`` the sum of decorations.  ``dropped``
    counts the steps of the trailing incomplete excursion.
    """

    lengths: np.ndarray
    sum_f: np.ndarray
    pair: np.ndarray
    square: np.ndarray
    area_deco: np.ndarray
    dropped: int = 0

    def __len__(self):
        return self.lengths.size

    @property
    def dim(self):
        return self.sum_f.shape[1]

    def record(self, j) -> ExcursionRecord:
        return ExcursionRecord(int(self.lengths[j]), self.sum_f[j], self.pair[j],
                               self.square[j], self.area_deco[j])

    def __iter__(self):
        return (self.record(j) for j in range(len(self)))

    def head(self, k):
        return ExcursionBatch(self.lengths[:k], self.sum_f[:k], self.pair[:k],
                              self.square[:k], self.area_deco[:k], self.dropped)

    @classmethod
    def concat(cls, batches):
        batches = list(batches)
        return cls(*(np.concatenate([getattr(b, f.name) for b in batches])
                     for f in fields(cls) if f.name != "dropped"),
                   dropped=sum(b.dropped for b in batches))

    def identity_defects(self):
        """Max violations of the per-record identities (both 0 on integer data).

        ``sum_f (x) sum_f = pair + pair^T + square`` and
        ``pair - pair^T = 2 Anti(pair)``.
        """
        outer = self.sum_f[:, :, None] * self.sum_f[:, None, :]
        pt = np.swapaxes(self.pair, 1, 2)
        d1 = np.max(np.abs(outer - (self.pair + pt + self.square)), initial=0.0)
        d2 = np.max(np.abs((self.pair - pt) - 2 * antisym(self.pair)), initial=0.0)
        return float(d1), float(d2)


def split_excursions(states, F) -> ExcursionBatch:
    """Cut a simulated path into complete pseudo-excursions.

    ``states`` holds ``R_0..R_N`` and ``F`` the increments ``F_1..F_N``.
    The trailing incomplete excursion is dropped and counted in ``dropped``.
    """
    states = np.asarray(states)
    seq = as_increments(F)
    n = len(seq)
    if states.size != n + 1:
        raise ValueError(f"need N + 1 = {n + 1} states for {n} increments, got {states.size}")
    T = excursion_times(states)
    K = T.size - 1
    if K < 1:
        raise ValueError("no complete excursion in the path")
    end = int(T[-1])
    steps = seq.steps[:end].astype(float)
    starts = T[:-1]
    lengths = np.diff(T)
    d = seq.dim
    x = np.cumsum(steps, axis=0)
    x_prev = np.vstack([np.zeros((1, d)), x[:-1]])
    x_start = np.repeat(x_prev[starts], lengths, axis=0)
    local = x_prev - x_start
    sum_f = np.add.reduceat(steps, starts, axis=0)
    pair = np.add.reduceat(local[:, :, None] * steps[:, None, :], starts, axis=0)
    square = np.add.reduceat(steps[:, :, None] * steps[:, None, :], starts, axis=0)
    if seq.decorations is not None:
        area = np.add.reduceat(seq.decorations[:end], starts, axis=0)
    else:
        area = np.zeros((K, d, d))
    return ExcursionBatch(lengths, sum_f, pair, square, area, dropped=n - end)


def simulate_excursions(model: HMWModel, K: int, seed: int, path_index: int = 0,
                        chunk=None) -> ExcursionBatch:
    """Simulate one path until ``K`` complete excursions are collected."""
    if not model.chain.deterministic_start:
        raise ValueError("excursion statistics need a deterministic start state")
    sampler = WalkSampler(model, seed, path_index)
    start = sampler.state
    chunk = chunk or max(1024, 4 * K)
    batches, have = [], 0
    carry_states = np.array([start])
    carry_steps = np.zeros((0, model.dimension))
    carry_deco = np.zeros((0, model.dimension, model.dimension))
    while have < K:
        s, f, a = sampler.advance(chunk)
        if a is None:
            a = np.zeros((chunk, model.dimension, model.dimension))
        states = np.concatenate([carry_states, s])
        steps = np.concatenate([carry_steps, f])
        deco = np.concatenate([carry_deco, a])
        T = excursion_times(states)
        if T.size > 1:
            batch = split_excursions(states, IncrementSeq(steps, deco))
            batches.append(batch)
            have += len(batch)
            last = int(T[-1])
            carry_states, carry_steps, carry_deco = states[last:], steps[last:], deco[last:]
        else:
            carry_states, carry_steps, carry_deco = states, steps, deco
    return ExcursionBatch.concat(batches).head(K)


@dataclass
class ExcursionStats:
    """Excursion estimators (Monte Carlo) or exact excursion moments.

    ``covariance`` is the uncentred second moment ``E[X_T1 (x) X_T1]`` and
    ``C = trace(covariance) / d``.  The anomaly estimators are normalised by
    ``1 / C``: ``gamma = E[Anti(pair)] / C``, ``gamma0 = E[area_deco] / C``,
    ``M = E[pair] / C``.  Standard errors are zero for exact statistics.
    """

    K: float
    beta: float
    beta_se: float
    mean_increment: np.ndarray
    mean_increment_se: np.ndarray
    covariance: np.ndarray
    covariance_se: np.ndarray
    C: float
    C_se: float
    gamma: np.ndarray
    gamma_se: np.ndarray
    gamma0: np.ndarray
    gamma0_se: np.ndarray
    M: np.ndarray
    M_se: np.ndarray
    pair_mean: np.ndarray
    square_mean: np.ndarray
    area_mean: np.ndarray
    method: str = "monte-carlo"
    residual_mass: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.mean_increment.size

    @property
    def gamma_rho(self):
        """Anomaly of the decorated embedding, ``gamma + gamma0``."""
        return self.gamma + self.gamma0

    @property
    def gamma_rho_se(self):
        return np.sqrt(self.gamma_se**2 + self.gamma0_se**2)

    @property
    def isotropy(self):
        """Largest off-diagonal covariance entry relative to ``C``."""
        off = self.covariance - np.diag(np.diag(self.covariance))
        return float(np.max(np.abs(off)) / self.C) if self.dim > 1 else 0.0

    @property
    def anisotropy(self):
        """Largest deviation of the covariance from ``C I`` relative to ``C``."""
        return float(np.max(np.abs(self.covariance - self.C * np.eye(self.dim))) / self.C)

    def ito_identity_defect(self):
        """``max |M - gamma - (covariance - square_mean) / (2 C)|``.

        Zero up to rounding by construction of the estimators.
        """
        rhs = self.gamma + 0.5 * (self.covariance - self.square_mean) / self.C
        return float(np.max(np.abs(self.M - rhs)))

    def named_estimates(self):
        """``(name, value, se)`` triples in a fixed order, for reports."""
        return [
            ("beta", np.atleast_1d(self.beta), np.atleast_1d(self.beta_se)),
            ("mean_increment", self.mean_increment, self.mean_increment_se),
            ("covariance", self.covariance, self.covariance_se),
            ("C", np.atleast_1d(self.C), np.atleast_1d(self.C_se)),
            ("gamma", self.gamma, self.gamma_se),
            ("gamma0", self.gamma0, self.gamma0_se),
            ("gamma_rho", self.gamma_rho, self.gamma_rho_se),
            ("M", self.M, self.M_se),
        ]


def _ratio_se(num, den, ratio):
    """Delta-method standard error of ``mean(num) / mean(den)`` per entry."""
    K = den.shape[0]
    resid = (num - ratio[None] * den.reshape((K,) + (1,) * (num.ndim - 1))) / den.mean()
    return resid.std(axis=0, ddof=1) / np.sqrt(K)


def estimate(records) -> ExcursionStats:
    """Monte Carlo excursion estimators from ``K >= 2`` i.i.d. excursions.

    Parameters
    ----------
    records : ExcursionBatch or iterable of ExcursionRecord

    Returns
    -------
    ExcursionStats
        Sample means with standard errors from the per-excursion sample
        variance (delta method for the ratios normalised by ``C_hat``).

    Raises
    ------
    ValueError
        If fewer than two excursions are given.
    DegenerateExcursionError
        If ``C_hat <= 0`` (all excursion increments vanish).
    """
    if not isinstance(records, ExcursionBatch):
        recs = list(records)
        if not recs:
            raise ValueError("no excursion records")
        records = ExcursionBatch(np.array([r.length for r in recs]),
                                 np.array([r.sum_f for r in recs]),
                                 np.array([r.pair for r in recs]),
                                 np.array([r.square for r in recs]),
                                 np.array([r.area_deco for r in recs]))
    K = len(records)
    if K < 2:
        raise ValueError(f"need at least 2 excursions, got {K}")
    d = records.dim
    rootK = np.sqrt(K)
    lengths = records.lengths.astype(float)
    outer = records.sum_f[:, :, None] * records.sum_f[:, None, :]
    c_k = np.einsum("ki,ki->k", records.sum_f, records.sum_f) / d
    C = float(c_k.mean())
    if not C > 0:
        raise DegenerateExcursionError(
            f"C_hat = {C!r}: excursion increments are degenerate, anomaly undefined")
    anti = antisym(records.pair)
    area_mean = records.area_deco.mean(axis=0)
    pair_mean = records.pair.mean(axis=0)
    gamma = anti.mean(axis=0) / C
    gamma0 = area_mean / C
    M = pair_mean / C
    return ExcursionStats(
        K=K,
        beta=float(lengths.mean()), beta_se=float(lengths.std(ddof=1) / rootK),
        mean_increment=records.sum_f.mean(axis=0),
        mean_increment_se=records.sum_f.std(axis=0, ddof=1) / rootK,
        covariance=outer.mean(axis=0), covariance_se=outer.std(axis=0, ddof=1) / rootK,
        C=C, C_se=float(c_k.std(ddof=1) / rootK),
        gamma=gamma, gamma_se=_ratio_se(anti, c_k, gamma),
        gamma0=gamma0, gamma0_se=_ratio_se(records.area_deco, c_k, gamma0),
        M=M, M_se=_ratio_se(records.pair, c_k, M),
        pair_mean=pair_mean, square_mean=records.square.mean(axis=0), area_mean=area_mean,
    )


# Exact excursion moments

def _emission_moments(model):
    f = np.array([em.mean for em in model.emissions])
    m2 = np.array([em.second_moment for em in model.emissions])
    abar = np.array([em.mean_area for em in model.emissions])
    return f, m2, abar


def _linear_moments(model):
    """Solve the first-step equations for the excursion moments from the start state.

    For a state ``u`` other than the start, let ``t, s, p, ss, sq, ar`` be the
    expected remaining length, increment sum, pair tensor, squared sum,
    square sum and area until the next visit to the start.  Conditioning on
    the next state ``v`` (whose emission is independent of the future given
    ``v``) gives linear systems ``(I - Q_OO) x = b`` on the other states.
    """
    Q = model.chain.Q
    n, d = model.n_states, model.dimension
    s0 = model.chain.start
    other = np.array([u for u in range(n) if u != s0], dtype=int)
    f, m2, abar = _emission_moments(model)
    alive = np.ones(n)
    alive[s0] = 0.0

    def solve(rhs):
        # rhs: (n, ...) one-step terms for every state; returns full-state solution
        shape = rhs.shape[1:]
        x = np.zeros((n,) + shape)
        if other.size:
            A = np.eye(other.size) - Q[np.ix_(other, other)]
            sol = np.linalg.solve(A, rhs[other].reshape(other.size, -1))
            x[other] = sol.reshape((other.size,) + shape)
        return x

    def step(values):
        # sum_v Q[u, v] values[v] for all u
        return np.tensordot(Q, values, axes=(1, 0))

    t = solve(np.ones(n))
    s = solve(step(f))
    fs = f[:, :, None] * s[:, None, :]
    p = solve(step(fs))
    ss = solve(step(m2 + fs + np.swapaxes(fs, 1, 2)))
    sq = solve(step(m2))
    ar = solve(step(abar))

    # from the start: one step to v, then the remaining moments from v if v != start
    q0 = Q[s0]
    t_al, s_al = t * alive, s * alive[:, None]
    fs_al = f[:, :, None] * s_al[:, None, :]
    mom = {
        "mass": 1.0,
        "T": 1.0 + q0 @ t_al,
        "sum_f": q0 @ (f + s_al),
        "pair": np.tensordot(q0, fs_al + p * alive[:, None, None], axes=1),
        "outer": np.tensordot(q0, m2 + fs_al + np.swapaxes(fs_al, 1, 2)
                              + ss * alive[:, None, None], axes=1),
        "square": np.tensordot(q0, m2 + sq * alive[:, None, None], axes=1),
        "area": np.tensordot(q0, abar + ar * alive[:, None, None], axes=1),
    }
    return mom, 0.0


def _enumerated_moments(model, horizon):
    """Aggregate every state/emission path from the start up to ``horizon`` steps.

    Paths are grouped by their current state, which is enough because the
    moment updates only depend on it.  Returns the moments over completed
    excursions and the probability of the paths still running at the horizon.
    """
    Q = model.chain.Q
    n, d = model.n_states, model.dimension
    s0 = model.chain.start
    f, m2, abar = _emission_moments(model)
    m0 = np.zeros(n)
    m0[s0] = 1.0
    m1 = np.zeros((n, d))
    mP = np.zeros((n, d, d))
    mXX = np.zeros((n, d, d))
    mSq = np.zeros((n, d, d))
    mAr = np.zeros((n, d, d))
    done = {"mass": 0.0, "T": 0.0, "sum_f": np.zeros(d), "pair": np.zeros((d, d)),
            "outer": np.zeros((d, d)), "square": np.zeros((d, d)), "area": np.zeros((d, d))}
    for step in range(1, horizon + 1):
        # new[v] = sum_u Q[u, v] (update of the state-u accumulators by an emission at v)
        w0 = Q.T @ m0
        w1 = Q.T @ m1
        n0 = w0
        n1 = w1 + w0[:, None] * f
        x_f = w1[:, :, None] * f[:, None, :]
        nP = np.tensordot(Q.T, mP, axes=1) + x_f
        nXX = (np.tensordot(Q.T, mXX, axes=1) + x_f + np.swapaxes(x_f, 1, 2)
               + w0[:, None, None] * m2)
        nSq = np.tensordot(Q.T, mSq, axes=1) + w0[:, None, None] * m2
        nAr = np.tensordot(Q.T, mAr, axes=1) + w0[:, None, None] * abar
        done["mass"] += n0[s0]
        done["T"] += step * n0[s0]
        done["sum_f"] += n1[s0]
        done["pair"] += nP[s0]
        done["outer"] += nXX[s0]
        done["square"] += nSq[s0]
        done["area"] += nAr[s0]
        for arr in (n0, n1, nP, nXX, nSq, nAr):
            arr[s0] = 0
        m0, m1, mP, mXX, mSq, mAr = n0, n1, nP, nXX, nSq, nAr
        if m0.sum() == 0.0:
            break
    return done, float(m0.sum())


def exact_excursion_stats(model: HMWModel, horizon: int | None = None, mass_tol: float = 1e-12,
                          method: str = "linear") -> ExcursionStats:
    """Exact first-excursion moments of a model.

    Parameters
    ----------
    model : HMWModel
        Valid model with a deterministic start state.
    horizon : int, optional
        Truncation length for ``method="enumerate"``.
    mass_tol : float
        Largest acceptable probability of excursions longer than ``horizon``.
    method : {"linear", "enumerate"}
        ``"linear"`` solves the first-step linear systems (no truncation);
        ``"enumerate"`` aggregates every path up to ``horizon`` steps.

    Returns
    -------
    ExcursionStats
        With zero standard errors and ``residual_mass`` set.
    """
    validate(model)
    if not model.chain.deterministic_start:
        raise ValueError("excursion statistics need a deterministic start state")
    if method == "linear":
        mom, residual = _linear_moments(model)
    elif method == "enumerate":
        if horizon is None or horizon < 1:
            raise ValueError("enumeration needs a horizon >= 1")
        mom, residual = _enumerated_moments(model, int(horizon))
        if residual > mass_tol:
            raise ResidualMassError(
                f"residual mass {residual:.3g} > {mass_tol:.3g} at horizon {horizon}")
    else:
        raise ValueError(f"unknown method {method!r}")
    d = model.dimension
    C = float(np.trace(mom["outer"]) / d)
    if not C > 0:
        raise DegenerateExcursionError(f"exact C = {C!r}: degenerate excursion increments")
    zero_v, zero_m = np.zeros(d), np.zeros((d, d))
    return ExcursionStats(
        K=np.inf, beta=float(mom["T"]), beta_se=0.0,
        mean_increment=np.asarray(mom["sum_f"], dtype=float), mean_increment_se=zero_v,
        covariance=mom["outer"], covariance_se=zero_m, C=C, C_se=0.0,
        gamma=antisym(mom["pair"]) / C, gamma_se=zero_m,
        gamma0=mom["area"] / C, gamma0_se=zero_m,
        M=mom["pair"] / C, M_se=zero_m,
        pair_mean=mom["pair"], square_mean=mom["square"], area_mean=mom["area"],
        method=method, residual_mass=residual,
    )


def finite_pair_expectation(model: HMWModel, n: int) -> np.ndarray:
    """Exact ``E[sum_{k1 < k2 <= n} F_k1 (x) F_k2]`` for a walk started at its start state.

    Uses the forward recursion on ``A_k[x] = E[X_{k-1} ; R_k = x]`` and the
    conditional independence of distinct emissions given the states.
    """
    if not model.chain.deterministic_start:
        raise ValueError("needs a deterministic start state")
    Q = model.chain.Q
    f = model.mean_emissions()
    mu = np.zeros(model.n_states)
    mu[model.chain.start] = 1.0
    A = np.zeros((model.n_states, model.dimension))
    total = np.zeros((model.dimension, model.dimension))
    for _ in range(int(n)):
        mu = mu @ Q
        A = Q.T @ A
        total += A.T @ f
        A = A + mu[:, None] * f
    return total
