"""Slow, obviously-correct reference implementations used as test oracles."""

from fractions import Fraction
from itertools import combinations, product

import numpy as np


def iterated_sum_bruteforce(steps, l):
    steps = np.asarray(steps)
    N, d = steps.shape
    out = np.zeros((d,) * l, dtype=object)
    for idx in combinations(range(N), l):
        for comp in product(range(d), repeat=l):
            term = 1
            for j, i in zip(idx, comp):
                term *= int(steps[j, i]) if np.issubdtype(steps.dtype, np.integer) else steps[j, i]
            out[comp] += term
    return out


def occupation_bruteforce(states, w):
    s = list(states)
    return sum(all(s[i] == a for i, a in zip(idx, w)) for idx in combinations(range(len(s)), len(w)))


def shuffle_bruteforce(w1, w2):
    """Interleavings as dict word -> multiplicity, from the slots taken by ``w1``."""
    n = len(w1) + len(w2)
    out = {}
    for pos in combinations(range(n), len(w1)):
        i1, i2 = iter(w1), iter(w2)
        word = tuple(next(i1) if k in pos else next(i2) for k in range(n))
        out[word] = out.get(word, 0) + 1
    return out


def quasi_shuffle_bruteforce(w1, w2):
    """Indicator quasi-shuffle: order-preserving placements of both words into
    ``m`` slots covering every slot, where a shared slot needs equal letters."""
    k1, k2 = len(w1), len(w2)
    out = {}
    for m in range(max(k1, k2), k1 + k2 + 1):
        for p1 in combinations(range(m), k1):
            for p2 in combinations(range(m), k2):
                if set(p1) | set(p2) != set(range(m)):
                    continue
                slot = {}
                ok = True
                for i, a in zip(p1, w1):
                    slot[i] = a
                for i, b in zip(p2, w2):
                    if i in slot and slot[i] != b:
                        ok = False
                        break
                    slot[i] = b
                if ok:
                    word = tuple(slot[i] for i in range(m))
                    out[word] = out.get(word, 0) + 1
    return out


def centered_pair_bruteforce(states, u, v, pi):
    s = list(states)
    a = [(x == u) - pi[u] for x in s]
    b = [(x == v) - pi[v] for x in s]
    return sum(a[i] * b[j] for i in range(len(s)) for j in range(i + 1, len(s)))


def power_iteration_stationary(Q, tol=1e-15, max_iter=1_000_000):
    """Stationary law by iterating the lazy chain ``(Q + I) / 2`` (aperiodic)."""
    Q = np.asarray(Q, dtype=float)
    lazy = 0.5 * (Q + np.eye(Q.shape[0]))
    pi = np.full(Q.shape[0], 1.0 / Q.shape[0])
    for _ in range(max_iter):
        nxt = pi @ lazy
        if np.max(np.abs(nxt - pi)) < tol:
            return nxt
        pi = nxt
    raise RuntimeError("power iteration did not converge")


def excursion_moments_dfs(model, horizon):
    """Depth-first enumeration of every (state, emission) path from the start
    until the first return, truncated at ``horizon`` steps.

    Returns ``(moments, residual mass)`` with moments weighted by probability.
    """
    Q = model.chain.Q
    s0 = model.chain.start
    d = model.dimension
    acc = {"mass": 0.0, "T": 0.0, "sum_f": np.zeros(d), "pair": np.zeros((d, d)),
           "square": np.zeros((d, d)), "area": np.zeros((d, d)), "outer": np.zeros((d, d))}
    residual = 0.0
    stack = [(s0, 0, 1.0, np.zeros(d), np.zeros((d, d)), np.zeros((d, d)), np.zeros((d, d)))]
    while stack:
        u, t, w, x, pair, sq, area = stack.pop()
        if t == horizon:
            residual += w
            continue
        for v in np.flatnonzero(Q[u] > 0):
            em = model.emissions[v]
            for p, F, a in zip(em.p, em.F, em.area):
                if p == 0:
                    continue
                w2 = w * Q[u, v] * p
                state = (v, t + 1, w2, x + F, pair + np.outer(x, F), sq + np.outer(F, F), area + a)
                if v == s0:
                    _, T, ww, X, P, S, A = state
                    acc["mass"] += ww
                    acc["T"] += ww * T
                    acc["sum_f"] += ww * X
                    acc["pair"] += ww * P
                    acc["square"] += ww * S
                    acc["area"] += ww * A
                    acc["outer"] += ww * np.outer(X, X)
                else:
                    stack.append(state)
    return acc, residual


def rotating_bernoulli_exact():
    """Exact excursion moments of the rotating Bernoulli(1/2) walk, in rationals.

    One excursion is the four steps ``U1 e2, -U2 e1, -U3 e2, U4 e1`` (states
    1, 2, 3, 0 in order); all 16 outcomes are equally likely.
    """
    dirs = [(0, 1), (-1, 0), (0, -1), (1, 0)]
    half = Fraction(1, 16)
    X = [Fraction(0)] * 2
    pair = [[Fraction(0)] * 2 for _ in range(2)]
    square = [[Fraction(0)] * 2 for _ in range(2)]
    outer = [[Fraction(0)] * 2 for _ in range(2)]
    for U in product((0, 1), repeat=4):
        steps = [(u * dx, u * dy) for u, (dx, dy) in zip(U, dirs)]
        run = [0, 0]
        for F in steps:
            for i in range(2):
                for j in range(2):
                    pair[i][j] += half * run[i] * F[j]
                    square[i][j] += half * F[i] * F[j]
            run = [run[0] + F[0], run[1] + F[1]]
        for i in range(2):
            X[i] += half * run[i]
            for j in range(2):
                outer[i][j] += half * run[i] * run[j]
    C = (outer[0][0] + outer[1][1]) / 2
    return {"beta": Fraction(4), "mean": X, "pair": pair, "square": square,
            "outer": outer, "C": C,
            "gamma12": (pair[0][1] - pair[1][0]) / 2 / C}


def shoelace(points):
    """Signed area of the closed polygon through ``points``."""
    p = np.asarray(points, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def half_circle(chord, side, n=20_000):
    """Polyline along the half circle on ``[0, chord]``; ``side=+1`` bulges left
    of the travel direction, ``-1`` right."""
    chord = np.asarray(chord, dtype=float)
    r = np.linalg.norm(chord) / 2
    e = chord / (2 * r)
    nrm = np.array([-e[1], e[0]]) * side
    th = np.linspace(np.pi, 0.0, n + 1)
    return r * e + r * (np.cos(th)[:, None] * e + np.sin(th)[:, None] * nrm)
