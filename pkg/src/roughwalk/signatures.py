"""Discrete signatures, iterated sums and level-2 lifts of discrete paths.

Conventions
-----------
A path is given by its points ``x_0, ..., x_N`` or by its increments
``F_k = x_k - x_{k-1}``, ``k = 1..N``, stored 0-based as ``steps[k-1]``.
Each step may carry an antisymmetric decoration ``a_k`` (the signed area
added by a curved connection between ``x_{k-1}`` and ``x_k``).  The signed
area coefficient of ``e_i ^ e_j`` is stored in entry ``(i, j)``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from ._validation import check_antisymmetric, check_order, check_steps
from .tensor_group import T2Element, antisym, batch_increment, dilate, hom_dist, tensor_mul

# largest dense level tensor (number of entries) iterated_sum will build
MAX_TENSOR_ENTRIES = 10**6
# above this many (steps x entries) the prefix sums are accumulated step by step
_VECTORISE_LIMIT = 5 * 10**7


@dataclass(frozen=True, eq=False)
class DiscretePath:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError(f"points must have shape (N + 1, d), got {pts.shape}")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self):
        return self.points.shape[1]

    @classmethod
    def from_increments(cls, steps, origin=None):
        steps = check_steps(steps)
        x0 = np.zeros(steps.shape[1], dtype=steps.dtype) if origin is None else np.asarray(origin)
        return cls(np.vstack([x0[None, :], x0 + np.cumsum(steps, axis=0)]))


@dataclass(frozen=True, eq=False)
class IncrementSeq:
    """Steps ``F_1..F_N`` with optional antisymmetric decorations ``a_1..a_N``."""

    steps: np.ndarray
    decorations: np.ndarray | None = None

    def __post_init__(self):
        steps = check_steps(self.steps)
        object.__setattr__(self, "steps", steps)
        if self.decorations is not None:
            deco = np.asarray(self.decorations, dtype=float)
            n, d = steps.shape
            if deco.shape != (n, d, d):
                raise ValueError(f"decorations must have shape {(n, d, d)}, got {deco.shape}")
            check_antisymmetric(deco, tol=0.0)
            object.__setattr__(self, "decorations", deco)

    def __len__(self):
        return self.steps.shape[0]

    @property
    def dim(self):
        return self.steps.shape[1]

    @property
    def decorated(self):
        return self.decorations is not None and bool(np.any(self.decorations))

    def decoration_array(self):
        if self.decorations is None:
            n, d = self.steps.shape
            return np.zeros((n, d, d))
        return self.decorations

    def __getitem__(self, idx):
        if not isinstance(idx, slice):
            raise TypeError("IncrementSeq supports slicing only")
        deco = None if self.decorations is None else self.decorations[idx]
        return IncrementSeq(self.steps[idx], deco)

    def concat(self, other):
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        deco = None
        if self.decorations is not None or other.decorations is not None:
            deco = np.concatenate([self.decoration_array(), other.decoration_array()])
        return IncrementSeq(np.concatenate([self.steps, other.steps]), deco)

    def reversed(self):
        deco = None if self.decorations is None else self.decorations[::-1]
        return IncrementSeq(self.steps[::-1], deco)


def as_increments(F) -> IncrementSeq:
    if isinstance(F, IncrementSeq):
        return F
    if isinstance(F, DiscretePath):
        return increments(F)
    return IncrementSeq(F)


def increments(p) -> IncrementSeq:
    """Differences ``x_k - x_{k-1}`` of a path; decorations are zero."""
    if not isinstance(p, DiscretePath):
        p = DiscretePath(p)
    return IncrementSeq(np.diff(p.points, axis=0))


def _outer_last(t, f):
    # t: (N, d, ..., d), f: (N, d)  ->  (N, d, ..., d, d)
    return t[..., None] * f.reshape(f.shape[:1] + (1,) * (t.ndim - 1) + f.shape[1:])


def _running_levels(steps, L, keep_running):
    """Prefix dynamic program for levels 1..L.

    Returns the final level tensors, and the running (per-step) tensors for
    levels < L when ``keep_running``.
    """
    n, d = steps.shape
    dtype = steps.dtype
    finals = []
    running = [np.ones(n, dtype=dtype)]  # level 0 after each step is 1
    if n == 0:
        return [np.zeros((d,) * m, dtype=dtype) for m in range(1, L + 1)]
    if n * d**L > _VECTORISE_LIMIT:
        return _sequential_levels(steps, L)
    for m in range(1, L + 1):
        prev = running[-1]
        if m == 1:
            shifted = prev
        else:
            shifted = np.concatenate([np.zeros((1,) + prev.shape[1:], dtype=dtype), prev[:-1]])
        contrib = _outer_last(shifted, steps)
        if m < L or keep_running:
            cur = np.cumsum(contrib, axis=0)
            running.append(cur)
            finals.append(cur[-1].copy())
        else:
            finals.append(contrib.sum(axis=0))
    return finals


def _sequential_levels(steps, L):
    d = steps.shape[1]
    levels = [np.ones((), dtype=steps.dtype)] + [np.zeros((d,) * m, dtype=steps.dtype)
                                                 for m in range(1, L + 1)]
    for f in steps:
        for m in range(L, 0, -1):
            levels[m] = levels[m] + np.multiply.outer(levels[m - 1], f)
    return levels[1:]


def _check_budget(d, l):
    if d**l > MAX_TENSOR_ENTRIES:
        raise MemoryError(f"a level-{l} tensor in dimension {d} has {d**l} entries "
                          f"(budget {MAX_TENSOR_ENTRIES})")


def iterated_sum(F, l: int) -> np.ndarray:
    """Iterated sum of order ``l``.

    Entry ``(i_1, ..., i_l)`` is the sum over ``1 <= j_1 < ... < j_l <= N`` of
    ``F_{j_1}^{i_1} ... F_{j_l}^{i_l}``.  Integer inputs give exact integer
    results.

    Parameters
    ----------
    F : IncrementSeq or array of shape (N, d)
    l : int
        Order, at least 1.  ``d**l`` must not exceed ``MAX_TENSOR_ENTRIES``.

    Returns
    -------
    ndarray of shape ``(d,) * l``
    """
    l = check_order(l)
    steps = as_increments(F).steps
    _check_budget(steps.shape[1], l)
    return _running_levels(steps, l, keep_running=False)[-1]


def discrete_signature(F, L: int) -> list:
    """Levels 1..L of the discrete signature (iterated sums of each order)."""
    L = check_order(L, "L")
    steps = as_increments(F).steps
    _check_budget(steps.shape[1], L)
    return _running_levels(steps, L, keep_running=False)


def pwl_level2(F) -> np.ndarray:
    """Second level of the signature of the piecewise-linear interpolation.

    Equal to ``iterated_sum(F, 2) + sum_k F_k (x) F_k / 2``; decorations are
    ignored.
    """
    steps = as_increments(F).steps.astype(float)
    return iterated_sum(steps, 2) + 0.5 * np.einsum("ki,kj->ij", steps, steps)


def signed_area(F) -> np.ndarray:
    """Levy area of the piecewise-linear path, ``Anti(iterated_sum(F, 2))``."""
    steps = as_increments(F).steps.astype(float)
    return antisym(iterated_sum(steps, 2))


def lift_step(F, a=None) -> T2Element:
    """Geometric step ``(F, F (x) F / 2) * (0, a)`` = ``(F, F (x) F / 2 + a)``."""
    F = np.asarray(F, dtype=float)
    if a is None:
        a = np.zeros((F.size, F.size))
    a = check_antisymmetric(np.asarray(a, dtype=float), tol=0.0)
    return T2Element(F, 0.5 * np.outer(F, F) + a)


@dataclass(frozen=True, eq=False)
class LiftedPath:
    """Running level-2 values ``(level1[n], level2[n])`` for ``n = 0..N``."""

    level1: np.ndarray
    level2: np.ndarray

    def __len__(self):
        return self.level1.shape[0]

    def at(self, n: int) -> T2Element:
        return T2Element(self.level1[n], self.level2[n])

    @property
    def endpoint(self) -> T2Element:
        return self.at(-1)

    def increment(self, m: int, n: int) -> T2Element:
        """``X_m^{-1} * X_n``."""
        a, b = batch_increment(self.level1[m], self.level2[m], self.level1[n], self.level2[n])
        return T2Element(a, b)


def _running_pairs(steps):
    """``sum_{k1 < k2 <= n} F_k1 (x) F_k2`` for n = 0..N, plus level 1."""
    n, d = steps.shape
    x = np.vstack([np.zeros((1, d), dtype=steps.dtype), np.cumsum(steps, axis=0)])
    pairs = np.zeros((n + 1, d, d), dtype=steps.dtype)
    if n:
        pairs[1:] = np.cumsum(x[:-1, :, None] * steps[:, None, :], axis=0)
    return x, pairs


def path_lift(F) -> LiftedPath:
    """Running products of ``lift_step(F_k, a_k)`` (the geometric lift).

    ``level2[n] = sum_{k1<k2<=n} F (x) F + sum_{k<=n} (F_k (x) F_k / 2 + a_k)``.
    """
    seq = as_increments(F)
    steps = seq.steps.astype(float)
    x, pairs = _running_pairs(steps)
    local = 0.5 * steps[:, :, None] * steps[:, None, :] + seq.decoration_array()
    level2 = pairs.copy()
    level2[1:] += np.cumsum(local, axis=0)
    return LiftedPath(x, level2)


def nongeo_lift(F) -> LiftedPath:
    """Running ``Y_n = (X_n, sum_{k1<k2<=n} F_k1 (x) F_k2)`` (non-geometric)."""
    seq = as_increments(F)
    if seq.decorated:
        raise ValueError("nongeo_lift is defined for undecorated increments only")
    x, pairs = _running_pairs(seq.steps.astype(float))
    return LiftedPath(x, pairs)


def square_sums(F) -> np.ndarray:
    """Running ``Z_n = sum_{k<=n} F_k (x) F_k`` for n = 0..N."""
    steps = as_increments(F).steps.astype(float)
    z = np.zeros((steps.shape[0] + 1, steps.shape[1], steps.shape[1]))
    z[1:] = np.cumsum(steps[:, :, None] * steps[:, None, :], axis=0)
    return z


def chen_check(x: T2Element, y: T2Element, xy: T2Element, tol: float) -> bool:
    """True when ``hom_dist(x * y, xy) <= tol``."""
    return hom_dist(tensor_mul(x, y), xy) <= tol


def _split_time(t, n):
    if not 0 <= t <= n:
        raise ValueError(f"time {t} outside [0, {n}]")
    k = min(int(np.floor(t)), n)
    return k, t - k


def geodesic_embedding(F, t: float) -> T2Element:
    """Geodesic embedding ``X_floor(t) * dilate(g_{floor(t)+1}, t - floor(t))``."""
    seq = as_increments(F)
    k, s = _split_time(t, len(seq))
    lifted = path_lift(seq[:k])
    head = lifted.endpoint
    if s == 0:
        return head
    g = lift_step(seq.steps[k], seq.decoration_array()[k])
    return tensor_mul(head, dilate(g, s))


def nongeo_embedding(F, t: float) -> T2Element:
    """``(0, Z_t / 2)^{-1} * S_2(X)_{0,t}`` with ``Z`` linearly interpolated.

    The half matches ``nongeo_lift`` at integer times: a single step has
    geometric level 2 equal to ``F (x) F / 2`` and non-geometric level 2 zero.
    """
    seq = as_increments(F)
    k, s = _split_time(t, len(seq))
    geo = geodesic_embedding(IncrementSeq(seq.steps), t)
    z = square_sums(seq[:k])[-1]
    if s:
        f = seq.steps[k].astype(float)
        z = z + s * np.outer(f, f)
    return T2Element(geo.a, geo.b - 0.5 * z)


# I/O

def parse_path_csv(text: str) -> DiscretePath:
    """Parse CSV text with one row per point and one column per coordinate.

    A non-numeric first row is treated as a header.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if rows:
        try:
            [float(v) for v in rows[0]]
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise ValueError("no points in CSV input")
    return DiscretePath(np.array([[float(v) for v in r] for r in rows]))


def read_path_csv(path) -> DiscretePath:
    with open(path, newline="") as fh:
        return parse_path_csv(fh.read())


def level_tensor_to_json(tensor) -> str:
    t = np.asarray(tensor)
    return json.dumps({"order": t.ndim, "dim": t.shape[0] if t.ndim else 0,
                       "data": t.ravel().tolist()})


def level_tensor_from_json(text: str) -> np.ndarray:
    obj = json.loads(text)
    order, data = obj["order"], np.asarray(obj["data"])
    d = obj.get("dim") or int(round(data.size ** (1.0 / order)))
    return data.reshape((d,) * order)
