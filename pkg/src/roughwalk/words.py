"""Iterated occupation times and the (quasi-)shuffle algebra of words.

A word is a tuple of letters.  ``L_{w;n}`` counts the strictly increasing
index tuples ``l_1 < ... < l_k <= n`` with ``R_{l_i} = w_i``.  Products of
occupation times expand over the quasi-shuffle product, and iterated sums
of a walk with point-mass emissions expand over occupation times.  All
counts are exact integers.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

# int64 cumulative sums are used while counts provably stay below this
_INT64_SAFE = 2**62


def as_word(w) -> tuple:
    """Words are tuples; a string is read letter by letter."""
    return tuple(w)


def parse_word(text: str, labels=None) -> tuple:
    """Parse ``"0,1,1"``; with ``labels`` the letters are mapped to state indices."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if labels is None:
        return tuple(int(p) if p.lstrip("-").isdigit() else p for p in parts)
    as_str = [str(s) for s in labels]
    out = []
    for p in parts:
        if p not in as_str:
            raise ValueError(f"unknown state label {p!r} in word {text!r}")
        out.append(as_str.index(p))
    return tuple(out)


# Occupation times

def occupation_table(states, w) -> np.ndarray:
    """Running counts ``[L_{w;0}, L_{w;1}, ..., L_{w;n}]``.

    Uses the prefix recursion ``c_j(m) = c_j(m-1) + [s_m = w_j] c_{j-1}(m-1)``,
    one cumulative sum per letter.  The dtype is int64 when ``C(n, |w|)``
    fits, otherwise Python integers (object dtype).
    """
    w = as_word(w)
    s = np.asarray(states)
    n = s.size
    if not w:
        return np.ones(n + 1, dtype=np.int64)
    exact = math.comb(n, len(w)) >= _INT64_SAFE
    prev = np.ones(n + 1, dtype=object if exact else np.int64)
    for letter in w:
        hit = (s == letter)
        cur = np.zeros(n + 1, dtype=prev.dtype)
        cur[1:] = np.cumsum(np.where(hit, prev[:-1], 0).astype(prev.dtype))
        prev = cur
    return prev


def occupation(states, w) -> int:
    """Iterated occupation time ``L_{w;n}`` of the whole sequence (exact int)."""
    w = as_word(w)
    s = states.tolist() if isinstance(states, np.ndarray) else list(states)
    c = [1] + [0] * len(w)
    for x in s:
        for j in range(len(w), 0, -1):
            if w[j - 1] == x:
                c[j] += c[j - 1]
    return c[len(w)]


# Word combinations

class WordCombination(Mapping):
    """Finite formal sum of words with integer coefficients; zeros are never stored."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        acc = {}
        items = terms.items() if isinstance(terms, Mapping) else (terms or ())
        for word, c in items:
            word = as_word(word)
            acc[word] = acc.get(word, 0) + c
        self._terms = {w: c for w, c in acc.items() if c != 0}

    @classmethod
    def word(cls, w, coeff=1):
        return cls({as_word(w): coeff})

    def __getitem__(self, w):
        return self._terms.get(as_word(w), 0)

    def __iter__(self):
        return iter(self._terms)

    def __len__(self):
        return len(self._terms)

    def __contains__(self, w):
        return as_word(w) in self._terms

    def __eq__(self, other):
        if isinstance(other, WordCombination):
            return self._terms == other._terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other):
        merged = dict(self._terms)
        for w, c in other.items():
            merged[w] = merged.get(w, 0) + c
        return WordCombination(merged)

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, k):
        return WordCombination({w: k * c for w, c in self._terms.items()})

    __rmul__ = __mul__

    def prepend(self, letter):
        """``letter . (sum c_w w) = sum c_w (letter w)``."""
        return WordCombination({(letter,) + w: c for w, c in self._terms.items()})

    def mass(self):
        return sum(self._terms.values())

    def degrees(self):
        return sorted({len(w) for w in self._terms})

    def homogeneous(self, k):
        """Part of degree ``k``."""
        return WordCombination({w: c for w, c in self._terms.items() if len(w) == k})

    def evaluate(self, fn):
        """``sum c_w fn(w)``."""
        return sum(c * fn(w) for w, c in self._terms.items())

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for w, c in sorted(self._terms.items(), key=lambda t: (len(t[0]), t[0])):
            name = "".join(map(str, w)) if all(len(str(x)) == 1 for x in w) else ",".join(map(str, w))
            name = name or "1"
            parts.append(name if c == 1 else f"{c}*{name}")
        return " + ".join(parts)


def indicator_bracket(a, b):
    """Bracket of indicator functions: ``1_a 1_b = 1_a`` if ``a == b``, else 0 (None)."""
    return a if a == b else None


@lru_cache(maxsize=None)
def _shuffle(u, v):
    if not u:
        return WordCombination.word(v)
    if not v:
        return WordCombination.word(u)
    return _shuffle(u[1:], v).prepend(u[0]) + _shuffle(u, v[1:]).prepend(v[0])


def shuffle(w1, w2) -> WordCombination:
    """Shuffle product: the sum of all interleavings of ``w1`` and ``w2``."""
    return _shuffle(as_word(w1), as_word(w2))


@lru_cache(maxsize=None)
def _quasi_shuffle(u, v, bracket):
    if not u:
        return WordCombination.word(v)
    if not v:
        return WordCombination.word(u)
    out = _quasi_shuffle(u[1:], v, bracket).prepend(u[0]) + \
        _quasi_shuffle(u, v[1:], bracket).prepend(v[0])
    merged = bracket(u[0], v[0])
    if merged is not None:
        out = out + _quasi_shuffle(u[1:], v[1:], bracket).prepend(merged)
    return out


def quasi_shuffle(w1, w2, bracket: Callable = indicator_bracket) -> WordCombination:
    """Quasi-shuffle product ``ax * by = [a,b](x * y) + a(x * by) + b(ax * y)``.

    ``bracket(a, b)`` returns the merged letter or ``None`` to drop the
    term.  It must be hashable (results are memoised per bracket).
    """
    return _quasi_shuffle(as_word(w1), as_word(w2), bracket)


def verify_product(states, w1, w2, product_fn: Callable = quasi_shuffle) -> bool:
    """Exact check of ``L_{w1} L_{w2} = sum_w c_w L_w`` on one sequence."""
    s = list(np.asarray(states).tolist())
    lhs = occupation(s, w1) * occupation(s, w2)
    rhs = product_fn(w1, w2).evaluate(lambda w: occupation(s, w))
    return lhs == rhs


# Iterated sums through occupation times

def _emission_table(f, states):
    if isinstance(f, Mapping):
        alphabet = list(f)
        vec = {u: np.asarray(f[u]) for u in alphabet}
    elif callable(f):
        alphabet = sorted(set(np.asarray(states).tolist()))
        vec = {u: np.asarray(f(u)) for u in alphabet}
    else:
        arr = np.asarray(f)
        if arr.ndim == 1:
            arr = arr[:, None]
        alphabet = list(range(arr.shape[0]))
        vec = {u: arr[u] for u in alphabet}
    return alphabet, vec


def decompose_iterated_sum(states, f, l: int) -> np.ndarray:
    """``sum_{|w| = l} f(w_1) (x) ... (x) f(w_l) L_w``.

    ``f`` maps letters to vectors (a mapping, a callable, or an array indexed
    by state).  For point-mass emissions ``F_k = f(R_k)`` this equals the
    level-``l`` iterated sum of the increments exactly; integer vectors give
    an integer tensor.
    """
    if l < 1:
        raise ValueError("level must be >= 1")
    states = list(np.asarray(states).tolist())
    alphabet, vec = _emission_table(f, states)
    d = next(iter(vec.values())).size if vec else 0
    integer = all(np.issubdtype(v.dtype, np.integer) for v in vec.values())
    total = np.zeros((d,) * l, dtype=object if integer else float)
    present = set(states)
    for w in product(alphabet, repeat=l):
        if not set(w) <= present:
            continue
        count = occupation(states, w)
        if count == 0:
            continue
        t = np.ones((), dtype=object if integer else float)
        for u in w:
            v = vec[u].astype(object) if integer else vec[u].astype(float)
            t = np.multiply.outer(t, v)
        total = total + count * t
    if integer:
        flat = [int(x) for x in total.ravel()]
        if all(abs(x) < 2**63 for x in flat):
            return np.array(flat, dtype=np.int64).reshape(total.shape)
    return total


# Ergodic scaling and centred pairs

@dataclass(frozen=True)
class ScalingRow:
    N: int
    word: tuple
    count: int
    rescaled: float
    predicted: float
    abs_error: float


class ScalingTable(list):
    """Rows ``(N, word, count, rescaled, predicted, abs_error)``."""

    COLUMNS = ("N", "word", "count", "rescaled", "predicted", "abs_error")

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(self.COLUMNS)
        for r in self:
            wr.writerow([r.N, ",".join(map(str, r.word)), r.count, repr(r.rescaled),
                         repr(r.predicted), repr(r.abs_error)])
        return buf.getvalue()


def predicted_scaling(w, pi) -> float:
    """Limit of ``L_{w;N} / N^k``: ``prod pi(w_i) / k!``."""
    w = as_word(w)
    return float(np.prod([pi[u] for u in w])) / math.factorial(len(w))


def ergodic_scaling(states_or_model, w, grid, pi=None, seed: int = 0) -> ScalingTable:
    """Tabulate ``L_{w;N} / N^{|w|}`` against its ergodic limit along ``grid``.

    With a model, a path of ``max(grid)`` steps is simulated and the states
    ``R_1..R_N`` are used; ``pi`` defaults to the exact stationary law.
    With a state sequence, ``pi`` is required.
    """
    from .hmw.model import HMWModel, MarkovSpec, stationary
    from .hmw.simulate import simulate

    w = as_word(w)
    grid = sorted(int(n) for n in grid)
    if not grid or grid[0] < 1:
        raise ValueError("grid must contain positive path lengths")
    if isinstance(states_or_model, (HMWModel, MarkovSpec)):
        model = states_or_model
        if pi is None:
            pi = stationary(model.chain if isinstance(model, HMWModel) else model)
        if isinstance(model, MarkovSpec):
            from .hmw.fixtures import indicator_model
            model = indicator_model(model, pi)
        states = simulate(model, grid[-1], seed).states[1:]
    else:
        if pi is None:
            raise ValueError("pi is required for a raw state sequence")
        states = np.asarray(states_or_model)
        if states.size < grid[-1]:
            raise ValueError(f"sequence has {states.size} states, grid needs {grid[-1]}")
    table = occupation_table(states[:grid[-1]], w)
    pred = predicted_scaling(w, pi)
    k = len(w)
    rows = ScalingTable()
    for N in grid:
        count = int(table[N])
        rescaled = count / N**k
        rows.append(ScalingRow(N, w, count, rescaled, pred, abs(rescaled - pred)))
    return rows


def centered_pair(states, u, v, pi) -> float:
    """``sum_{l1 < l2} (1[R_l1 = u] - pi(u)) (1[R_l2 = v] - pi(v))``.

    Exact when ``pi`` holds fractions or integers (rational arithmetic),
    otherwise accumulated in floating point by the same prefix recursion.
    """
    s = list(np.asarray(states).tolist())
    pu, pv = pi[u], pi[v]
    if all(isinstance(x, (int, Fraction)) for x in (pu, pv)):
        run, total = Fraction(0), Fraction(0)
        for x in s:
            total += run * ((x == v) - pv)
            run += (x == u) - pu
        return total
    s = np.asarray(s)
    a = (s == u) - float(pu)
    b = (s == v) - float(pv)
    prefix = np.concatenate([[0.0], np.cumsum(a)[:-1]])
    return float(prefix @ b)
