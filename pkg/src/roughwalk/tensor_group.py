"""Arithmetic in the step-2 truncated tensor algebra and its geometric subgroup.

An element is a pair ``(a, b)`` with ``a`` in ``R^d`` and ``b`` a ``d x d``
matrix, the implicit scalar level being 1.  The group law is

    (a, b) * (a', b') = (a + a', b + b' + a (x) a')

Geometric elements (the free nilpotent group of step 2) are those whose
symmetric second level is ``a (x) a / 2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._validation import DimensionError, as_square, as_vector, check_unit_interval

# absolute G^2 membership tolerance on unit-scale data, scaled by |||x|||^2 above 1
GEO_TOL = 1e-9


class NotGeometricError(ValueError):
    """Raised when an operation restricted to G^2 receives a non-geometric element."""


@dataclass(frozen=True, eq=False)
class T2Element:
    """Element ``(a, b)`` of the truncated tensor algebra T^(2)_1(R^d).

    Arrays are copied and frozen on construction, so instances are safe to
    share between threads.
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = as_vector(self.a, "a").copy()
        b = as_square(self.b, a.size, "b").copy()
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.a.size

    def __mul__(self, other):
        if not isinstance(other, T2Element):
            return NotImplemented
        return tensor_mul(self, other)

    def inverse(self) -> "T2Element":
        return tensor_inv(self)

    def allclose(self, other, atol=1e-12) -> bool:
        return (self.dim == other.dim
                and np.allclose(self.a, other.a, rtol=0, atol=atol)
                and np.allclose(self.b, other.b, rtol=0, atol=atol))

    def __eq__(self, other):
        if not isinstance(other, T2Element):
            return NotImplemented
        return (self.dim == other.dim and np.array_equal(self.a, other.a)
                and np.array_equal(self.b, other.b))

    __hash__ = None

    def __repr__(self):
        return f"T2Element(a={self.a.tolist()}, b={self.b.tolist()})"

    def to_flat(self) -> list:
        """Flat list ``[a_1..a_d, b_11..b_dd]`` with ``b`` in row-major order."""
        return self.a.tolist() + self.b.ravel().tolist()

    @classmethod
    def from_flat(cls, values) -> "T2Element":
        values = np.asarray(values, dtype=float).ravel()
        # n = d + d^2
        d = int(round((-1 + np.sqrt(1 + 4 * values.size)) / 2))
        if d < 1 or d + d * d != values.size:
            raise ValueError(f"{values.size} values do not encode a T2 element")
        return cls(values[:d], values[d:].reshape(d, d))

    def to_json(self) -> str:
        return json.dumps(self.to_flat())

    @classmethod
    def from_json(cls, text: str) -> "T2Element":
        return cls.from_flat(json.loads(text))


def identity(d: int) -> T2Element:
    return T2Element(np.zeros(d), np.zeros((d, d)))


def _check_same_dim(x, y):
    if x.dim != y.dim:
        raise DimensionError(f"dimension mismatch: {x.dim} vs {y.dim}")


def tensor_mul(x: T2Element, y: T2Element) -> T2Element:
    """Group product ``(a + a', b + b' + a (x) a')``."""
    _check_same_dim(x, y)
    return T2Element(x.a + y.a, x.b + y.b + np.outer(x.a, y.a))


def tensor_inv(x: T2Element) -> T2Element:
    """Inverse ``(-a, -b + a (x) a)``."""
    return T2Element(-x.a, -x.b + np.outer(x.a, x.a))


def split_sym_antisym(b):
    """Return ``(Sym(b), Anti(b))``; their sum is ``b``."""
    b = np.asarray(b, dtype=float)
    bt = np.swapaxes(b, -1, -2)
    return 0.5 * (b + bt), 0.5 * (b - bt)


def antisym(b):
    b = np.asarray(b, dtype=float)
    return 0.5 * (b - np.swapaxes(b, -1, -2))


def shuffle_defect(x: T2Element) -> float:
    """``max_ij |a_i a_j - (b_ij + b_ji)|``, zero exactly on G^2."""
    return float(np.max(np.abs(np.outer(x.a, x.a) - (x.b + x.b.T))))


def default_geo_tol(x: T2Element) -> float:
    return GEO_TOL * max(1.0, hom_norm(x) ** 2)


def is_geometric(x: T2Element, tol: float | None = None) -> bool:
    """Test the level-2 shuffle relation ``a_i a_j = b_ij + b_ji``.

    This is equivalent to ``Sym(b) = a (x) a / 2``.  With ``tol=None`` the
    tolerance is ``1e-9`` scaled by ``|||x|||^2`` for elements larger than 1.
    """
    if tol is None:
        tol = default_geo_tol(x)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return shuffle_defect(x) <= tol


def sym_defect(x: T2Element) -> float:
    """``max_ij |Sym(b) - a (x) a / 2|``; half the shuffle defect."""
    sym, _ = split_sym_antisym(x.b)
    return float(np.max(np.abs(sym - 0.5 * np.outer(x.a, x.a))))


def _require_geometric(x, name):
    if not is_geometric(x):
        raise NotGeometricError(f"{name} is not in G^2 (shuffle defect {shuffle_defect(x):.3g})")


def to_reduced(x: T2Element) -> T2Element:
    """Drop the symmetric level-2 part: ``(a, Anti(b))``."""
    return T2Element(x.a, antisym(x.b))


def from_reduced(x: T2Element) -> T2Element:
    """Rebuild the geometric element ``(a, a (x) a / 2 + Anti(b))``."""
    return T2Element(x.a, 0.5 * np.outer(x.a, x.a) + antisym(x.b))


def _is_reduced(x, tol):
    sym, _ = split_sym_antisym(x.b)
    return float(np.max(np.abs(sym))) <= tol


def wedge_mul(x: T2Element, y: T2Element) -> T2Element:
    """Antisymmetric law ``(a + a', A + A' + (a (x) a' - a' (x) a) / 2)`` on G^2.

    ``A`` and ``A'`` are the antisymmetric parts of the second levels.  Inputs
    may be given in full geometric form or in reduced form (symmetric part
    zero); anything else raises :class:`NotGeometricError`.  The result is in
    reduced form, and ``from_reduced(wedge_mul(x, y))`` equals
    ``tensor_mul(x, y)`` for geometric ``x, y``.
    """
    _check_same_dim(x, y)
    for name, z in (("x", x), ("y", y)):
        tol = default_geo_tol(z)
        if not (is_geometric(z, tol) or _is_reduced(z, tol)):
            raise NotGeometricError(
                f"{name} is neither geometric nor reduced (shuffle defect {shuffle_defect(z):.3g})")
    cross = np.outer(x.a, y.a)
    return T2Element(x.a + y.a, antisym(x.b) + antisym(y.b) + 0.5 * (cross - cross.T))


def dilate(x: T2Element, eps: float) -> T2Element:
    """Dilation ``(eps a, eps^2 b)``."""
    return T2Element(eps * x.a, eps * eps * x.b)


def hom_norm(x: T2Element) -> float:
    """Homogeneous norm ``max(|a|, |b|_F^{1/2})``.

    This replaces the Carnot-Caratheodory norm throughout; the two are
    equivalent up to constants.
    """
    return float(max(np.linalg.norm(x.a), np.sqrt(np.linalg.norm(x.b))))


def hom_dist(x: T2Element, y: T2Element) -> float:
    """``hom_norm(x^{-1} * y)``.  Not symmetric in general."""
    _check_same_dim(x, y)
    return hom_norm(tensor_mul(tensor_inv(x), y))


def geodesic_point(g: T2Element, s: float) -> T2Element:
    """Point at fraction ``s`` of the geodesic increment ``g``, i.e. ``dilate(g, s)``."""
    s = check_unit_interval(s)
    _require_geometric(g, "g")
    return dilate(g, s)


# Batched helpers: arrays of shape (..., d) and (..., d, d).  Used by the
# simulation code, where building one T2Element per sample would dominate.

def batch_mul(a1, b1, a2, b2):
    return a1 + a2, b1 + b2 + a1[..., :, None] * a2[..., None, :]


def batch_inv(a, b):
    return -a, -b + a[..., :, None] * a[..., None, :]


def batch_increment(a_s, b_s, a_t, b_t):
    """``x_s^{-1} * x_t`` for batches of elements."""
    da = a_t - a_s
    return da, b_t - b_s - a_s[..., :, None] * da[..., None, :]


def batch_hom_norm(a, b):
    n1 = np.linalg.norm(a, axis=-1)
    n2 = np.sqrt(np.linalg.norm(b, axis=(-2, -1)))
    return np.maximum(n1, n2)
