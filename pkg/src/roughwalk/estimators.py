"""Scikit-learn style wrappers around the signature and anomaly routines."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .hmw.excursions import ExcursionBatch, estimate, exact_excursion_stats, simulate_excursions
from .hmw.model import HMWModel
from .signatures import discrete_signature, nongeo_lift, path_lift
from .words import as_word, occupation_table


def _as_path_batch(X, input_kind):
    """List of increment arrays from a batch of paths (array or ragged list)."""
    if isinstance(X, np.ndarray) and X.ndim == 2:
        X = X[None]
    paths = [np.asarray(p, dtype=float) for p in X]
    out = []
    for i, p in enumerate(paths):
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2:
            raise ValueError(f"sample {i}: expected a (length, d) array, got shape {p.shape}")
        out.append(np.diff(p, axis=0) if input_kind == "points" else p)
    if len({p.shape[1] for p in out}) > 1:
        raise ValueError("all paths must share one dimension")
    return out


class SignatureTransformer(TransformerMixin, BaseEstimator):
    """Flattened level-1..``level`` features of each path in a batch.

    Parameters
    ----------
    level : int
        Truncation order for ``kind="iterated"``; the lifts stop at 2.
    kind : {"iterated", "geometric", "nongeo"}
        Discrete iterated sums, the geometric level-2 lift, or the
        non-geometric level-2 lift.
    input : {"points", "increments"}
        How each sample is given.
    """

    def __init__(self, level=2, kind="iterated", input="points"):
        self.level = level
        self.kind = kind
        self.input = input

    def _check_params(self):
        if self.kind not in ("iterated", "geometric", "nongeo"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.input not in ("points", "increments"):
            raise ValueError(f"unknown input {self.input!r}")
        if self.kind != "iterated" and self.level != 2:
            raise ValueError("lifted features are level 2 only")

    def fit(self, X, y=None):
        self._check_params()
        paths = _as_path_batch(X, self.input)
        self.n_features_in_ = paths[0].shape[1]
        d, L = self.n_features_in_, self.level
        self.n_output_features_ = sum(d**k for k in range(1, L + 1))
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        paths = _as_path_batch(X, self.input)
        if paths[0].shape[1] != self.n_features_in_:
            raise ValueError(f"expected dimension {self.n_features_in_}, got {paths[0].shape[1]}")
        rows = []
        for F in paths:
            if self.kind == "iterated":
                levels = discrete_signature(F, self.level)
            else:
                lift = (path_lift if self.kind == "geometric" else nongeo_lift)(F)
                levels = [lift.level1[-1], lift.level2[-1]]
            rows.append(np.concatenate([np.ravel(t).astype(float) for t in levels]))
        return np.array(rows)


class OccupationTransformer(TransformerMixin, BaseEstimator):
    """Iterated occupation times ``L_w`` of state sequences, one column per word."""

    def __init__(self, words=((0,),)):
        self.words = words

    def fit(self, X, y=None):
        self.words_ = [as_word(w) for w in self.words]
        if not self.words_:
            raise ValueError("no words given")
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "words_")
        return np.array([[int(occupation_table(s, w)[-1]) for w in self.words_] for s in X],
                        dtype=object)


class AreaAnomalyEstimator(BaseEstimator):
    """Excursion estimators of the area anomaly of a hidden Markov walk.

    ``fit`` accepts an :class:`HMWModel` (which is simulated for
    ``n_excursions`` excursions, or solved exactly with ``method="exact"``)
    or an :class:`ExcursionBatch` of already simulated excursions.

    Attributes
    ----------
    beta_, C_ : float
    gamma_, gamma0_, gamma_rho_, M_ : ndarray of shape (d, d)
    stats_ : ExcursionStats
    """

    def __init__(self, n_excursions=10_000, seed=0, method="monte-carlo"):
        self.n_excursions = n_excursions
        self.seed = seed
        self.method = method

    def fit(self, X, y=None):
        if self.method not in ("monte-carlo", "exact"):
            raise ValueError(f"unknown method {self.method!r}")
        if isinstance(X, ExcursionBatch):
            stats = estimate(X)
        elif isinstance(X, HMWModel):
            if self.method == "exact":
                stats = exact_excursion_stats(X)
            else:
                stats = estimate(simulate_excursions(X, int(self.n_excursions), self.seed))
        else:
            raise TypeError("fit expects an HMWModel or an ExcursionBatch")
        self.stats_ = stats
        self.beta_ = stats.beta
        self.C_ = stats.C
        self.gamma_ = stats.gamma
        self.gamma0_ = stats.gamma0
        self.gamma_rho_ = stats.gamma_rho
        self.M_ = stats.M
        self.n_features_in_ = stats.dim
        return self

    def predict(self, t):
        """Limit drift ``gamma_rho * t`` of the rescaled second level at times ``t``."""
        check_is_fitted(self, "gamma_rho_")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return t[:, None, None] * self.gamma_rho_[None]
