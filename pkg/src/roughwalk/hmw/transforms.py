"""Model transforms that bring a walk into the centred, isotropic normal form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .excursions import DegenerateExcursionError, excursion_times, exact_excursion_stats
from .model import HMWModel, validate
from .simulate import simulate

# drifts below this are treated as already centred
CENTRED_TOL = 1e-12


class SingularCovarianceError(DegenerateExcursionError):
    """Excursion covariance is singular; ``null_directions`` spans its kernel (rows)."""

    def __init__(self, message, null_directions):
        super().__init__(message)
        self.null_directions = np.asarray(null_directions)


def drift(model: HMWModel, stats=None) -> np.ndarray:
    """Asymptotic drift ``E[X_T1] / beta`` (exact unless ``stats`` is supplied)."""
    stats = stats or exact_excursion_stats(model)
    return np.asarray(stats.mean_increment, dtype=float) / stats.beta


def recenter(model: HMWModel, stats=None) -> HMWModel:
    """Shift every emission vector by the drift so that ``E[X_T1] = 0``.

    Decorations are kept.  A model whose drift is below ``CENTRED_TOL`` is
    returned unchanged (the same object), which makes the transform
    idempotent.
    """
    v = drift(model, stats)
    if np.max(np.abs(v)) < CENTRED_TOL:
        return model
    return model.map_emissions(vector_map=lambda F: F - v, name=f"{model.name}-centred")


def _inverse_root(sigma, rtol):
    sigma = 0.5 * (sigma + sigma.T)
    lam, vec = np.linalg.eigh(sigma)
    scale = max(float(np.max(np.abs(lam))), 1.0)
    null = lam <= rtol * scale
    if null.any():
        raise SingularCovarianceError(
            f"excursion covariance is singular (eigenvalues {lam.round(14).tolist()}); "
            f"null directions {vec[:, null].T.round(12).tolist()}",
            vec[:, null].T)
    return (vec / np.sqrt(lam)) @ vec.T


def isotropize(model: HMWModel, stats=None, rtol: float = 1e-12):
    """Map the walk linearly so that ``E[X_T1 (x) X_T1] = I``.

    Returns ``(model', W)`` with ``W = Sigma^{-1/2}`` the symmetric inverse
    root.  Emission vectors map by ``F -> W F`` and decorations by
    ``a -> W a W^T``.  Raises ``SingularCovarianceError`` with the null
    directions when ``Sigma`` is singular.
    """
    stats = stats or exact_excursion_stats(model)
    W = _inverse_root(np.asarray(stats.covariance, dtype=float), rtol)
    out = model.map_emissions(vector_map=lambda F: F @ W.T,
                              area_map=lambda a: W @ a @ W.T,
                              name=f"{model.name}-isotropic")
    return out, W


def normal_form(model: HMWModel, isotropic: bool = True):
    """Recentre then (optionally) isotropize; returns ``(model', W, notices)``."""
    notices = []
    centred = recenter(model)
    if centred is not model:
        notices.append(f"recentred by drift {drift(model).tolist()}")
    W = np.eye(model.dimension)
    if isotropic:
        stats = exact_excursion_stats(centred)
        if stats.anisotropy > 1e-12:
            centred, W = isotropize(centred, stats)
            notices.append("isotropized by W = Sigma^(-1/2)")
    return centred, W, notices


@dataclass(frozen=True)
class IidApproxReport:
    """Distance between ``X_n`` and the sum of its completed excursions.

    ``gaps[i]`` is ``|X_n - X_{T_kappa(n)}|`` at ``checkpoints[i]`` and
    ``bounds[i]`` is ``K`` times the length of the excursion running at n.
    """

    checkpoints: np.ndarray
    gaps: np.ndarray
    bounds: np.ndarray
    K: float
    max_excursion_length: int

    @property
    def sup_gap(self):
        return float(self.gaps.max(initial=0.0))

    @property
    def within_bound(self):
        return bool(np.all(self.gaps <= self.bounds + 1e-12)
                    and self.sup_gap <= self.K * self.max_excursion_length + 1e-12)

    def scaled(self):
        """``gap / sqrt(n)`` at each checkpoint."""
        return self.gaps / np.sqrt(np.maximum(self.checkpoints, 1))


def iid_approx_diag(model: HMWModel, n: int, seed: int, checkpoints=None) -> IidApproxReport:
    """Compare ``X_n`` with ``sum_{i <= kappa(n)} (X_{T_i} - X_{T_{i-1}})`` along a path."""
    K = validate(model).bound
    walk = simulate(model, n, seed)
    X = np.vstack([np.zeros((1, model.dimension)),
                   np.cumsum(walk.increments.steps, axis=0)])
    T = excursion_times(walk.states)
    if checkpoints is None:
        checkpoints = np.arange(1, n + 1)
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    last_return = T[np.searchsorted(T, checkpoints, side="right") - 1]
    gaps = np.linalg.norm(X[checkpoints] - X[last_return], axis=1)
    lengths = np.diff(np.append(T, n))
    return IidApproxReport(checkpoints, gaps, K * (checkpoints - last_return), K,
                           int(lengths.max(initial=0)))
