"""Experiment configuration and model resolution."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .._validation import check_seed
from ..hmw.model import HMWModel, ModelError, load_model, validate

KINDS = ("anomaly", "donsker", "nongeo", "occupation", "compare-embeddings", "holder")

DEFAULT_GRID = (0.25, 0.5, 0.75, 1.0)
DEFAULT_HOLDER_NS = tuple(2**j for j in range(10, 17))


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


def builtin_models():
    """Names of the model files shipped with the package."""
    root = resources.files("roughwalk") / "models"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_model(ref) -> HMWModel:
    """Load a model from a JSON path or a shipped model name, and validate it."""
    if isinstance(ref, HMWModel):
        model = ref
    else:
        path = Path(ref)
        if not path.exists():
            shipped = resources.files("roughwalk") / "models" / f"{ref}.json"
            if not shipped.is_file():
                raise ConfigError(f"model {ref!r} is neither a file nor one of {builtin_models()}")
            with resources.as_file(shipped) as p:
                model = load_model(p)
        else:
            model = load_model(path)
    validate(model)
    return model


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run depends on.

    ``n`` is the path length, ``k`` the number of excursions and
    ``replicas`` the number of independent paths.  ``tolerances`` overrides
    the default thresholds by name (``z``, ``cov``, ``slope``, ``scaling``,
    ``identity``, ``control``).
    """

    kind: str
    model: object = "rotating-bernoulli"
    n: int = 2**14
    k: int = 100_000
    replicas: int = 2000
    seed: int = 7
    grid: tuple = DEFAULT_GRID
    out: str | None = None
    format: str = "csv"
    exact_horizon: int | None = None
    isotropize: bool = True
    word: tuple | None = None
    holder_ns: tuple = DEFAULT_HOLDER_NS
    workers: int = 1
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        for name in ("n", "k", "replicas", "workers"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {v!r}")
        try:
            check_seed(self.seed)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        grid = tuple(float(t) for t in self.grid)
        if not grid or any(not 0.0 <= t <= 1.0 for t in grid) or list(grid) != sorted(grid):
            raise ConfigError(f"grid must be sorted values in [0, 1], got {grid}")
        object.__setattr__(self, "grid", grid)
        ns = tuple(int(v) for v in self.holder_ns)
        if len(ns) < 2 or any(v < 2 for v in ns):
            raise ConfigError("the Hoelder N-grid needs at least two lengths >= 2")
        object.__setattr__(self, "holder_ns", ns)
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.exact_horizon is not None and self.exact_horizon < 1:
            raise ConfigError("exact horizon must be >= 1")
        unknown = set(self.tolerances) - {"z", "cov", "slope", "scaling", "identity", "control"}
        if unknown:
            raise ConfigError(f"unknown tolerance names {sorted(unknown)}")

    def tol(self, name, default):
        return float(self.tolerances.get(name, default))

    def load_model(self) -> HMWModel:
        try:
            return resolve_model(self.model)
        except (ModelError, OSError) as exc:
            raise ConfigError(f"model error: {exc}") from None

    def with_(self, **kw):
        return replace(self, **kw)

    def metadata(self):
        return {
            "kind": self.kind,
            "model": self.model if isinstance(self.model, str) else getattr(self.model, "name", ""),
            "n": self.n, "k": self.k, "replicas": self.replicas, "seed": self.seed,
            "grid": list(self.grid), "exact_horizon": self.exact_horizon,
            "isotropize": self.isotropize,
            "word": None if self.word is None else list(self.word),
            "holder_ns": list(self.holder_ns), "tolerances": dict(self.tolerances),
        }
