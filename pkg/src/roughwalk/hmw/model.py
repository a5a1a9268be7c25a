"""Hidden Markov walk models: a finite Markov chain driving finite emission laws."""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ModelError(ValueError):
    """Malformed or invalid model; ``problems`` lists ``(location, message)`` pairs."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [("model", problems)]
        self.problems = list(problems)
        super().__init__("; ".join(f"{loc}: {msg}" for loc, msg in self.problems))


@dataclass(frozen=True, eq=False)
class MarkovSpec:
    """Finite chain with transition matrix ``Q``.

    ``start`` is a state index.  A distributional start is given through
    ``initial`` instead (``start`` is then ``None``); estimators refuse it.
    """

    states: tuple
    Q: np.ndarray
    start: int | None = 0
    initial: np.ndarray | None = None

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        n = len(self.states)
        if Q.shape != (n, n):
            raise ModelError([("Q", f"expected shape {(n, n)}, got {Q.shape}")])
        Q.flags.writeable = False
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "states", tuple(self.states))
        if self.initial is not None:
            init = np.array(self.initial, dtype=float)
            if init.shape != (n,):
                raise ModelError([("start", f"initial law must have {n} entries")])
            init.flags.writeable = False
            object.__setattr__(self, "initial", init)
            object.__setattr__(self, "start", None)
        elif not isinstance(self.start, numbers.Integral) or not 0 <= self.start < n:
            raise ModelError([("start", f"start index {self.start!r} out of range")])

    @property
    def n_states(self):
        return len(self.states)

    @property
    def deterministic_start(self):
        return self.start is not None

    def index(self, label):
        """State index for a label (labels are compared as strings as a fallback)."""
        if label in self.states:
            return self.states.index(label)
        as_str = [str(s) for s in self.states]
        if str(label) in as_str:
            return as_str.index(str(label))
        raise KeyError(f"unknown state {label!r}")


@dataclass(frozen=True, eq=False)
class StateEmission:
    """Finite emission law of one state: probabilities, vectors and area decorations."""

    p: np.ndarray
    F: np.ndarray
    area: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        F = np.array(self.F, dtype=float)
        if F.ndim == 1:
            F = F[None, :]
        area = np.array(self.area, dtype=float)
        for arr in (p, F, area):
            arr.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "area", area)

    @property
    def mean(self):
        return self.p @ self.F

    @property
    def second_moment(self):
        return np.einsum("m,mi,mj->ij", self.p, self.F, self.F)

    @property
    def mean_area(self):
        return np.einsum("m,mij->ij", self.p, self.area)

    @property
    def bound(self):
        """Largest emission norm on the support."""
        return float(np.max(np.linalg.norm(self.F, axis=1))) if self.p.size else 0.0


@dataclass(frozen=True, eq=False)
class HMWModel:
    chain: MarkovSpec
    emissions: tuple
    dimension: int
    name: str = ""
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "emissions", tuple(self.emissions))
        problems = []
        if len(self.emissions) != self.chain.n_states:
            problems.append(("emissions", f"{len(self.emissions)} entries for "
                                          f"{self.chain.n_states} states"))
        for u, em in enumerate(self.emissions):
            m = em.p.size
            if em.F.shape != (m, self.dimension):
                problems.append((f"emissions[{u}]", f"vectors must have shape {(m, self.dimension)}, "
                                                    f"got {em.F.shape}"))
            if em.area.shape != (m, self.dimension, self.dimension):
                problems.append((f"emissions[{u}]", "areas must be d x d matrices"))
        if problems:
            raise ModelError(problems)

    @property
    def n_states(self):
        return self.chain.n_states

    @property
    def decorated(self):
        return any(np.any(em.area) for em in self.emissions)

    def mean_emissions(self):
        return np.array([em.mean for em in self.emissions])

    def map_emissions(self, vector_map=None, area_map=None, name=None):
        """Return a copy with every support vector / area transformed."""
        new = []
        for em in self.emissions:
            F = em.F if vector_map is None else np.array([vector_map(f) for f in em.F])
            area = em.area if area_map is None else np.array([area_map(a) for a in em.area])
            new.append(StateEmission(em.p, F.reshape(em.F.shape), area.reshape(em.area.shape)))
        return HMWModel(self.chain, tuple(new), self.dimension,
                        name=self.name if name is None else name, notes=self.notes)

    # JSON

    def to_dict(self):
        out = {
            "name": self.name,
            "states": list(self.chain.states),
            "Q": self.chain.Q.tolist(),
            "start": self.chain.start if self.chain.deterministic_start
            else self.chain.initial.tolist(),
            "dimension": self.dimension,
            "emissions": [
                [{"p": float(p), "F": F.tolist(), "area": a.tolist()}
                 for p, F, a in zip(em.p, em.F, em.area)]
                for em in self.emissions
            ],
        }
        if self.notes:
            out["notes"] = self.notes
        return out

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_pretty_json(self):
        """JSON with one matrix row and one emission entry per line."""
        obj = self.to_dict()
        dump = json.dumps
        lines = ["{"]
        for key, value in obj.items():
            if key == "Q":
                rows = ",\n    ".join(dump(r) for r in value)
                text = f"[\n    {rows}\n  ]"
            elif key == "emissions":
                per_state = ",\n    ".join(
                    "[\n      " + ",\n      ".join(dump(e) for e in entries) + "\n    ]"
                    for entries in value)
                text = f"[\n    {per_state}\n  ]"
            else:
                text = dump(value)
            lines.append(f"  {dump(key)}: {text},")
        lines[-1] = lines[-1].rstrip(",")
        return "\n".join(lines + ["}"]) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_pretty_json())


def _area_matrix(value, d, loc, problems):
    if value is None:
        return np.zeros((d, d))
    if isinstance(value, numbers.Real):
        if d != 2:
            problems.append((loc, "a scalar area is only allowed in dimension 2"))
            return np.zeros((d, d))
        return np.array([[0.0, value], [-value, 0.0]])
    arr = np.asarray(value, dtype=float)
    if arr.shape != (d, d):
        problems.append((loc, f"area must be a scalar or a {d}x{d} matrix"))
        return np.zeros((d, d))
    if np.max(np.abs(arr + arr.T)) > 1e-12:
        problems.append((loc, "area matrix is not antisymmetric"))
    return 0.5 * (arr - arr.T)


def model_from_dict(obj) -> HMWModel:
    """Build a model from the JSON object layout, reporting every problem found.

    Layout: ``{states, Q, start, dimension, emissions}`` where ``emissions``
    is a list aligned with ``states`` (or a mapping keyed by state label) of
    lists of ``{p, F, area}``.  ``area`` is a d x d antisymmetric matrix, or a
    scalar (the ``e1 ^ e2`` coefficient) when d = 2.
    """
    problems = []
    for key in ("states", "Q", "start", "dimension", "emissions"):
        if key not in obj:
            problems.append((key, "missing field"))
    if problems:
        raise ModelError(problems)
    states = list(obj["states"])
    n = len(states)
    try:
        Q = np.asarray(obj["Q"], dtype=float)
    except (TypeError, ValueError):
        raise ModelError([("Q", "not a numeric matrix")])
    if Q.ndim == 1 and Q.size == n * n:
        Q = Q.reshape(n, n)
    if Q.shape != (n, n):
        raise ModelError([("Q", f"expected {n}x{n} entries, got shape {Q.shape}")])
    d = obj["dimension"]
    if not isinstance(d, int) or d < 1:
        raise ModelError([("dimension", f"must be a positive integer, got {d!r}")])

    start, initial = obj["start"], None
    if isinstance(start, list):
        initial, start = start, None
    elif not isinstance(start, int) or isinstance(start, bool):
        if start in states:
            start = states.index(start)
        else:
            problems.append(("start", f"unknown start state {start!r}"))
            start = 0
    elif not 0 <= start < n:
        problems.append(("start", f"index {start} out of range"))
        start = 0

    raw = obj["emissions"]
    if isinstance(raw, dict):
        missing = [s for s in states if str(s) not in {str(k) for k in raw}]
        if missing:
            raise ModelError([("emissions", f"no entry for states {missing}")])
        lookup = {str(k): v for k, v in raw.items()}
        raw = [lookup[str(s)] for s in states]
    if len(raw) != n:
        raise ModelError([("emissions", f"{len(raw)} entries for {n} states")])

    emissions = []
    for u, entries in enumerate(raw):
        ps, Fs, areas = [], [], []
        if not entries:
            problems.append((f"emissions[{u}]", "empty support"))
        for m, item in enumerate(entries):
            loc = f"emissions[{u}][{m}]"
            try:
                p = float(item["p"])
                F = np.asarray(item["F"], dtype=float).reshape(-1)
            except (KeyError, TypeError, ValueError):
                problems.append((loc, "needs numeric fields 'p' and 'F'"))
                continue
            if F.size != d:
                problems.append((f"{loc}.F", f"has {F.size} entries, dimension is {d}"))
                continue
            if not np.all(np.isfinite(F)):
                problems.append((f"{loc}.F", "non-finite entries"))
                continue
            ps.append(p)
            Fs.append(F)
            areas.append(_area_matrix(item.get("area"), d, f"{loc}.area", problems))
        emissions.append(StateEmission(np.array(ps), np.array(Fs).reshape(len(Fs), d),
                                       np.array(areas).reshape(len(areas), d, d)))
    if problems:
        raise ModelError(problems)
    chain = MarkovSpec(tuple(states), Q, start=start, initial=initial)
    return HMWModel(chain, tuple(emissions), d, name=obj.get("name", ""), notes=obj.get("notes", ""))


def load_model(path) -> HMWModel:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelError([(f"{path}:{exc.lineno}:{exc.colno}", exc.msg)]) from None
    return model_from_dict(obj)


@dataclass(frozen=True)
class ValidationReport:
    n_states: int
    dimension: int
    bound: float
    max_row_error: float
    decorated: bool


def _strongly_connected(adj):
    n = adj.shape[0]

    def reach(mat):
        seen = {0}
        todo = [0]
        while todo:
            u = todo.pop()
            for v in np.flatnonzero(mat[u]):
                if v not in seen:
                    seen.add(int(v))
                    todo.append(int(v))
        return seen

    return len(reach(adj)) == n and len(reach(adj.T)) == n


def validate(model, tol=1e-12) -> ValidationReport:
    """Check the hypotheses the limit theorems rely on.

    Stochasticity of ``Q``, irreducibility (strong connectivity of the graph
    of positive transitions), emission laws summing to one, and bounded
    supports.  All violations are collected into one :class:`ModelError`.
    """
    chain = model.chain if isinstance(model, HMWModel) else model
    Q = chain.Q
    problems = []
    if not np.all(np.isfinite(Q)):
        problems.append(("Q", "non-finite entries"))
    neg = np.argwhere(Q < 0)
    if neg.size:
        i, j = neg[0]
        problems.append((f"Q[{i}][{j}]", f"negative probability {Q[i, j]!r} (stochasticity)"))
    row_err = np.abs(Q.sum(axis=1) - 1.0)
    for i in np.flatnonzero(row_err > tol):
        problems.append((f"Q[{i}]", f"row sums to {Q[i].sum()!r}, not 1 (stochasticity)"))
    if not neg.size and not _strongly_connected(Q > 0):
        problems.append(("Q", "chain is not irreducible (transition graph not strongly connected)"))
    if chain.initial is not None:
        init = chain.initial
        if np.any(init < 0) or abs(init.sum() - 1) > tol:
            problems.append(("start", "initial law is not a probability vector"))

    bound, decorated = 0.0, False
    if isinstance(model, HMWModel):
        for u, em in enumerate(model.emissions):
            if np.any(em.p < 0) or abs(em.p.sum() - 1.0) > tol:
                problems.append((f"emissions[{u}]", f"probabilities sum to {em.p.sum()!r}, not 1"))
            if not np.all(np.isfinite(em.F)):
                problems.append((f"emissions[{u}]", "unbounded support (non-finite vector)"))
            if np.any(np.abs(em.area + np.swapaxes(em.area, 1, 2)) > tol):
                problems.append((f"emissions[{u}]", "area decoration not antisymmetric"))
        bound = max(em.bound for em in model.emissions)
        decorated = model.decorated
    if problems:
        raise ModelError(problems)
    return ValidationReport(chain.n_states, getattr(model, "dimension", 0), bound,
                            float(row_err.max()), decorated)


def stationary(chain, tol=1e-10) -> np.ndarray:
    """Invariant law ``pi Q = pi`` of an irreducible chain.

    Solved as the least-squares system ``[Q^T - I; 1^T] pi = [0; 1]``, which
    has a unique exact solution for irreducible chains.
    """
    if isinstance(chain, HMWModel):
        chain = chain.chain
    Q = chain.Q
    n = Q.shape[0]
    A = np.vstack([Q.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    if rank < n:
        raise np.linalg.LinAlgError("invariant law is not unique; the chain is reducible")
    residual = np.max(np.abs(pi @ Q - pi))
    if residual > tol or abs(pi.sum() - 1) > tol or np.any(pi <= 0):
        raise np.linalg.LinAlgError(
            f"no positive invariant law found (residual {residual:.3g}); is the chain irreducible?")
    return pi
