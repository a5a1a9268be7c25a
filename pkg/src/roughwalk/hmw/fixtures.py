"""Reference models used by the tests, the acceptance suite and the CLI."""

import numpy as np

from .model import HMWModel, MarkovSpec, StateEmission


def _point_mass(F, area=None):
    F = np.asarray(F, dtype=float)
    d = F.size
    area = np.zeros((1, d, d)) if area is None else np.asarray(area, dtype=float)[None]
    return StateEmission(np.array([1.0]), F[None, :], area)


def _law(ps, Fs, areas=None):
    Fs = np.asarray(Fs, dtype=float)
    d = Fs.shape[1]
    areas = np.zeros((len(ps), d, d)) if areas is None else np.asarray(areas, dtype=float)
    return StateEmission(np.asarray(ps, dtype=float), Fs, areas)


def cycle_chain(n):
    Q = np.roll(np.eye(n), 1, axis=1)
    return MarkovSpec(tuple(range(n)), Q, start=0)


def rotating_bernoulli(p=0.5):
    """``X_n = sum_k i^k U_k`` with ``U_k`` i.i.d. Bernoulli(p), in R^2.

    The driving chain is the deterministic 4-cycle ``0 -> 1 -> 2 -> 3 -> 0``;
    state ``u`` emits ``i^u`` (``e1, e2, -e1, -e2``) with probability ``p``
    and 0 otherwise.
    """
    dirs = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)
    ems = tuple(_law([p, 1 - p], [dirs[u], [0, 0]]) for u in range(4))
    return HMWModel(cycle_chain(4), ems, 2, name="rotating-bernoulli")


def simple_random_walk(d=2):
    """One-state chain emitting ``+-e_i`` uniformly."""
    vecs = np.vstack([np.eye(d), -np.eye(d)])
    chain = MarkovSpec((0,), np.ones((1, 1)), start=0)
    ems = (_law(np.full(2 * d, 1 / (2 * d)), vecs),)
    return HMWModel(chain, ems, d, name="simple-random-walk")


def two_state_chain(alpha, beta):
    Q = np.array([[1 - alpha, alpha], [beta, 1 - beta]])
    return MarkovSpec((0, 1), Q, start=0)


def diamond_q(p):
    """8-state transition matrix of the diamond / round-point models (states 1..8)."""
    q = 1 - p
    return np.array([
        [0, p, 0, q, 0, 0, 0, 0],
        [p, 0, 0, 0, 0, q, 0, 0],
        [0, p, 0, q, 0, 0, 0, 0],
        [0, 0, 0, 0, q, 0, p, 0],
        [p, 0, 0, 0, 0, q, 0, 0],
        [0, 0, q, 0, 0, 0, 0, p],
        [0, 0, q, 0, 0, 0, 0, p],
        [0, 0, 0, 0, q, 0, p, 0],
    ], dtype=float)


# State -> step assignment (a local convention).
_DIAMOND_STEPS = np.array([
    [1, 1], [1, -1], [-1, -1], [-1, 1],
    [1, -1], [-1, -1], [-1, 1], [1, 1],
], dtype=float)

DIAMOND_NOTE = ("state-to-vector assignment is a local convention: states 1..8 step "
                "along the diagonals (1,1),(1,-1),(-1,-1),(-1,1),(1,-1),(-1,-1),(-1,1),(1,1)")


def arc_area(F):
    """Signed area between a half-circle on chord ``F`` and the chord itself.

    The arc bulges to the right of the direction of travel, which makes the
    enclosed loop counter-clockwise and the area positive: ``pi |F|^2 / 8``.
    """
    F = np.asarray(F, dtype=float)
    return np.pi * float(F @ F) / 8.0


def diamond_model(p=0.5, round_point=False):
    """Diamond model; with ``round_point`` each step is a half-circle arch instead of a segment."""
    ems = []
    for F in _DIAMOND_STEPS:
        area = None
        if round_point:
            s = arc_area(F)
            area = np.array([[0.0, s], [-s, 0.0]])
        ems.append(_point_mass(F, area))
    name = "round-point" if round_point else "diamond"
    chain = MarkovSpec(tuple(range(1, 9)), diamond_q(p), start=0)
    return HMWModel(chain, tuple(ems), 2, name=name, notes=DIAMOND_NOTE)


def zero_emission(n=4):
    chain = cycle_chain(n)
    return HMWModel(chain, tuple(_point_mass([0.0, 0.0]) for _ in range(n)), 2, name="zero")


def indicator_model(chain, pi=None):
    """Walk of centred occupation vectors: state ``u`` emits ``e_u - pi``."""
    from .model import stationary

    if pi is None:
        pi = stationary(chain)
    n = chain.n_states
    ems = tuple(_point_mass(np.eye(n)[u] - pi) for u in range(n))
    return HMWModel(chain, ems, n, name="indicator")


def random_model(n_states=3, d=2, seed=0, support=2, decorated=False):
    """Random model with a positive transition matrix and integer emission vectors."""
    rng = np.random.default_rng(seed)
    Q = rng.dirichlet(np.ones(n_states), size=n_states)
    ems = []
    for _ in range(n_states):
        Fs = rng.integers(-2, 3, size=(support, d))
        areas = None
        if decorated:
            raw = rng.integers(-1, 2, size=(support, d, d)).astype(float)
            areas = 0.5 * (raw - np.swapaxes(raw, 1, 2))
        ems.append(_law(rng.dirichlet(np.ones(support)), Fs, areas))
    chain = MarkovSpec(tuple(range(n_states)), Q, start=0)
    return HMWModel(chain, tuple(ems), d, name=f"random-{n_states}-state")


BUILTIN = {
    "rotating-bernoulli": rotating_bernoulli,
    "simple-random-walk": simple_random_walk,
    "diamond": lambda: diamond_model(0.5),
    "round-point": lambda: diamond_model(0.5, round_point=True),
    "zero": zero_emission,
    "three-state": lambda: random_model(3, 2, seed=3).map_emissions(name="three-state"),
    "two-state": lambda: HMWModel(two_state_chain(0.3, 0.1),
                                  (_point_mass([1.0]), _point_mass([-1.0])), 1, name="two-state"),
}
