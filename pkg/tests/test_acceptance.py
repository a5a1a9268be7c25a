"""Acceptance suite: one test per criterion, each reporting a single pass/fail line.

Run alone with ``pytest tests/test_acceptance.py`` (lines appear in the
terminal summary) or ``python tests/test_acceptance.py``.  Monte Carlo
criteria use the pinned seed 7.
"""

import sys
import time
from itertools import product

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES
from oracles import (
    iterated_sum_bruteforce,
    occupation_bruteforce,
    power_iteration_stationary,
    quasi_shuffle_bruteforce,
    shuffle_bruteforce,
)

from roughwalk.hmw import (
    estimate,
    exact_excursion_stats,
    simulate,
    simulate_excursions,
    split_excursions,
    stationary,
    validate,
)
from roughwalk.hmw.fixtures import (
    cycle_chain,
    diamond_model,
    diamond_q,
    random_model,
    rotating_bernoulli,
    simple_random_walk,
)
from roughwalk.lab.config import ExperimentConfig
from roughwalk.lab.experiments import run
from roughwalk.signatures import iterated_sum, nongeo_lift, path_lift, pwl_level2, square_sums
from roughwalk.tensor_group import (
    T2Element,
    identity,
    is_geometric,
    tensor_inv,
    tensor_mul,
)
from roughwalk.words import ergodic_scaling, occupation, quasi_shuffle, shuffle, verify_product

SEED = 7


def record(number, title, checks, elapsed=None, limit=None):
    """Print and store one line; ``checks`` maps a description to a bool."""
    failed = [name for name, ok in checks.items() if not ok]
    if limit is not None:
        in_time = elapsed < limit
        if not in_time:
            failed.append(f"runtime {elapsed:.1f}s >= {limit}s")
    timing = "" if elapsed is None else f" [{elapsed:.1f}s]"
    verdict = "PASS" if not failed else "FAIL"
    detail = "" if not failed else " -- failed: " + "; ".join(failed)
    line = f"criterion {number} {verdict}: {title}{timing}{detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return not failed


def _int_element(r, d):
    a = r.integers(-3, 4, size=d)
    return T2Element(a, r.integers(-3, 4, size=(d, d)).astype(float))


def test_criterion_1_exact_algebra():
    t0 = time.perf_counter()
    r = np.random.default_rng(SEED)
    ok = dict.fromkeys(["group axioms", "Chen at every split",
                        "reconstruction Y (x) (0, Z/2) = X", "geometric lifts satisfy shuffle",
                        "excursion record identities", "float tolerance 1e-12"], True)
    for _ in range(300):
        d = int(r.integers(1, 4))
        x, y, z = (_int_element(r, d) for _ in range(3))
        e = identity(d)
        ok["group axioms"] &= (tensor_mul(tensor_mul(x, y), z) == tensor_mul(x, tensor_mul(y, z))
                               and tensor_mul(x, e) == x and tensor_mul(e, x) == x
                               and tensor_mul(x, tensor_inv(x)) == e
                               and tensor_mul(tensor_inv(x), x) == e)
    for _ in range(100):
        n, d = int(r.integers(1, 13)), int(r.integers(1, 4))
        steps = r.integers(-3, 4, size=(n, d))
        lift, y, zs = path_lift(steps), nongeo_lift(steps), square_sums(steps)
        for k in range(n + 1):
            ok["Chen at every split"] &= (tensor_mul(path_lift(steps[:k]).endpoint,
                                                     path_lift(steps[k:]).endpoint) == lift.endpoint)
            ok["reconstruction Y (x) (0, Z/2) = X"] &= (
                tensor_mul(y.at(k), T2Element(np.zeros(d), 0.5 * zs[k])) == lift.at(k))
            ok["geometric lifts satisfy shuffle"] &= is_geometric(lift.at(k), 0.0)
        states = np.concatenate([[0], r.integers(0, 3, size=n), [0]])
        batch = split_excursions(states, np.vstack([steps, r.integers(-3, 4, size=(1, d))]))
        ok["excursion record identities"] &= batch.identity_defects() == (0.0, 0.0)
    for _ in range(50):
        steps = r.normal(size=(20, 2))
        lift = path_lift(steps)
        ok["float tolerance 1e-12"] &= all(
            tensor_mul(path_lift(steps[:k]).endpoint, path_lift(steps[k:]).endpoint)
            .allclose(lift.endpoint, 1e-12) for k in range(21))
        ok["float tolerance 1e-12"] &= is_geometric(
            T2Element(steps.sum(axis=0), pwl_level2(steps)), 1e-12)
    elapsed = time.perf_counter() - t0
    assert record(1, "exact algebra suite", ok, elapsed, 10)


@pytest.mark.xfail(strict=True, reason="the full-square identity is off by a factor 2; "
                                       "the half-square form is checked in criterion 1")
def test_criterion_1_literal_reconstruction():
    r = np.random.default_rng(SEED)
    holds = True
    for _ in range(20):
        steps = r.integers(-3, 4, size=(6, 2))
        y, lift, zs = nongeo_lift(steps), path_lift(steps), square_sums(steps)
        holds &= all(tensor_mul(y.at(k), T2Element(np.zeros(2), zs[k])) == lift.at(k)
                     for k in range(7))
    record("1 (literal form)", "Y_n (x) (0, Z_n) = X_n with Z_n = sum F (x) F",
           {"full-square identity on 20 random integer paths": holds})
    assert holds


def test_criterion_2_bruteforce_oracles():
    t0 = time.perf_counter()
    r = np.random.default_rng(SEED)
    ok = {}
    good = True
    for n, d, l in product(range(0, 9), range(1, 4), range(1, 4)):
        steps = r.integers(-3, 4, size=(n, d))
        good &= np.array_equal(iterated_sum(steps, l),
                               iterated_sum_bruteforce(steps, l).astype(np.int64))
    ok["iterated sums N<=8, l<=3"] = good
    good = True
    for n in range(13):
        for _ in range(20):
            s = r.integers(0, 3, size=n).tolist()
            w = tuple(r.integers(0, 3, size=int(r.integers(0, 5))).tolist())
            good &= occupation(s, w) == occupation_bruteforce(s, w)
    ok["occupation n<=12, |w|<=4"] = good
    good = True
    small = [tuple(w) for k in range(5) for w in product("ab", repeat=k)]
    pairs = list(product(small, small))
    pairs += [(tuple(r.choice(list("abc"), size=int(r.integers(0, 6)))),
               tuple(r.choice(list("abc"), size=5))) for _ in range(60)]
    for u, v in pairs:
        good &= dict(shuffle(u, v)) == shuffle_bruteforce(u, v)
        good &= dict(quasi_shuffle(u, v)) == quasi_shuffle_bruteforce(u, v)
    ok["(quasi-)shuffle words <= 5"] = good
    good = True
    for _ in range(10_000):
        s = r.integers(0, 3, size=int(r.integers(0, 16)))
        u = tuple(r.integers(0, 3, size=int(r.integers(0, 4))).tolist())
        v = tuple(r.integers(0, 3, size=int(r.integers(0, 4))).tolist())
        good &= verify_product(s, u, v)
    ok["verify_product on 1e4 triples"] = good
    elapsed = time.perf_counter() - t0
    assert record(2, "brute-force oracle suite", ok, elapsed, 30)


def test_criterion_3_area_anomaly():
    t0 = time.perf_counter()
    ex = exact_excursion_stats(rotating_bernoulli())
    mc = estimate(simulate_excursions(rotating_bernoulli(), 100_000, SEED))
    srw = estimate(simulate_excursions(simple_random_walk(), 100_000, SEED))
    ok = {
        "exact gamma_12 = 1/2": ex.gamma[0, 1] == 0.5,
        "exact beta = 4": ex.beta == 4.0,
        "exact C = 1/2": ex.C == 0.5,
        "exact E[X_T1] = 0": not ex.mean_increment.any(),
        f"MC gamma_12 = {mc.gamma[0, 1]:.4f} +- {mc.gamma_se[0, 1]:.4f} within 3 se":
            abs(mc.gamma[0, 1] - 0.5) <= 3 * mc.gamma_se[0, 1],
        "simple random walk gamma = 0 within 3 se":
            bool(np.all(np.abs(srw.gamma) <= 3 * srw.gamma_se + 1e-15)),
    }
    elapsed = time.perf_counter() - t0
    assert record(3, f"area anomaly (MC gamma_12 = {mc.gamma[0, 1]:.4f} "
                     f"+- {mc.gamma_se[0, 1]:.4f})", ok, elapsed, 60)


def test_criterion_4_ito_identity():
    defects = []
    models = [rotating_bernoulli(), random_model(3, 2, seed=3), diamond_model(0.5),
              simple_random_walk()]
    for m in models:
        for seed in (SEED, SEED + 1, SEED + 2):
            defects.append(estimate(simulate_excursions(m, 20_000, seed)).ito_identity_defect())
    rep = run(ExperimentConfig("nongeo", n=1024, k=20_000, replicas=50, seed=SEED))
    defects.append(rep.get("ito_identity_defect").value)
    worst = max(defects)
    assert record(4, f"estimator identity, worst defect {worst:.2e}",
                  {"defect <= 1e-12 on every run": worst <= 1e-12})


def test_criterion_5_ergodic_scaling():
    t0 = time.perf_counter()
    ok = {}
    for seed in (SEED, SEED + 1):
        pair = ergodic_scaling(cycle_chain(4), (0, 1), [10**5], seed=seed)[0]
        single = ergodic_scaling(cycle_chain(4), (0,), [10**5], seed=seed)[0]
        ok[f"seed {seed}: |L/N^2 - 0.03125| = {pair.abs_error:.2e} <= 0.01"] = (
            abs(pair.rescaled - 0.03125) <= 0.01)
        ok[f"seed {seed}: |L/N - 1/4| = {single.abs_error:.2e} <= 0.005"] = (
            abs(single.rescaled - 0.25) <= 0.005)
    pi = stationary(random_model(3, 2, seed=4))
    rows = ergodic_scaling(random_model(3, 2, seed=4), (0, 2), [10**5], pi=pi, seed=SEED)
    ok["random 3-state chain within 0.01"] = rows[0].abs_error <= 0.01
    elapsed = time.perf_counter() - t0
    assert record(5, "ergodic scaling", ok, elapsed, 60)


@pytest.mark.slow
def test_criterion_6_donsker_level2():
    t0 = time.perf_counter()
    rep = run(ExperimentConfig("donsker", n=2**14, replicas=2000, seed=SEED, grid=(1.0,)))
    cov = [rep.get("level1_cov[t=1]", c) for c in ("0,0", "0,1", "1,0", "1,1")]
    anti = rep.get("level2_anti_mean[t=1]", "0,1")
    hold = run(ExperimentConfig("holder", replicas=50, seed=SEED))
    slope = hold.get("holder_log_slope").value
    ok = {
        "level-1 covariance within 5% of I entrywise":
            all(abs(s.value - s.target) <= 0.05 for s in cov),
        f"antisym level-2 {anti.value:.4f} +- {anti.se:.4f} within 3 se of {anti.target}":
            abs(anti.value - anti.target) <= 3 * anti.se,
        f"Hoelder log-slope {slope:.3f} <= 0.1": slope <= 0.1,
    }
    elapsed = time.perf_counter() - t0
    assert record(6, "Donsker at level 2", ok, elapsed, 300)


@pytest.mark.slow
def test_criterion_7_nongeometric_drift():
    t0 = time.perf_counter()
    rep = run(ExperimentConfig("nongeo", n=2**14, replicas=2000, k=20_000, seed=SEED,
                               grid=(1.0,)))
    means = rep.select("level2_mean[t=1]")
    geo = rep.get("geometric_endpoints[t=1]")
    ok = {
        "mean level-2 within 3 se of M t (all entries)":
            all(abs(s.value - s.target) <= 3 * s.se for s in means),
        f"{int(geo.value)} of {geo.sample_size} endpoints geometric at 1e-9": geo.value == 0,
    }
    elapsed = time.perf_counter() - t0
    assert record(7, "non-geometric drift", ok, elapsed, 300)


def test_criterion_8_diamond():
    ok = {}
    for p in (0.1, 0.5, 0.9):
        try:
            validate(diamond_model(p))
            ok[f"p={p} validates"] = True
        except ValueError:
            ok[f"p={p} validates"] = False
        err = np.max(np.abs(stationary(diamond_model(p)) - power_iteration_stationary(diamond_q(p))))
        ok[f"p={p} stationary vs power iteration {err:.1e} <= 1e-10"] = err <= 1e-10
    assert record(8, "diamond model", ok)


def test_simulation_is_pinned():
    # guards the pinned seed: a change here would silently change criteria 3, 6, 7
    w = simulate(rotating_bernoulli(), 8, SEED)
    assert w.states.tolist() == [0, 1, 2, 3, 0, 1, 2, 3, 0]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-rA"]))
