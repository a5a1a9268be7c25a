import numpy as np
import pytest

from roughwalk.hmw import (
    HMWModel,
    MarkovSpec,
    SingularCovarianceError,
    drift,
    exact_excursion_stats,
    iid_approx_diag,
    isotropize,
    normal_form,
    recenter,
)
from roughwalk.hmw.fixtures import (
    _law,
    _point_mass,
    cycle_chain,
    diamond_model,
    random_model,
    rotating_bernoulli,
    zero_emission,
)

E1, E2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])


def _one_state(ps, Fs):
    return HMWModel(MarkovSpec((0,), np.ones((1, 1))), (_law(ps, Fs),), len(Fs[0]))


class TestRecenter:
    def test_centred_fixture_unchanged(self):
        m = rotating_bernoulli()
        assert recenter(m) is m

    def test_constant_emitter_only(self):
        # state 1 emits e2 every time it is visited, the other states emit 0
        zero = _point_mass([0.0, 0.0])
        m = HMWModel(cycle_chain(4), (zero, _point_mass(E2), zero, zero), 2)
        assert np.allclose(drift(m), 0.25 * E2, rtol=0, atol=1e-15)
        # one excursion visits each state once, so X_T1 is the sum of the emissions;
        # after the shift it vanishes identically and C = 0
        c = recenter(m)
        assert np.allclose(c.mean_emissions().sum(axis=0), 0, atol=1e-15)
        assert np.array_equal(c.emissions[0].F, [-0.25 * E2])

    def test_constant_in_the_rotating_walk(self):
        # state 1 emits e2 surely, states 0, 2, 3 keep their Bernoulli(1/2) steps
        rb = rotating_bernoulli()
        ems = list(rb.emissions)
        ems[1] = _point_mass(E2)
        m = HMWModel(rb.chain, tuple(ems), 2)
        assert np.allclose(drift(m), 0.125 * E2, rtol=0, atol=1e-15)
        c = recenter(m)
        assert np.allclose(exact_excursion_stats(c).mean_increment, 0, atol=1e-15)

    def test_idempotent(self):
        m = random_model(3, 2, seed=3, decorated=True)
        once = recenter(m)
        assert recenter(once) is once
        assert once.decorated
        for a, b in zip(once.emissions, m.emissions):
            assert np.array_equal(a.area, b.area)

    def test_drift_from_supplied_stats(self):
        m = random_model(3, 2, seed=0)
        s = exact_excursion_stats(m)
        assert np.array_equal(drift(m, s), s.mean_increment / s.beta)


class TestIsotropize:
    def test_isotropic_scales(self):
        m = rotating_bernoulli()
        out, W = isotropize(m)
        assert np.allclose(W, np.sqrt(2) * np.eye(2), rtol=0, atol=1e-14)
        assert np.allclose(exact_excursion_stats(out).covariance, np.eye(2), atol=1e-12)

    def test_diagonal(self):
        r = np.sqrt(2)
        m = _one_state(np.full(4, 0.25), [r * E1, -r * E1, 2 * r * E2, -2 * r * E2])
        assert np.allclose(exact_excursion_stats(m).covariance, np.diag([1.0, 4.0]), atol=1e-14)
        out, W = isotropize(m)
        assert np.allclose(W, np.diag([1.0, 0.5]), rtol=0, atol=1e-14)
        assert np.max(np.abs(exact_excursion_stats(out).covariance - np.eye(2))) < 1e-8

    @pytest.mark.parametrize("seed", range(4))
    def test_round_trip_random(self, seed):
        m = recenter(random_model(3, 2, seed=seed, decorated=True))
        out, W = isotropize(m)
        s = exact_excursion_stats(out)
        assert np.max(np.abs(s.covariance - np.eye(2))) < 1e-8
        assert np.allclose(W, W.T)
        a0 = m.emissions[0].area[0]
        assert np.allclose(out.emissions[0].area[0], W @ a0 @ W.T)

    def test_singular(self):
        m = _one_state([0.5, 0.5], [E1, -E1])
        with pytest.raises(SingularCovarianceError) as exc:
            isotropize(m)
        null = exc.value.null_directions
        assert null.shape == (1, 2) and abs(abs(null[0] @ E2) - 1) < 1e-12

    def test_normal_form(self):
        m = random_model(3, 2, seed=1)
        out, W, notices = normal_form(m)
        s = exact_excursion_stats(out)
        assert np.allclose(s.mean_increment, 0, atol=1e-12)
        assert np.max(np.abs(s.covariance - np.eye(2))) < 1e-8
        assert len(notices) == 2
        same, W2, none = normal_form(diamond_model(0.5), isotropic=False)
        assert none == [] and np.array_equal(W2, np.eye(2))


class TestIidApprox:
    def test_period_four_bound(self):
        m = rotating_bernoulli()
        rep = iid_approx_diag(m, 10_000, 3)
        assert rep.K == 1.0 and rep.max_excursion_length == 4
        assert rep.within_bound and rep.sup_gap <= 4 * rep.K

    def test_scaled_gap_shrinks(self):
        m = diamond_model(0.5)
        sup = []
        for n in (10**3, 10**4, 10**5):
            rep = iid_approx_diag(m, n, 5)
            assert rep.within_bound
            sup.append(rep.sup_gap / np.sqrt(n))
        assert sup[0] > sup[1] > sup[2]

    def test_zero_emissions(self):
        rep = iid_approx_diag(zero_emission(), 1000, 0)
        assert rep.sup_gap == 0.0 and not rep.scaled().any()

    def test_checkpoints(self):
        rep = iid_approx_diag(random_model(3, 2, seed=2), 500, 1, checkpoints=[1, 10, 500])
        assert rep.checkpoints.tolist() == [1, 10, 500] and rep.gaps.shape == (3,)
