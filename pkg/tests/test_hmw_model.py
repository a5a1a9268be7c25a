import json

import numpy as np
import pytest
from oracles import power_iteration_stationary

from roughwalk.hmw import (
    HMWModel,
    MarkovSpec,
    ModelError,
    load_model,
    model_from_dict,
    stationary,
    validate,
)
from roughwalk.hmw.fixtures import (
    BUILTIN,
    cycle_chain,
    diamond_model,
    diamond_q,
    rotating_bernoulli,
    two_state_chain,
)
from roughwalk.lab.config import builtin_models, resolve_model


def _model_dict(**overrides):
    obj = {
        "states": ["a", "b"],
        "Q": [[0.5, 0.5], [1.0, 0.0]],
        "start": "a",
        "dimension": 2,
        "emissions": [
            [{"p": 0.5, "F": [1, 0]}, {"p": 0.5, "F": [0, 1], "area": 0.25}],
            [{"p": 1.0, "F": [-1, -1]}],
        ],
    }
    obj.update(overrides)
    return obj


class TestValidate:
    def test_cycle(self):
        rep = validate(rotating_bernoulli())
        assert rep.n_states == 4 and rep.bound == 1.0 and not rep.decorated

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_diamond(self, p):
        Q = diamond_q(p)
        assert np.allclose(Q.sum(axis=1), 1.0, rtol=0, atol=1e-15)
        validate(diamond_model(p))
        validate(diamond_model(p, round_point=True))

    def test_zero_row(self):
        Q = np.eye(3)[[1, 2, 0]].astype(float)
        Q[2] = 0
        with pytest.raises(ModelError) as exc:
            validate(MarkovSpec((0, 1, 2), Q))
        assert "Q[2]" in [loc for loc, _ in exc.value.problems]
        assert "stochasticity" in str(exc.value)

    def test_negative_entry_located(self):
        Q = np.array([[1.2, -0.2], [0.5, 0.5]])
        with pytest.raises(ModelError, match=r"Q\[0\]\[1\]"):
            validate(MarkovSpec((0, 1), Q))

    def test_reducible(self):
        with pytest.raises(ModelError, match="irreducible"):
            validate(MarkovSpec((0, 1), np.eye(2)))

    def test_all_problems_collected(self):
        bad = model_from_dict(_model_dict(Q=[[0.5, 0.6], [1.0, 0.0]]))
        bad = HMWModel(bad.chain, bad.emissions, 2)
        with pytest.raises(ModelError) as exc:
            validate(bad)
        assert [loc for loc, _ in exc.value.problems] == ["Q[0]"]

    def test_bad_emission_probabilities(self):
        obj = _model_dict()
        obj["emissions"][1][0]["p"] = 0.9
        with pytest.raises(ModelError, match=r"emissions\[1\]"):
            validate(model_from_dict(obj))


class TestStationary:
    def test_cycle_uniform(self):
        assert np.allclose(stationary(cycle_chain(4)), 0.25, rtol=0, atol=1e-14)

    def test_two_state_closed_form(self):
        a, b = 0.3, 0.1
        assert np.allclose(stationary(two_state_chain(a, b)), [b / (a + b), a / (a + b)],
                           rtol=0, atol=1e-14)

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_diamond_vs_power_iteration(self, p):
        pi = stationary(diamond_model(p))
        assert np.max(np.abs(pi - power_iteration_stationary(diamond_q(p)))) < 1e-10

    def test_random_chains(self, rng):
        for n in range(2, 7):
            Q = rng.dirichlet(np.ones(n), size=n)
            pi = stationary(MarkovSpec(tuple(range(n)), Q))
            assert np.allclose(pi @ Q, pi, rtol=0, atol=1e-13) and pi.sum() == pytest.approx(1)

    def test_reducible_raises(self):
        with pytest.raises(np.linalg.LinAlgError):
            stationary(MarkovSpec((0, 1), np.eye(2)))


class TestJSON:
    def test_scalar_area_and_labels(self):
        m = model_from_dict(_model_dict())
        assert m.chain.start == 0 and m.chain.states == ("a", "b")
        assert np.array_equal(m.emissions[0].area[1], [[0, 0.25], [-0.25, 0]])
        assert m.decorated

    def test_emissions_mapping(self):
        obj = _model_dict()
        obj["emissions"] = {"b": obj["emissions"][1], "a": obj["emissions"][0]}
        assert np.array_equal(model_from_dict(obj).emissions[1].F, [[-1, -1]])

    def test_missing_fields(self):
        with pytest.raises(ModelError) as exc:
            model_from_dict({"states": [0]})
        assert {loc for loc, _ in exc.value.problems} == {"Q", "start", "dimension", "emissions"}

    def test_errors_name_locations(self):
        obj = _model_dict()
        obj["emissions"][0][1]["F"] = [1, 2, 3]
        obj["emissions"][1][0]["area"] = [[0, 1], [1, 0]]
        with pytest.raises(ModelError) as exc:
            model_from_dict(obj)
        locs = [loc for loc, _ in exc.value.problems]
        assert "emissions[0][1].F" in locs and "emissions[1][0].area" in locs

    def test_unknown_start(self):
        with pytest.raises(ModelError, match="start"):
            model_from_dict(_model_dict(start="z"))

    def test_distributional_start(self):
        m = model_from_dict(_model_dict(start=[0.5, 0.5]))
        assert not m.chain.deterministic_start
        assert m.to_dict()["start"] == [0.5, 0.5]

    def test_syntax_error_location(self, tmp_path):
        f = tmp_path / "m.json"
        f.write_text('{"states": [0,\n ]}')
        with pytest.raises(ModelError, match=r"m.json:2"):
            load_model(f)

    @pytest.mark.parametrize("name", sorted(BUILTIN))
    def test_round_trip(self, name, tmp_path):
        m = BUILTIN[name]()
        m.save(tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        assert back.to_dict() == m.to_dict()
        assert json.loads(m.to_pretty_json()) == json.loads(m.to_json())

    def test_shipped_files_match_fixtures(self):
        assert set(builtin_models()) == set(BUILTIN)
        for name in BUILTIN:
            assert resolve_model(name).to_dict() == BUILTIN[name]().to_dict()

    def test_diamond_note_is_recorded(self):
        assert "local convention" in diamond_model().notes
