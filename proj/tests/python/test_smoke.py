import json
import math

import pytest

import rfdlab


@pytest.fixture(scope="module")
def moons():
    return rfdlab.make_dataset("two_moons", 400, 0.1, 1)


@pytest.fixture(scope="module")
def model(moons):
    return rfdlab.train(moons, [2, 16, 2], epochs=60, seed=0)


def test_dataset_shapes(moons):
    assert len(moons) == 400
    assert len(moons.inputs[0]) == 2
    assert set(moons.labels) == {0, 1}


def test_training_fits(model, moons):
    assert rfdlab.accuracy(model, moons) > 0.95
    assert model.num_layers == 3
    assert len(model.forward([0.0, 0.0])) == 2


def test_model_round_trip(model, tmp_path):
    path = tmp_path / "model.json"
    model.save(path)
    back = rfdlab.load_model(path)
    assert back == model
    assert back.forward([0.3, -0.2]) == model.forward([0.3, -0.2])
    assert rfdlab.model_from_json(model.to_json()) == model


def test_cut_composition(model):
    x = [0.4, 0.1]
    for cut in range(model.num_layers + 1):
        assert model.forward_from(cut, model.forward_to(cut, x)) == pytest.approx(model.forward(x), abs=1e-12)


def test_closed_form():
    assert rfdlab.predicted_flip_prob(0.0, 1.0, 1.0, 1.0) == 0.0
    assert rfdlab.predicted_flip_prob(0.5, 1.0, 1.0, 1.0) == pytest.approx(0.25, abs=1e-15)
    s = rfdlab.cauchy_ratio_scale(0.5, 1.0, 1.0, 1.0)
    assert 0.5 - math.atan(1.0 / s) / math.pi == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(rfdlab.DomainError):
        rfdlab.predicted_flip_prob(1.0, 0.0, 1.0, 1.0)


def test_theorem_grid_csv():
    csv = rfdlab.theorem_grid_csv([1.0], [1.0], trials=20000, seed=3).strip().splitlines()
    assert csv[0].startswith("nu,mu,gh,gx,predicted,p_hat")
    assert len(csv) == 2


def test_oracle_counts_and_verification(model, moons):
    oracle = rfdlab.Oracle(model, rfdlab.DefensePolicy.feature([1], 0.01), seed=5, eot_m=3)
    oracle.query_scores(moons.inputs[0])
    assert oracle.query_count == 3
    oracle.verify_success(moons.inputs[0], moons.labels[0])
    assert oracle.query_count == 3
    decision = rfdlab.Oracle(model, rfdlab.DefensePolicy.none(), access="decision")
    with pytest.raises(rfdlab.AccessError):
        decision.query_scores(moons.inputs[0])


@pytest.mark.parametrize("name", ["nes", "square", "signhunter", "rays", "signflip"])
def test_attacks_respect_budget(model, moons, name):
    access = "decision" if name in ("rays", "signflip") else "score"
    oracle = rfdlab.Oracle(model, rfdlab.DefensePolicy.none(), access=access)
    r = rfdlab.run_attack(name, oracle, moons.inputs[0], moons.labels[0], epsilon=0.3, queries=200,
                          box=moons.box)
    assert r["queries_used"] <= 200
    assert max(abs(a - b) for a, b in zip(r["x_adv"], moons.inputs[0])) <= 0.3 + 1e-12


def test_calibration(model, moons):
    r = rfdlab.calibrate_nu(model, moons.head(200), rfdlab.DefensePolicy.feature([1], 0.0), 0.02)
    assert abs(r["measured_drop"] - 0.02) <= 0.005 + 1e-12


def test_run_command(tmp_path):
    status = rfdlab.run_command("verify-theorem", "theorem.trials = 5000\n", out=tmp_path / "grid.csv")
    assert status in (0, 4)
    assert (tmp_path / "grid.csv").read_text().startswith("nu,mu")
    with pytest.raises(rfdlab.ConfigError):
        rfdlab.run_command("attack", "budget.epsilon = zero\n")
