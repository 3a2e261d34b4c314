"""End-to-end smoke test of the python bindings: simulate, fold, train a tiny
model, evaluate it, and round-trip it through JSON."""

import math

import numpy as np
import pytest

import tnn_thermal as tnn


@pytest.fixture(scope="module")
def dataset():
    spec = tnn.default_plant()
    return spec, tnn.simulate(spec, duration=600.0, sample_time=0.5, seed=7, profiles=4)


def test_simulate_shapes(dataset):
    spec, data = dataset
    assert len(data.profiles) == 4
    schema = tnn.plant_schema(spec, 0.5)
    width = len(schema.exogenous) + len(schema.ancillary) + len(schema.targets)
    for profile in data.profiles:
        assert profile.values.shape == (301, width)
        assert np.all(np.isfinite(profile.values))


def test_simulate_deterministic(dataset):
    spec, data = dataset
    again = tnn.simulate(spec, duration=600.0, sample_time=0.5, seed=7, profiles=4)
    for a, b in zip(data.profiles, again.profiles):
        assert a.id == b.id
        assert np.array_equal(a.values, b.values)


def test_truth_sidecar_disconnected_pair(dataset):
    spec, data = dataset
    # the default plant leaves the pair (0, 2) unconnected: slot 1 stays zero
    for gamma in data.gamma_true:
        assert np.all(gamma[:, 1] == 0.0)


def test_rollout_and_gradients(dataset):
    spec, data = dataset
    schema = tnn.plant_schema(spec, 0.5)
    topology = tnn.make_topology(
        spec.m, spec.n, spec.o,
        [tnn.LayerSpec(3, tnn.Activation.tanh)],
        [tnn.LayerSpec(3, tnn.Activation.tanh)],
    )
    model = tnn.TnnModel()
    model.topology = topology
    model.parameters = tnn.init_tnn_parameters(topology, seed=0)
    model.schema = schema

    profile = data.profiles[0]
    init = profile.values[0, -spec.m:]
    estimates = tnn.rollout(model, profile, init, divergence_bound=1e6)
    assert estimates.shape == (301, spec.m)
    assert np.allclose(estimates[0], init)

    loss, grad, final_state = tnn.tbptt_gradients(
        model, profile, 0, 32, init, divergence_bound=1e6
    )
    assert math.isfinite(loss) and loss >= 0.0
    assert grad.shape[0] == tnn.count_parameters(topology)
    assert np.any(grad != 0.0)
    assert final_state.shape == (spec.m,)


def test_fit_and_evaluate(dataset):
    spec, data = dataset
    schema = tnn.plant_schema(spec, 0.5)
    ids = [p.id for p in data.profiles]
    folds = tnn.make_folds(
        data.profiles,
        {ids[0]: "train", ids[1]: "fold1", ids[2]: "fold2", ids[3]: "generalization"},
    )

    topology = tnn.make_topology(
        spec.m, spec.n, spec.o,
        [tnn.LayerSpec(3, tnn.Activation.tanh)],
        [tnn.LayerSpec(3, tnn.Activation.tanh)],
    )
    config = tnn.TrainConfig()
    config.optimizer = "nadam"
    config.learning_rate = 1e-2
    config.tbptt_length = 64
    config.max_epochs = 5
    config.patience = 5
    config.seed = 1

    result = tnn.fit(topology, schema, folds, config)
    assert len(result.report.epochs) >= 1
    assert result.report.best_validation_mse >= 0.0
    best = min(e.validation_mse for e in result.report.epochs)
    assert result.report.best_validation_mse == pytest.approx(best)

    model = tnn.TnnModel()
    model.topology = topology
    model.parameters = result.parameters
    model.schema = schema
    report = tnn.evaluate(model, folds.generalization)
    assert report.aggregate_mse >= 0.0
    assert report.linf >= 0.0
    assert report.parameter_count == tnn.count_parameters(topology)


def test_model_json_round_trip(dataset):
    spec, _ = dataset
    schema = tnn.plant_schema(spec, 0.5)
    topology = tnn.make_topology(
        spec.m, spec.n, spec.o,
        [tnn.LayerSpec(2, tnn.Activation.sigmoid)],
        [tnn.LayerSpec(2, tnn.Activation.sigmoid)],
    )
    model = tnn.TnnModel()
    model.topology = topology
    model.parameters = tnn.init_tnn_parameters(topology, seed=3)
    model.schema = schema

    restored = tnn.model_from_json(tnn.model_to_json(model))
    a = tnn.flatten_parameters(model.topology, model.parameters)
    b = tnn.flatten_parameters(restored.topology, restored.parameters)
    assert np.array_equal(a, b)


def test_error_translation(tmp_path):
    with pytest.raises(tnn.ParseError):
        tnn.load_model(str(tmp_path / "nope.json"))
    with pytest.raises(ValueError):
        tnn.make_topology(0, 0, 0, [], [])
