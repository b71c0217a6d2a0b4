import numpy as np
import pytest

from nlodesign import bnn
from nlodesign.errors import DataError


def random_model(seed, layer_sizes=(3, 5, 2), scale=0.7):
    rng = np.random.default_rng(seed)
    return bnn.BnnModel(layer_sizes, rng.normal(0, scale,
                                                bnn.n_weights(layer_sizes)))


def fd_jacobian(model, x, eps=1e-6):
    jac = np.zeros((x.shape[0] * model.output_width, model.weights.size))
    for i in range(model.weights.size):
        wp, wm = model.weights.copy(), model.weights.copy()
        wp[i] += eps
        wm[i] -= eps
        fp = bnn._forward_acts(wp, model.layer_sizes, x)[-1]
        fm = bnn._forward_acts(wm, model.layer_sizes, x)[-1]
        jac[:, i] = ((fp - fm) / (2 * eps)).ravel()
    return jac


def test_weight_count_formula():
    assert bnn.n_weights((3, 5, 2)) == 5 * 4 + 2 * 6
    assert bnn.n_weights((4, 1)) == 5


def test_forward_matches_manual_two_layer():
    model = random_model(1, (2, 3, 1))
    layers = bnn._unpack(model.weights, model.layer_sizes)
    x = np.array([0.3, -1.2])
    h = np.tanh(layers[0][0] @ x + layers[0][1])
    want = layers[1][0] @ h + layers[1][1]
    assert np.allclose(bnn.forward(model, x), want, atol=1e-14)


def test_jacobian_matches_finite_differences():
    worst = 0.0
    for k in range(20):
        rng = np.random.default_rng(k)
        ls = (int(rng.integers(2, 5)), int(rng.integers(3, 7)),
              int(rng.integers(1, 3)))
        model = random_model(k + 100, ls)
        x = rng.normal(0, 1.2, (3, ls[0]))
        rel = np.max(np.abs(bnn.jacobian(model, x) - fd_jacobian(model, x))
                     / np.maximum(np.abs(fd_jacobian(model, x)), 1.0))
        worst = max(worst, rel)
    assert worst < 1e-5


def test_jacobian_row_layout_is_sample_major():
    model = random_model(3, (2, 3, 2))
    x = np.random.default_rng(0).normal(size=(4, 2))
    full = bnn.jacobian(model, x)
    single = bnn.jacobian(model, x[1:2])
    assert np.allclose(full[2:4], single, atol=1e-14)


def test_training_is_deterministic():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(30, 3))
    y = x @ np.array([1.0, -2.0, 0.5]) + 0.3
    cfg = bnn.TrainConfig(max_iterations=40, hidden_sizes=(5,), seed=9)
    a = bnn.train(x, y, cfg)
    b = bnn.train(x, y, cfg)
    assert np.array_equal(a.weights, b.weights)
    assert a.training_log == b.training_log


def test_objective_never_increases_within_iterations():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(40, 2))
    y = np.sin(x[:, 0]) + 0.1 * rng.normal(size=40)
    model = bnn.train(x, y, bnn.TrainConfig(max_iterations=50, hidden_sizes=(6,)))
    for entry in model.training_log:
        assert entry.objective_after < entry.objective_before


def test_sine_fit_converges():
    x = np.linspace(0, 2 * np.pi, 60).reshape(-1, 1)
    y = np.sin(x)
    model = bnn.train(x, y, bnn.TrainConfig(max_iterations=200,
                                            hidden_sizes=(10,), seed=1))
    mae = float(np.mean(np.abs(bnn.predict(model, x) - y)))
    assert mae < 0.05


def test_teacher_network_self_fit():
    rng = np.random.default_rng(42)
    teacher = random_model(42, (4, 6, 1), scale=0.8)
    x = rng.uniform(-2, 2, (80, 4))
    y = bnn.predict(teacher, x)
    model = bnn.train(x, y, bnn.TrainConfig(max_iterations=300,
                                            hidden_sizes=(10,), seed=0,
                                            bayesian=False))
    assert float(np.mean((bnn.predict(model, x) - y) ** 2)) < 1e-6


def test_hyperparameters_stay_in_bounds():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(25, 3))
    y = rng.normal(size=25)
    model = bnn.train(x, y, bnn.TrainConfig(max_iterations=60, hidden_sizes=(4,)))
    for e in model.training_log:
        assert bnn.HYPER_MIN <= e.alpha_prior <= bnn.HYPER_MAX
        assert bnn.HYPER_MIN <= e.beta_noise <= bnn.HYPER_MAX
        assert 0.0 <= e.gamma_eff <= model.n_weights + 1e-9


def test_effective_params_bounded_by_weight_count():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(50, 2))
    y = np.tanh(x[:, 0])
    model = bnn.train(x, y, bnn.TrainConfig(max_iterations=40, hidden_sizes=(4,)))
    assert 0.0 <= bnn.effective_params(model) <= model.n_weights


def test_effective_params_requires_training():
    with pytest.raises(Exception):
        bnn.effective_params(random_model(0))


def test_plain_mode_keeps_alpha_zero():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(30, 2))
    y = x[:, 0] * 2.0
    model = bnn.train(x, y, bnn.TrainConfig(max_iterations=30, hidden_sizes=(4,),
                                            bayesian=False))
    assert model.alpha_prior == 0.0


def test_output_offset_carries_target_mean():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(30, 2))
    y = x[:, 0] + 100.0  # large constant offset
    model = bnn.train(x, y, bnn.TrainConfig(max_iterations=50, hidden_sizes=(4,)))
    assert model.output_offset is not None
    assert model.output_offset[0] == pytest.approx(float(np.mean(y)), abs=1e-12)
    mae = float(np.mean(np.abs(bnn.predict(model, x).ravel() - y)))
    assert mae < 0.5


def test_model_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(6)
    x = rng.normal(size=(25, 3))
    y = rng.normal(size=25)
    model = bnn.train(x, y, bnn.TrainConfig(max_iterations=20, hidden_sizes=(4,)))
    path = tmp_path / "m.json"
    bnn.save_model(model, path)
    again = bnn.load_model(path)
    assert np.array_equal(model.weights, again.weights)
    assert model.alpha_prior == again.alpha_prior
    assert model.beta_noise == again.beta_noise
    assert model.gamma_eff == again.gamma_eff
    assert np.array_equal(model.output_offset, again.output_offset)
    assert model.training_log == again.training_log
    assert np.array_equal(bnn.predict(model, x), bnn.predict(again, x))


def test_load_rejects_unknown_format(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"format": "other"}')
    with pytest.raises(DataError):
        bnn.load_model(p)


def test_training_input_validation():
    with pytest.raises(DataError):
        bnn.train(np.zeros((1, 2)), np.zeros(1))
    with pytest.raises(DataError):
        bnn.train(np.zeros((3, 2)), np.zeros(4))


def test_gd_trainers_learn_a_simple_function():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(60, 2))
    y = 0.5 * x[:, 0] - 0.2 * x[:, 1]
    for momentum in (False, True):
        model = bnn.train_gd(x, y, bnn.TrainConfig(max_iterations=400,
                                                   hidden_sizes=(6,), seed=0),
                             momentum=momentum, standardize=True)
        mae = float(np.mean(np.abs(bnn.predict(model, x).ravel() - y)))
        assert mae < 0.1


def test_gd_standardization_is_internal_to_the_model():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(40, 2)) * np.array([100.0, 0.01])
    y = x[:, 0] / 100.0
    model = bnn.train_gd(x, y, bnn.TrainConfig(max_iterations=300,
                                               hidden_sizes=(5,), seed=0),
                         standardize=True)
    # caller passes raw inputs; scaling happens inside predict
    assert model.input_offset is not None
    mae = float(np.mean(np.abs(bnn.predict(model, x).ravel() - y)))
    assert mae < 0.2
