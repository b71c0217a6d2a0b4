"""Feedforward regression network trained by Levenberg-Marquardt with
Bayesian regularization (evidence framework).

The regularized objective is F = beta_noise * E_D + alpha_prior * E_W with
E_D the sum of squared residuals and E_W the sum of squared weights.  LM
steps solve (H + damping*I) dw = -grad on the Gauss-Newton Hessian
H = 2*beta*J'J + 2*alpha*I.  After each accepted step the evidence
hyperparameters are re-estimated:

    gamma = N_w - 2*alpha*trace(H^-1)
    alpha = gamma / (2*E_W)
    beta  = (n_data - gamma) / (2*E_D)

Hidden layers are tanh, output is linear.  Training is deterministic for
a given seed.  Two gradient-descent trainers (plain, and momentum with an
adaptive learning rate) share the same forward/Jacobian code and exist
only as baselines.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError, NumericError

ACTIVATION_TAG = "tanh-hidden/linear-output"
MODEL_FORMAT = "nlodesign-bnn-1"

HYPER_MIN = 1e-12
HYPER_MAX = 1e12
DAMPING_MIN = 1e-20


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for LM training; none of these come from published values."""

    max_iterations: int = 200
    lm_damping_init: float = 1e-3
    lm_damping_factor: float = 10.0
    lm_damping_ceiling: float = 1e10
    objective_tolerance: float = 1e-10
    seed: int = 0
    hidden_sizes: tuple[int, ...] = ()
    bayesian: bool = True
    alpha_init: float = 1e-2
    beta_init: float = 1.0

    def __post_init__(self):
        if self.max_iterations <= 0 or self.lm_damping_init <= 0:
            raise DataError("max_iterations and lm_damping_init must be positive")
        if self.lm_damping_factor <= 1:
            raise DataError("lm_damping_factor must be > 1")
        if self.objective_tolerance <= 0:
            raise DataError("objective_tolerance must be positive")


@dataclass(frozen=True)
class TrainLogEntry:
    iteration: int
    objective_before: float  # F before the LM step, at this iteration's hyperparameters
    objective_after: float   # F after the accepted step, same hyperparameters
    alpha_prior: float
    beta_noise: float
    gamma_eff: float


@dataclass
class BnnModel:
    layer_sizes: tuple[int, ...]
    weights: np.ndarray
    alpha_prior: float = 0.0
    beta_noise: float = 1.0
    gamma_eff: float = float("nan")
    activation: str = ACTIVATION_TAG
    training_log: list[TrainLogEntry] = field(default_factory=list)
    trained: bool = False
    input_offset: np.ndarray | None = None
    input_scale: np.ndarray | None = None
    output_offset: np.ndarray | None = None

    @property
    def n_weights(self) -> int:
        return n_weights(self.layer_sizes)

    @property
    def input_width(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_width(self) -> int:
        return self.layer_sizes[-1]


def n_weights(layer_sizes) -> int:
    return sum(layer_sizes[i + 1] * (layer_sizes[i] + 1)
               for i in range(len(layer_sizes) - 1))


def zero_model(layer_sizes) -> BnnModel:
    return BnnModel(tuple(layer_sizes), np.zeros(n_weights(layer_sizes)))


def _unpack(weights: np.ndarray, layer_sizes):
    """Split the flat weight vector into per-layer (W, b) pairs."""
    layers = []
    pos = 0
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        w = weights[pos:pos + n_out * n_in].reshape(n_out, n_in)
        pos += n_out * n_in
        b = weights[pos:pos + n_out]
        pos += n_out
        layers.append((w, b))
    if pos != weights.size:
        raise DataError(f"weight vector has {weights.size} entries, "
                        f"layer sizes need {pos}")
    return layers


def _scale_inputs(model: BnnModel, x: np.ndarray) -> np.ndarray:
    if model.input_offset is None:
        return x
    return (x - model.input_offset) / model.input_scale


def _forward_acts(weights: np.ndarray, layer_sizes, x: np.ndarray):
    """Batch forward pass returning all layer activations (input included)."""
    acts = [x]
    layers = _unpack(weights, layer_sizes)
    a = x
    for i, (w, b) in enumerate(layers):
        z = a @ w.T + b
        a = z if i == len(layers) - 1 else np.tanh(z)
        acts.append(a)
    return acts


def predict(model: BnnModel, x: np.ndarray) -> np.ndarray:
    """Batch prediction: x shape (N, n_in) -> (N, n_out)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.input_width:
        raise DataError(f"input width {x.shape[1]} != model input {model.input_width}")
    x = _scale_inputs(model, x)
    out = _forward_acts(model.weights, model.layer_sizes, x)[-1]
    if model.output_offset is not None:
        out = out + model.output_offset
    return out


def forward(model: BnnModel, x) -> np.ndarray:
    """Single-sample forward pass: vector in, vector out."""
    return predict(model, np.asarray(x, dtype=float).reshape(1, -1))[0]


def jacobian(model: BnnModel, inputs: np.ndarray) -> np.ndarray:
    """d(output)/d(weights) by reverse accumulation.

    Row layout is sample-major, then output component:
    row (n * n_out + k) holds d(output_k(sample n))/dw.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    if x.shape[1] != model.input_width:
        raise DataError(f"input width {x.shape[1]} != model input {model.input_width}")
    if x.shape[0] == 0:
        raise DataError("jacobian needs at least one sample")
    x = _scale_inputs(model, x)
    return _jacobian_raw(model.weights, model.layer_sizes, x)


def _jacobian_raw(weights: np.ndarray, layer_sizes, x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    n_out = layer_sizes[-1]
    layers = _unpack(weights, layer_sizes)
    acts = _forward_acts(weights, layer_sizes, x)
    jac = np.empty((n * n_out, weights.size))
    for k in range(n_out):
        delta = np.zeros((n, n_out))
        delta[:, k] = 1.0
        pos = weights.size
        for li in range(len(layers) - 1, -1, -1):
            w, _b = layers[li]
            a_prev = acts[li]
            n_o, n_i = w.shape
            pos_b = pos - n_o
            pos_w = pos_b - n_o * n_i
            # bias gradients, then weight gradients (outer products)
            jac[k::n_out, pos_b:pos] = delta
            jac[k::n_out, pos_w:pos_b] = np.einsum("no,ni->noi", delta, a_prev)\
                .reshape(n, n_o * n_i)
            pos = pos_w
            if li > 0:
                delta = (delta @ w) * (1.0 - acts[li] ** 2)
    return jac


def _init_weights(layer_sizes, rng: np.random.Generator,
                  x: np.ndarray | None = None,
                  y: np.ndarray | None = None) -> np.ndarray:
    """Symmetric uniform init scaled by fan-in.

    Inputs are consumed raw (no normalization), so the first layer is
    additionally scaled by each column's RMS and the output bias starts at
    the target mean; otherwise large-magnitude features saturate the tanh
    units at initialization and LM stalls on a flat Jacobian.
    """
    parts = []
    n_layers = len(layer_sizes) - 1
    for li, (n_in, n_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
        bound = 1.0 / np.sqrt(n_in)
        w = rng.uniform(-bound, bound, (n_out, n_in))
        b = rng.uniform(-bound, bound, n_out)
        if li == 0 and x is not None:
            col_rms = np.sqrt(np.mean(x ** 2, axis=0))
            w /= np.maximum(col_rms, 1.0)
        if li == n_layers - 1 and y is not None:
            b = b * 0.0 + y.mean(axis=0)
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def _check_training_inputs(inputs, targets):
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float)
    if y.ndim == 1:
        y = y.reshape(-1, 1)
    if x.shape[0] != y.shape[0]:
        raise DataError("inputs and targets disagree on sample count")
    if x.shape[0] < 2:
        raise DataError("training needs at least 2 samples")
    return x, y


def _hidden_default(n_in: int) -> tuple[int, ...]:
    return (max(8, n_in // 2),)


def train(inputs, targets, config: TrainConfig = TrainConfig()) -> BnnModel:
    """Levenberg-Marquardt training, Bayesian-regularized unless disabled.

    config.bayesian False pins alpha_prior to 0 (plain regularization-free LM),
    used for the overfitting comparison.
    """
    x, y = _check_training_inputs(inputs, targets)
    # Carry the target mean as a fixed output offset so the weight prior
    # does not have to pay for it through a large (penalized) output bias.
    y_offset = y.mean(axis=0)
    y = y - y_offset
    hidden = config.hidden_sizes or _hidden_default(x.shape[1])
    layer_sizes = (x.shape[1], *hidden, y.shape[1])
    rng = np.random.default_rng(config.seed)
    w = _init_weights(layer_sizes, rng, x, y)
    nw = w.size
    n_data = y.size
    alpha = config.alpha_init if config.bayesian else 0.0
    beta = config.beta_init
    damping = config.lm_damping_init
    log: list[TrainLogEntry] = []

    def objective(res, wt, a, b):
        return b * float(res @ res) + a * float(wt @ wt)

    r = (_forward_acts(w, layer_sizes, x)[-1] - y).ravel()
    gamma = float(nw)
    converged = False
    for it in range(1, config.max_iterations + 1):
        jac_m = _jacobian_raw(w, layer_sizes, x)
        # Economy SVD of J: the Gauss-Newton Hessian 2*beta*J'J + c*I then
        # diagonalizes in the right singular basis, making both the damped
        # solves and trace(H^-1) cheap (J'J has rank <= n_data << N_w).
        u, s, vt = np.linalg.svd(jac_m, full_matrices=False)
        s2 = s ** 2
        ed = float(r @ r)
        ew = float(w @ w)
        if config.bayesian:
            # evidence-framework re-estimation at the current point
            gamma = float(np.sum(beta * s2 / (beta * s2 + alpha)))
            alpha = min(max(gamma / (2.0 * ew) if ew > 0 else HYPER_MIN,
                            HYPER_MIN), HYPER_MAX)
            beta = min(max((n_data - gamma) / (2.0 * ed) if ed > 0 else HYPER_MAX,
                           HYPER_MIN), HYPER_MAX)
        grad = 2.0 * (beta * (jac_m.T @ r) + alpha * w)
        vtg = vt @ grad
        f_before = objective(r, w, alpha, beta)
        accepted = False
        while True:
            # solve (2*beta*J'J + (2*alpha + damping)*I) dw = -grad
            c = 2.0 * alpha + damping
            dw = -(vt.T @ (vtg / (2.0 * beta * s2 + c)) + (grad - vt.T @ vtg) / c)
            if np.all(np.isfinite(dw)):
                w_new = w + dw
                r_new = (_forward_acts(w_new, layer_sizes, x)[-1] - y).ravel()
                f_new = objective(r_new, w_new, alpha, beta)
                if np.isfinite(f_new) and f_new < f_before:
                    accepted = True
                    damping = max(damping / config.lm_damping_factor, DAMPING_MIN)
                    break
                if (np.isfinite(f_new)
                        and abs(f_new - f_before)
                        <= config.objective_tolerance * max(1.0, abs(f_before))):
                    converged = True  # flat to within tolerance: we are done
                    break
            damping *= config.lm_damping_factor
            if damping > config.lm_damping_ceiling:
                model = _finish(layer_sizes, w, alpha, beta, gamma, log, y_offset)
                if not np.isfinite(f_before):
                    raise NumericError(
                        "non-finite objective during LM training", last_stable=model)
                converged = True  # damping ceiling with a finite objective: stop
                break
        if not accepted:
            break
        w, r = w_new, r_new
        f_after = f_new
        log.append(TrainLogEntry(it, f_before, f_after, alpha, beta, gamma))
        if converged or abs(f_before - f_after) <= (
                config.objective_tolerance * max(1.0, abs(f_before))):
            break
    return _finish(layer_sizes, w, alpha, beta, gamma, log, y_offset)


def _finish(layer_sizes, w, alpha, beta, gamma, log, y_offset=None) -> BnnModel:
    return BnnModel(tuple(layer_sizes), w.copy(), alpha, beta, gamma,
                    training_log=list(log), trained=True,
                    output_offset=None if y_offset is None else np.asarray(y_offset, dtype=float))


def effective_params(model: BnnModel) -> float:
    """The effective number of parameters constrained by the data."""
    if not model.trained:
        raise NumericError("effective_params requires a trained model")
    return model.gamma_eff


# ---------------------------------------------------------------------------
# Gradient-descent baselines (for the model-ranking comparison only)
# ---------------------------------------------------------------------------


def train_gd(inputs, targets, config: TrainConfig = TrainConfig(),
             momentum: bool = False, learning_rate: float = 0.01,
             standardize: bool = False) -> BnnModel:
    """Plain gradient descent, or momentum + adaptive learning rate.

    Shares the forward/Jacobian code with the LM trainer.  The adaptive
    variant raises the rate 5% on improvement and backtracks (rate * 0.7,
    momentum reset) when the epoch loss grows by more than 4%.
    """
    x, y = _check_training_inputs(inputs, targets)
    offset = scale = None
    if standardize:
        offset = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale == 0] = 1.0
        x = (x - offset) / scale
    hidden = config.hidden_sizes or _hidden_default(x.shape[1])
    layer_sizes = (x.shape[1], *hidden, y.shape[1])
    rng = np.random.default_rng(config.seed)
    w = _init_weights(layer_sizes, rng, x, y)
    n = y.size
    lr = learning_rate
    velocity = np.zeros_like(w)
    mse_prev = None
    for _epoch in range(config.max_iterations):
        r = (_forward_acts(w, layer_sizes, x)[-1] - y).ravel()
        mse = float(r @ r) / n
        jac_m = _jacobian_raw(w, layer_sizes, x)
        grad = (2.0 / n) * (jac_m.T @ r)
        if momentum:
            if mse_prev is not None and mse > 1.04 * mse_prev:
                lr *= 0.7
                velocity[:] = 0.0
            else:
                lr = min(lr * 1.05, 1.0)
                mse_prev = mse
            velocity = 0.9 * velocity - lr * grad
            w_new = w + velocity
        else:
            w_new = w - lr * grad
        if not np.all(np.isfinite(w_new)):
            break  # diverged; keep the last stable weights
        w = w_new
    model = BnnModel(tuple(layer_sizes), w, 0.0, 1.0, float(w.size), trained=True)
    model.input_offset = offset
    model.input_scale = scale
    return model


# ---------------------------------------------------------------------------
# Serialization (bit-exact round trip)
# ---------------------------------------------------------------------------


def _f64_b64(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode()


def _b64_f64(s: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(s), dtype="<f8").copy()


def model_to_dict(model: BnnModel) -> dict:
    d = {
        "format": MODEL_FORMAT,
        "layer_sizes": list(model.layer_sizes),
        "activation": model.activation,
        "weights": _f64_b64(model.weights),
        "alpha_prior": model.alpha_prior.hex(),
        "beta_noise": model.beta_noise.hex(),
        "gamma_eff": float(model.gamma_eff).hex(),
        "trained": model.trained,
        "training_log": _f64_b64(np.array(
            [[e.iteration, e.objective_before, e.objective_after,
              e.alpha_prior, e.beta_noise, e.gamma_eff]
             for e in model.training_log]).reshape(-1, 6)),
    }
    if model.input_offset is not None:
        d["input_offset"] = _f64_b64(model.input_offset)
        d["input_scale"] = _f64_b64(model.input_scale)
    if model.output_offset is not None:
        d["output_offset"] = _f64_b64(model.output_offset)
    return d


def model_from_dict(d: dict) -> BnnModel:
    if d.get("format") != MODEL_FORMAT:
        raise DataError(f"unsupported model format {d.get('format')!r}")
    log_arr = _b64_f64(d["training_log"]).reshape(-1, 6)
    model = BnnModel(
        layer_sizes=tuple(d["layer_sizes"]),
        weights=_b64_f64(d["weights"]),
        alpha_prior=float.fromhex(d["alpha_prior"]),
        beta_noise=float.fromhex(d["beta_noise"]),
        gamma_eff=float.fromhex(d["gamma_eff"]),
        activation=d["activation"],
        training_log=[TrainLogEntry(int(row[0]), *row[1:]) for row in log_arr],
        trained=bool(d["trained"]),
    )
    if "input_offset" in d:
        model.input_offset = _b64_f64(d["input_offset"])
        model.input_scale = _b64_f64(d["input_scale"])
    if "output_offset" in d:
        model.output_offset = _b64_f64(d["output_offset"])
    if model.weights.size != model.n_weights:
        raise DataError("model file weight count does not match layer sizes")
    return model


def save_model(model: BnnModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True, indent=1))


def load_model(path: str | Path) -> BnnModel:
    try:
        return model_from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load model from {path}: {exc}") from exc
