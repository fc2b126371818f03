"""Additive surrogate network: one small subnetwork per feature.

The model computes per-feature contributions g_k(x_k) and combines them
into an additive log-risk. Three variants exist:

  base      log_risk = sum_k g_k(x_k) + bias
  lasso     log_risk = sum_k beta_k * g_k(x_k) + bias, L1 penalty on beta
  shortcut  log_risk = sum_k [alpha_k * g_k(x_k) + (1 - alpha_k) * omega_k * x_k] + bias,
            L1 penalty on alpha plus an L2 penalty on the subnetwork parameters

Training minimizes the interval-weighted squared distance between the
log-ratio targets and the log-risk (see TargetBatch), which is convex in
the network outputs. Everything is plain numpy and fully deterministic
for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DataError, NumericError, TrainingDivergedError

VARIANTS = ("base", "lasso", "shortcut")


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z):
    return (z > 0.0).astype(float)


def _tanh_grad(z):
    return 1.0 - np.tanh(z) ** 2


ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
}


@dataclass(frozen=True)
class NamConfig:
    """Architecture and optimizer settings shared by all subnetworks."""

    hidden_sizes: tuple[int, ...] = (64, 32)
    activation: str = "relu"
    learning_rate: float = 1e-3
    epochs: int = 2000
    batch: Optional[int] = None  # None = full batch
    seed: int = 0
    variant: str = "base"

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if len(self.hidden_sizes) == 0 or any(h < 1 for h in self.hidden_sizes):
            raise DataError("hidden_sizes must be a nonempty list of positive ints")
        if self.activation not in ACTIVATIONS:
            raise DataError(f"unknown activation {self.activation!r}")
        if not self.learning_rate > 0:
            raise DataError("learning_rate must be positive")
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.batch is not None and self.batch < 1:
            raise DataError("batch must be a positive int or None")
        if self.variant not in VARIANTS:
            raise DataError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class TargetBatch:
    """Training targets for the additive surrogate.

    Attributes
    ----------
    x : (n, m) inputs fed to the subnetworks
    log_ratios : (n, s+1) targets, log H_j(x_i) - log H_0j (epsilon-floored)
    widths : (s+1,) interval widths weighting each column's residual
    weights : (n,) nonnegative per-example kernel weights
    epsilon : the floor applied when the targets were built
    """

    x: np.ndarray
    log_ratios: np.ndarray
    widths: np.ndarray
    weights: np.ndarray
    epsilon: float = 1e-5

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        lr = np.atleast_2d(np.asarray(self.log_ratios, dtype=float))
        w = np.asarray(self.widths, dtype=float)
        v = np.asarray(self.weights, dtype=float)
        if lr.shape[0] != x.shape[0]:
            raise DataError("log_ratios must have one row per input row")
        if lr.shape[1] != len(w):
            raise DataError("log_ratios columns must match the number of interval widths")
        if v.shape != (x.shape[0],):
            raise DataError("need one weight per input row")
        for arr, name in ((x, "x"), (lr, "log_ratios"), (w, "widths"), (v, "weights")):
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"non-finite values in {name}")
        if np.any(v < 0):
            raise DataError("weights must be nonnegative")
        if np.any(w <= 0):
            raise DataError("interval widths must be positive")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "log_ratios", lr)
        object.__setattr__(self, "widths", w)
        object.__setattr__(self, "weights", v)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def rows(self, idx) -> "TargetBatch":
        return TargetBatch(self.x[idx], self.log_ratios[idx], self.widths,
                           self.weights[idx], self.epsilon)


@dataclass(frozen=True)
class ShapeValues:
    """Per-feature contributions g and the combined additive log-risk."""

    g: np.ndarray
    log_risk: float


@dataclass(frozen=True)
class ShapeCurve:
    """A sampled, centered shape function for one feature."""

    feature: int
    xs: np.ndarray
    values: np.ndarray
    centered: bool


@dataclass
class NamModel:
    """Stacked per-feature subnetworks plus the variant mixing heads.

    Layer parameters are stored with a leading subnetwork axis:
    layer_weights[l] has shape (m, fan_in, fan_out) and layer_biases[l]
    (m, fan_out), so one batched matmul runs all m subnetworks at once.
    """

    layer_weights: list[np.ndarray]
    layer_biases: list[np.ndarray]
    bias: np.ndarray  # shape (1,), the global intercept
    beta: Optional[np.ndarray]
    alpha: Optional[np.ndarray]
    omega: Optional[np.ndarray]
    config: NamConfig
    feature_names: Optional[tuple[str, ...]] = None

    @property
    def m(self) -> int:
        return self.layer_weights[0].shape[0]

    @property
    def variant(self) -> str:
        return self.config.variant

    def param_arrays(self) -> list[np.ndarray]:
        """All trainable arrays in a fixed canonical order."""
        params = []
        for w, b in zip(self.layer_weights, self.layer_biases):
            params.append(w)
            params.append(b)
        params.append(self.bias)
        if self.beta is not None:
            params.append(self.beta)
        if self.alpha is not None:
            params.append(self.alpha)
        if self.omega is not None:
            params.append(self.omega)
        return params

    def subnet_param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.layer_weights, self.layer_biases))

    def flatten(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.param_arrays()])

    def set_flat(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=float)
        offset = 0
        for p in self.param_arrays():
            p[...] = vec[offset:offset + p.size].reshape(p.shape)
            offset += p.size
        if offset != vec.size:
            raise DataError("flat parameter vector has the wrong length")

    def copy(self) -> "NamModel":
        return NamModel(
            [w.copy() for w in self.layer_weights],
            [b.copy() for b in self.layer_biases],
            self.bias.copy(),
            None if self.beta is None else self.beta.copy(),
            None if self.alpha is None else self.alpha.copy(),
            None if self.omega is None else self.omega.copy(),
            self.config,
            self.feature_names,
        )


def init_model(m: int, config: NamConfig,
               feature_names: Optional[Sequence[str]] = None) -> NamModel:
    """Fresh model with symmetric scaled-uniform weights, seeded by config.seed.

    Mixing heads start neutral: beta = 1, alpha = 0.5, omega = 0, intercept 0.
    """
    if m < 1:
        raise DataError("need at least one feature")
    rng = np.random.default_rng(config.seed)
    sizes = (1,) + config.hidden_sizes + (1,)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(m, fan_in, fan_out)))
        biases.append(np.zeros((m, fan_out)))
    beta = np.ones(m) if config.variant == "lasso" else None
    alpha = np.full(m, 0.5) if config.variant == "shortcut" else None
    omega = np.zeros(m) if config.variant == "shortcut" else None
    names = None if feature_names is None else tuple(feature_names)
    if names is not None and len(names) != m:
        raise DataError("feature_names length must equal m")
    return NamModel(weights, biases, np.zeros(1), beta, alpha, omega, config, names)


def _subnet_forward(model: NamModel, x: np.ndarray, keep_cache: bool = False):
    """Run all subnetworks on x (n, m); returns g (m, n) and the backprop cache."""
    act, _ = ACTIVATIONS[model.config.activation]
    a = x.T[:, :, None]  # (m, n, 1)
    inputs, preacts = [], []
    last = len(model.layer_weights) - 1
    for l, (w, b) in enumerate(zip(model.layer_weights, model.layer_biases)):
        if keep_cache:
            inputs.append(a)
        z = np.matmul(a, w) + b[:, None, :]
        if l < last:
            if keep_cache:
                preacts.append(z)
            a = act(z)
        else:
            a = z
    g = a[:, :, 0]  # (m, n)
    return g, (inputs, preacts)


def subnet_outputs(model: NamModel, x: np.ndarray) -> np.ndarray:
    """Raw subnetwork outputs g_k(x_k) for a batch; shape (m, n)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.m:
        raise DataError(f"expected {model.m} features, got {x.shape[1]}")
    g, _ = _subnet_forward(model, x)
    return g


def _combine(model: NamModel, g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Additive log-risk for the variant; g is (m, n), x is (n, m)."""
    if model.variant == "base":
        total = g.sum(axis=0)
    elif model.variant == "lasso":
        total = model.beta @ g
    else:
        linear = (1.0 - model.alpha) * model.omega
        total = model.alpha @ g + x @ linear
    return total + model.bias[0]


def forward(model: NamModel, x) -> ShapeValues:
    """Per-feature contributions and the additive log-risk for one input vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.m,):
        raise DataError(f"expected a length-{model.m} feature vector")
    g = subnet_outputs(model, x[None, :])
    log_risk = _combine(model, g, x[None, :])
    return ShapeValues(g[:, 0].copy(), float(log_risk[0]))


def predict_log_risk(model: NamModel, x) -> np.ndarray:
    """Additive log-risk for a batch of rows; usable as a risk score."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    g = subnet_outputs(model, x)
    return _combine(model, g, x)


def loss_and_gradient(model: NamModel, targets: TargetBatch,
                      lam: float = 0.0, mu: float = 0.0):
    """Exact loss and analytic gradients for every trainable array.

    The smooth part is sum_i v_i sum_j (target_ij - log_risk_i)^2 * width_j.
    The lasso variant adds lam * sum|beta|, the shortcut variant
    lam * sum|alpha| + mu * ||subnet parameters||^2. At the |.| kink the
    subgradient 0 is used. Gradients come back in param_arrays() order.
    """
    if lam < 0 or mu < 0:
        raise DataError("regularization strengths must be nonnegative")
    x, phi, tau, v = targets.x, targets.log_ratios, targets.widths, targets.weights
    if x.shape[1] != model.m:
        raise DataError(f"expected {model.m} features, got {x.shape[1]}")
    _, act_grad = ACTIVATIONS[model.config.activation]

    g, (inputs, preacts) = _subnet_forward(model, x, keep_cache=True)
    log_risk = _combine(model, g, x)

    resid = phi - log_risk[:, None]
    loss = float(np.einsum("i,ij,j->", v, resid * resid, tau))

    # d loss / d log_risk
    u = 2.0 * v * (log_risk * tau.sum() - phi @ tau)

    m, n = g.shape
    if model.variant == "base":
        dg = np.broadcast_to(u, (m, n))
        d_bias = np.array([u.sum()])
        head_grads = []
    elif model.variant == "lasso":
        loss += lam * float(np.abs(model.beta).sum())
        dg = model.beta[:, None] * u[None, :]
        d_bias = np.array([u.sum()])
        d_beta = g @ u + lam * np.sign(model.beta)
        head_grads = [d_beta]
    else:
        loss += lam * float(np.abs(model.alpha).sum())
        dg = model.alpha[:, None] * u[None, :]
        d_bias = np.array([u.sum()])
        d_alpha = (g - model.omega[:, None] * x.T) @ u + lam * np.sign(model.alpha)
        d_omega = ((1.0 - model.alpha)[:, None] * x.T) @ u
        head_grads = [d_alpha, d_omega]

    # Backpropagate dg through the stacked subnetworks.
    layer_grads: list[np.ndarray] = []
    delta = dg[:, :, None]
    for l in range(len(model.layer_weights) - 1, -1, -1):
        w = model.layer_weights[l]
        dw = np.matmul(inputs[l].transpose(0, 2, 1), delta)
        db = delta.sum(axis=1)
        layer_grads.append(db)
        layer_grads.append(dw)
        if l > 0:
            delta = np.matmul(delta, w.transpose(0, 2, 1)) * act_grad(preacts[l - 1])
    layer_grads.reverse()  # now [dW0, db0, dW1, db1, ...]

    if model.variant == "shortcut" and mu > 0.0:
        sq = 0.0
        for arr in model.layer_weights + model.layer_biases:
            sq += float(np.sum(arr * arr))
        loss += mu * sq
        for idx in range(0, len(layer_grads), 2):
            layer_grads[idx] = layer_grads[idx] + 2.0 * mu * model.layer_weights[idx // 2]
            layer_grads[idx + 1] = layer_grads[idx + 1] + 2.0 * mu * model.layer_biases[idx // 2]

    if not np.isfinite(loss):
        raise NumericError("loss is not finite")
    return loss, layer_grads + [d_bias] + head_grads


def loss_only(model: NamModel, targets: TargetBatch,
              lam: float = 0.0, mu: float = 0.0) -> float:
    """Loss without gradients (used for traces and finite-difference oracles)."""
    x, phi, tau, v = targets.x, targets.log_ratios, targets.widths, targets.weights
    g, _ = _subnet_forward(model, x)
    log_risk = _combine(model, g, x)
    resid = phi - log_risk[:, None]
    loss = float(np.einsum("i,ij,j->", v, resid * resid, tau))
    if model.variant == "lasso":
        loss += lam * float(np.abs(model.beta).sum())
    elif model.variant == "shortcut":
        loss += lam * float(np.abs(model.alpha).sum())
        if mu > 0.0:
            loss += mu * sum(float(np.sum(a * a))
                             for a in model.layer_weights + model.layer_biases)
    return loss


def train(model: NamModel, targets: TargetBatch, config: Optional[NamConfig] = None,
          lam: float = 0.0, mu: float = 0.0):
    """Adam optimization for config.epochs; returns (trained model, loss trace).

    Deterministic for fixed seeds. The trace holds the full-batch loss
    after each epoch, starting with the initial loss. If the last epoch is
    not the best one seen, the best parameters are restored, so the final
    loss never exceeds the initial loss. Raises TrainingDivergedError when
    the loss stops being finite.
    """
    if targets.n == 0:
        raise DataError("cannot train on an empty target batch")
    cfg = config if config is not None else model.config
    model = model.copy()
    params = model.param_arrays()
    moment1 = [np.zeros_like(p) for p in params]
    moment2 = [np.zeros_like(p) for p in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    lr = cfg.learning_rate
    batch_rng = np.random.default_rng(cfg.seed + 1)

    trace = [loss_only(model, targets, lam, mu)]
    if not np.isfinite(trace[0]):
        raise TrainingDivergedError("initial loss is not finite", trace)
    best_loss = trace[0]
    best_params = [p.copy() for p in params]

    step = 0
    for epoch in range(cfg.epochs):
        if cfg.batch is None or cfg.batch >= targets.n:
            batches = [targets]
        else:
            order = batch_rng.permutation(targets.n)
            batches = [targets.rows(order[i:i + cfg.batch])
                       for i in range(0, targets.n, cfg.batch)]
        try:
            for batch in batches:
                _, grads = loss_and_gradient(model, batch, lam, mu)
                step += 1
                scale1 = 1.0 - b1 ** step
                scale2 = 1.0 - b2 ** step
                for p, grad, m1, m2 in zip(params, grads, moment1, moment2):
                    m1 *= b1
                    m1 += (1.0 - b1) * grad
                    m2 *= b2
                    m2 += (1.0 - b2) * grad * grad
                    p -= lr * (m1 / scale1) / (np.sqrt(m2 / scale2) + eps)
                if model.alpha is not None:
                    np.clip(model.alpha, 0.0, 1.0, out=model.alpha)
            epoch_loss = loss_only(model, targets, lam, mu)
        except NumericError as exc:
            raise TrainingDivergedError(
                f"training diverged at epoch {epoch}: {exc}", trace) from exc
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(
                f"training diverged at epoch {epoch}", trace)
        trace.append(epoch_loss)
        if epoch_loss < best_loss:
            best_loss = epoch_loss
            best_params = [p.copy() for p in params]

    if trace[-1] > best_loss:
        for p, best in zip(params, best_params):
            p[...] = best
        trace.append(best_loss)
    return model, trace


def feature_contribution(model: NamModel, k: int, xs) -> np.ndarray:
    """Uncentered contribution of feature k at the given coordinate values."""
    xs = np.asarray(xs, dtype=float).ravel()
    act, _ = ACTIVATIONS[model.config.activation]
    a = xs[:, None]
    last = len(model.layer_weights) - 1
    for l, (w, b) in enumerate(zip(model.layer_weights, model.layer_biases)):
        z = a @ w[k] + b[k]
        a = act(z) if l < last else z
    g = a[:, 0]
    if model.variant == "lasso":
        return model.beta[k] * g
    if model.variant == "shortcut":
        return model.alpha[k] * g + (1.0 - model.alpha[k]) * model.omega[k] * xs
    return g


def shape_curve(model: NamModel, k: int, grid, reference=None) -> ShapeCurve:
    """Sampled contribution curve for feature k, centered over reference values.

    The curve is shifted so its mean over the reference coordinates is 0;
    with no reference points the shift is skipped and the curve flagged
    uncentered.
    """
    if not 0 <= k < model.m:
        raise DataError(f"feature index {k} out of range")
    xs = np.asarray(grid, dtype=float).ravel()
    if np.any(np.diff(xs) < 0):
        raise DataError("curve grid must be sorted")
    values = feature_contribution(model, k, xs)
    reference = None if reference is None else np.asarray(reference, dtype=float).ravel()
    if reference is None or reference.size == 0:
        return ShapeCurve(k, xs, values, centered=False)
    offset = float(np.mean(feature_contribution(model, k, reference)))
    return ShapeCurve(k, xs, values - offset, centered=True)


def save_model(model: NamModel, path) -> None:
    """Write a versioned JSON checkpoint (config, parameters, feature schema)."""
    cfg = model.config
    payload = {
        "format": "survshape-nam",
        "version": 1,
        "config": {
            "hidden_sizes": list(cfg.hidden_sizes),
            "activation": cfg.activation,
            "learning_rate": cfg.learning_rate,
            "epochs": cfg.epochs,
            "batch": cfg.batch,
            "seed": cfg.seed,
            "variant": cfg.variant,
        },
        "feature_names": None if model.feature_names is None else list(model.feature_names),
        "layer_weights": [w.tolist() for w in model.layer_weights],
        "layer_biases": [b.tolist() for b in model.layer_biases],
        "bias": model.bias.tolist(),
        "beta": None if model.beta is None else model.beta.tolist(),
        "alpha": None if model.alpha is None else model.alpha.tolist(),
        "omega": None if model.omega is None else model.omega.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path) -> NamModel:
    """Read a checkpoint written by save_model."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "survshape-nam":
        raise DataError(f"{path}: not a survshape model checkpoint")
    if payload.get("version") != 1:
        raise DataError(f"{path}: unsupported checkpoint version")
    cfg = NamConfig(
        hidden_sizes=tuple(payload["config"]["hidden_sizes"]),
        activation=payload["config"]["activation"],
        learning_rate=payload["config"]["learning_rate"],
        epochs=payload["config"]["epochs"],
        batch=payload["config"]["batch"],
        seed=payload["config"]["seed"],
        variant=payload["config"]["variant"],
    )
    names = payload["feature_names"]
    return NamModel(
        [np.asarray(w, dtype=float) for w in payload["layer_weights"]],
        [np.asarray(b, dtype=float) for b in payload["layer_biases"]],
        np.asarray(payload["bias"], dtype=float),
        None if payload["beta"] is None else np.asarray(payload["beta"], dtype=float),
        None if payload["alpha"] is None else np.asarray(payload["alpha"], dtype=float),
        None if payload["omega"] is None else np.asarray(payload["omega"], dtype=float),
        cfg,
        None if names is None else tuple(names),
    )
