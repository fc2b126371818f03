"""Explanation pipeline around a CHF-producing black box.

Local mode perturbs the explained point, weights neighbors by a distance
kernel, turns black-box hazards into log-ratio targets against the
Nelson-Aalen baseline, fits the additive surrogate and reports centered
shape curves. Global mode runs the same machinery with the training set
as the point cloud and unit weights. The black box only needs a
`predict_chf(x) -> PiecewiseChf` method (or to be such a callable) whose
outputs share one grid with the baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import AlignmentError, DataError, DiameterUndefinedError, MetricUndefinedError
from .nam import (
    NamConfig,
    NamModel,
    ShapeCurve,
    TargetBatch,
    init_model,
    predict_log_risk,
    shape_curve,
    train,
)
from .survival import (
    KIND_NUMERIC,
    PiecewiseChf,
    SurvivalDataset,
    build_time_grid,
    concordance_index,
    nelson_aalen,
)

__all__ = [
    "Neighborhood",
    "TargetBatch",
    "FitDiagnostics",
    "Explanation",
    "dataset_diameter",
    "generate_perturbations",
    "build_neighborhood",
    "neighborhood_weights",
    "build_targets",
    "explain_local",
    "explain_global",
    "surrogate_c_index",
]


@dataclass(frozen=True)
class Neighborhood:
    """Generated points around a center with their kernel weights."""

    center: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    radius: float

    @property
    def size(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class FitDiagnostics:
    """How well the surrogate fit: loss endpoints and the concordances.

    Both C-indices are computed on the explained dataset; None when no
    pair of its samples is admissible.
    """

    initial_loss: float
    final_loss: float
    epochs: int
    c_index: Optional[float]
    c_index_blackbox: Optional[float] = None


@dataclass(frozen=True)
class Explanation:
    """Centered shape curves plus mixing coefficients and fit diagnostics."""

    mode: str  # "local" | "global"
    variant: str
    feature_names: tuple[str, ...]
    curves: tuple[ShapeCurve, ...]
    mixing: dict
    diagnostics: FitDiagnostics
    model: NamModel
    reference_points: np.ndarray
    params: dict

    @property
    def m(self) -> int:
        return len(self.feature_names)

    def curve_for(self, name: str) -> ShapeCurve:
        return self.curves[self.feature_names.index(name)]


def dataset_diameter(dataset: SurvivalDataset) -> float:
    """Largest pairwise Euclidean distance over the dataset's feature rows."""
    x = dataset.features
    if x.shape[0] < 2:
        raise DiameterUndefinedError("need >= 2 points for a diameter")
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    return float(np.sqrt(max(float(d2.max()), 0.0)))


def generate_perturbations(x, dataset: SurvivalDataset, n_points: int = 100,
                           seed: int = 0) -> np.ndarray:
    """Normal perturbations of the numeric coordinates of x.

    Each numeric coordinate is drawn from a normal centered at x with a
    shared standard deviation of 10% of the dataset diameter; one-hot
    coordinates stay fixed at x's values.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (dataset.m,):
        raise DataError(f"expected a length-{dataset.m} feature vector")
    if n_points < 1:
        raise DataError("n_points must be >= 1")
    diameter = dataset_diameter(dataset)
    if diameter <= 0.0:
        raise DiameterUndefinedError("all dataset points coincide; perturbation scale is 0")
    std = 0.10 * diameter
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n_points, dataset.m)) * std
    numeric = np.array([kind == KIND_NUMERIC for kind in dataset.feature_kinds])
    points = np.tile(x, (n_points, 1))
    points[:, numeric] += noise[:, numeric]
    return points


def neighborhood_weights(x, points, radius: float) -> np.ndarray:
    """Kernel weights 1 - sqrt(distance / radius), clamped to [0, 1]."""
    if not radius > 0:
        raise DataError("radius must be positive")
    x = np.asarray(x, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dist = np.linalg.norm(points - x[None, :], axis=1)
    return np.clip(1.0 - np.sqrt(dist / radius), 0.0, 1.0)


def build_neighborhood(x, dataset: SurvivalDataset, n_points: int = 100,
                       seed: int = 0) -> Neighborhood:
    """Generate perturbations and weight them; radius = distance to the farthest.

    With that radius the weights span (0, 1], hitting exactly 0 at the
    farthest generated point. A radius of 0 (every coordinate categorical)
    degenerates to unit weights.
    """
    x = np.asarray(x, dtype=float)
    points = generate_perturbations(x, dataset, n_points, seed)
    radius = float(np.linalg.norm(points - x[None, :], axis=1).max())
    if radius > 0:
        weights = neighborhood_weights(x, points, radius)
    else:
        weights = np.ones(points.shape[0])
    return Neighborhood(x, points, weights, radius)


def _chf_predictor(blackbox):
    predict = getattr(blackbox, "predict_chf", None)
    if predict is None and callable(blackbox):
        predict = blackbox
    if predict is None:
        raise DataError("black box must expose predict_chf or be callable")
    return predict


def build_targets(blackbox, baseline: PiecewiseChf, points, weights,
                  epsilon: float = 1e-5) -> TargetBatch:
    """Log-ratio targets ln H_j(x_i) - ln H_0j with both sides epsilon-floored."""
    if not epsilon > 0:
        raise DataError("epsilon must be positive")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    log_baseline = np.log(np.maximum(baseline.values, epsilon))
    matrix_fn = getattr(blackbox, "predict_chf_matrix", None)
    if matrix_fn is not None:
        grid = getattr(blackbox, "grid", None)
        if grid is not None and grid != baseline.grid:
            raise AlignmentError(
                "black-box CHF grid differs from the baseline grid; project first")
        values = np.asarray(matrix_fn(points), dtype=float)
        rows = np.log(np.maximum(values, epsilon)) - log_baseline[None, :]
    else:
        predict = _chf_predictor(blackbox)
        rows = np.empty((points.shape[0], baseline.grid.n_intervals))
        for i, p in enumerate(points):
            chf = predict(p)
            if chf.grid != baseline.grid:
                raise AlignmentError(
                    "black-box CHF grid differs from the baseline grid; project first")
            rows[i] = np.log(np.maximum(chf.values, epsilon)) - log_baseline
    return TargetBatch(points, rows, baseline.grid.widths, weights, epsilon)


def _resolve_grid(blackbox, dataset, gamma_fraction):
    grid = getattr(blackbox, "grid", None)
    return grid if grid is not None else build_time_grid(dataset, gamma_fraction)


def _blackbox_risk(blackbox, x: np.ndarray) -> np.ndarray:
    """Integrated-CHF risk scores, via the batch path when the box has one."""
    scorer = getattr(blackbox, "risk_scores", None)
    if scorer is not None:
        return np.asarray(scorer(x), dtype=float)
    predict = _chf_predictor(blackbox)
    return np.array([predict(row).integral() for row in np.atleast_2d(x)])


def _curve_grid(values: np.ndarray, kind: str, samples: int) -> np.ndarray:
    if kind != KIND_NUMERIC:
        return np.unique(values)
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        return np.array([lo])
    return np.linspace(lo, hi, samples)


def _fit_and_package(mode, blackbox, dataset, points, weights, config, lam, mu,
                     epsilon, gamma_fraction, curve_samples, params):
    grid = _resolve_grid(blackbox, dataset, gamma_fraction)
    baseline = nelson_aalen(dataset, grid)
    targets = build_targets(blackbox, baseline, points, weights, epsilon)
    model = init_model(dataset.m, config, dataset.feature_names)
    model, trace = train(model, targets, config, lam, mu)

    curves = []
    for k, kind in enumerate(dataset.feature_kinds):
        reference = points[:, k]
        xs = _curve_grid(reference, kind, curve_samples)
        curves.append(shape_curve(model, k, xs, reference))

    if model.variant == "lasso":
        mixing = {"beta": model.beta.copy()}
    elif model.variant == "shortcut":
        mixing = {
            "alpha": model.alpha.copy(),
            "omega": model.omega.copy(),
            "linear_weight": (1.0 - model.alpha) * model.omega,
        }
    else:
        mixing = {}

    try:
        c_index = concordance_index(predict_log_risk(model, dataset.features), dataset)
        c_blackbox = concordance_index(_blackbox_risk(blackbox, dataset.features),
                                       dataset)
    except MetricUndefinedError:
        c_index = None
        c_blackbox = None
    diagnostics = FitDiagnostics(initial_loss=trace[0], final_loss=trace[-1],
                                 epochs=config.epochs, c_index=c_index,
                                 c_index_blackbox=c_blackbox)
    return Explanation(mode, model.variant, dataset.feature_names, tuple(curves),
                       mixing, diagnostics, model, points, params)


def explain_local(blackbox, dataset: SurvivalDataset, x, config: NamConfig,
                  lam: float = 0.0, mu: float = 0.0, n_points: int = 100,
                  epsilon: float = 1e-5, seed: int = 0,
                  gamma_fraction: float = 0.01, curve_samples: int = 101) -> Explanation:
    """Explain the black box around one point via a perturbation neighborhood.

    The kernel radius is the largest distance between x and a generated
    point, so the weights span (0, 1] with exactly 0 at the farthest point.
    Deterministic for fixed (seed, config).
    """
    x = np.asarray(x, dtype=float)
    nbhd = build_neighborhood(x, dataset, n_points, seed)
    params = {"mode": "local", "variant": config.variant, "lambda": lam, "mu": mu,
              "epsilon": epsilon, "n_points": n_points, "seed": seed,
              "center": x.tolist()}
    return _fit_and_package("local", blackbox, dataset, nbhd.points, nbhd.weights,
                            config, lam, mu, epsilon, gamma_fraction, curve_samples,
                            params)


def explain_global(blackbox, dataset: SurvivalDataset, config: NamConfig,
                   lam: float = 0.0, mu: float = 0.0, epsilon: float = 1e-5,
                   gamma_fraction: float = 0.01, curve_samples: int = 101) -> Explanation:
    """Explain the black box over the whole training set with unit weights."""
    points = dataset.features.copy()
    weights = np.ones(dataset.n)
    params = {"mode": "global", "variant": config.variant, "lambda": lam, "mu": mu,
              "epsilon": epsilon, "n_points": dataset.n, "seed": config.seed,
              "center": None}
    return _fit_and_package("global", blackbox, dataset, points, weights, config,
                            lam, mu, epsilon, gamma_fraction, curve_samples, params)


def surrogate_c_index(explanation: Union[Explanation, NamModel], blackbox,
                      test: SurvivalDataset) -> tuple[float, float]:
    """Concordance of the black box and of the surrogate on held-out data.

    Black-box risk is the integrated CHF; surrogate risk is the additive
    log-risk itself (exp is monotone, so the ordering is the Cox one).
    """
    model = explanation.model if isinstance(explanation, Explanation) else explanation
    c_blackbox = concordance_index(_blackbox_risk(blackbox, test.features), test)
    c_surrogate = concordance_index(predict_log_risk(model, test.features), test)
    return c_blackbox, c_surrogate
