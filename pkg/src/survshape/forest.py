"""Reference black-box survival model: a random survival forest.

Trees split on the two-sample log-rank statistic (exhaustive midpoint
candidates over a random feature subset) and store Nelson-Aalen
cumulative hazards in their leaves, projected onto the dataset-level
time grid at fit time so ensemble averaging is a plain vector mean.
Per-tree RNG streams are derived from (seed, tree index), so a parallel
fit would produce the same forest as this serial one. Fitted forests
are immutable and safe for concurrent prediction.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError
from .survival import (
    PiecewiseChf,
    SurvivalDataset,
    TimeGrid,
    _hazard_increments,
    _step_values,
    build_time_grid,
    concordance_index,
)


@dataclass(frozen=True)
class ForestConfig:
    """Hyperparameters; only the tree count is protocol-fixed, at 500."""

    n_trees: int = 500
    min_leaf_events: int = 3
    max_depth: Optional[int] = None
    features_per_split: Optional[int] = None  # default: ceil(sqrt(m))
    seed: int = 0
    bootstrap: bool = True  # test hook; disable to fit on the exact sample
    gamma_fraction: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "n_trees", int(self.n_trees))
        object.__setattr__(self, "min_leaf_events", int(self.min_leaf_events))
        object.__setattr__(self, "seed", int(self.seed))
        if self.max_depth is not None:
            object.__setattr__(self, "max_depth", int(self.max_depth))
        if self.features_per_split is not None:
            object.__setattr__(self, "features_per_split", int(self.features_per_split))
        if self.n_trees < 1:
            raise DataError("n_trees must be >= 1")
        if self.min_leaf_events < 1:
            raise DataError("min_leaf_events must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise DataError("max_depth must be >= 1 or None")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise DataError("features_per_split must be >= 1 or None")
        if not self.gamma_fraction > 0:
            raise DataError("gamma_fraction must be positive")


@dataclass(frozen=True)
class SurvivalForest:
    """Fitted trees plus the shared grid and training feature metadata.

    Trees are nested dicts: internal nodes {"feature", "threshold",
    "left", "right"}, leaves {"values": (s+1,) array}.
    """

    trees: tuple
    grid: TimeGrid
    feature_names: tuple[str, ...]
    feature_kinds: tuple[str, ...]
    config: ForestConfig

    @property
    def m(self) -> int:
        return len(self.feature_names)

    def predict_chf(self, x) -> PiecewiseChf:
        return predict_chf(self, x)

    def predict_chf_matrix(self, x) -> np.ndarray:
        return predict_chf_matrix(self, x)

    def risk_scores(self, x) -> np.ndarray:
        return risk_scores(self, x)


def log_rank_statistic(times_a, events_a, times_b, events_b) -> float:
    """Two-sample log-rank chi-square statistic; symmetric, 0 without events."""
    ta = np.asarray(times_a, dtype=float)
    tb = np.asarray(times_b, dtype=float)
    ea = np.asarray(events_a, dtype=int)
    eb = np.asarray(events_b, dtype=int)
    if len(ta) == 0 or len(tb) == 0:
        raise DataError("both groups must be nonempty")
    times = np.concatenate([ta, tb])
    events = np.concatenate([ea, eb])
    in_a = np.zeros(len(times), dtype=bool)
    in_a[:len(ta)] = True
    event_times = np.unique(times[events == 1])
    if len(event_times) == 0:
        return 0.0
    num = 0.0
    var = 0.0
    for u in event_times:
        at_risk = times >= u
        n = int(at_risk.sum())
        n_a = int((at_risk & in_a).sum())
        here = (times == u) & (events == 1)
        d = int(here.sum())
        d_a = int((here & in_a).sum())
        num += d_a - d * n_a / n
        if n > 1:
            var += d * (n_a / n) * (1.0 - n_a / n) * (n - d) / (n - 1)
    if var <= 0.0:
        return 0.0
    return float(num * num / var)


def _best_split_for_feature(values, times, events, min_leaf_events):
    """Best (score, threshold) over all midpoint candidates of one feature.

    Vectorized over candidates: with samples sorted by feature value,
    cumulative event/at-risk counts per distinct node event time give the
    log-rank numerator and variance of every left/right partition at once.
    """
    order = np.argsort(values, kind="mergesort")
    f = values[order]
    t = times[order]
    e = events[order]
    boundaries = np.nonzero(f[:-1] < f[1:])[0] + 1  # left side = first c samples
    if len(boundaries) == 0:
        return None
    event_times = np.unique(t[e == 1])
    if len(event_times) == 0:
        return None
    d_mat = ((t[:, None] == event_times[None, :]) & (e[:, None] == 1)).astype(float)
    n_mat = (t[:, None] >= event_times[None, :]).astype(float)
    d_left = np.cumsum(d_mat, axis=0)[boundaries - 1]
    n_left = np.cumsum(n_mat, axis=0)[boundaries - 1]
    d_tot = d_mat.sum(axis=0)
    n_tot = n_mat.sum(axis=0)

    events_left = np.cumsum(e)[boundaries - 1]
    events_right = e.sum() - events_left
    valid = (events_left >= min_leaf_events) & (events_right >= min_leaf_events)
    if not valid.any():
        return None

    share = n_left / n_tot
    num = (d_left - d_tot * share).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_time = d_tot * share * (1.0 - share) * (n_tot - d_tot) / (n_tot - 1.0)
    per_time[:, n_tot <= 1] = 0.0
    var = per_time.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(var > 0.0, num * num / var, 0.0)
    scores[~valid] = -np.inf
    best = int(np.argmax(scores))
    if not scores[best] > 0.0:
        return None
    cut = boundaries[best]
    threshold = 0.5 * (f[cut - 1] + f[cut])
    return float(scores[best]), threshold


def _leaf_node(times, events, grid: TimeGrid) -> dict:
    """Nelson-Aalen CHF of the leaf samples, evaluated at the shared grid times."""
    if events.sum() == 0:
        return {"values": np.zeros(grid.n_intervals)}
    uniq, increments = _hazard_increments(times, events)
    return {"values": _step_values(uniq, np.cumsum(increments), grid.times)}


def _grow_tree(x, times, events, depth, grid, config, n_features_to_try, rng) -> dict:
    n, m = x.shape
    if (events.sum() < 2 * config.min_leaf_events
            or (config.max_depth is not None and depth >= config.max_depth)):
        return _leaf_node(times, events, grid)
    candidates = rng.choice(m, size=n_features_to_try, replace=False)
    best = None
    for k in candidates:
        found = _best_split_for_feature(x[:, k], times, events,
                                        config.min_leaf_events)
        if found is not None and (best is None or found[0] > best[0]):
            best = (found[0], int(k), found[1])
    if best is None:
        return _leaf_node(times, events, grid)
    _, feature, threshold = best
    go_left = x[:, feature] <= threshold
    return {
        "feature": feature,
        "threshold": threshold,
        "left": _grow_tree(x[go_left], times[go_left], events[go_left],
                           depth + 1, grid, config, n_features_to_try, rng),
        "right": _grow_tree(x[~go_left], times[~go_left], events[~go_left],
                            depth + 1, grid, config, n_features_to_try, rng),
    }


def fit_forest(dataset: SurvivalDataset, config: ForestConfig = ForestConfig()) -> SurvivalForest:
    """Fit bootstrapped log-rank survival trees on the dataset-level grid."""
    if int(dataset.events.sum()) < config.min_leaf_events:
        raise DataError("dataset has fewer events than min_leaf_events")
    grid = build_time_grid(dataset, config.gamma_fraction)
    n_try = config.features_per_split
    if n_try is None:
        n_try = int(math.ceil(math.sqrt(dataset.m)))
    n_try = min(n_try, dataset.m)
    trees = []
    for tree_idx in range(config.n_trees):
        rng = np.random.default_rng([config.seed, tree_idx])
        if config.bootstrap:
            idx = rng.integers(0, dataset.n, dataset.n)
        else:
            idx = np.arange(dataset.n)
        trees.append(_grow_tree(dataset.features[idx], dataset.times[idx],
                                dataset.events[idx], 0, grid, config, n_try, rng))
    if all("values" in t for t in trees):
        warnings.warn("no split satisfied the constraints; forest is a single leaf",
                      stacklevel=2)
    return SurvivalForest(tuple(trees), grid, dataset.feature_names,
                          dataset.feature_kinds, config)


def _tree_values(node: dict, x: np.ndarray) -> np.ndarray:
    while "feature" in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return node["values"]


def _tree_values_batch(node: dict, x: np.ndarray, out: np.ndarray, idx: np.ndarray) -> None:
    if "values" in node:
        out[idx] = node["values"]
        return
    mask = x[idx, node["feature"]] <= node["threshold"]
    _tree_values_batch(node["left"], x, out, idx[mask])
    _tree_values_batch(node["right"], x, out, idx[~mask])


def _check_input(forest: SurvivalForest, x: np.ndarray, name="x"):
    if x.shape[-1] != forest.m:
        raise DataError(f"{name} has {x.shape[-1]} features, forest expects {forest.m}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{name} contains non-finite values")


def predict_chf(forest: SurvivalForest, x) -> PiecewiseChf:
    """Mean over trees of the leaf CHFs reached by x, on the shared grid."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DataError("predict_chf takes a single feature vector")
    _check_input(forest, x)
    total = np.zeros(forest.grid.n_intervals)
    for tree in forest.trees:
        total += _tree_values(tree, x)
    return PiecewiseChf(forest.grid, total / len(forest.trees))


def predict_chf_matrix(forest: SurvivalForest, x) -> np.ndarray:
    """CHF values for many rows at once; shape (n, s+1)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    _check_input(forest, x)
    total = np.zeros((x.shape[0], forest.grid.n_intervals))
    scratch = np.empty_like(total)
    all_rows = np.arange(x.shape[0])
    for tree in forest.trees:
        _tree_values_batch(tree, x, scratch, all_rows)
        total += scratch
    return total / len(forest.trees)


def risk_scores(forest: SurvivalForest, x) -> np.ndarray:
    """Integrated CHF per row: a monotone scalar risk summary for ranking."""
    return predict_chf_matrix(forest, x) @ forest.grid.widths


def permutation_importance(forest: SurvivalForest, dataset: SurvivalDataset,
                           n_repeats: int = 10, seed: int = 0) -> np.ndarray:
    """Mean drop in concordance when one feature column is shuffled."""
    if n_repeats < 1:
        raise DataError("n_repeats must be >= 1")
    baseline = concordance_index(risk_scores(forest, dataset.features), dataset)
    rng = np.random.default_rng(seed)
    scores = np.zeros(dataset.m)
    for k in range(dataset.m):
        drop = 0.0
        for _ in range(n_repeats):
            shuffled = dataset.features.copy()
            shuffled[:, k] = shuffled[rng.permutation(dataset.n), k]
            drop += baseline - concordance_index(risk_scores(forest, shuffled), dataset)
        scores[k] = drop / n_repeats
    return scores


def _node_to_jsonable(node: dict):
    if "values" in node:
        return {"values": np.asarray(node["values"]).tolist()}
    return {
        "feature": int(node["feature"]),
        "threshold": float(node["threshold"]),
        "left": _node_to_jsonable(node["left"]),
        "right": _node_to_jsonable(node["right"]),
    }


def _node_from_jsonable(node: dict):
    if "values" in node:
        return {"values": np.asarray(node["values"], dtype=float)}
    return {
        "feature": int(node["feature"]),
        "threshold": float(node["threshold"]),
        "left": _node_from_jsonable(node["left"]),
        "right": _node_from_jsonable(node["right"]),
    }


def save_forest(forest: SurvivalForest, path, extra: Optional[dict] = None) -> None:
    """Versioned JSON serialization; floats survive the round trip exactly.

    `extra` is an arbitrary JSON-compatible blob stored verbatim (the CLI
    keeps the fitted data schema there so one file carries the whole model).
    """
    cfg = forest.config
    payload = {
        "format": "survshape-forest",
        "version": 1,
        "grid": {"times": forest.grid.times.tolist(), "gamma": forest.grid.gamma},
        "feature_names": list(forest.feature_names),
        "feature_kinds": list(forest.feature_kinds),
        "config": {
            "n_trees": cfg.n_trees,
            "min_leaf_events": cfg.min_leaf_events,
            "max_depth": cfg.max_depth,
            "features_per_split": cfg.features_per_split,
            "seed": cfg.seed,
            "bootstrap": cfg.bootstrap,
            "gamma_fraction": cfg.gamma_fraction,
        },
        "extra": extra,
        "trees": [_node_to_jsonable(t) for t in forest.trees],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_forest(path):
    """Read a forest written by save_forest; returns (forest, extra)."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "survshape-forest":
        raise DataError(f"{path}: not a survshape forest file")
    if payload.get("version") != 1:
        raise DataError(f"{path}: unsupported forest file version")
    grid = TimeGrid(np.asarray(payload["grid"]["times"], dtype=float),
                    payload["grid"]["gamma"])
    cfg = ForestConfig(**payload["config"])
    forest = SurvivalForest(
        tuple(_node_from_jsonable(t) for t in payload["trees"]),
        grid,
        tuple(payload["feature_names"]),
        tuple(payload["feature_kinds"]),
        cfg,
    )
    return forest, payload.get("extra")
