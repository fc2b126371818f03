"""CSV ingestion, categorical encoding, normalization and splitting.

The schema config is a small JSON file::

    {"time": "time", "event": "cens",
     "features": {"age": "numeric", "horTh": "categorical"}}

Numeric columns are z-scored with statistics learned when the schema is
fitted (population standard deviation); categorical columns become one-hot
level columns named "col=level", except binary ones which collapse to a
single 0/1 column. A fitted schema applied to another file never re-fits,
which is what keeps test-set normalization honest.
"""

from __future__ import annotations

import csv
import json
import warnings
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, SchemaError
from .survival import KIND_NUMERIC, KIND_ONE_HOT, SurvivalDataset

_TRUE_WORDS = {"1", "1.0", "true", "yes", "y"}
_FALSE_WORDS = {"0", "0.0", "false", "no", "n"}


def read_csv_rows(path) -> list[dict]:
    """All rows of a headered CSV as dicts; raises SchemaError on an empty file."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise SchemaError(f"{path}: empty file, expected a header row")
            return list(reader)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc


def _parse_float(cell, column, row_idx):
    try:
        return float(cell)
    except (TypeError, ValueError):
        raise SchemaError(
            f"row {row_idx}: cannot parse {column}={cell!r} as a number") from None


def _parse_event(cell, row_idx):
    word = str(cell).strip().lower()
    if word in _TRUE_WORDS:
        return 1
    if word in _FALSE_WORDS:
        return 0
    raise SchemaError(f"row {row_idx}: event value {cell!r} is not 0/1")


class DatasetSchema:
    """Column roles plus the encoders learned at fit time."""

    def __init__(self, time_column: str, event_column: str,
                 feature_specs: Sequence[tuple[str, str]]):
        if not feature_specs:
            raise SchemaError("schema needs at least one feature column")
        for name, kind in feature_specs:
            if kind not in ("numeric", "categorical"):
                raise SchemaError(f"feature {name}: unknown kind {kind!r}")
            if name in (time_column, event_column):
                raise SchemaError(f"{name} cannot be both a feature and time/event")
        self.time_column = time_column
        self.event_column = event_column
        self.feature_specs = tuple((str(n), str(k)) for n, k in feature_specs)
        self.levels: dict[str, tuple[str, ...]] = {}
        self.stats: dict[str, tuple[float, float]] = {}

    @classmethod
    def from_config(cls, source) -> "DatasetSchema":
        """Build from a JSON config file path or an equivalent dict."""
        if isinstance(source, dict):
            cfg = source
        else:
            try:
                with open(source, encoding="utf-8") as fh:
                    cfg = json.load(fh)
            except OSError as exc:
                raise SchemaError(f"cannot read schema {source}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise SchemaError(f"schema {source} is not valid JSON: {exc}") from exc
        for key in ("time", "event", "features"):
            if key not in cfg:
                raise SchemaError(f"schema config is missing the {key!r} key")
        return cls(cfg["time"], cfg["event"], list(cfg["features"].items()))

    @property
    def fitted(self) -> bool:
        return bool(self.stats) or bool(self.levels)

    def _clean_rows(self, rows):
        """Drop rows with missing time/event (warned); check feature presence."""
        required = [self.time_column, self.event_column] + [n for n, _ in self.feature_specs]
        kept, dropped = [], 0
        for idx, row in enumerate(rows):
            for col in required:
                if col not in row:
                    raise SchemaError(f"column {col!r} missing from the file")
            if _is_missing(row[self.time_column]) or _is_missing(row[self.event_column]):
                dropped += 1
                continue
            for name, _ in self.feature_specs:
                if _is_missing(row[name]):
                    raise SchemaError(f"row {idx}: missing value for feature {name!r}")
            kept.append((idx, row))
        if dropped:
            warnings.warn(f"dropped {dropped} rows with missing time/event",
                          stacklevel=3)
        if not kept:
            raise SchemaError("no usable rows after dropping missing time/event")
        return kept

    def fit(self, rows) -> "DatasetSchema":
        """Learn categorical levels and numeric standardization from these rows."""
        kept = self._clean_rows(rows)
        for name, kind in self.feature_specs:
            if kind == "categorical":
                self.levels[name] = tuple(sorted({str(row[name]).strip()
                                                  for _, row in kept}))
            else:
                values = np.array([_parse_float(row[name], name, idx)
                                   for idx, row in kept])
                std = float(values.std())
                self.stats[name] = (float(values.mean()), std if std > 0 else 1.0)
        return self

    def feature_columns(self) -> tuple[tuple[str, str], ...]:
        """Expanded (name, kind) pairs after encoding; requires a fitted schema."""
        if not self.fitted:
            raise SchemaError("schema is not fitted yet")
        out = []
        for name, kind in self.feature_specs:
            if kind == "numeric":
                out.append((name, KIND_NUMERIC))
            else:
                levels = self.levels[name]
                if len(levels) == 2:
                    out.append((f"{name}={levels[1]}", KIND_ONE_HOT))
                else:
                    out.extend((f"{name}={level}", KIND_ONE_HOT) for level in levels)
        return tuple(out)

    def transform(self, rows) -> SurvivalDataset:
        """Encode rows with the fitted schema; unseen levels are an error."""
        if not self.fitted:
            raise SchemaError("fit the schema before transforming")
        kept = self._clean_rows(rows)
        times = np.array([_parse_float(row[self.time_column], self.time_column, idx)
                          for idx, row in kept])
        events = np.array([_parse_event(row[self.event_column], idx)
                           for idx, row in kept], dtype=int)
        columns = []
        for name, kind in self.feature_specs:
            if kind == "numeric":
                mean, std = self.stats[name]
                raw = np.array([_parse_float(row[name], name, idx) for idx, row in kept])
                columns.append((raw - mean) / std)
            else:
                levels = self.levels[name]
                seen = [str(row[name]).strip() for _, row in kept]
                for idx, value in zip((i for i, _ in kept), seen):
                    if value not in levels:
                        raise SchemaError(
                            f"row {idx}: unseen level {value!r} for feature {name!r}")
                if len(levels) == 2:
                    columns.append(np.array([1.0 if v == levels[1] else 0.0 for v in seen]))
                else:
                    for level in levels:
                        columns.append(np.array([1.0 if v == level else 0.0 for v in seen]))
        names_kinds = self.feature_columns()
        return SurvivalDataset(np.column_stack(columns), times, events,
                               tuple(n for n, _ in names_kinds),
                               tuple(k for _, k in names_kinds))

    def fit_transform(self, rows) -> SurvivalDataset:
        return self.fit(rows).transform(rows)

    def to_dict(self) -> dict:
        return {
            "time": self.time_column,
            "event": self.event_column,
            "features": {n: k for n, k in self.feature_specs},
            "levels": {n: list(v) for n, v in self.levels.items()},
            "stats": {n: list(v) for n, v in self.stats.items()},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DatasetSchema":
        schema = cls(payload["time"], payload["event"],
                     list(payload["features"].items()))
        schema.levels = {n: tuple(v) for n, v in payload.get("levels", {}).items()}
        schema.stats = {n: (float(v[0]), float(v[1]))
                        for n, v in payload.get("stats", {}).items()}
        return schema


def load_csv(path, schema: DatasetSchema) -> SurvivalDataset:
    """Read a CSV through the schema; fits it first when it is not fitted yet."""
    rows = read_csv_rows(path)
    if schema.fitted:
        return schema.transform(rows)
    return schema.fit_transform(rows)


def train_test_split(dataset: SurvivalDataset, test_fraction: float, seed: int = 0,
                     max_retries: int = 20):
    """Seeded shuffle into (train, test); both parts must keep >= 1 event.

    Event-starved shuffles are retried with fresh derived seeds a bounded
    number of times before giving up with a DataError.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie strictly between 0 and 1")
    n_test = int(round(dataset.n * test_fraction))
    n_test = min(max(n_test, 1), dataset.n - 1)
    for attempt in range(max_retries):
        order = np.random.default_rng([seed, attempt]).permutation(dataset.n)
        test_idx, train_idx = order[:n_test], order[n_test:]
        try:
            return dataset.subset(train_idx), dataset.subset(test_idx)
        except DataError:
            continue
    raise DataError(f"could not find a split with events on both sides "
                    f"in {max_retries} tries")


def export_csv(dataset: SurvivalDataset, path, time_column: str = "time",
               event_column: str = "event") -> None:
    """Write the prepared matrix as CSV; floats use repr so reload is exact."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.feature_names) + [time_column, event_column])
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.features[i]]
            row.append(repr(float(dataset.times[i])))
            row.append(str(int(dataset.events[i])))
            writer.writerow(row)


def load_prepared_csv(path, time_column: str = "time",
                      event_column: str = "event") -> SurvivalDataset:
    """Read a CSV written by export_csv (or any already-encoded file) verbatim.

    Every non-time/event column is a feature taken as-is, no re-fitting;
    names containing '=' are treated as one-hot level columns.
    """
    rows = read_csv_rows(path)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    header = list(rows[0].keys())
    for col in (time_column, event_column):
        if col not in header:
            raise SchemaError(f"column {col!r} missing from {path}")
    feature_names = [c for c in header if c not in (time_column, event_column)]
    if not feature_names:
        raise SchemaError(f"{path}: no feature columns")
    times = np.array([_parse_float(r[time_column], time_column, i)
                      for i, r in enumerate(rows)])
    events = np.array([_parse_event(r[event_column], i) for i, r in enumerate(rows)],
                      dtype=int)
    features = np.column_stack([
        np.array([_parse_float(r[name], name, i) for i, r in enumerate(rows)])
        for name in feature_names])
    kinds = tuple(KIND_ONE_HOT if "=" in name else KIND_NUMERIC
                  for name in feature_names)
    return SurvivalDataset(features, times, events, tuple(feature_names), kinds)


def _is_missing(cell) -> bool:
    return cell is None or str(cell).strip() == ""


def load_and_split_csv(path, schema: DatasetSchema, test_fraction: float,
                       seed: int = 0, max_retries: int = 20):
    """Row-level split, then fit the schema on the training rows only.

    Returns (train, test); normalization statistics never see the test rows.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie strictly between 0 and 1")
    rows = read_csv_rows(path)
    n = len(rows)
    if n < 2:
        raise SchemaError(f"{path}: need at least 2 data rows")
    n_test = min(max(int(round(n * test_fraction)), 1), n - 1)
    last_error: Optional[Exception] = None
    for attempt in range(max_retries):
        order = np.random.default_rng([seed, attempt]).permutation(n)
        test_rows = [rows[i] for i in order[:n_test]]
        train_rows = [rows[i] for i in order[n_test:]]
        trial = DatasetSchema(schema.time_column, schema.event_column,
                              schema.feature_specs)
        try:
            train = trial.fit_transform(train_rows)
            test = trial.transform(test_rows)
        except (DataError, SchemaError) as exc:
            last_error = exc
            continue
        schema.levels = trial.levels
        schema.stats = trial.stats
        return train, test
    raise DataError(f"could not split {path} into usable train/test parts: {last_error}")
