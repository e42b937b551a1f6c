"""CSV loading, per-column min-max scaling, and the train/test split."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

# Training rows are capped so large files keep a large held-out share.
_TRAIN_CAP = 1000


@dataclass
class ColumnScaling:
    """Per-column affine map of the training range onto [-1, 1].

    Columns that were constant in training map to 0; out-of-range values
    are clamped at apply time.
    """

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "ColumnScaling":
        X = np.asarray(X, dtype=float)
        return cls(lo=X.min(axis=0), hi=X.max(axis=0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        span = self.hi - self.lo
        out = np.zeros_like(X)
        live = span > 0.0
        out[:, live] = np.clip(
            2.0 * (X[:, live] - self.lo[live]) / span[live] - 1.0, -1.0, 1.0
        )
        return out


@dataclass
class Dataset:
    """Numeric predictor matrix with its response column."""

    X: np.ndarray
    y: np.ndarray
    column_names: list[str] = field(default_factory=list)
    scaling: ColumnScaling | None = None
    dropped_rows: int = 0


def load_csv(path: str, target: str | int) -> Dataset:
    """Read a headed CSV into a Dataset, dropping rows with bad cells.

    ``target`` selects the response column by name or by position in the
    header.  Rows with missing or non-numeric cells are dropped and
    counted; a non-target column that never parses is treated as a load
    error rather than silently encoded.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
    except FileNotFoundError:
        raise DataError("missing_file", f"no such file: {path}")
    except OSError as exc:
        raise DataError("missing_file", f"cannot read {path}: {exc}")
    if not rows:
        raise DataError("no_rows", f"{path} is empty")

    header = [name.strip() for name in rows[0]]
    if isinstance(target, int):
        if not (0 <= target < len(header)):
            raise DataError(
                "missing_target",
                f"target index {target} outside 0..{len(header) - 1}",
            )
        target_idx = target
    else:
        if target not in header:
            raise DataError(
                "missing_target", f"target column {target!r} not in header"
            )
        target_idx = header.index(target)

    n_cols = len(header)
    kept: list[list[float]] = []
    dropped = 0
    bad_counts = np.zeros(n_cols, dtype=int)
    body = [row for row in rows[1:] if row and any(cell.strip() for cell in row)]
    for row in body:
        if len(row) != n_cols:
            dropped += 1
            continue
        parsed = []
        ok = True
        for j, cell in enumerate(row):
            try:
                value = float(cell)
                if not np.isfinite(value):
                    raise ValueError
            except ValueError:
                bad_counts[j] += 1
                ok = False
                break
            parsed.append(value)
        if ok:
            kept.append(parsed)
        else:
            dropped += 1

    if body and not kept:
        never_parsed = [
            header[j] for j in range(n_cols) if bad_counts[j] == len(body)
        ]
        if never_parsed:
            raise DataError(
                "non_numeric_column",
                f"column(s) never numeric: {', '.join(never_parsed)}",
            )
    if not kept:
        raise DataError("no_rows", f"{path} has no usable data rows")
    if dropped:
        logger.info("dropped %d row(s) with missing or bad cells", dropped)

    matrix = np.asarray(kept, dtype=float)
    feature_cols = [j for j in range(n_cols) if j != target_idx]
    names = [header[j] for j in feature_cols] + [header[target_idx]]
    return Dataset(
        X=matrix[:, feature_cols],
        y=matrix[:, target_idx],
        column_names=names,
        dropped_rows=dropped,
    )


def fit_scaling(train: Dataset) -> ColumnScaling:
    """Column ranges of the training predictors."""
    return ColumnScaling.fit(train.X)


def apply_scaling(scaling: ColumnScaling, X: np.ndarray) -> np.ndarray:
    """Map predictors through a fitted scaling, clamping to [-1, 1]."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != scaling.lo.shape[0]:
        raise DataError(
            "bad_shape",
            f"expected {scaling.lo.shape[0]} columns, got "
            f"{X.shape[1] if X.ndim == 2 else 'non-matrix'}",
        )
    return scaling.transform(X)


def partition(
    data: Dataset, rng: np.random.Generator
) -> tuple[Dataset, Dataset]:
    """Random train/test split: min(floor(2N/3), 1000) training rows."""
    N = data.X.shape[0]
    if N < 3:
        raise DataError("too_few_rows", f"need at least 3 rows, got {N}")
    n_train = min((2 * N) // 3, _TRAIN_CAP)
    order = rng.permutation(N)
    train_idx = np.sort(order[:n_train])
    test_idx = np.sort(order[n_train:])
    train = Dataset(
        X=data.X[train_idx],
        y=data.y[train_idx],
        column_names=list(data.column_names),
    )
    test = Dataset(
        X=data.X[test_idx],
        y=data.y[test_idx],
        column_names=list(data.column_names),
    )
    return train, test


def load_feature_matrix(
    path: str, feature_names: list[str] | None = None
) -> np.ndarray:
    """Read predictor columns for prediction, without a response.

    When ``feature_names`` is given and all appear in the header, those
    columns are taken in the stored order (extra columns such as the
    original target are ignored); otherwise the file must consist of
    exactly those predictors.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
    except FileNotFoundError:
        raise DataError("missing_file", f"no such file: {path}")
    except OSError as exc:
        raise DataError("missing_file", f"cannot read {path}: {exc}")
    if not rows:
        raise DataError("no_rows", f"{path} is empty")
    header = [name.strip() for name in rows[0]]
    if feature_names and all(name in header for name in feature_names):
        cols = [header.index(name) for name in feature_names]
    elif feature_names and len(header) == len(feature_names):
        cols = list(range(len(header)))
    elif feature_names:
        raise DataError(
            "missing_target",
            "prediction file lacks the model's feature columns",
        )
    else:
        cols = list(range(len(header)))

    kept = []
    dropped = 0
    for row in rows[1:]:
        if not row or not any(cell.strip() for cell in row):
            continue
        try:
            parsed = [float(row[j]) for j in cols]
        except (ValueError, IndexError):
            dropped += 1
            continue
        if all(np.isfinite(v) for v in parsed):
            kept.append(parsed)
        else:
            dropped += 1
    if not kept:
        raise DataError("no_rows", f"{path} has no usable data rows")
    if dropped:
        logger.info("dropped %d prediction row(s)", dropped)
    return np.asarray(kept, dtype=float)
