"""Ensembles of greedy runs: configuration, fitting, prediction, storage.

Each of the B members runs the greedy fit on its own deterministic RNG
stream derived from (seed, member index), so members are independent of
B and of execution order.  Predictions average the member outputs.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .data_io import ColumnScaling
from .errors import ConfigError, DataError, NumericError
from .greedy import PprModel, RunData, run_greedy
from .singleindex import ProjectionScaler, Ridge
from .spline import make_uniform_knots

_FORMAT_TAG = "eppr-model-v1"

_VARIANTS = ("aga", "oga", "rga")
_STOPPING = ("bic", "fixed_k")
_TRUNCATION = ("off", "ln_n")


@dataclass
class FitConfig:
    """Everything a fit needs beyond the data itself."""

    variant: str = "aga"
    q: int = 1
    ell: int = 1
    B: int = 50
    k_max: int = 20
    J: int = 6
    degree: int = 3
    nu: float = 0.2
    stopping: str = "bic"
    truncation_mode: str = "off"
    seed: int = 0

    def validate(self, p: int | None = None) -> None:
        if self.variant not in _VARIANTS:
            raise ConfigError(f"variant must be one of {_VARIANTS}")
        if self.stopping not in _STOPPING:
            raise ConfigError(f"stopping must be one of {_STOPPING}")
        if self.truncation_mode not in _TRUNCATION:
            raise ConfigError(f"truncation mode must be one of {_TRUNCATION}")
        if self.q < 1:
            raise ConfigError(f"q must be >= 1, got {self.q}")
        if p is not None and self.q > p:
            raise ConfigError(f"q={self.q} exceeds predictor count p={p}")
        if self.ell < 1:
            raise ConfigError(f"ell must be >= 1, got {self.ell}")
        if self.B < 1:
            raise ConfigError(f"B must be >= 1, got {self.B}")
        if self.k_max < 1:
            raise ConfigError(f"k_max must be >= 1, got {self.k_max}")
        if self.degree < 1:
            raise ConfigError(f"degree must be >= 1, got {self.degree}")
        if self.J < self.degree + 1:
            raise ConfigError(
                f"J must be at least degree + 1, got J={self.J}"
            )
        if self.nu < 0.0:
            raise ConfigError(f"nu must be >= 0, got {self.nu}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")


def _floor_power(x: float, power: float) -> int:
    # Tiny epsilon keeps exact powers (e.g. 32**0.4 == 4) from flooring low.
    return int(math.floor(math.pow(x, power) + 1e-9))


def default_config(n: int, p: int) -> FitConfig:
    """Data-driven defaults for an (n, p) training table."""
    if n < 1 or p < 1:
        raise ConfigError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    q = min((2 * p) // 3, _floor_power(n, 0.4))
    q = max(q, 1)
    ell = max(1, p // q)
    J = min(max(_floor_power(n, 0.2) + 4, 6), 30)
    return FitConfig(
        variant="aga",
        q=q,
        ell=ell,
        B=50,
        k_max=20,
        J=J,
        degree=3,
        nu=0.2,
        stopping="bic",
        truncation_mode="off",
        seed=0,
    )


@dataclass
class EnsembleModel:
    """Fitted ensemble: members plus the shared preprocessing state."""

    config: FitConfig
    members: list[PprModel]
    feature_scaling: ColumnScaling
    truncation: float | None = None
    column_names: list[str] | None = None

    @property
    def p(self) -> int:
        return int(self.feature_scaling.lo.shape[0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Mean member prediction on raw (unscaled) predictors.

        Member outputs are summed in sorted order per row, so the result
        is bit-identical under any permutation of the members.
        """
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.p:
            raise ConfigError(
                f"expected (n, {self.p}) predictors, got {X.shape}"
            )
        if not np.all(np.isfinite(X)):
            raise NumericError("non-finite entries in prediction input")
        Xs = self.feature_scaling.transform(X)
        outputs = np.empty((len(self.members), X.shape[0]))
        for i, member in enumerate(self.members):
            outputs[i] = member.predict(Xs)
        if self.truncation is not None:
            np.clip(outputs, -self.truncation, self.truncation, out=outputs)
        outputs.sort(axis=0)
        return outputs.sum(axis=0) / len(self.members)

    def classify(self, X: np.ndarray) -> np.ndarray:
        """Class labels via the strict 0.5 threshold (ties go to class 0)."""
        return (self.predict(X) > 0.5).astype(int)


def fit(
    X: np.ndarray,
    y: np.ndarray,
    config: FitConfig,
    workers: int = 1,
    column_names: list[str] | None = None,
) -> EnsembleModel:
    """Fit B independent greedy runs and wrap them as one model."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ConfigError("X must be (n, p) and y (n,) with matching n")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NumericError("non-finite entries in training data")
    config.validate(p=X.shape[1])

    scaling = ColumnScaling.fit(X)
    Xs = scaling.transform(X)
    kv = make_uniform_knots(config.J, config.degree)
    data = RunData(X=Xs, y=y, kv=kv)

    def run_member(b: int) -> PprModel:
        rng = np.random.default_rng([config.seed, b])
        return run_greedy(data, config, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            members = list(pool.map(run_member, range(config.B)))
    else:
        members = [run_member(b) for b in range(config.B)]

    truncation = None
    if config.truncation_mode == "ln_n":
        truncation = max(
            math.log(X.shape[0]), float(np.max(np.abs(y)))
        )
    return EnsembleModel(
        config=config,
        members=members,
        feature_scaling=scaling,
        truncation=truncation,
        column_names=list(column_names) if column_names else None,
    )


def _ridge_to_dict(ridge: Ridge) -> dict:
    return {
        "subset": [int(i) for i in ridge.subset],
        "theta": [float(t) for t in ridge.theta],
        "scaler_lo": float(ridge.scaler.lo),
        "scaler_hi": float(ridge.scaler.hi),
        "coeffs": [float(c) for c in ridge.coeffs],
    }


def _member_to_dict(member: PprModel) -> dict:
    return {
        "variant": member.variant,
        "intercept": float(member.intercept),
        "k": int(member.k),
        "weights": [float(w) for w in member.weights],
        "bic_trace": [[int(t), float(b)] for t, b in member.bic_trace],
        "sse_trace": [float(s) for s in member.sse_trace],
        "ridges": [_ridge_to_dict(r) for r in member.ridges],
    }


def to_json_text(model: EnsembleModel) -> str:
    """Self-describing text form; serialize-parse-serialize is byte-stable."""
    doc = {
        "format": _FORMAT_TAG,
        "config": asdict(model.config),
        "feature_scaling": {
            "lo": [float(v) for v in model.feature_scaling.lo],
            "hi": [float(v) for v in model.feature_scaling.hi],
        },
        "truncation": (
            float(model.truncation) if model.truncation is not None else None
        ),
        "column_names": model.column_names,
        "members": [_member_to_dict(m) for m in model.members],
    }
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def from_json_text(text: str) -> EnsembleModel:
    """Rebuild a model from its serialized text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not a model document: {exc}")
    if doc.get("format") != _FORMAT_TAG:
        raise ConfigError(f"unrecognized model format {doc.get('format')!r}")
    config = FitConfig(**doc["config"])
    config.validate()
    kv = make_uniform_knots(config.J, config.degree)
    members = []
    for mdoc in doc["members"]:
        ridges = [
            Ridge(
                subset=np.asarray(rdoc["subset"], dtype=int),
                theta=np.asarray(rdoc["theta"], dtype=float),
                scaler=ProjectionScaler(rdoc["scaler_lo"], rdoc["scaler_hi"]),
                coeffs=np.asarray(rdoc["coeffs"], dtype=float),
                knots=kv,
            )
            for rdoc in mdoc["ridges"]
        ]
        members.append(
            PprModel(
                intercept=float(mdoc["intercept"]),
                ridges=ridges,
                weights=np.asarray(mdoc["weights"], dtype=float),
                variant=mdoc["variant"],
                k=int(mdoc["k"]),
                bic_trace=[(int(t), float(b)) for t, b in mdoc["bic_trace"]],
                sse_trace=[float(s) for s in mdoc["sse_trace"]],
            )
        )
    scaling = ColumnScaling(
        lo=np.asarray(doc["feature_scaling"]["lo"], dtype=float),
        hi=np.asarray(doc["feature_scaling"]["hi"], dtype=float),
    )
    truncation = doc.get("truncation")
    return EnsembleModel(
        config=config,
        members=members,
        feature_scaling=scaling,
        truncation=float(truncation) if truncation is not None else None,
        column_names=doc.get("column_names"),
    )


def save_model(model: EnsembleModel, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(to_json_text(model))


def load_model(path: str) -> EnsembleModel:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except FileNotFoundError:
        raise DataError("missing_file", f"no such model file: {path}")
    except OSError as exc:
        raise DataError("missing_file", f"cannot read {path}: {exc}")
    return from_json_text(text)
