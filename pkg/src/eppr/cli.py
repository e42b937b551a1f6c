"""Command-line interface: train, predict, benchmark, synth.

The benchmark report is written to stdout as a human-readable table plus
a ``[machine]`` block of key=value lines; everything in it is a pure
function of (data, seed, flags), so identical invocations produce
byte-identical reports.  Timing is logged to stderr instead.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from . import ensemble
from .data_io import Dataset, load_csv, load_feature_matrix, partition
from .errors import ConfigError, DataError, NumericError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

# Phi^{-1}(0.9): half the class-mean separation giving Bayes error 0.10.
_TWO_GAUSSIAN_DELTA = 1.2815515655446004

SCENARIOS = ("single_index", "additive3", "ppr3", "noise", "two_gaussian")


def metric_rpe(
    predictions: np.ndarray, y_test: np.ndarray, y_train_mean: float
) -> float:
    """Relative prediction error against the train-mean predictor.

    sum (pred - y)^2 / sum (train mean - y)^2; an exactly constant test
    response leaves the denominator zero and the metric undefined.
    """
    predictions = np.asarray(predictions, dtype=float)
    y_test = np.asarray(y_test, dtype=float)
    if predictions.shape != y_test.shape or predictions.ndim != 1:
        raise ConfigError("predictions and y_test must be matching vectors")
    num = float(np.sum((predictions - y_test) ** 2))
    den = float(np.sum((y_train_mean - y_test) ** 2))
    if den == 0.0:
        raise NumericError("relative prediction error undefined: "
                           "constant test response equal to the train mean")
    return num / den


def metric_mr(predictions: np.ndarray, y_test: np.ndarray) -> float:
    """Misclassification rate of the strict 0.5 threshold (ties -> class 0)."""
    predictions = np.asarray(predictions, dtype=float)
    y_test = np.asarray(y_test, dtype=float)
    if predictions.shape != y_test.shape or predictions.ndim != 1:
        raise ConfigError("predictions and y_test must be matching vectors")
    if not np.all((y_test == 0.0) | (y_test == 1.0)):
        raise ConfigError("classification labels must be 0 or 1")
    labels = (predictions > 0.5).astype(float)
    return float(np.mean(labels != y_test))


# ---------------------------------------------------------------------------
# Synthetic scenarios


def generate_scenario(
    scenario: str, n: int, p: int, noise: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, str]:
    """Draw one synthetic table; returns (X, y, generator description)."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; pick from {SCENARIOS}")
    if n < 1 or p < 1:
        raise ConfigError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    if noise < 0.0:
        raise ConfigError(f"noise must be >= 0, got {noise}")

    if scenario == "single_index":
        theta = rng.standard_normal(p)
        theta = theta / np.linalg.norm(theta)
        X = rng.uniform(-1.0, 1.0, size=(n, p))
        y = np.sin(2.0 * (X @ theta)) + noise * rng.standard_normal(n)
        doc = (
            "y = sin(2 * theta' x) + noise * N(0, 1)\n"
            "x ~ Uniform(-1, 1)^p\n"
            f"theta = {theta.tolist()!r}\n"
        )
        return X, y, doc

    if scenario == "additive3":
        if p < 9:
            raise ConfigError("additive3 needs p >= 9")
        X = rng.uniform(-1.0, 1.0, size=(n, p))
        m1 = np.sin(np.pi * X[:, 0] * X[:, 1]) + X[:, 2] ** 2
        m2 = np.cos(np.pi * X[:, 3]) * X[:, 4] + 0.5 * X[:, 5]
        m3 = np.exp(X[:, 6] * X[:, 7]) - 1.0 + X[:, 8]
        y = m1 + m2 + m3 + noise * rng.standard_normal(n)
        doc = (
            "y = m1(x1,x2,x3) + m2(x4,x5,x6) + m3(x7,x8,x9) + noise * N(0,1)\n"
            "m1 = sin(pi x1 x2) + x3^2\n"
            "m2 = cos(pi x4) x5 + 0.5 x6\n"
            "m3 = exp(x7 x8) - 1 + x9\n"
            "x ~ Uniform(-1, 1)^p\n"
        )
        return X, y, doc

    if scenario == "ppr3":
        if p < 9:
            raise ConfigError("ppr3 needs p >= 9")
        X = rng.uniform(-1.0, 1.0, size=(n, p))
        subsets = [(0, 1, 2), (3, 4, 5), (6, 7, 8)]
        thetas = []
        for _ in subsets:
            t = rng.standard_normal(3)
            thetas.append(t / np.linalg.norm(t))
        z1 = X[:, subsets[0]] @ thetas[0]
        z2 = X[:, subsets[1]] @ thetas[1]
        z3 = X[:, subsets[2]] @ thetas[2]
        y = (
            3.0 * np.sin(np.pi * z1)
            + 2.0 * z2 ** 2
            + np.exp(z3)
            + noise * rng.standard_normal(n)
        )
        doc = (
            "y = 3 sin(pi z1) + 2 z2^2 + exp(z3) + noise * N(0, 1)\n"
            "z1 = theta1' (x1,x2,x3), z2 = theta2' (x4,x5,x6), "
            "z3 = theta3' (x7,x8,x9)\n"
            "x ~ Uniform(-1, 1)^p\n"
            f"theta1 = {thetas[0].tolist()!r}\n"
            f"theta2 = {thetas[1].tolist()!r}\n"
            f"theta3 = {thetas[2].tolist()!r}\n"
        )
        return X, y, doc

    if scenario == "noise":
        X = rng.uniform(-1.0, 1.0, size=(n, p))
        y = rng.standard_normal(n)
        doc = (
            "y = N(0, 1), independent of x; the best relative prediction\n"
            "error attainable is 1 and any lower test value is chance.\n"
            "x ~ Uniform(-1, 1)^p; the noise flag is unused.\n"
        )
        return X, y, doc

    # two_gaussian
    labels = rng.integers(0, 2, size=n)
    mu = np.full(p, _TWO_GAUSSIAN_DELTA / np.sqrt(p))
    X = rng.standard_normal((n, p)) + np.where(labels[:, None] == 1, mu, -mu)
    doc = (
        "x | y=1 ~ N(+mu, I), x | y=0 ~ N(-mu, I), P(y=1) = 1/2\n"
        f"mu = ({_TWO_GAUSSIAN_DELTA} / sqrt(p)) * ones(p)\n"
        "Bayes misclassification rate = Phi(-1.28155...) = 0.10 by\n"
        "construction; the noise flag is unused.\n"
    )
    return X, labels.astype(float), doc


def write_scenario_csv(path: str, X: np.ndarray, y: np.ndarray) -> None:
    names = [f"x{j + 1}" for j in range(X.shape[1])] + ["y"]
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(names) + "\n")
        for i in range(X.shape[0]):
            cells = [repr(float(v)) for v in X[i]]
            cells.append(repr(float(y[i])))
            handle.write(",".join(cells) + "\n")


# ---------------------------------------------------------------------------
# Benchmark protocol


@dataclass
class BenchmarkReport:
    """Everything a benchmark run produced, timing included.

    ``render`` emits only the deterministic part; wall-clock stays out of
    the document so identical runs yield byte-identical reports.
    """

    data_label: str
    task: str
    metric_name: str
    repeats: int
    seed: int
    n_train: int
    n_test: int
    values: list[float | None]
    errors: list[str | None]
    k_means: list[float | None]
    baseline_values: list[float | None] | None
    config_snapshot: dict
    wall_clock: list[float]

    def successful(self) -> list[float]:
        return [v for v in self.values if v is not None]

    def render(self) -> str:
        lines = [
            "ensemble projection pursuit benchmark",
            f"data: {self.data_label}",
            f"task: {self.task}   metric: {self.metric_name}",
            f"repeats: {self.repeats}   seed: {self.seed}",
            f"split: {self.n_train} train / {self.n_test} test",
            "",
        ]
        header = f"{'repeat':>6}  {'k_mean':>7}  {self.metric_name:>12}"
        if self.baseline_values is not None:
            header += f"  {'baseline_' + self.metric_name:>16}"
        lines.append(header)
        for i in range(self.repeats):
            if self.values[i] is None:
                row = f"{i + 1:>6}  {'-':>7}  {'failed':>12}"
                if self.baseline_values is not None:
                    row += f"  {'-':>16}"
                row += f"   ({self.errors[i]})"
            else:
                row = f"{i + 1:>6}  {self.k_means[i]:>7.2f}  {self.values[i]:>12.6f}"
                if self.baseline_values is not None:
                    base = self.baseline_values[i]
                    row += (
                        f"  {base:>16.6f}" if base is not None else f"  {'-':>16}"
                    )
            lines.append(row)
        lines.append("")

        good = self.successful()
        if good:
            mean = float(np.mean(good))
            std = float(np.std(good))
            lines.append(
                f"summary: {self.metric_name} mean {mean:.6f}  std {std:.6f}"
                f"  over {len(good)} repeat(s)"
            )
        else:
            lines.append("summary: no successful repeats")
        if self.baseline_values is not None:
            base_good = [v for v in self.baseline_values if v is not None]
            if base_good:
                lines.append(
                    f"baseline: {self.metric_name} mean "
                    f"{float(np.mean(base_good)):.6f}  std "
                    f"{float(np.std(base_good)):.6f}"
                )
        lines.append("")

        lines.append("[machine]")
        kv = {
            "data": self.data_label,
            "task": self.task,
            "metric": self.metric_name,
            "repeats": self.repeats,
            "seed": self.seed,
            "n_train": self.n_train,
            "n_test": self.n_test,
        }
        for key in sorted(self.config_snapshot):
            kv[f"config_{key}"] = self.config_snapshot[key]
        for i in range(self.repeats):
            value = self.values[i]
            kv[f"{self.metric_name}_repeat_{i + 1}"] = (
                "failed" if value is None else repr(value)
            )
        if good:
            kv[f"{self.metric_name}_mean"] = repr(float(np.mean(good)))
            kv[f"{self.metric_name}_std"] = repr(float(np.std(good)))
        if self.baseline_values is not None:
            for i in range(self.repeats):
                base = self.baseline_values[i]
                kv[f"baseline_{self.metric_name}_repeat_{i + 1}"] = (
                    "failed" if base is None else repr(base)
                )
            base_good = [v for v in self.baseline_values if v is not None]
            if base_good:
                kv[f"baseline_{self.metric_name}_mean"] = repr(
                    float(np.mean(base_good))
                )
        for key, value in kv.items():
            lines.append(f"{key}={value}")
        lines.append("")
        return "\n".join(lines)


def _linear_baseline(
    X_train: np.ndarray, y_train: np.ndarray, X_test: np.ndarray
) -> np.ndarray:
    design = np.column_stack([np.ones(X_train.shape[0]), X_train])
    beta = np.linalg.lstsq(design, y_train, rcond=None)[0]
    return beta[0] + X_test @ beta[1:]


def run_benchmark(
    dataset: Dataset,
    task: str,
    repeats: int,
    seed: int,
    overrides: dict | None = None,
    baseline: bool = False,
    data_label: str = "",
    workers: int = 1,
) -> BenchmarkReport:
    """Repeated random-split evaluation on one dataset.

    Each repeat draws its own partition and fit seed from (seed, repeat
    index); the fit uses data-driven defaults unless ``overrides`` pins
    specific fields.  Metric failures are recorded per repeat rather than
    aborting the run.
    """
    if task not in ("regression", "classification"):
        raise ConfigError("task must be regression or classification")
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")
    if seed < 0:
        raise ConfigError(f"seed must be >= 0, got {seed}")
    metric_name = "rpe" if task == "regression" else "mr"

    values: list[float | None] = []
    errors: list[str | None] = []
    k_means: list[float | None] = []
    baseline_values: list[float | None] | None = [] if baseline else None
    wall_clock: list[float] = []
    config_snapshot: dict = {}
    n_train = n_test = 0

    for rep in range(repeats):
        part_rng = np.random.default_rng([seed, rep, 0])
        train, test = partition(dataset, part_rng)
        n_train, n_test = train.X.shape[0], test.X.shape[0]
        config = ensemble.default_config(n_train, train.X.shape[1])
        if overrides:
            config = replace(config, **overrides)
        fit_seed = int(
            np.random.SeedSequence([seed, rep, 1]).generate_state(1)[0]
        )
        config = replace(config, seed=fit_seed)
        if not config_snapshot:
            snapshot = dict(vars(config))
            del snapshot["seed"]  # per-repeat; the protocol seed is reported
            config_snapshot = snapshot

        started = time.perf_counter()
        model = ensemble.fit(train.X, train.y, config, workers=workers)
        predictions = model.predict(test.X)
        elapsed = time.perf_counter() - started
        wall_clock.append(elapsed)
        print(
            f"repeat {rep + 1}/{repeats}: fit+predict {elapsed:.2f}s",
            file=sys.stderr,
        )

        k_means.append(float(np.mean([m.k for m in model.members])))
        try:
            if task == "regression":
                value = metric_rpe(
                    predictions, test.y, float(np.mean(train.y))
                )
            else:
                value = metric_mr(predictions, test.y)
            values.append(value)
            errors.append(None)
        except (NumericError, ConfigError) as exc:
            values.append(None)
            errors.append(str(exc))

        if baseline_values is not None:
            base_pred = _linear_baseline(train.X, train.y, test.X)
            try:
                if task == "regression":
                    base = metric_rpe(
                        base_pred, test.y, float(np.mean(train.y))
                    )
                else:
                    base = metric_mr(base_pred, test.y)
                baseline_values.append(base)
            except (NumericError, ConfigError):
                baseline_values.append(None)

    return BenchmarkReport(
        data_label=data_label,
        task=task,
        metric_name=metric_name,
        repeats=repeats,
        seed=seed,
        n_train=n_train,
        n_test=n_test,
        values=values,
        errors=errors,
        k_means=k_means,
        baseline_values=baseline_values,
        config_snapshot=config_snapshot,
        wall_clock=wall_clock,
    )


# ---------------------------------------------------------------------------
# Commands


def _resolve_target(path: str, target: str) -> Dataset:
    """Load with the target given by name, falling back to a column index."""
    try:
        return load_csv(path, target)
    except DataError as exc:
        if exc.code == "missing_target" and target.lstrip("-").isdigit():
            return load_csv(path, int(target))
        raise


def _config_overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    for flag, field_name in (
        ("variant", "variant"),
        ("q", "q"),
        ("ell", "ell"),
        ("B", "B"),
        ("kmax", "k_max"),
        ("J", "J"),
        ("degree", "degree"),
        ("nu", "nu"),
        ("stopping", "stopping"),
        ("truncate", "truncation_mode"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field_name] = value
    return overrides


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--variant", choices=("aga", "oga", "rga"))
    parser.add_argument("--q", type=int, help="bagged subset size")
    parser.add_argument("--ell", type=int, help="candidate subsets per step")
    parser.add_argument("--B", type=int, help="ensemble size")
    parser.add_argument("--kmax", type=int, help="greedy step cap")
    parser.add_argument("--J", type=int, help="spline basis dimension")
    parser.add_argument("--degree", type=int, help="spline degree")
    parser.add_argument("--nu", type=float, help="BIC penalty exponent")
    parser.add_argument("--stopping", choices=("bic", "fixed_k"))
    parser.add_argument("--truncate", choices=("off", "ln_n"))


def cmd_train(args: argparse.Namespace) -> int:
    dataset = _resolve_target(args.data, args.target)
    n, p = dataset.X.shape
    config = ensemble.default_config(n, p)
    overrides = _config_overrides(args)
    if overrides:
        config = replace(config, **overrides)
    config = replace(config, seed=args.seed)
    model = ensemble.fit(
        dataset.X, dataset.y, config, column_names=dataset.column_names
    )
    ensemble.save_model(model, args.out)
    mean_k = float(np.mean([m.k for m in model.members]))
    print(f"trained on {n} rows x {p} predictors "
          f"({dataset.dropped_rows} dropped)")
    print(f"members: {config.B}   variant: {config.variant}   "
          f"mean k: {mean_k:.2f}")
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    model = ensemble.load_model(args.model)
    feature_names = (
        model.column_names[:-1] if model.column_names else None
    )
    X = load_feature_matrix(args.data, feature_names)
    predictions = model.predict(X)
    with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("prediction\n")
        for value in predictions:
            handle.write(repr(float(value)) + "\n")
    print(f"{predictions.shape[0]} prediction(s) written to {args.out}")
    return EXIT_OK


def cmd_benchmark(args: argparse.Namespace) -> int:
    dataset = _resolve_target(args.data, args.target)
    report = run_benchmark(
        dataset,
        task=args.task,
        repeats=args.repeats,
        seed=args.seed,
        overrides=_config_overrides(args),
        baseline=args.baseline,
        data_label=args.data,
    )
    sys.stdout.write(report.render())
    if not report.successful():
        print("error: every repeat failed to produce a metric",
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    X, y, doc = generate_scenario(args.scenario, args.n, args.p, args.noise,
                                  rng)
    write_scenario_csv(args.out, X, y)
    meta_path = args.out + ".meta.txt"
    with open(meta_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"scenario: {args.scenario}\n")
        handle.write(f"n: {args.n}\np: {args.p}\n")
        handle.write(f"noise: {args.noise}\nseed: {args.seed}\n\n")
        handle.write(doc)
    print(f"{args.n} rows written to {args.out} (generator in {meta_path})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eppr",
        description="Ensemble projection pursuit regression on CSV tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fit a model on a CSV file")
    train.add_argument("--data", required=True)
    train.add_argument("--target", required=True,
                       help="response column name or index")
    train.add_argument("--out", required=True, help="model file to write")
    train.add_argument("--seed", type=int, default=0)
    _add_config_flags(train)
    train.set_defaults(handler=cmd_train)

    predict = sub.add_parser("predict", help="apply a stored model")
    predict.add_argument("--model", required=True)
    predict.add_argument("--data", required=True)
    predict.add_argument("--out", required=True,
                         help="predictions file to write")
    predict.set_defaults(handler=cmd_predict)

    bench = sub.add_parser(
        "benchmark", help="repeated random-split evaluation"
    )
    bench.add_argument("--data", required=True)
    bench.add_argument("--target", required=True)
    bench.add_argument("--task", choices=("regression", "classification"),
                       default="regression")
    bench.add_argument("--repeats", type=int, default=5)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--baseline", action="store_true",
                       help="also score a linear least-squares fit")
    _add_config_flags(bench)
    bench.set_defaults(handler=cmd_benchmark)

    synth = sub.add_parser("synth", help="write a synthetic dataset")
    synth.add_argument("--scenario", required=True, choices=SCENARIOS)
    synth.add_argument("--n", type=int, required=True)
    synth.add_argument("--p", type=int, required=True)
    synth.add_argument("--noise", type=float, default=0.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)
    synth.set_defaults(handler=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
