"""Single-index ridge functions g(theta' x) and their alternating fit.

A ridge couples a unit direction on a predictor subset with a spline in
the scaled projection.  Fitting alternates damped least squares for the
spline coefficients with a sphere-constrained Gauss-Newton update of the
direction, from several starts, keeping the best.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .numerics import gauss_newton_delta, solve_ridge_ls
from .spline import KnotVector, basis_deriv_matrix, basis_matrix

# Projection ranges narrower than this collapse the ridge to a constant.
_DEGENERATE_SPAN = 1e-12


@dataclass(frozen=True)
class ProjectionScaler:
    """Affine map sending the training range [lo, hi] onto [-1, 1].

    Points outside the training range are clamped to the endpoints.
    """

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (self.hi > self.lo):
            raise ConfigError("scaler requires hi > lo")

    def transform(self, z: np.ndarray | float) -> np.ndarray | float:
        return np.clip(2.0 * (z - self.lo) / (self.hi - self.lo) - 1.0, -1.0, 1.0)

    @property
    def slope(self) -> float:
        """d(scaled)/d(raw projection), away from the clamped region."""
        return 2.0 / (self.hi - self.lo)


@dataclass(frozen=True)
class Ridge:
    """One fitted term: spline coefficients over a scaled projection."""

    subset: np.ndarray
    theta: np.ndarray
    scaler: ProjectionScaler
    coeffs: np.ndarray
    knots: KnotVector

    def __post_init__(self) -> None:
        subset = np.asarray(self.subset, dtype=int)
        theta = np.asarray(self.theta, dtype=float)
        coeffs = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "subset", subset)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "coeffs", coeffs)
        if subset.ndim != 1 or theta.shape != subset.shape:
            raise ConfigError("subset and theta must be matching vectors")
        if subset.size and np.any(np.diff(subset) <= 0):
            raise ConfigError("subset indices must be strictly increasing")
        if abs(float(theta @ theta) - 1.0) > 1e-8:
            raise ConfigError("theta must have unit norm")
        if coeffs.shape != (self.knots.basis_count,):
            raise ConfigError("coefficient count must match the spline basis")


def project_and_scale(ridge: Ridge, x: np.ndarray) -> float:
    """Scaled projection of one predictor row onto the ridge direction."""
    z = float(ridge.theta @ np.asarray(x, dtype=float)[ridge.subset])
    return float(ridge.scaler.transform(z))


def eval_ridge(ridge: Ridge, x: np.ndarray) -> float:
    v = project_and_scale(ridge, x)
    return float(ridge.coeffs @ basis_matrix(ridge.knots, np.array([v]))[0])


def eval_ridge_batch(ridge: Ridge, X: np.ndarray) -> np.ndarray:
    """Ridge values for every row of ``X`` (full predictor matrix)."""
    z = X[:, ridge.subset] @ ridge.theta
    v = np.asarray(ridge.scaler.transform(z), dtype=float)
    return basis_matrix(ridge.knots, v) @ ridge.coeffs


def ridge_design_block(ridge: Ridge, X: np.ndarray) -> np.ndarray:
    """Spline design matrix of the ridge's projections, one row per sample."""
    z = X[:, ridge.subset] @ ridge.theta
    v = np.asarray(ridge.scaler.transform(z), dtype=float)
    return basis_matrix(ridge.knots, v)


@dataclass
class SingleIndexOptions:
    """Knobs for the alternating fit."""

    rng: np.random.Generator
    n_starts: int = 5
    max_alternations: int = 20
    rel_tol: float = 1e-6
    max_halvings: int = 10
    trace_sink: list | None = None


def _unit(vec: np.ndarray) -> np.ndarray | None:
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12 or not np.isfinite(norm):
        return None
    return vec / norm


def _first_axis_unit(q: int) -> np.ndarray:
    theta = np.zeros(q)
    theta[0] = 1.0
    return theta


def _constant_ridge(
    subset: np.ndarray, q: int, kv: KnotVector, value: float
) -> Ridge:
    # A constant is in the spline space because the basis sums to one.
    return Ridge(
        subset=subset,
        theta=_first_axis_unit(q),
        scaler=ProjectionScaler(-1.0, 1.0),
        coeffs=np.full(kv.basis_count, value),
        knots=kv,
    )


def _solve_at_theta(
    X_A: np.ndarray,
    residuals: np.ndarray,
    kv: KnotVector,
    theta: np.ndarray,
):
    """Scaler, design, coefficients, and SSE for a fixed direction.

    Returns ``None`` when the projections are too narrow to scale.
    """
    z = X_A @ theta
    lo = float(np.min(z))
    hi = float(np.max(z))
    if hi - lo < _DEGENERATE_SPAN:
        return None
    scaler = ProjectionScaler(lo, hi)
    v = np.asarray(scaler.transform(z), dtype=float)
    design = basis_matrix(kv, v)
    sol = solve_ridge_ls(design, residuals)
    return scaler, v, design, sol.coefficients, sol.sse


def _flip_to_sign_convention(ridge: Ridge) -> Ridge:
    """Make the largest-magnitude entry of theta non-negative.

    Flipping the direction negates the projection; with the symmetric knot
    sequence the same function is represented by reversing the coefficient
    order and swapping the scaler bounds, so predictions are unchanged.
    """
    idx = int(np.argmax(np.abs(ridge.theta)))
    if ridge.theta[idx] >= 0.0:
        return ridge
    return replace(
        ridge,
        theta=-ridge.theta,
        scaler=ProjectionScaler(-ridge.scaler.hi, -ridge.scaler.lo),
        coeffs=ridge.coeffs[::-1].copy(),
    )


def fit_single_index(
    X_A: np.ndarray,
    residuals: np.ndarray,
    kv: KnotVector,
    opts: SingleIndexOptions,
    subset: np.ndarray | None = None,
) -> tuple[Ridge, float]:
    """Fit one ridge to ``residuals`` over the predictor block ``X_A``.

    Multi-start alternation: (a) damped LS for the spline coefficients at
    the current direction, (b) Gauss-Newton direction update with
    step-halving, accepted only when the refitted SSE decreases.  The
    returned SSE is the training SSE of the best start.
    """
    X_A = np.asarray(X_A, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    n, q = X_A.shape
    if subset is None:
        subset = np.arange(q)
    if n <= kv.basis_count + q:
        raise ConfigError(
            f"need more than J + q = {kv.basis_count + q} samples, got {n}"
        )

    # Constant residuals (including all zeros) are matched exactly by a
    # constant spline; no direction carries information.
    spread = float(np.max(residuals) - np.min(residuals))
    if spread < 1e-14 * max(1.0, float(np.max(np.abs(residuals)))):
        value = float(residuals[0]) if n else 0.0
        return _constant_ridge(subset, q, kv, value), 0.0

    starts: list[np.ndarray] = []
    ols = _ols_direction(X_A, residuals)
    starts.append(ols if ols is not None else _first_axis_unit(q))
    for _ in range(opts.n_starts - 1):
        drawn = _unit(opts.rng.standard_normal(q))
        starts.append(drawn if drawn is not None else _first_axis_unit(q))

    best: tuple[float, Ridge] | None = None
    for theta0 in starts:
        fitted = _fit_from_start(X_A, residuals, kv, theta0, opts, subset)
        if fitted is None:
            continue
        sse, ridge = fitted
        if best is None or sse < best[0]:
            best = (sse, ridge)

    if best is None:
        # Every start collapsed; fall back to the best constant.
        value = float(np.mean(residuals))
        centered = residuals - value
        return (
            _constant_ridge(subset, q, kv, value),
            float(centered @ centered),
        )
    sse, ridge = best
    return _flip_to_sign_convention(ridge), sse


def _ols_direction(X_A: np.ndarray, residuals: np.ndarray) -> np.ndarray | None:
    design = np.column_stack([np.ones(X_A.shape[0]), X_A])
    beta = np.linalg.lstsq(design, residuals, rcond=None)[0]
    return _unit(beta[1:])


def _fit_from_start(
    X_A: np.ndarray,
    residuals: np.ndarray,
    kv: KnotVector,
    theta0: np.ndarray,
    opts: SingleIndexOptions,
    subset: np.ndarray,
) -> tuple[float, Ridge] | None:
    theta = theta0
    state = _solve_at_theta(X_A, residuals, kv, theta)
    if state is None:
        # Degenerate projection: this start can only offer a constant fit.
        value = float(np.mean(residuals))
        centered = residuals - value
        return float(centered @ centered), _constant_ridge(
            subset, X_A.shape[1], kv, value
        )
    scaler, v, design, coeffs, sse = state
    trace = [sse]

    for _ in range(opts.max_alternations):
        fitted_vals = design @ coeffs
        slope_g = basis_deriv_matrix(kv, v) @ coeffs
        jacobian = (slope_g * scaler.slope)[:, None] * X_A
        delta = gauss_newton_delta(theta, residuals - fitted_vals, jacobian)
        if delta is None:
            break

        accepted = False
        step = delta
        for _ in range(opts.max_halvings + 1):
            cand_theta = _unit(theta + step)
            step = step * 0.5
            if cand_theta is None:
                continue
            cand_state = _solve_at_theta(X_A, residuals, kv, cand_theta)
            if cand_state is None:
                continue
            if cand_state[4] < sse:
                theta = cand_theta
                scaler, v, design, coeffs, new_sse = cand_state
                accepted = True
                break
        if not accepted:
            break
        prev_sse = sse
        sse = new_sse
        trace.append(sse)
        if prev_sse - sse < opts.rel_tol * max(prev_sse, 1e-30):
            break

    if opts.trace_sink is not None:
        opts.trace_sink.append(trace)
    ridge = Ridge(
        subset=subset, theta=theta, scaler=scaler, coeffs=coeffs, knots=kv
    )
    return sse, ridge
