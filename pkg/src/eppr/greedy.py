"""Greedy construction of a sum of ridge terms for one training run.

Three update rules share the candidate-search skeleton: ``aga`` jointly
refits every spline coefficient after each new term, ``oga`` rescales new
terms to unit empirical norm and refits only the scalar multipliers, and
``rga`` shrinks the running fit by a relaxation factor before each new
term.  A BIC criterion decides where to stop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NumericError
from .numerics import DEFAULT_DAMPING_SCALE, gram_mean_diag, solve_ridge_ls
from .singleindex import (
    ProjectionScaler,
    Ridge,
    SingleIndexOptions,
    eval_ridge_batch,
    fit_single_index,
    ridge_design_block,
)
from .spline import KnotVector

# Empirical norms below this leave a new oga term with coefficient zero.
_OGA_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class RunData:
    """Training matrices shared by every step of a greedy run."""

    X: np.ndarray
    y: np.ndarray
    kv: KnotVector


@dataclass
class PprModel:
    """One greedy run: intercept plus weighted ridge terms."""

    intercept: float
    ridges: list[Ridge]
    weights: np.ndarray
    variant: str
    k: int
    bic_trace: list[tuple[int, float]]
    sse_trace: list[float]
    objective_trace: list[float] | None = None

    @property
    def oga_scale(self) -> np.ndarray | None:
        return self.weights if self.variant == "oga" else None

    @property
    def rga_weights(self) -> np.ndarray | None:
        return self.weights if self.variant == "rga" else None

    def predict(self, X_scaled: np.ndarray) -> np.ndarray:
        out = np.full(X_scaled.shape[0], self.intercept)
        for w, ridge in zip(self.weights, self.ridges):
            out = out + w * eval_ridge_batch(ridge, X_scaled)
        return out


@dataclass
class RunState:
    """Mutable bookkeeping carried between greedy steps."""

    rng: np.random.Generator
    yc: np.ndarray
    ridges: list[Ridge] = field(default_factory=list)
    weights: list[float] = field(default_factory=list)
    fitted: np.ndarray | None = None
    design_blocks: list[np.ndarray] = field(default_factory=list)
    oga_columns: list[np.ndarray] = field(default_factory=list)
    sse_trace: list[float] = field(default_factory=list)
    bic_trace: list[tuple[int, float]] = field(default_factory=list)
    objective_trace: list[float] = field(default_factory=list)
    min_mean_diag: float | None = None

    def snapshot(self) -> tuple[list[Ridge], list[float]]:
        return list(self.ridges), list(self.weights)


def relaxation_weight(k: int) -> float:
    """Relaxation factor alpha_k = 1 - 2 / (k + 2) for step k >= 1."""
    if k < 1:
        raise ConfigError(f"relaxation index must be >= 1, got {k}")
    return 1.0 - 2.0 / (k + 2.0)


def bic_value(tau: int, sse: float, n: int, q: int, J: int, nu: float) -> float:
    """BIC score sse/n + tau ln(n) (q + J^(1+nu)) / n; tau = 0 drops the penalty."""
    if n < 1 or tau < 0:
        raise ConfigError("bic_value requires n >= 1 and tau >= 0")
    return sse / n + tau * math.log(n) * (q + float(J) ** (1.0 + nu)) / n


def select_candidate_subsets(
    p: int, q: int, ell: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Draw ``ell`` independent sorted q-subsets of {0, ..., p-1}.

    Duplicates across candidates are allowed; q = p always yields the full
    index set.
    """
    if not (1 <= q <= p):
        raise ConfigError(f"q must satisfy 1 <= q <= p, got q={q}, p={p}")
    if ell < 1:
        raise ConfigError(f"ell must be >= 1, got {ell}")
    return [
        np.sort(rng.choice(p, size=q, replace=False)) for _ in range(ell)
    ]


def _fit_candidates(
    data: RunData,
    residuals: np.ndarray,
    config,
    state: RunState,
) -> tuple[Ridge, float] | None:
    """Best single-index fit over the candidate subsets, or ``None``.

    Candidates failing numerically are skipped; configuration errors
    propagate.  Ties break toward the earliest candidate.
    """
    subsets = select_candidate_subsets(
        data.X.shape[1], config.q, config.ell, state.rng
    )
    best: tuple[float, Ridge] | None = None
    for subset in subsets:
        opts = SingleIndexOptions(rng=state.rng)
        try:
            ridge, sse = fit_single_index(
                data.X[:, subset], residuals, data.kv, opts, subset=subset
            )
        except (np.linalg.LinAlgError, FloatingPointError, NumericError):
            continue
        if not np.isfinite(sse):
            continue
        if best is None or sse < best[0]:
            best = (sse, ridge)
    if best is None:
        return None
    return best[1], best[0]


def _zero_ridge(data: RunData, config, state: RunState) -> Ridge:
    subset = np.arange(config.q)
    theta = np.zeros(config.q)
    theta[0] = 1.0
    return Ridge(
        subset=subset,
        theta=theta,
        scaler=ProjectionScaler(-1.0, 1.0),
        coeffs=np.zeros(data.kv.basis_count),
        knots=data.kv,
    )


def _record_step(state: RunState, config, data: RunData) -> None:
    tau = len(state.ridges)
    residual = state.yc - state.fitted
    sse = float(residual @ residual)
    state.sse_trace.append(sse)
    state.bic_trace.append(
        (
            tau,
            bic_value(
                tau, sse, data.y.shape[0], config.q, data.kv.basis_count, config.nu
            ),
        )
    )


def greedy_step_aga(state: RunState, data: RunData, config) -> RunState:
    """Append the best candidate ridge, then jointly refit all coefficients.

    Directions and scalers stay fixed; the damped joint objective never
    increases because the previous solution padded with zeros is feasible.
    The damping level is the running minimum of the mean Gram diagonal so
    later solves are never damped harder than earlier ones.
    """
    residuals = state.yc - state.fitted
    found = _fit_candidates(data, residuals, config, state)
    if found is None:
        state.ridges.append(_zero_ridge(data, config, state))
        state.design_blocks.append(
            np.zeros((data.X.shape[0], data.kv.basis_count))
        )
    else:
        ridge, _ = found
        state.ridges.append(ridge)
        state.design_blocks.append(ridge_design_block(ridge, data.X))

    design = np.hstack(state.design_blocks)
    mean_diag = gram_mean_diag(design)
    if state.min_mean_diag is None:
        state.min_mean_diag = mean_diag
    else:
        state.min_mean_diag = min(state.min_mean_diag, mean_diag)
    damping = DEFAULT_DAMPING_SCALE * state.min_mean_diag

    sol = solve_ridge_ls(design, state.yc, damping)
    J = data.kv.basis_count
    for i, ridge in enumerate(state.ridges):
        state.ridges[i] = replace(ridge, coeffs=sol.coefficients[i * J:(i + 1) * J])
    state.weights = [1.0] * len(state.ridges)
    state.fitted = design @ sol.coefficients
    objective = sol.sse + damping * float(
        sol.coefficients @ sol.coefficients
    )
    state.objective_trace.append(objective)
    _record_step(state, config, data)
    return state


def greedy_step_oga(state: RunState, data: RunData, config) -> RunState:
    """Append the best candidate rescaled to unit empirical norm, refit scalars.

    Only the multipliers c_1..c_k are re-solved (undamped, minimum-norm on
    ties), so the residual norm cannot increase.
    """
    residuals = state.yc - state.fitted
    found = _fit_candidates(data, residuals, config, state)
    n = data.X.shape[0]
    if found is None:
        state.ridges.append(_zero_ridge(data, config, state))
        state.oga_columns.append(np.zeros(n))
    else:
        ridge, _ = found
        values = eval_ridge_batch(ridge, data.X)
        norm = math.sqrt(float(values @ values) / n)
        if norm > _OGA_NORM_FLOOR:
            ridge = replace(ridge, coeffs=ridge.coeffs / norm)
            values = values / norm
        # Below the floor the column stays as-is; the minimum-norm refit
        # pins its multiplier near zero.
        state.ridges.append(ridge)
        state.oga_columns.append(values)

    columns = np.column_stack(state.oga_columns)
    sol = solve_ridge_ls(columns, state.yc, damping=0.0)
    state.weights = [float(c) for c in sol.coefficients]
    state.fitted = columns @ sol.coefficients
    _record_step(state, config, data)
    return state


def greedy_step_rga(state: RunState, data: RunData, config) -> RunState:
    """Shrink the running fit by alpha_k, then add a ridge fit to the gap.

    The model stays a weighted sum of stored terms: every previous weight
    is multiplied by alpha_k and the new term enters with weight one.
    """
    k = len(state.ridges) + 1
    alpha = relaxation_weight(k)
    residuals = state.yc - alpha * state.fitted
    found = _fit_candidates(data, residuals, config, state)
    if found is None:
        ridge = _zero_ridge(data, config, state)
        values = np.zeros(data.X.shape[0])
    else:
        ridge, _ = found
        values = eval_ridge_batch(ridge, data.X)
    state.ridges.append(ridge)
    state.weights = [w * alpha for w in state.weights] + [1.0]
    state.fitted = alpha * state.fitted + values
    _record_step(state, config, data)
    return state


_STEP_FUNCTIONS = {
    "aga": greedy_step_aga,
    "oga": greedy_step_oga,
    "rga": greedy_step_rga,
}


def run_greedy(data: RunData, config, rng: np.random.Generator) -> PprModel:
    """One full greedy run on pre-scaled training data.

    ``stopping="fixed_k"`` takes exactly ``k_max`` steps.  ``stopping="bic"``
    stops at the first tau >= 1 with BIC(tau) < BIC(tau + 1), discarding the
    (tau + 1)-th term; if no such tau appears by ``k_max`` the run keeps all
    ``k_max`` terms.  At least one term is always kept.
    """
    n, p = data.X.shape
    if config.variant not in _STEP_FUNCTIONS:
        raise ConfigError(f"unknown variant {config.variant!r}")
    if n <= data.kv.basis_count + config.q:
        raise ConfigError(
            "need more than J + q samples per run, got "
            f"n={n}, J={data.kv.basis_count}, q={config.q}"
        )
    step = _STEP_FUNCTIONS[config.variant]

    intercept = float(np.mean(data.y))
    state = RunState(rng=rng, yc=data.y - intercept)
    state.fitted = np.zeros(n)

    chosen: tuple[list[Ridge], list[float]] | None = None
    for tau in range(1, config.k_max + 1):
        before = state.snapshot()
        step(state, data, config)
        # BIC(tau - 1) < BIC(tau): keep the model as of step tau - 1 and
        # discard the term just added.
        if (
            config.stopping == "bic"
            and tau >= 2
            and state.bic_trace[tau - 2][1] < state.bic_trace[tau - 1][1]
        ):
            chosen = before
            break
    if chosen is None:
        chosen = state.snapshot()
    k_star = len(chosen[0])

    ridges, weights = chosen
    return PprModel(
        intercept=intercept,
        ridges=ridges,
        weights=np.asarray(weights, dtype=float),
        variant=config.variant,
        k=k_star,
        bic_trace=state.bic_trace,
        sse_trace=state.sse_trace,
        objective_trace=(
            state.objective_trace if config.variant == "aga" else None
        ),
    )


def fit_ppr_full(
    data: RunData, K: int, config, rng: np.random.Generator
) -> PprModel:
    """Plain projection pursuit: K additive terms on all predictors.

    Runs the ``aga`` recipe with the full index set as the only candidate,
    then up to five cyclic refinement passes, each re-optimizing every term
    against the residual of the others.  A term is replaced only when the
    refit improves it, so total SSE never increases; a pass without strict
    improvement ends the refinement.
    """
    n, p = data.X.shape
    if K < 1:
        raise ConfigError(f"K must be >= 1, got {K}")
    if n <= K * data.kv.basis_count + K * p:
        raise ConfigError(
            f"need more than K (J + p) = {K * (data.kv.basis_count + p)} samples"
        )

    full_config = replace(config, variant="aga", q=p, ell=1, k_max=K,
                          stopping="fixed_k")
    intercept = float(np.mean(data.y))
    yc = data.y - intercept
    state = RunState(rng=rng, yc=yc)
    state.fitted = np.zeros(n)
    subset = np.arange(p)
    contributions: list[np.ndarray] = []
    for _ in range(K):
        residuals = yc - state.fitted
        opts = SingleIndexOptions(rng=rng)
        ridge, _ = fit_single_index(data.X, residuals, data.kv, opts,
                                    subset=subset)
        state.ridges.append(ridge)
        state.design_blocks.append(ridge_design_block(ridge, data.X))
        design = np.hstack(state.design_blocks)
        mean_diag = gram_mean_diag(design)
        state.min_mean_diag = (
            mean_diag if state.min_mean_diag is None
            else min(state.min_mean_diag, mean_diag)
        )
        damping = DEFAULT_DAMPING_SCALE * state.min_mean_diag
        sol = solve_ridge_ls(design, yc, damping)
        J = data.kv.basis_count
        for i, r in enumerate(state.ridges):
            state.ridges[i] = replace(r, coeffs=sol.coefficients[i * J:(i + 1) * J])
        state.fitted = design @ sol.coefficients
        state.objective_trace.append(
            sol.sse + damping * float(sol.coefficients @ sol.coefficients)
        )
        _record_step(state, full_config, data)

    contributions = [
        eval_ridge_batch(r, data.X) for r in state.ridges
    ]
    # One term has nothing to cycle against: its step above already solved
    # the full problem.
    if K >= 2:
        state.fitted = np.sum(contributions, axis=0)
        for _ in range(5):
            improved = False
            for i in range(K):
                partial = state.fitted - contributions[i]
                target = yc - partial
                old = target - contributions[i]
                old_sse = float(old @ old)
                opts = SingleIndexOptions(rng=rng)
                new_ridge, new_sse = fit_single_index(
                    data.X, target, data.kv, opts, subset=subset
                )
                if new_sse < old_sse:
                    state.ridges[i] = new_ridge
                    contributions[i] = eval_ridge_batch(new_ridge, data.X)
                    state.fitted = partial + contributions[i]
                    improved = True
            if not improved:
                break

    residual = yc - state.fitted
    sse = float(residual @ residual)
    state.sse_trace.append(sse)
    return PprModel(
        intercept=intercept,
        ridges=list(state.ridges),
        weights=np.ones(K),
        variant="aga",
        k=K,
        bic_trace=state.bic_trace,
        sse_trace=state.sse_trace,
        objective_trace=state.objective_trace,
    )
