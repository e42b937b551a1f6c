"""Clamped B-spline bases on [-1, 1] with quasi-uniform interior knots.

Evaluation follows the Cox-de Boor recurrence.  At an interior knot the
basis takes its right limit; at v = 1 it takes its left limit, so the
clamped endpoint value is 1 for the last basis function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# Largest allowed ratio between adjacent breakpoint spacings.
_MESH_RATIO_TOL = 1.0 + 1e-12


@dataclass(frozen=True)
class KnotVector:
    """Clamped knot sequence on [-1, 1].

    ``knots`` has length ``basis_count + degree + 1`` with each endpoint
    repeated ``degree + 1`` times and ``interior_count`` knots strictly
    inside (-1, 1).
    """

    degree: int
    interior_count: int
    knots: np.ndarray = field(repr=False)
    basis_count: int

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise ConfigError(f"degree must be >= 0, got {self.degree}")
        if self.basis_count != self.interior_count + self.degree + 1:
            raise ConfigError(
                "basis_count must equal interior_count + degree + 1"
            )
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        if knots.shape != (self.basis_count + self.degree + 1,):
            raise ConfigError("knot sequence has the wrong length")
        if np.any(np.diff(knots) < 0):
            raise ConfigError("knots must be non-decreasing")
        if not (np.all(knots[: self.degree + 1] == -1.0)
                and np.all(knots[-(self.degree + 1):] == 1.0)):
            raise ConfigError("endpoints must be knots of multiplicity degree + 1")
        breaks = np.unique(knots)
        gaps = np.diff(breaks)
        if gaps.size > 1 and gaps.max() > gaps.min() * _MESH_RATIO_TOL:
            raise ConfigError("interior knot spacing must be quasi-uniform")


def make_uniform_knots(basis_count: int, degree: int) -> KnotVector:
    """Build the clamped knot vector with equally spaced breakpoints.

    ``basis_count`` (J) is the dimension of the spline space; there are
    ``J - degree`` polynomial pieces on [-1, 1].
    """
    if degree < 0:
        raise ConfigError(f"degree must be >= 0, got {degree}")
    if basis_count < degree + 1:
        raise ConfigError(
            f"basis_count must be at least degree + 1, got {basis_count}"
        )
    pieces = basis_count - degree
    breaks = np.linspace(-1.0, 1.0, pieces + 1)
    knots = np.concatenate([
        np.full(degree + 1, -1.0),
        breaks[1:-1],
        np.full(degree + 1, 1.0),
    ])
    return KnotVector(
        degree=degree,
        interior_count=pieces - 1,
        knots=knots,
        basis_count=basis_count,
    )


def _find_spans(kv: KnotVector, v: np.ndarray) -> np.ndarray:
    # Span i satisfies knots[i] <= v < knots[i+1]; v = 1 maps onto the last
    # non-empty span so the endpoint takes its left limit.
    spans = np.searchsorted(kv.knots, v, side="right") - 1
    return np.clip(spans, kv.degree, kv.basis_count - 1)


def _check_domain(v: np.ndarray) -> None:
    if v.size and (np.min(v) < -1.0 or np.max(v) > 1.0):
        raise ValueError("evaluation points must lie in [-1, 1]")


def basis_matrix(kv: KnotVector, v: np.ndarray) -> np.ndarray:
    """Evaluate all basis functions at each point of ``v``.

    Returns an array of shape ``(len(v), basis_count)`` whose rows sum to 1.
    """
    v = np.ascontiguousarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError("v must be one-dimensional")
    _check_domain(v)
    return _recurrence(kv, v, kv.degree)


def basis_deriv_matrix(kv: KnotVector, v: np.ndarray) -> np.ndarray:
    """Evaluate first derivatives of all basis functions at each point.

    Uses the same one-sided limit convention as ``basis_matrix``; rows sum
    to 0.  Requires ``degree >= 1``.
    """
    if kv.degree < 1:
        raise ValueError("derivative requires degree >= 1")
    v = np.ascontiguousarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError("v must be one-dimensional")
    _check_domain(v)
    lower = _recurrence(kv, v, kv.degree - 1)
    T = kv.knots
    d = kv.degree
    out = np.zeros((v.size, kv.basis_count))
    for j in range(kv.basis_count):
        den_l = T[j + d] - T[j]
        den_r = T[j + d + 1] - T[j + 1]
        if den_l > 0.0:
            out[:, j] += d / den_l * lower[:, j]
        if den_r > 0.0:
            out[:, j] -= d / den_r * lower[:, j + 1]
    return out


def _recurrence(kv: KnotVector, v: np.ndarray, upto: int) -> np.ndarray:
    """Cox-de Boor triangle, returning the degree-``upto`` stage.

    The stage has ``basis_count + degree - upto`` columns indexed so that
    column j holds B_{j,upto} on the full knot sequence.
    """
    T = kv.knots
    n_pts = v.size
    spans = _find_spans(kv, v)
    stage = np.zeros((n_pts, kv.basis_count + kv.degree))
    stage[np.arange(n_pts), spans] = 1.0
    for deg in range(1, upto + 1):
        cols = kv.basis_count + kv.degree - deg
        nxt = np.zeros((n_pts, cols))
        for j in range(cols):
            den_l = T[j + deg] - T[j]
            den_r = T[j + deg + 1] - T[j + 1]
            if den_l > 0.0:
                nxt[:, j] += (v - T[j]) / den_l * stage[:, j]
            if den_r > 0.0:
                nxt[:, j] += (T[j + deg + 1] - v) / den_r * stage[:, j + 1]
        stage = nxt
    return stage


def eval_basis(kv: KnotVector, v: float) -> np.ndarray:
    """Values of the ``basis_count`` basis functions at a single point."""
    return basis_matrix(kv, np.array([float(v)]))[0]


def eval_basis_deriv(kv: KnotVector, v: float) -> np.ndarray:
    """First derivatives of the basis functions at a single point."""
    return basis_deriv_matrix(kv, np.array([float(v)]))[0]
