"""Ridge regression on a column subset of the design matrix.

Every quantity is evaluated through a thin SVD ``X = U diag(d) V^T`` that is
computed once per block. With shrinkage factors ``a_i = d_i^2 / (d_i^2 + lam)``
the ridge hat matrix is ``U diag(a) U^T`` and the effective degrees of freedom
are ``tr(2H - H^2) = sum(2 a_i - a_i^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InfeasibleDf, SingularBlock, ValidationError

RANK_RTOL = 1e-10
DF_TOL = 1e-10
MAX_BISECTIONS = 200


@dataclass(frozen=True, eq=False)
class DesignBlock:
    """Dense ``n x p_l`` block with its cached thin SVD.

    Only the singular triplets above ``RANK_RTOL * d_max`` are kept, so
    ``u``, ``d`` and ``vt`` describe the numerical column space.
    """

    columns: tuple[int, ...]
    values: np.ndarray
    u: np.ndarray = field(init=False, repr=False)
    d: np.ndarray = field(init=False, repr=False)
    vt: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        columns = tuple(int(c) for c in self.columns)
        if values.ndim != 2 or values.shape[1] != len(columns):
            raise DimensionMismatch(
                f"block has {values.shape[-1]} columns but {len(columns)} indices")
        if not columns:
            raise ValidationError("a design block needs at least one column")
        if any(c < 0 for c in columns) or any(
                b <= a for a, b in zip(columns, columns[1:])):
            raise ValidationError(
                f"column indices must be nonnegative and strictly increasing: {columns}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("design block contains non-finite values")
        u, d, vt = np.linalg.svd(values, full_matrices=False)
        keep = d > RANK_RTOL * d[0] if d.size and d[0] > 0 else np.zeros(d.shape, bool)
        values.setflags(write=False)
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "u", np.ascontiguousarray(u[:, keep]))
        object.__setattr__(self, "d", d[keep].copy())
        object.__setattr__(self, "vt", np.ascontiguousarray(vt[keep]))

    @classmethod
    def from_matrix(cls, x: np.ndarray, columns) -> DesignBlock:
        columns = tuple(sorted(int(c) for c in columns))
        p = x.shape[1]
        bad = [c for c in columns if c >= p]
        if bad:
            raise ValidationError(f"column indices {bad} out of range for {p} columns")
        return cls(columns, x[:, list(columns)])

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def rank(self) -> int:
        return int(self.d.size)


@dataclass(frozen=True)
class RidgeFit:
    lam: float
    coefficients: np.ndarray
    fitted: np.ndarray
    rss: float


def shrinkage(d: np.ndarray, lam: float) -> np.ndarray:
    """Per-direction shrinkage factors ``d^2 / (d^2 + lam)``."""
    if lam < 0 or math.isnan(lam):
        raise ValidationError(f"lambda must be nonnegative, got {lam}")
    d2 = d * d
    if math.isinf(lam):
        return np.zeros_like(d2)
    return d2 / (d2 + lam)


def df_weights(d: np.ndarray, lam: float) -> np.ndarray:
    a = shrinkage(d, lam)
    return a * (2.0 - a)


def effective_df(block: DesignBlock, lam: float) -> float:
    return float(np.sum(df_weights(block.d, lam)))


def ridge_fit(block: DesignBlock, lam: float, target) -> RidgeFit:
    """Minimise ``||target - X b||^2 + lam ||b||^2`` over ``b``."""
    target = np.asarray(target, dtype=float)
    if target.shape != (block.n,):
        raise DimensionMismatch(
            f"target has shape {target.shape}, block has {block.n} rows")
    if lam < 0 or math.isnan(lam):
        raise ValidationError(f"lambda must be nonnegative, got {lam}")
    if lam == 0 and block.rank < block.width:
        raise SingularBlock(
            f"block {block.columns} has rank {block.rank} < {block.width}; lambda must be > 0")
    d = block.d
    factor = np.zeros_like(d) if math.isinf(lam) else d / (d * d + lam)
    coefficients = block.vt.T @ (factor * (block.u.T @ target))
    fitted = block.values @ coefficients
    resid = target - fitted
    return RidgeFit(float(lam), coefficients, fitted, float(resid @ resid))


def solve_lambda(block: DesignBlock, target_df: float, tol: float = DF_TOL) -> float:
    """Penalty whose effective degrees of freedom equal ``target_df``.

    Bisection on ``log10(lam)``; df is continuous and strictly decreasing in
    lambda, so the bracket search always converges.
    """
    rank = block.rank
    target_df = float(target_df)
    if not (target_df > 0) or target_df > rank + tol:
        raise InfeasibleDf(
            f"target df {target_df} outside (0, {rank}] for block {block.columns}")
    if target_df >= rank - tol:
        return 0.0

    def gap(log_lam):
        return float(np.sum(df_weights(block.d, 10.0 ** log_lam))) - target_df

    # centre the bracket on the block scale so it is invariant to column scaling
    centre = 2.0 * math.log10(block.d[0])
    lo, hi = centre - 12.0, centre + 12.0
    while gap(lo) < 0 and lo > -300:
        lo -= 12.0
    while gap(hi) > 0 and hi < 300:
        hi += 12.0
    mid = 0.5 * (lo + hi)
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        g = gap(mid)
        if abs(g) <= tol:
            break
        if g > 0:
            lo = mid
        else:
            hi = mid
    return 10.0 ** mid


def lambda_bounds(block: DesignBlock, min_df: float, max_df: float) -> tuple[float, float]:
    """Penalty interval ``(lam_lo, lam_hi)`` matching ``df in [min_df, max_df]``."""
    return solve_lambda(block, max_df), solve_lambda(block, min_df)
