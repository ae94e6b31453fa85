"""Out-of-sample risk over boosting iterations and early-stopping choice."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .boosting import BoostConfig, fit
from .errors import FoldTooSmall, InfeasibleDf, ValidationError
from .families import get_family
from .model import Dataset
from .ridge import DesignBlock, solve_lambda


@dataclass(frozen=True)
class ResamplingPlan:
    """Bootstrap (``kind='bootstrap'``, ``size`` replicates) or k-fold splits."""

    kind: str = "bootstrap"
    size: int = 25
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("bootstrap", "kfold"):
            raise ValidationError(f"unknown resampling kind {self.kind!r}")

    def splits(self, n: int) -> list[tuple[np.ndarray, np.ndarray]]:
        """``(train_rows, test_rows)`` per replicate; bootstrap rows repeat."""
        rng = np.random.default_rng(self.seed)
        out = []
        if self.kind == "kfold":
            if self.size < 2 or self.size > n:
                raise FoldTooSmall(f"k-fold needs 2 <= k <= n, got k={self.size}, n={n}")
            folds = rng.permutation(np.arange(n) % self.size)
            for k in range(self.size):
                out.append((np.flatnonzero(folds != k), np.flatnonzero(folds == k)))
        else:
            if self.size < 1:
                raise FoldTooSmall("bootstrap needs at least one replicate")
            for _ in range(self.size):
                train = np.sort(rng.integers(0, n, n))
                test = np.setdiff1d(np.arange(n), train)
                if test.size == 0:
                    raise FoldTooSmall("a bootstrap replicate has no out-of-bag rows")
                out.append((train, test))
        return out


@dataclass(frozen=True, eq=False)
class RiskCurve:
    risk: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        return self.risk.mean(axis=0)

    @property
    def mstop(self) -> int:
        return optimal_mstop(self)


def optimal_mstop(curve) -> int:
    """Iteration with the lowest mean risk (earliest on ties)."""
    mean = curve.mean if isinstance(curve, RiskCurve) else np.asarray(curve, dtype=float)
    if mean.size == 0:
        raise ValidationError("risk curve is empty")
    return int(np.argmin(mean))


def _fold_learners(x_train: np.ndarray, learners):
    kept = []
    for learner in learners:
        block = DesignBlock.from_matrix(x_train, learner.columns)
        try:
            lam = solve_lambda(block, learner.target_df)
        except InfeasibleDf:
            warnings.warn(f"learner {learner.label!r} screened in a resampling fold "
                          f"(rank {block.rank} < df {learner.target_df:g})", stacklevel=3)
            continue
        kept.append(replace(learner, id=len(kept) + 1, lam=lam, block=block))
    if not kept:
        raise FoldTooSmall("every learner was screened in a resampling fold")
    return kept


def _restandardize(ds: Dataset, train, test):
    raw = ds.x * ds.scale + ds.center
    center = raw[train].mean(axis=0)
    scale = raw[train].std(axis=0, ddof=1)
    zero = ~(scale > 0)
    if zero.any():
        names = [ds.column_names[j] for j in np.flatnonzero(zero)]
        warnings.warn(f"columns {names} are constant in a fold and were zeroed", stacklevel=3)
    scale = np.where(zero, 1.0, scale)
    x = (raw - center) / scale
    x[:, zero] = 0.0
    return x


def held_out_risk(ds: Dataset, learners, config: BoostConfig, train, test,
                  restandardize: bool = False) -> np.ndarray:
    """Mean held-out loss after each of iterations ``0..mstop`` for one split."""
    if len(train) == 0 or len(test) == 0:
        raise FoldTooSmall("a resampling split has no training or no held-out rows")
    x = _restandardize(ds, train, test) if restandardize else ds.x
    train_ds = replace(ds, x=x[train], y=ds.y[train])
    fold_learners = _fold_learners(x[train], learners)
    model = fit(train_ds, fold_learners, config)
    fam = get_family(config.family)
    x_test, y_test = x[test], ds.y[test]
    f = np.full(len(test), model.offset)
    risk = np.empty(model.mstop + 1)
    risk[0] = fam.pointwise_loss(y_test, f).mean()
    for rec in model.trace:
        cols = list(model.learner(rec.learner_id).columns)
        f = f + x_test[:, cols] @ rec.increment
        risk[rec.iteration] = fam.pointwise_loss(y_test, f).mean()
    return risk


def cv_risk(ds: Dataset, learners, config: BoostConfig, plan: ResamplingPlan = ResamplingPlan(),
            threads: int = 1, restandardize: bool = False) -> RiskCurve:
    """Held-out risk curves, one row per resampling replicate.

    Penalties are re-solved on each training subset so every learner keeps
    its degrees of freedom.
    """
    splits = plan.splits(ds.n)

    def run(split):
        return held_out_risk(ds, learners, config, *split, restandardize=restandardize)

    if threads > 1 and len(splits) > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(run, splits))
    else:
        rows = [run(s) for s in splits]
    return RiskCurve(np.vstack(rows))
