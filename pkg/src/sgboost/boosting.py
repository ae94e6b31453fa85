"""Sparse-group boosting with ridge base-learners.

Each iteration fits every candidate learner to the current negative gradient
and keeps the one with the smallest residual sum of squares. Because every
learner's hat matrix is ``U diag(a) U^T``, the residual sum of squares of
learner ``l`` is ``||u||^2 - sum_i (2 a_i - a_i^2) (U^T u)_i^2``; the second
term (the *score*) is computed for all learners with one matrix product, and
the winner is the learner with the largest score (lowest id on ties).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, EmptyModel, NoLearners, OutOfRange, ValidationError
from .families import get_family
from .model import Dataset
from .ridge import df_weights


@dataclass(frozen=True)
class BoostConfig:
    mstop: int = 100
    nu: float = 0.1
    family: str = "gaussian"

    def __post_init__(self):
        if int(self.mstop) != self.mstop or self.mstop < 1:
            raise ValidationError(f"mstop must be a positive integer, got {self.mstop}")
        if not 0.0 < self.nu <= 1.0:
            raise ValidationError(f"nu must lie in (0, 1], got {self.nu}")
        object.__setattr__(self, "mstop", int(self.mstop))
        object.__setattr__(self, "family", get_family(self.family).name)


class CandidateSet:
    """All learners' left singular vectors stacked into one ``n x R`` matrix."""

    def __init__(self, learners, lambdas=None):
        if not learners:
            raise NoLearners("no base-learners to choose from")
        if any(l.block is None for l in learners):
            raise ValidationError("learners without a design block cannot be fitted")
        self.learners = list(learners)
        self.n = self.learners[0].block.n
        if any(l.block.n != self.n for l in self.learners):
            raise DimensionMismatch("learners disagree on the number of rows")
        ranks = [l.block.rank for l in self.learners]
        self.starts = np.concatenate([[0], np.cumsum(ranks)[:-1]]).astype(int)
        self.u = np.hstack([l.block.u for l in self.learners])
        self.set_lambdas([l.lam for l in self.learners] if lambdas is None else lambdas)

    def __len__(self):
        return len(self.learners)

    def set_lambdas(self, lambdas) -> None:
        self.lambdas = np.asarray(lambdas, dtype=float)
        self.weights = np.concatenate(
            [df_weights(l.block.d, lam) for l, lam in zip(self.learners, self.lambdas)])

    def scores(self, target: np.ndarray) -> np.ndarray:
        """Reduction in rss per learner; ``target`` is ``(n,)`` or ``(n, K)``."""
        z = self.u.T @ target
        return np.add.reduceat(self.weights.reshape(-1, *([1] * (z.ndim - 1))) * z * z,
                               self.starts, axis=0)

    def select(self, target: np.ndarray) -> np.ndarray | int:
        """Index of the winning learner (per column for matrix targets)."""
        return np.argmax(self.scores(target), axis=0)

    def fit_one(self, index: int, target: np.ndarray) -> np.ndarray:
        learner = self.learners[index]
        block = learner.block
        lam = self.lambdas[index]
        factor = block.d / (block.d * block.d + lam)
        return block.vt.T @ (factor * (block.u.T @ target))


@dataclass(frozen=True, eq=False)
class TraceRecord:
    iteration: int
    learner_id: int
    kind: str
    increment: np.ndarray
    loss_before: float
    loss_after: float
    candidate_rss: np.ndarray | None = None


@dataclass
class BoostState:
    f: np.ndarray
    iteration: int = 0


def boost_step(state: BoostState, candidates: CandidateSet, family, y: np.ndarray,
               nu: float, record_rss: bool = False) -> TraceRecord:
    """Advance ``state`` by one boosting iteration and return its record."""
    fam = get_family(family)
    u = fam.negative_gradient(y, state.f)
    scores = candidates.scores(u)
    best = int(np.argmax(scores))
    learner = candidates.learners[best]
    coef = candidates.fit_one(best, u)
    increment = nu * coef
    loss_before = fam.loss(y, state.f)
    state.f = state.f + learner.block.values @ increment
    state.iteration += 1
    rss = float(u @ u) - scores if record_rss else None
    return TraceRecord(state.iteration, learner.id, learner.kind, increment,
                       loss_before, fam.loss(y, state.f), rss)


@dataclass(frozen=True, eq=False)
class BoostModel:
    config: BoostConfig
    learners: tuple
    offset: float
    trace: tuple
    column_names: tuple[str, ...]
    center: np.ndarray | None = None
    scale: np.ndarray | None = None
    fitted: np.ndarray | None = field(default=None, repr=False)
    outcome_name: str = "y"
    outcome_levels: tuple[str, ...] = ()

    @property
    def family(self):
        return get_family(self.config.family)

    @property
    def mstop(self) -> int:
        return len(self.trace)

    @property
    def p(self) -> int:
        return len(self.column_names)

    def learner(self, lid: int):
        return self.learners[lid - 1]

    def learner_effects(self, m: int | None = None) -> dict[int, np.ndarray]:
        """Per-learner cumulative coefficients after ``m`` iterations."""
        m = self.mstop if m is None else m
        effects: dict[int, np.ndarray] = {}
        for rec in self.trace[:m]:
            if rec.learner_id not in effects:
                effects[rec.learner_id] = np.zeros(len(rec.increment))
            effects[rec.learner_id] = effects[rec.learner_id] + rec.increment
        return effects

    def coefficients_at(self, m: int | None = None) -> np.ndarray:
        beta = np.zeros(self.p)
        for lid, eff in sorted(self.learner_effects(m).items()):
            cols = list(self.learner(lid).columns)
            beta[cols] = beta[cols] + eff
        return beta

    @property
    def coefficients(self) -> np.ndarray:
        return self.coefficients_at()

    def predict(self, x_new, response: bool = False) -> np.ndarray:
        """Linear predictor (or inverse-link response) for standardized rows."""
        x_new = np.asarray(x_new, dtype=float)
        if x_new.ndim != 2 or x_new.shape[1] != self.p:
            raise DimensionMismatch(f"x_new must have {self.p} columns, got shape {x_new.shape}")
        f = self.offset + x_new @ self.coefficients
        return self.family.response(f) if response else f

    def truncate(self, m: int, x: np.ndarray | None = None) -> BoostModel:
        if int(m) != m or not 0 <= m <= self.mstop:
            raise OutOfRange(f"cannot truncate a {self.mstop}-iteration model at {m}")
        model = replace(self, trace=self.trace[:int(m)], fitted=None)
        if x is not None:
            model = replace(model, fitted=model.predict(x))
        return model

    def __getitem__(self, m: int) -> BoostModel:
        return self.truncate(m)

    def losses(self) -> np.ndarray:
        """In-sample loss after each of iterations 0..mstop."""
        if not self.trace:
            raise EmptyModel("model has no iterations")
        return np.array([self.trace[0].loss_before] + [r.loss_after for r in self.trace])


def fit(ds: Dataset, learners, config: BoostConfig, record_rss: bool = False) -> BoostModel:
    """Run ``config.mstop`` boosting iterations from the family offset."""
    fam = get_family(config.family)
    fam.check_outcome(ds.y)
    if [l.id for l in learners] != list(range(1, len(learners) + 1)):
        raise ValidationError("learner ids must be 1..L in registry order")
    candidates = CandidateSet(learners)
    if candidates.n != ds.n:
        raise DimensionMismatch(f"learners have {candidates.n} rows, dataset has {ds.n}")
    offset = fam.offset(ds.y)
    state = BoostState(np.full(ds.n, offset))
    trace = [boost_step(state, candidates, fam, ds.y, config.nu, record_rss)
             for _ in range(config.mstop)]
    return BoostModel(config, tuple(learners), offset, tuple(trace), ds.column_names,
                      ds.center, ds.scale, state.f, ds.outcome_name, ds.outcome_levels)
