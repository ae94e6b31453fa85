"""Simulation-based balancing of base-learner selection frequencies.

Under an outcome that is independent of every predictor, each base-learner
should win the first boosting iteration with the same probability (or with
an alpha-weighted probability for mixed individual/group registries). The
per-learner degrees of freedom are tuned iteratively until the simulated
winning frequencies match that target.

Only the first boosting selection is simulated: with a null outcome the
winner of iteration one already determines the selection frequency.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .boosting import CandidateSet
from .errors import InfeasibleDf, ValidationError
from .model import GROUP, INDIVIDUAL, BaseLearner
from .ridge import effective_df, solve_lambda

log = logging.getLogger(__name__)

BALANCE_STREAM = 0
EVALUATION_STREAM = 1


@dataclass(frozen=True)
class StandardNormal:
    name = "normal"

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_normal(n)


@dataclass(frozen=True)
class GammaNull:
    shape: float = 1.0
    rate: float = 1.0
    name = "gamma"

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.gamma(self.shape, 1.0 / self.rate, n)


def null_distribution(name: str):
    name = name.lower()
    if name in ("normal", "standard_normal", "gaussian"):
        return StandardNormal()
    if name in ("gamma", "gamma11"):
        return GammaNull()
    raise ValidationError(f"unknown null distribution {name!r}")


@dataclass(frozen=True)
class BalanceConfig:
    """Settings for :func:`balance`.

    ``target_alpha`` switches the target from uniform frequencies to
    alpha-weighted ones; ``mode`` is ``"df"`` (update degrees of freedom) or
    ``"lambda"`` (update ``-log10(lambda)``); ``fixed_learner`` is the id of a
    learner whose setting is never changed.
    """

    reps: int = 3000
    iters: int = 20
    lr: float = 0.5
    gamma: float = 0.9
    eta: float = 0.5
    init_df: float = 0.5
    min_df: float = 0.01
    max_df: float | None = None
    null: StandardNormal | GammaNull = field(default_factory=StandardNormal)
    target_alpha: float | None = None
    seed: int = 0
    fixed_learner: int | None = None
    mode: str = "df"
    tol: float | None = None
    chunk: int = 500
    threads: int = 1

    def __post_init__(self):
        if self.reps < 1 or self.iters < 1:
            raise ValidationError("reps and iters must be positive")
        if not self.lr > 0:
            raise ValidationError("lr must be positive")
        if not 0 < self.gamma < 1 or not 0 < self.eta < 1:
            raise ValidationError("gamma and eta must lie in (0, 1)")
        if not 0 < self.init_df:
            raise ValidationError("init_df must be positive")
        if not self.min_df > 0 or (self.max_df is not None and self.max_df <= self.min_df):
            raise ValidationError("need 0 < min_df < max_df")
        if self.target_alpha is not None and not 0 <= self.target_alpha <= 1:
            raise ValidationError("target alpha must lie in [0, 1]")
        if self.mode not in ("df", "lambda"):
            raise ValidationError(f"mode must be 'df' or 'lambda', got {self.mode!r}")
        if self.chunk < 1 or self.threads < 1:
            raise ValidationError("chunk and threads must be positive")


def replicate_outcomes(n: int, null, seed: int, stream: int, round_index: int,
                       start: int, stop: int) -> np.ndarray:
    """Null outcomes for replicates ``start..stop-1`` as an ``n x K`` matrix.

    Replicate ``k`` of round ``r`` draws from its own generator seeded by
    ``(seed, stream, r, k)``, so results do not depend on chunking or threads.
    """
    out = np.empty((n, stop - start))
    for j, k in enumerate(range(start, stop)):
        ss = np.random.SeedSequence(seed, spawn_key=(stream, round_index, k))
        out[:, j] = null.sample(np.random.Generator(np.random.PCG64(ss)), n)
    return out


def one_step_winners(candidates: CandidateSet, cfg: BalanceConfig, round_index: int = 0,
                     stream: int = BALANCE_STREAM, null=None) -> np.ndarray:
    """Winning learner index for each simulated null outcome."""
    null = cfg.null if null is None else null
    bounds = [(a, min(a + cfg.chunk, cfg.reps)) for a in range(0, cfg.reps, cfg.chunk)]

    def run(bound):
        y = replicate_outcomes(candidates.n, null, cfg.seed, stream, round_index, *bound)
        # gaussian offset: the first negative gradient is the centred outcome
        u = y - y.mean(axis=0)
        return candidates.select(u)

    if cfg.threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    return np.concatenate(parts)


def selection_frequencies(learners, cfg: BalanceConfig, df=None, round_index: int = 0,
                          stream: int = BALANCE_STREAM, null=None) -> np.ndarray:
    """Fraction of null replicates in which each learner wins the first step."""
    if df is None:
        lambdas = [l.lam for l in learners]
    else:
        lambdas = [solve_lambda(l.block, d) for l, d in zip(learners, df)]
    candidates = CandidateSet(learners, lambdas)
    wins = one_step_winners(candidates, cfg, round_index, stream, null)
    return np.bincount(wins, minlength=len(learners)) / cfg.reps


def target_vector(cfg: BalanceConfig, learners) -> np.ndarray:
    L = len(learners)
    if cfg.target_alpha is None:
        return np.full(L, 1.0 / L)
    kinds = [l.kind for l in learners]
    if INDIVIDUAL not in kinds or GROUP not in kinds:
        raise ValidationError("alpha-weighted targets need both individual and group learners")
    a = cfg.target_alpha
    w = np.array([a if k == INDIVIDUAL else 1.0 - a for k in kinds])
    return w / w.sum()


@dataclass(frozen=True, eq=False)
class BalanceResult:
    df_star: np.ndarray
    lambda_star: np.ndarray
    freq_history: np.ndarray
    imbalance_history: np.ndarray
    accepted: np.ndarray
    df_history: np.ndarray
    lr_history: np.ndarray
    target: np.ndarray
    best_round: int

    @property
    def best_imbalance(self) -> float:
        return float(self.imbalance_history[self.best_round])

    def apply(self, learners) -> list[BaseLearner]:
        """Learners re-penalized with the balanced degrees of freedom."""
        return [replace(l, target_df=float(d), lam=float(lam))
                for l, d, lam in zip(learners, self.df_star, self.lambda_star)]


def _df_bounds(learners, cfg):
    lo = np.full(len(learners), cfg.min_df)
    hi = np.array([min(cfg.max_df if cfg.max_df is not None else l.block.rank - 0.01,
                       l.block.rank) for l in learners])
    if np.any(hi <= lo):
        raise InfeasibleDf("max_df must exceed min_df for every learner")
    return lo, hi


def balance(learners, cfg: BalanceConfig = BalanceConfig()) -> BalanceResult:
    """Tune per-learner degrees of freedom towards the target frequencies."""
    learners = list(learners)
    L = len(learners)
    if L < 2:
        raise ValidationError("balancing needs at least two learners")
    if cfg.fixed_learner is not None and not 1 <= cfg.fixed_learner <= L:
        raise ValidationError(f"fixed learner {cfg.fixed_learner} is not in 1..{L}")
    target = target_vector(cfg, learners)
    df_lo, df_hi = _df_bounds(learners, cfg)
    candidates = CandidateSet(learners)

    if cfg.mode == "df":
        lo, hi = df_lo, df_hi

        def to_lambdas(theta):
            return np.array([solve_lambda(l.block, t) for l, t in zip(learners, theta)])
    else:
        # theta = -log10(lambda): larger theta means more degrees of freedom
        lo = np.array([-np.log10(solve_lambda(l.block, d)) for l, d in zip(learners, df_lo)])
        hi = np.array([-np.log10(solve_lambda(l.block, d)) for l, d in zip(learners, df_hi)])

        def to_lambdas(theta):
            return 10.0 ** -np.asarray(theta)

    init = np.clip(np.full(L, cfg.init_df), df_lo, df_hi)
    if cfg.mode == "lambda":
        init = np.array([-np.log10(solve_lambda(l.block, d)) for l, d in zip(learners, init)])
    fixed = None if cfg.fixed_learner is None else cfg.fixed_learner - 1

    current = init.copy()
    best = init.copy()
    best_imb = np.inf
    best_round = 0
    lr = cfg.lr
    freqs, imbs, accepted, dfs, lrs = [], [], [], [], []
    for r in range(cfg.iters):
        lambdas = to_lambdas(current)
        candidates.set_lambdas(lambdas)
        wins = one_step_winners(candidates, cfg, r)
        s = np.bincount(wins, minlength=L) / cfg.reps
        err = target - s
        imb = float(err @ err)
        freqs.append(s)
        imbs.append(imb)
        dfs.append([effective_df(l.block, lam) for l, lam in zip(learners, lambdas)])
        lrs.append(lr)
        if imb < best_imb:
            best_imb, best, best_round = imb, current.copy(), r
            accepted.append(True)
            step = best + lr * err
        else:
            accepted.append(False)
            lr *= cfg.gamma
            step = (1.0 - cfg.eta) * best + cfg.eta * (current + lr * err)
        log.debug("round %d imbalance %.3g accepted %s", r + 1, imb, accepted[-1])
        if cfg.tol is not None and best_imb <= cfg.tol:
            break
        current = np.clip(step, lo, hi)
        if fixed is not None:
            current[fixed] = init[fixed]

    lambda_star = to_lambdas(best)
    df_star = np.array([effective_df(l.block, lam) for l, lam in zip(learners, lambda_star)])
    if cfg.mode == "df":
        df_star = best.copy()
    return BalanceResult(df_star, lambda_star, np.array(freqs), np.array(imbs),
                         np.array(accepted), np.array(dfs), np.array(lrs), target, best_round)
