"""Simulated designs: the linear sparse-group example and the bias scenarios."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .balance import (
    EVALUATION_STREAM,
    BalanceConfig,
    GammaNull,
    StandardNormal,
    balance,
    selection_frequencies,
)
from .model import Dataset, GroupStructure, group_learners, standardize_columns

TRUE_BETA = np.concatenate([
    np.full(5, 5.0), [5.0, -5.0, 2.0, 0.0, 0.0], np.full(5, -5.0),
    [2.0, -3.0, 8.0, 0.0, 0.0], np.zeros(180),
])

EQUAL_LAMBDA = 0.1
EQUAL_DF = 0.5


def gen_linear_sim(seed: int = 1, n: int = 100) -> tuple[Dataset, GroupStructure]:
    """100 x 200 Gaussian design in 40 groups of 5, first 20 coefficients active.

    Every column and the outcome are standardized after ``y = X beta + e``.
    """
    rng = np.random.default_rng(seed)
    p = TRUE_BETA.size
    x = rng.standard_normal((n, p))
    y = x @ TRUE_BETA + rng.standard_normal(n)
    names = tuple(f"X{j + 1}" for j in range(p))
    xs, center, scale = standardize_columns(x, names)
    ys = (y - y.mean()) / y.std(ddof=1)
    ds = Dataset(xs, ys, names, center, scale, outcome_name="y",
                 outcome_center=float(y.mean()), outcome_scale=float(y.std(ddof=1)))
    gs = GroupStructure.from_pairs(ds, [(nm, str(j // 5 + 1)) for j, nm in enumerate(names)])
    return ds, gs


@dataclass(frozen=True)
class Scenario:
    """One bias scenario: categorical and numeric groups plus a null outcome."""

    id: int | str
    n: int
    categorical: tuple[int, ...] = ()
    numeric_groups: tuple[int, ...] = ()
    outcome: str = "normal"
    seed: int = 0

    def sampler(self):
        return GammaNull(1.0, 1.0) if self.outcome == "gamma" else StandardNormal()


def bias_scenario(sid: int, seed: int = 0) -> Scenario:
    specs = {
        1: dict(n=50, categorical=(3, 2), numeric_groups=(1,)),
        2: dict(n=500, categorical=(3, 2), numeric_groups=(1,)),
        3: dict(n=500, categorical=(3, 2), numeric_groups=(1,), outcome="gamma"),
        4: dict(n=30, numeric_groups=(46, 4)),
    }
    if sid not in specs:
        raise KeyError(sid)
    return Scenario(sid, seed=seed, **specs[sid])


def _levels(rng, n, k):
    while True:
        z = rng.integers(0, k, n)
        if np.unique(z).size == k:
            return z


def gen_scenario(s: Scenario) -> tuple[Dataset, GroupStructure, object]:
    """Standardized design, its groups and the scenario's outcome sampler.

    Categorical groups are expanded to one indicator per level. The returned
    dataset carries one outcome draw; bias experiments draw fresh outcomes
    from the sampler and centre them through the Gaussian offset.
    """
    rng = np.random.default_rng(np.random.SeedSequence(s.seed, spawn_key=(7, hash_id(s.id))))
    cols, names, pairs = [], [], []
    for g, k in enumerate(s.categorical):
        z = _levels(rng, s.n, k)
        var = chr(ord("A") + g)
        for level in range(k):
            cols.append((z == level).astype(float))
            names.append(f"{var}_{level + 1}")
            pairs.append((names[-1], f"G{g + 1}"))
    offset = len(s.categorical)
    counter = 0
    for g, size in enumerate(s.numeric_groups):
        for _ in range(size):
            counter += 1
            cols.append(rng.standard_normal(s.n))
            names.append(f"X{counter}")
            pairs.append((names[-1], f"G{offset + g + 1}"))
    x, center, scale = standardize_columns(np.column_stack(cols), names)
    sampler = s.sampler()
    y = sampler.sample(rng, s.n)
    ds = Dataset(x, y - y.mean(), tuple(names), center, scale, outcome_name="y")
    return ds, GroupStructure.from_pairs(ds, pairs), sampler


def hash_id(sid) -> int:
    return sid if isinstance(sid, int) else int.from_bytes(str(sid).encode()[:8], "little")


@dataclass
class BiasReport:
    rows: list[dict] = field(default_factory=list)
    balance_results: dict = field(default_factory=dict)

    COLUMNS = ("scenario", "group", "equal_lambda", "equal_df", "group_adjustment", "df_used")

    def frequencies(self, scenario, scheme: str) -> np.ndarray:
        return np.array([r[scheme] for r in self.rows if r["scenario"] == scenario])


def scheme_frequencies(ds: Dataset, gs: GroupStructure, sampler, cfg: BalanceConfig):
    """Null selection frequencies under equal lambda, equal df and balanced df."""
    base = group_learners(ds, gs, df=EQUAL_DF)
    eq_lam = selection_frequencies(group_learners(ds, gs, lam=EQUAL_LAMBDA), cfg,
                                   stream=EVALUATION_STREAM, null=sampler)
    eq_df = selection_frequencies(base, cfg, stream=EVALUATION_STREAM, null=sampler)
    result = balance(base, cfg)
    balanced = selection_frequencies(result.apply(base), cfg,
                                     stream=EVALUATION_STREAM, null=sampler)
    return eq_lam, eq_df, balanced, result


def run_bias_experiment(scenarios=None, cfg: BalanceConfig = BalanceConfig()) -> BiasReport:
    """Selection frequencies of every scenario under the three penalty schemes.

    The balancing step is calibrated with ``cfg.null``; all three schemes are
    then evaluated on fresh outcomes drawn from each scenario's own sampler.
    """
    if scenarios is None:
        scenarios = [bias_scenario(i, seed=cfg.seed) for i in (1, 2, 3, 4)]
    report = BiasReport()
    for s in scenarios:
        ds, gs, sampler = gen_scenario(s)
        scfg = replace(cfg, seed=int(np.random.SeedSequence(
            cfg.seed, spawn_key=(11, hash_id(s.id))).generate_state(1)[0]))
        eq_lam, eq_df, balanced, result = scheme_frequencies(ds, gs, sampler, scfg)
        report.balance_results[s.id] = result
        for g, name in enumerate(gs.names):
            report.rows.append({
                "scenario": s.id, "group": g + 1, "equal_lambda": float(eq_lam[g]),
                "equal_df": float(eq_df[g]), "group_adjustment": float(balanced[g]),
                "df_used": float(result.df_star[g]),
            })
    return report
