"""Variable importance, coefficient tables and coefficient paths.

A design column can receive updates from its individual learner and from
its group learner, so a fitted model carries two kinds of coefficient: the
raw per-learner effects and their per-variable sum (the aggregate). Loss
reductions, on the other hand, can only be attributed to learners.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .boosting import BoostModel
from .errors import EmptyModel
from .model import GROUP, INDIVIDUAL

IMPORTANCE_COLUMNS = ["reduction", "blearner", "predictor", "selfreq", "type",
                      "relative_importance"]
RAW_COLUMNS = ["variable", "effect", "blearner", "predictor", "type"]
AGGREGATE_COLUMNS = ["variable", "effect", "blearner", "predictor"]
PATH_COLUMNS = ["iteration", "variable", "value", "updated_by"]


def _require_fit(model: BoostModel):
    if model.mstop == 0:
        raise EmptyModel("model has no boosting iterations")


@dataclass(frozen=True)
class ImportanceTable:
    varimp: pd.DataFrame
    group_importance: pd.DataFrame


@dataclass(frozen=True)
class CoefficientTable:
    raw: pd.DataFrame
    aggregate: pd.DataFrame


def variable_importance(model: BoostModel) -> ImportanceTable:
    """Share of the in-sample loss reduction realised by each selected learner."""
    _require_fit(model)
    reduction: dict[int, float] = {}
    count: dict[int, int] = {}
    for rec in model.trace:
        reduction[rec.learner_id] = reduction.get(rec.learner_id, 0.0) + (
            rec.loss_before - rec.loss_after)
        count[rec.learner_id] = count.get(rec.learner_id, 0) + 1
    total = sum(reduction.values())
    rows = []
    for lid in sorted(reduction, key=lambda i: (-reduction[i], i)):
        learner = model.learner(lid)
        rows.append({
            "reduction": reduction[lid], "blearner": learner.label,
            "predictor": learner.predictor, "selfreq": count[lid] / model.mstop,
            "type": learner.kind,
            "relative_importance": reduction[lid] / total if total else np.nan,
        })
    varimp = pd.DataFrame(rows, columns=IMPORTANCE_COLUMNS)
    shares = varimp.groupby("type")["relative_importance"].sum()
    group_importance = pd.DataFrame({
        "type": [GROUP, INDIVIDUAL],
        "importance": [float(shares.get(GROUP, 0.0)), float(shares.get(INDIVIDUAL, 0.0))],
    })
    return ImportanceTable(varimp, group_importance)


def _sort_by_effect(df: pd.DataFrame) -> pd.DataFrame:
    order = np.lexsort((np.arange(len(df)), -df["effect"].abs().to_numpy()))
    return df.iloc[order].reset_index(drop=True)


def coefficients(model: BoostModel) -> CoefficientTable:
    """Raw per-learner effects and their per-variable aggregate."""
    _require_fit(model)
    effects = model.learner_effects()
    raw_rows = []
    agg: dict[int, float] = {}
    labels: dict[int, list] = {}
    for lid, eff in sorted(effects.items()):
        learner = model.learner(lid)
        for pos, col in enumerate(learner.columns):
            raw_rows.append({"variable": model.column_names[col], "effect": float(eff[pos]),
                             "blearner": learner.label, "predictor": learner.predictor,
                             "type": learner.kind})
            # same summation order as BoostModel.coefficients_at
            agg[col] = agg.get(col, 0.0) + eff[pos]
            labels.setdefault(col, []).append(learner)
    agg_rows = [{"variable": model.column_names[c], "effect": float(agg[c]),
                 "blearner": "; ".join(l.label for l in labels[c]),
                 "predictor": "; ".join(l.predictor for l in labels[c])}
                for c in sorted(agg)]
    raw = _sort_by_effect(pd.DataFrame(raw_rows, columns=RAW_COLUMNS))
    aggregate = _sort_by_effect(pd.DataFrame(agg_rows, columns=AGGREGATE_COLUMNS))
    return CoefficientTable(raw, aggregate)


def coefficient_path(model: BoostModel) -> pd.DataFrame:
    """Aggregated coefficients of every touched variable after each iteration.

    ``updated_by`` is the kind of the learner that most recently changed the
    variable, so a variable updated through both kinds switches label along
    its path.
    """
    _require_fit(model)
    contributors: dict[int, list[tuple[int, int]]] = {}
    for learner in model.learners:
        for pos, col in enumerate(learner.columns):
            contributors.setdefault(col, []).append((learner.id, pos))
    cum: dict[int, np.ndarray] = {}
    value: dict[int, float] = {}
    last_kind: dict[int, str] = {}
    iters, names, values, kinds = [], [], [], []
    for rec in model.trace:
        lid = rec.learner_id
        if lid not in cum:
            cum[lid] = np.zeros(len(rec.increment))
        cum[lid] = cum[lid] + rec.increment
        learner = model.learner(lid)
        for col in learner.columns:
            total = 0.0
            for other, pos in sorted(contributors[col]):
                if other in cum:
                    total = total + cum[other][pos]
            value[col] = float(total)
            last_kind[col] = learner.kind
        for col in sorted(value):
            iters.append(rec.iteration)
            names.append(model.column_names[col])
            values.append(value[col])
            kinds.append(last_kind[col])
    return pd.DataFrame({"iteration": iters, "variable": names, "value": values,
                         "updated_by": kinds}, columns=PATH_COLUMNS)


def filter_importance(varimp: pd.DataFrame, n_predictors: int | None = None,
                      prop: float | None = None,
                      max_char_length: int | None = None) -> pd.DataFrame:
    """Display copy of an importance table.

    Shares are not renormalised, so they stay relative to all learners.
    """
    out = varimp
    if prop is not None:
        out = out[out["relative_importance"] >= prop]
    if n_predictors is not None:
        out = out.head(n_predictors)
    out = out.copy()
    if max_char_length is not None:
        for col in ("blearner", "predictor"):
            out[col] = out[col].str.slice(0, max_char_length)
    return out.reset_index(drop=True)
