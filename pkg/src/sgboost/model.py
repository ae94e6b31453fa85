"""Datasets, group structures and ridge base-learners."""

from __future__ import annotations

import csv
import io
import math
import os
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConstantColumn,
    InfeasibleDf,
    InvalidGroups,
    MissingOutcome,
    NonNumericColumn,
    UnknownVariable,
    ValidationError,
)
from .families import get_family
from .ridge import DesignBlock, effective_df, solve_lambda

INDIVIDUAL = "individual"
GROUP = "group"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Predictor matrix and outcome, possibly standardized.

    ``center``/``scale`` hold the per-column transformation that was applied
    (zeros and ones when the data were left as is); ``source`` maps each design
    column back to the input variable it came from, which differs from
    ``column_names`` only for expanded categorical variables.
    """

    x: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...]
    center: np.ndarray
    scale: np.ndarray
    source: tuple[str, ...] = ()
    outcome_name: str = "y"
    family: str = "gaussian"
    outcome_levels: tuple[str, ...] = ()
    outcome_center: float = 0.0
    outcome_scale: float = 1.0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise ValidationError(f"x has shape {x.shape} but y has shape {y.shape}")
        if len(self.column_names) != x.shape[1]:
            raise ValidationError("column_names does not match the number of columns")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("dataset contains missing or non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "scale", np.asarray(self.scale, dtype=float))
        if not self.source:
            object.__setattr__(self, "source", self.column_names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def columns_of(self, name: str) -> list[int]:
        """Design columns for a column name or an input variable name."""
        if name in self.column_names:
            return [self.column_names.index(name)]
        hits = [j for j, s in enumerate(self.source) if s == name]
        if not hits:
            raise UnknownVariable(f"variable {name!r} is not in the dataset")
        return hits

    def transform(self, raw_x) -> np.ndarray:
        """Apply the stored standardization to new design rows."""
        raw_x = np.asarray(raw_x, dtype=float)
        return (raw_x - self.center) / self.scale

    def subset(self, rows) -> Dataset:
        rows = np.asarray(rows)
        return replace(self, x=self.x[rows], y=self.y[rows])


def standardize_columns(x: np.ndarray, names: Sequence[str]):
    """Center and scale each column to mean 0, sd 1 (``ddof=1``)."""
    center = x.mean(axis=0)
    scale = x.std(axis=0, ddof=1)
    for j, s in enumerate(scale):
        if not s > 0 or np.ptp(x[:, j]) == 0:
            raise ConstantColumn(f"column {names[j]!r} is constant")
    return (x - center) / scale, center, scale


def read_table(source) -> dict[str, list[str]]:
    """Read a comma-separated table with a header row into columns of strings."""
    if isinstance(source, Mapping):
        return {str(k): [str(v) for v in vals] for k, vals in source.items()}
    if isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source):
        try:
            with open(source, newline="") as fh:
                rows = list(csv.reader(fh))
        except OSError as exc:
            raise ValidationError(f"cannot read table {os.fspath(source)!r}: {exc.strerror}") from None
    elif isinstance(source, str):
        rows = list(csv.reader(io.StringIO(source)))
    else:
        rows = list(csv.reader(source))
    rows = [r for r in rows if r]
    if not rows:
        raise ValidationError("table is empty")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise ValidationError(f"duplicated column names in header: {header}")
    cols: dict[str, list[str]] = {h: [] for h in header}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValidationError(f"line {i} has {len(row)} fields, expected {len(header)}")
        for h, cell in zip(header, row):
            cols[h].append(cell.strip())
    return cols


def _parse_float(cell: str) -> float | None:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _numeric_column(name: str, cells: Sequence[str]) -> np.ndarray:
    out = np.empty(len(cells))
    for i, cell in enumerate(cells):
        value = _parse_float(cell)
        if value is None:
            raise NonNumericColumn(f"column {name!r} row {i + 1}: cannot parse {cell!r}")
        out[i] = value
    return out


def _is_categorical(cells: Sequence[str]) -> bool:
    return all(c != "" and _parse_float(c) is None for c in cells)


def _sorted_levels(cells):
    levels = set(cells)
    try:
        return sorted(levels, key=float)
    except ValueError:
        return sorted(levels)


def load_dataset(data_table, outcome_name: str, standardize: bool = True,
                 family="gaussian", categorical: Sequence[str] = (),
                 standardize_outcome: bool = False) -> Dataset:
    """Build a :class:`Dataset` from a comma-separated table.

    Categorical predictors (columns whose every cell is non-numeric, or the
    ones listed in ``categorical``) are expanded to one indicator column per
    level; no reference level is dropped. A Binomial outcome must have exactly
    two levels and is coded -1/+1 in sorted level order.
    """
    fam = get_family(family)
    table = read_table(data_table)
    if outcome_name not in table:
        raise MissingOutcome(f"outcome column {outcome_name!r} not found")
    n = len(table[outcome_name])
    if n < 2:
        raise ValidationError("need at least two observations")
    unknown = set(categorical) - set(table)
    if unknown:
        raise UnknownVariable(f"categorical columns not found: {sorted(unknown)}")

    blocks, names, source = [], [], []
    for name, cells in table.items():
        if name == outcome_name:
            continue
        if any(c == "" for c in cells):
            raise NonNumericColumn(f"column {name!r} has missing values")
        if name in categorical or _is_categorical(cells):
            for level in _sorted_levels(cells):
                blocks.append(np.array([c == level for c in cells], dtype=float))
                names.append(f"{name}_{level}")
                source.append(name)
        else:
            blocks.append(_numeric_column(name, cells))
            names.append(name)
            source.append(name)
    if not blocks:
        raise ValidationError("no predictor columns")
    x = np.column_stack(blocks)

    if standardize:
        x, center, scale = standardize_columns(x, names)
    else:
        for j in range(x.shape[1]):
            if np.ptp(x[:, j]) == 0:
                raise ConstantColumn(f"column {names[j]!r} is constant")
        center, scale = np.zeros(x.shape[1]), np.ones(x.shape[1])

    cells = table[outcome_name]
    levels: tuple[str, ...] = ()
    y_center, y_scale = 0.0, 1.0
    if fam.name == "binomial":
        if any(c == "" for c in cells):
            raise NonNumericColumn(f"outcome {outcome_name!r} has missing values")
        lv = _sorted_levels(cells)
        if len(lv) != 2:
            raise ValidationError(
                f"binomial outcome {outcome_name!r} needs exactly 2 levels, found {len(lv)}")
        levels = tuple(lv)
        y = np.where(np.array(cells) == lv[1], 1.0, -1.0)
    else:
        y = _numeric_column(outcome_name, cells)
        if standardize_outcome:
            y_center, y_scale = float(y.mean()), float(y.std(ddof=1))
            if not y_scale > 0:
                raise ConstantColumn(f"outcome {outcome_name!r} is constant")
            y = (y - y_center) / y_scale
    return Dataset(x, y, tuple(names), center, scale, tuple(source), outcome_name,
                   fam.name, levels, y_center, y_scale)


@dataclass(frozen=True)
class GroupStructure:
    """Non-overlapping groups of design columns, in order of first appearance."""

    assignments: dict[str, str]
    groups: tuple[tuple[str, tuple[int, ...]], ...]

    @classmethod
    def from_pairs(cls, ds: Dataset, pairs) -> GroupStructure:
        assignments: dict[str, str] = {}
        members: dict[str, list[int]] = {}
        owner: dict[int, str] = {}
        for var, grp in pairs:
            var, grp = str(var), str(grp)
            if var in assignments and assignments[var] != grp:
                raise InvalidGroups(f"variable {var!r} assigned to two groups")
            assignments[var] = grp
            for col in ds.columns_of(var):
                if col in owner and owner[col] != grp:
                    raise InvalidGroups(
                        f"column {ds.column_names[col]!r} belongs to groups "
                        f"{owner[col]!r} and {grp!r}")
                owner[col] = grp
                members.setdefault(grp, [])
                if col not in members[grp]:
                    members[grp].append(col)
        if not members:
            raise InvalidGroups("group structure is empty")
        groups = tuple((g, tuple(sorted(cols))) for g, cols in members.items())
        return cls(assignments, groups)

    @classmethod
    def from_table(cls, ds: Dataset, table, var_name: str = "variable_name",
                   group_name: str = "group_name") -> GroupStructure:
        cols = read_table(table)
        if var_name not in cols or group_name not in cols:
            if len(cols) != 2:
                raise InvalidGroups(
                    f"group table needs columns {var_name!r} and {group_name!r}")
            var_name, group_name = list(cols)
        return cls.from_pairs(ds, zip(cols[var_name], cols[group_name]))

    @property
    def names(self) -> list[str]:
        return [g for g, _ in self.groups]

    def __len__(self) -> int:
        return len(self.groups)


@dataclass(frozen=True, eq=False)
class BaseLearner:
    """Ridge base-learner on the columns ``columns`` with a fixed penalty.

    ``block`` is ``None`` for learners restored from a serialized model; such
    learners describe a fit but cannot be refitted.
    """

    id: int
    kind: str
    columns: tuple[int, ...]
    target_df: float
    lam: float
    label: str
    predictor: str
    block: DesignBlock | None = field(default=None, repr=False)

    @property
    def index(self) -> int:
        return self.id - 1

    def with_df(self, df: float) -> BaseLearner:
        return replace(self, target_df=float(df), lam=solve_lambda(self.block, df))

    def with_lambda(self, lam: float) -> BaseLearner:
        return replace(self, lam=float(lam), target_df=effective_df(self.block, lam))

    def rebind(self, x: np.ndarray) -> BaseLearner:
        """Same learner on new rows of the design (penalty re-solved for the df)."""
        block = DesignBlock.from_matrix(x, self.columns)
        return replace(self, block=block, lam=solve_lambda(block, self.target_df))

    def info(self) -> dict:
        return {"id": self.id, "kind": self.kind, "columns": list(self.columns),
                "target_df": self.target_df, "lambda": self.lam,
                "label": self.label, "predictor": self.predictor}


def make_learner(ds: Dataset, lid: int, kind: str, columns, *, df: float | None = None,
                 lam: float | None = None, name: str | None = None) -> BaseLearner:
    """Build one learner, fixing either its degrees of freedom or its penalty."""
    block = DesignBlock.from_matrix(ds.x, columns)
    predictor = ", ".join(ds.column_names[c] for c in block.columns)
    label = predictor if kind == INDIVIDUAL else f"group({name if name is not None else predictor})"
    if lam is not None:
        return BaseLearner(lid, kind, block.columns, effective_df(block, lam), float(lam),
                           label, predictor, block)
    if df is None:
        raise ValidationError("make_learner needs df or lam")
    try:
        solved = solve_lambda(block, df)
    except InfeasibleDf as exc:
        who = f"group {name!r}" if kind == GROUP else f"column {predictor!r}"
        raise InfeasibleDf(f"{who}: {exc}") from None
    return BaseLearner(lid, kind, block.columns, float(df), solved, label, predictor, block)


def build_base_learners(ds: Dataset, gs: GroupStructure, alpha: float) -> list[BaseLearner]:
    """Individual learners (df ``alpha``) followed by group learners (df ``1 - alpha``)."""
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    learners: list[BaseLearner] = []
    if alpha > 0:
        for j in range(ds.p):
            learners.append(make_learner(ds, len(learners) + 1, INDIVIDUAL, [j], df=alpha))
    if alpha < 1:
        for name, cols in gs.groups:
            learners.append(make_learner(ds, len(learners) + 1, GROUP, cols,
                                         df=1.0 - alpha, name=name))
    return learners


def group_learners(ds: Dataset, gs: GroupStructure, *, df=None, lam=None) -> list[BaseLearner]:
    """Group-only learners sharing one df or one penalty (group boosting)."""
    return [make_learner(ds, i + 1, GROUP, cols, df=df, lam=lam, name=name)
            for i, (name, cols) in enumerate(gs.groups)]
