"""Command-line interface: ``sgboost {fit,tune,balance,report,simulate}``.

Exit codes: 0 success, 2 invalid usage or input, 1 numeric/runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd
from threadpoolctl import threadpool_limits

from . import __version__
from .balance import BalanceConfig, balance, null_distribution
from .boosting import BoostConfig, fit
from .errors import NumericError, SGBoostError, ValidationError
from .interpret import coefficient_path, coefficients, filter_importance, variable_importance
from .io import fmt, load_model, save_model, write_table
from .model import GROUP, INDIVIDUAL, GroupStructure, build_base_learners, load_dataset
from .simulate import gen_linear_sim, gen_scenario, bias_scenario, run_bias_experiment
from .tune import ResamplingPlan, cv_risk


class UsageError(ValidationError):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"error: usage: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    p.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker threads (default: available cores)")


def _add_data(p, alpha_default=0.3):
    p.add_argument("--data", required=True, help="comma-separated data table with header")
    p.add_argument("--groups", required=True, help="two-column table: variable, group")
    p.add_argument("--outcome", required=True, help="name of the outcome column")
    p.add_argument("--var-name", default="variable_name",
                   help="variable column in the groups table")
    p.add_argument("--group-name", default="group_name",
                   help="group column in the groups table")
    p.add_argument("--categorical", action="append", default=[],
                   help="treat this column as categorical (repeatable)")
    p.add_argument("--no-standardize", action="store_true",
                   help="do not standardize predictor columns")
    p.add_argument("--standardize-outcome", action="store_true",
                   help="standardize a gaussian outcome")
    p.add_argument("--family", choices=["gaussian", "binomial"], default="gaussian")
    p.add_argument("--alpha", type=float, default=alpha_default,
                   help="df of individual learners; groups get 1 - alpha")


def _add_boost(p):
    p.add_argument("--nu", type=float, default=0.1, help="learning rate (default 0.1)")
    p.add_argument("--mstop", type=_positive_int, default=100,
                   help="boosting iterations (default 100)")
    p.add_argument("--df-from", help="balance report whose balanced df replace alpha")


def _add_balance(p):
    p.add_argument("--reps", type=_positive_int, default=3000)
    p.add_argument("--iters", type=_positive_int, default=20)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--init-df", type=float, default=0.5)
    p.add_argument("--min-df", type=float, default=0.01)
    p.add_argument("--max-df", type=float, default=None)
    p.add_argument("--null", default="normal", choices=["normal", "gamma"])
    p.add_argument("--target", default="uniform", help="'uniform' or 'alpha:<value>'")
    p.add_argument("--fix-learner", type=int, default=None, help="learner id kept fixed")
    p.add_argument("--mode", choices=["df", "lambda"], default="df")
    p.add_argument("--tol", type=float, default=None, help="stop once imbalance <= tol")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sgboost", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a sparse-group boosting model")
    _add_data(p)
    _add_boost(p)
    _add_common(p)
    p.add_argument("--model", required=True, help="output model document (JSON)")

    p = sub.add_parser("tune", help="resampled risk curve and optimal mstop")
    _add_data(p)
    _add_boost(p)
    _add_common(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--kfold", type=int, help="k-fold cross-validation")
    g.add_argument("--bootstrap", type=int, help="bootstrap replicates (default 25)")
    p.add_argument("--restandardize", action="store_true",
                   help="recompute standardization inside every fold")
    p.add_argument("--curve", required=True, help="output: replicate,iteration,loss")
    p.add_argument("--summary", help="output: iteration,mean_loss")
    p.add_argument("--truncated-model", help="fit on all data and save it at mstop*")

    p = sub.add_parser("balance", help="balance null selection frequencies")
    _add_data(p, alpha_default=0.0)
    _add_balance(p)
    _add_common(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("report", help="importance, coefficient and path tables")
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-predictors", type=_positive_int, default=None)
    p.add_argument("--prop", type=float, default=None)
    p.add_argument("--max-char-length", type=_positive_int, default=None)

    p = sub.add_parser("simulate", help="generate simulated data or the bias table")
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--linear-sim", "--paper-sim", dest="paper_sim", action="store_true",
                      help="100 x 200 linear sparse-group example")
    what.add_argument("--scenario", type=int, choices=[1, 2, 3, 4])
    what.add_argument("--table1", action="store_true",
                      help="selection frequencies of all scenarios and schemes")
    _add_balance(p)
    _add_common(p)
    p.add_argument("--out-dir", required=True)
    return parser


def _load(args):
    ds = load_dataset(args.data, args.outcome, standardize=not args.no_standardize,
                      family=args.family, categorical=args.categorical,
                      standardize_outcome=args.standardize_outcome)
    gs = GroupStructure.from_table(ds, args.groups, args.var_name, args.group_name)
    return ds, gs


def _learners(args, ds, gs):
    learners = build_base_learners(ds, gs, args.alpha)
    if getattr(args, "df_from", None):
        with open(args.df_from) as fh:
            report = json.load(fh)
        dfs = report.get("df_star")
        if not isinstance(dfs, list) or len(dfs) != len(learners):
            raise UsageError(f"{args.df_from}: df_star does not match {len(learners)} learners")
        learners = [l.with_df(float(d)) for l, d in zip(learners, dfs)]
    return learners


def _balance_config(args) -> BalanceConfig:
    target = args.target.strip().lower()
    if target == "uniform":
        target_alpha = None
    elif target.startswith("alpha:"):
        try:
            target_alpha = float(target.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad --target {args.target!r}") from None
    else:
        raise UsageError(f"bad --target {args.target!r}; use 'uniform' or 'alpha:<value>'")
    return BalanceConfig(reps=args.reps, iters=args.iters, lr=args.lr, gamma=args.gamma,
                         eta=args.eta, init_df=args.init_df, min_df=args.min_df,
                         max_df=args.max_df, null=null_distribution(args.null),
                         target_alpha=target_alpha, seed=args.seed,
                         fixed_learner=args.fix_learner, mode=args.mode, tol=args.tol,
                         threads=args.threads)


def _counts(model):
    kinds = [model.learner(r.learner_id).kind for r in model.trace]
    return kinds.count(INDIVIDUAL), kinds.count(GROUP)


def cmd_fit(args) -> int:
    ds, gs = _load(args)
    learners = _learners(args, ds, gs)
    model = fit(ds, learners, BoostConfig(args.mstop, args.nu, args.family))
    save_model(model, args.model)
    ind, grp = _counts(model)
    print(f"iterations: {model.mstop}")
    print(f"final_loss: {fmt(model.trace[-1].loss_after)}")
    print(f"learners_individual: {sum(l.kind == INDIVIDUAL for l in learners)}")
    print(f"learners_group: {sum(l.kind == GROUP for l in learners)}")
    print(f"selected_individual: {ind}")
    print(f"selected_group: {grp}")
    return 0


def cmd_tune(args) -> int:
    ds, gs = _load(args)
    learners = _learners(args, ds, gs)
    config = BoostConfig(args.mstop, args.nu, args.family)
    if args.kfold is not None:
        plan = ResamplingPlan("kfold", args.kfold, args.seed)
    else:
        plan = ResamplingPlan("bootstrap", args.bootstrap or 25, args.seed)
    curve = cv_risk(ds, learners, config, plan, threads=args.threads,
                    restandardize=args.restandardize)
    reps, iters = curve.risk.shape
    long = pd.DataFrame({"replicate": np.repeat(np.arange(1, reps + 1), iters),
                         "iteration": np.tile(np.arange(iters), reps),
                         "loss": curve.risk.ravel()})
    write_table(long, args.curve)
    if args.summary:
        write_table(pd.DataFrame({"iteration": np.arange(iters), "mean_loss": curve.mean}),
                    args.summary)
    best = curve.mstop
    if args.truncated_model:
        model = fit(ds, learners, config).truncate(best, ds.x)
        save_model(model, args.truncated_model)
    print(f"replicates: {reps}")
    print(f"mstop: {best}")
    print(f"mean_risk: {fmt(float(curve.mean[best]))}")
    return 0


def _balance_report(cfg, learners, result) -> dict:
    return {
        "settings": {"reps": cfg.reps, "iters": cfg.iters, "lr": cfg.lr, "gamma": cfg.gamma,
                     "eta": cfg.eta, "init_df": cfg.init_df, "min_df": cfg.min_df,
                     "max_df": cfg.max_df, "null": cfg.null.name, "seed": cfg.seed,
                     "target_alpha": cfg.target_alpha, "fixed_learner": cfg.fixed_learner,
                     "mode": cfg.mode, "tol": cfg.tol},
        "learners": [l.info() for l in learners],
        "target": result.target.tolist(),
        "df_star": result.df_star.tolist(),
        "lambda_star": result.lambda_star.tolist(),
        "best_round": result.best_round + 1,
        "imbalance": result.imbalance_history.tolist(),
        "accepted": result.accepted.tolist(),
        "learning_rate": result.lr_history.tolist(),
        "df_history": result.df_history.tolist(),
        "frequency_history": result.freq_history.tolist(),
    }


def _frequency_table(learners, result) -> pd.DataFrame:
    rows = []
    for r in range(len(result.imbalance_history)):
        for j, l in enumerate(learners):
            rows.append({"round": r + 1, "learner": l.id, "label": l.label, "kind": l.kind,
                         "df": result.df_history[r, j], "frequency": result.freq_history[r, j],
                         "target": result.target[j]})
    return pd.DataFrame(rows)


def cmd_balance(args) -> int:
    ds, gs = _load(args)
    learners = build_base_learners(ds, gs, args.alpha)
    cfg = _balance_config(args)
    result = balance(learners, cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "balance.json", "w") as fh:
        json.dump(_balance_report(cfg, learners, result), fh, indent=1)
        fh.write("\n")
    write_table(_frequency_table(learners, result), out / "frequencies.csv")
    print(f"rounds: {len(result.imbalance_history)}")
    print(f"best_round: {result.best_round + 1}")
    print(f"imbalance: {fmt(result.best_imbalance)}")
    for l, d in zip(learners, result.df_star):
        print(f"df[{l.id}] {l.label}: {fmt(float(d))}")
    return 0


def cmd_report(args) -> int:
    model = load_model(args.model)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    imp = variable_importance(model)
    coef = coefficients(model)
    write_table(imp.varimp, out / "importance.csv")
    write_table(imp.group_importance, out / "group_importance.csv")
    write_table(coef.raw, out / "coef_raw.csv")
    write_table(coef.aggregate, out / "coef_aggregate.csv")
    write_table(coefficient_path(model), out / "path.csv")
    display = filter_importance(imp.varimp, args.n_predictors, args.prop, args.max_char_length)
    write_table(display, out / "importance_display.csv")
    agg = coef.aggregate.head(args.n_predictors) if args.n_predictors else coef.aggregate
    write_table(agg, out / "coef_aggregate_display.csv")
    print(f"iterations: {model.mstop}")
    print(f"selected_learners: {len(imp.varimp)}")
    for row in imp.group_importance.itertuples():
        print(f"importance_{row.type}: {fmt(row.importance)}")
    return 0


def _dataset_frame(ds) -> pd.DataFrame:
    frame = pd.DataFrame(ds.x, columns=list(ds.column_names))
    frame[ds.outcome_name] = ds.y
    return frame


def _groups_frame(gs, ds) -> pd.DataFrame:
    rows = [(ds.column_names[c], name) for name, cols in gs.groups for c in cols]
    return pd.DataFrame(rows, columns=["variable_name", "group_name"])


def cmd_simulate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.table1:
        cfg = _balance_config(args)
        report = run_bias_experiment(
            [bias_scenario(i, seed=args.seed) for i in (1, 2, 3, 4)], cfg)
        table = pd.DataFrame(report.rows, columns=list(report.COLUMNS))
        write_table(table, out / "table1.csv")
        print(table.to_string(index=False, float_format=lambda v: f"{v:.3f}"))
        return 0
    if args.paper_sim:
        ds, gs = gen_linear_sim(args.seed)
    else:
        ds, gs, _ = gen_scenario(bias_scenario(args.scenario, seed=args.seed))
    write_table(_dataset_frame(ds), out / "data.csv")
    write_table(_groups_frame(gs, ds), out / "groups.csv")
    print(f"rows: {ds.n}")
    print(f"columns: {ds.p}")
    print(f"groups: {len(gs)}")
    return 0


COMMANDS = {"fit": cmd_fit, "tune": cmd_tune, "balance": cmd_balance,
            "report": cmd_report, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        with threadpool_limits(1):
            return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except (NumericError, SGBoostError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numeric: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
