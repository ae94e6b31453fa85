"""Sparse-group boosting with ridge base-learners and selection-frequency balancing."""

__version__ = "0.1.0"

from .balance import (
    BalanceConfig,
    BalanceResult,
    GammaNull,
    StandardNormal,
    balance,
    selection_frequencies,
    target_vector,
)
from .boosting import BoostConfig, BoostModel, BoostState, CandidateSet, boost_step, fit
from .families import Binomial, Gaussian, get_family, loss, negative_gradient
from .interpret import coefficient_path, coefficients, variable_importance
from .model import (
    BaseLearner,
    Dataset,
    GroupStructure,
    build_base_learners,
    group_learners,
    load_dataset,
)
from .ridge import DesignBlock, RidgeFit, effective_df, ridge_fit, solve_lambda
from .simulate import gen_linear_sim, gen_scenario, bias_scenario, run_bias_experiment
from .tune import ResamplingPlan, RiskCurve, cv_risk, optimal_mstop

__all__ = [
    "BalanceConfig", "BalanceResult", "BaseLearner", "Binomial", "BoostConfig", "BoostModel",
    "BoostState", "CandidateSet", "Dataset", "DesignBlock", "GammaNull", "Gaussian",
    "GroupStructure", "ResamplingPlan", "RidgeFit", "RiskCurve", "StandardNormal", "balance",
    "boost_step", "build_base_learners", "coefficient_path", "coefficients", "cv_risk",
    "effective_df", "fit", "gen_linear_sim", "gen_scenario", "get_family", "group_learners",
    "load_dataset", "loss", "negative_gradient", "optimal_mstop", "bias_scenario",
    "ridge_fit", "run_bias_experiment", "selection_frequencies", "solve_lambda",
    "target_vector", "variable_importance",
]
