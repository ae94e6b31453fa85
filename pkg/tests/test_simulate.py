import numpy as np
import pytest

from sgboost.balance import BalanceConfig, GammaNull
from sgboost.simulate import (TRUE_BETA, gen_linear_sim, gen_scenario, bias_scenario,
                              run_bias_experiment)


def test_linear_sim_shape_and_groups():
    ds, gs = gen_linear_sim(1)
    assert ds.x.shape == (100, 200) and len(gs) == 40
    assert all(len(cols) == 5 for _, cols in gs.groups)
    np.testing.assert_allclose(ds.x.std(axis=0, ddof=1), 1)
    assert np.count_nonzero(TRUE_BETA) == 16
    a, _ = gen_linear_sim(1)
    np.testing.assert_array_equal(a.x, ds.x)
    b, _ = gen_linear_sim(2)
    assert not np.array_equal(a.x, b.x)


@pytest.mark.parametrize("sid,n,p,g", [(1, 50, 6, 3), (2, 500, 6, 3), (3, 500, 6, 3),
                                       (4, 30, 50, 2)])
def test_scenarios(sid, n, p, g):
    ds, gs, sampler = gen_scenario(bias_scenario(sid))
    assert ds.x.shape == (n, p) and len(gs) == g
    assert isinstance(sampler, GammaNull) == (sid == 3)
    with pytest.raises(KeyError):
        bias_scenario(7)


def test_bias_experiment_rows():
    cfg = BalanceConfig(reps=200, iters=3)
    report = run_bias_experiment([bias_scenario(1), bias_scenario(4)], cfg)
    assert len(report.rows) == 5
    for scheme in ("equal_lambda", "equal_df", "group_adjustment"):
        assert report.frequencies(1, scheme).sum() == pytest.approx(1.0)
    again = run_bias_experiment([bias_scenario(1), bias_scenario(4)], cfg)
    assert again.rows == report.rows
