import json

import numpy as np
import pandas as pd
import pytest

from sgboost.boosting import BoostConfig, fit
from sgboost.errors import CorruptModel
from sgboost.io import load_model, read_table_frame, save_model, write_table
from sgboost.model import build_base_learners

from conftest import make_dataset


@pytest.fixture
def model():
    ds, gs = make_dataset()
    return fit(ds, build_base_learners(ds, gs, 0.3), BoostConfig(25, 0.2), record_rss=True)


def test_round_trip_is_exact(model, tmp_path):
    path = tmp_path / "m.json"
    save_model(model, path)
    back = load_model(path)
    np.testing.assert_array_equal(back.coefficients, model.coefficients)
    assert [r.learner_id for r in back.trace] == [r.learner_id for r in model.trace]
    assert back.offset == model.offset
    x = np.random.default_rng(0).standard_normal((5, model.p))
    np.testing.assert_array_equal(back.predict(x), model.predict(x))
    save_model(back, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(format="other"),
    lambda d: d["trace"][0].update(learner_id=999),
    lambda d: d["trace"][0]["increment"].append(1.0),
    lambda d: d["coefficients"].__setitem__(0, d["coefficients"][0] + 1.0),
    lambda d: d.pop("learners"),
])
def test_corrupt_documents_are_rejected(model, tmp_path, mutate):
    path = tmp_path / "m.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    mutate(doc)
    path.write_text(json.dumps(doc))
    with pytest.raises(CorruptModel):
        load_model(path)


def test_unreadable_model(tmp_path):
    (tmp_path / "x.json").write_text("{not json")
    with pytest.raises(CorruptModel):
        load_model(tmp_path / "x.json")
    with pytest.raises(CorruptModel):
        load_model(tmp_path / "missing.json")


def test_tables_round_trip_floats(tmp_path):
    vals = np.random.default_rng(1).standard_normal(50) * 1e-3
    write_table(pd.DataFrame({"v": vals}), tmp_path / "t.csv")
    np.testing.assert_array_equal(read_table_frame(tmp_path / "t.csv")["v"].to_numpy(), vals)
