"""Model documents (JSON) and comma-separated table output."""

from __future__ import annotations

import json
import math

import numpy as np
import pandas as pd

from .boosting import BoostConfig, BoostModel, TraceRecord
from .errors import CorruptModel, SGBoostError
from .model import BaseLearner

FORMAT = "sgboost-model"
VERSION = 1
FLOAT_FORMAT = "%.17g"


def _floats(a) -> list[float]:
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def model_to_dict(model: BoostModel) -> dict:
    # json writes floats with repr(), which round-trips every double exactly
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "config": {"mstop": model.config.mstop, "nu": model.config.nu,
                   "family": model.config.family},
        "column_names": list(model.column_names),
        "center": None if model.center is None else _floats(model.center),
        "scale": None if model.scale is None else _floats(model.scale),
        "outcome_name": model.outcome_name,
        "outcome_levels": list(model.outcome_levels),
        "offset": float(model.offset),
        "learners": [l.info() for l in model.learners],
        "trace": [],
        "coefficients": _floats(model.coefficients),
    }
    for rec in model.trace:
        item = {"iteration": rec.iteration, "learner_id": rec.learner_id, "kind": rec.kind,
                "increment": _floats(rec.increment), "loss_before": rec.loss_before,
                "loss_after": rec.loss_after}
        if rec.candidate_rss is not None:
            item["candidate_rss"] = _floats(rec.candidate_rss)
        doc["trace"].append(item)
    return doc


def model_from_dict(doc: dict) -> BoostModel:
    try:
        if doc.get("format") != FORMAT:
            raise CorruptModel(f"not a {FORMAT} document")
        cfg = doc["config"]
        learners = tuple(
            BaseLearner(int(l["id"]), str(l["kind"]), tuple(int(c) for c in l["columns"]),
                        float(l["target_df"]), float(l["lambda"]), str(l["label"]),
                        str(l["predictor"]))
            for l in doc["learners"])
        if [l.id for l in learners] != list(range(1, len(learners) + 1)):
            raise CorruptModel("learner ids are not 1..L")
        p = len(doc["column_names"])
        trace = []
        for i, r in enumerate(doc["trace"], start=1):
            lid = int(r["learner_id"])
            inc = np.array(r["increment"], dtype=float)
            if int(r["iteration"]) != i or not 1 <= lid <= len(learners) or \
                    inc.shape != (len(learners[lid - 1].columns),):
                raise CorruptModel(f"trace record {i} is inconsistent")
            rss = r.get("candidate_rss")
            trace.append(TraceRecord(i, lid, str(r["kind"]), inc, float(r["loss_before"]),
                                     float(r["loss_after"]),
                                     None if rss is None else np.array(rss, dtype=float)))
        if any(c >= p for l in learners for c in l.columns):
            raise CorruptModel("learner column index out of range")
        model = BoostModel(
            BoostConfig(int(cfg["mstop"]), float(cfg["nu"]), cfg["family"]),
            learners, float(doc["offset"]), tuple(trace), tuple(doc["column_names"]),
            None if doc.get("center") is None else np.array(doc["center"], dtype=float),
            None if doc.get("scale") is None else np.array(doc["scale"], dtype=float),
            None, str(doc.get("outcome_name", "y")), tuple(doc.get("outcome_levels", ())))
    except SGBoostError as exc:
        raise CorruptModel(str(exc)) from None
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise CorruptModel(f"malformed model document: {exc!r}") from None
    stored = np.array(doc["coefficients"], dtype=float)
    if stored.shape != (model.p,) or not np.array_equal(stored, model.coefficients):
        raise CorruptModel("stored coefficients do not match the trace")
    return model


def save_model(model: BoostModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1, allow_nan=False)
        fh.write("\n")


def load_model(path) -> BoostModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CorruptModel(f"cannot read model file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"model file {path} is not valid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise CorruptModel("model document must be a JSON object")
    return model_from_dict(doc)


def write_table(df: pd.DataFrame, path) -> None:
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def read_table_frame(path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def fmt(value: float) -> str:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return FLOAT_FORMAT % value
