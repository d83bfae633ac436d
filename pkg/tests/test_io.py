import json

import numpy as np
import pytest

from slcglmb.glmb import GlmbDensity, LmbBirth, glmb_measurement_update, glmb_time_update
from slcglmb.io import decode_index, density_from_json, encode_index, fmt, glmb_to_json, slc_to_json, write_csv
from slcglmb.models import MotionModel, SensorModel
from slcglmb.sim import equivalence_gap
from slcglmb.slc import from_glmb, to_glmb

from conftest import L1, L2, gauss


@pytest.fixture
def posterior():
    b = LmbBirth({L1: 0.7, L2: 0.5}, {L1: gauss(-2.0, 1.0), L2: gauss(2.0, 1.0)})
    pred = glmb_time_update(GlmbDensity.empty(), MotionModel(np.eye(1), np.eye(1), 0.9), b)
    sen = SensorModel(np.eye(1), np.eye(1), 0.8, 1.0, np.array([[-15.0, 15.0]]))
    return glmb_measurement_update(pred, sen, [np.array([-1.5]), np.array([2.2])])


def test_index_encoding_round_trip():
    o = (("z", (0, 2)), ("b", (1,)))
    assert decode_index(json.loads(json.dumps(encode_index(o)))) == o


def test_glmb_snapshot_round_trip(posterior):
    data = json.loads(json.dumps(glmb_to_json(posterior, 1)))
    assert data["kind"] == "glmb" and {"index", "labels", "log_weight"} <= set(data["hypotheses"][0])
    back = density_from_json(data)
    dw, ds = equivalence_gap(from_glmb(back), posterior)
    assert dw <= 1e-15 and ds == 0.0


def test_slc_snapshot_round_trip(posterior):
    d = from_glmb(posterior)
    data = json.loads(json.dumps(slc_to_json(d, 1)))
    assert data["kind"] == "slc" and data["label_weight"] and data["correlation_weight"]
    back = density_from_json(data)
    assert back.label_weight == d.label_weight
    dw, ds = equivalence_gap(back, to_glmb(d))
    assert dw <= 1e-15 and ds == 0.0


def test_csv_is_deterministic(tmp_path):
    rows = [[1, "1:1", 0.1 + 0.2, 1e-300], [2, "", float("nan"), 3]]
    write_csv(tmp_path / "a.csv", ["seed=1"], ["k", "label", "x", "y"], rows)
    write_csv(tmp_path / "b.csv", ["seed=1"], ["k", "label", "x", "y"], rows)
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    assert a.startswith(b"# seed=1\nk,label,x,y\n")
    assert fmt(0.1 + 0.2) == "3.000000000000e-01"
