import copy
from importlib import resources

import numpy as np
import pytest

from slcglmb.errors import ConfigError, ZeroClutterDensity
from slcglmb.labels import Label, LabeledState, validate_lfs
from slcglmb.models import detection_functional
from slcglmb.sim import ScanRecord, generate_scenario, load_config, ospa, parse_config, run_filter

BASE = {
    "seed": 3,
    "steps": 4,
    "motion": {"transition": [[1.0]], "process_noise": [[0.1]], "survival_prob": 1.0},
    "sensor": {
        "observation": [[1.0]],
        "measurement_noise": [[1e-8]],
        "detection_prob": 1.0,
        "clutter_rate": 0.0,
        "clutter_region": [[-20.0, 20.0]],
    },
    "birth": {"model": "lmb", "target": [{"existence": 1.0, "mean": [0.0], "std": [1.0]}, {"existence": 1.0, "mean": [5.0], "std": [1.0]}]},
    "cluster_mode": True,
}


def cfg_with(**changes):
    data = copy.deepcopy(BASE)
    for path, value in changes.items():
        node = data
        *head, last = path.split("__")
        for key in head:
            node = node[key]
        node[last] = value
    return parse_config(data)


def test_bundled_scenarios_load():
    for name in ("default.toml", "cluster.toml"):
        cfg = load_config(resources.files("slcglmb") / "scenarios" / name)
        assert cfg.steps == 5 and cfg.state_dim == 2


@pytest.mark.parametrize(
    "change,path",
    [
        ({"motion__survival_prob": 1.5}, "motion.survival_prob"),
        ({"sensor__measurement_noise": [[1.0, 0.0]]}, "sensor.measurement_noise"),
        ({"sensor__clutter_region": [[5.0, -5.0]]}, "sensor.clutter_region"),
        ({"birth__model": "poisson"}, "birth.model"),
        ({"seed": "x"}, "seed"),
    ],
)
def test_config_errors_carry_field_path(change, path):
    with pytest.raises(ConfigError) as e:
        cfg_with(**change)
    assert e.value.path == path


def test_missing_seed_is_an_error():
    data = copy.deepcopy(BASE)
    del data["seed"]
    with pytest.raises(ConfigError) as e:
        parse_config(data)
    assert e.value.path == "seed"


def test_invalid_toml(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("seed = = 3")
    with pytest.raises(ConfigError):
        load_config(p)


def test_perfect_sensor_sees_exactly_the_truth():
    for scan in generate_scenario(cfg_with()):
        assert len(scan.measurements) == len(scan.truth) == 2
        truth = sorted(e.x[0] for e in scan.truth)
        np.testing.assert_allclose(sorted(z[0] for z in scan.measurements), truth, atol=1e-3)


def test_certain_survival_keeps_cardinality():
    scans = generate_scenario(cfg_with(steps=6))
    assert {s.truth.labels() for s in scans} == {(Label(1, 1), Label(1, 2))}


def test_generation_is_deterministic():
    cfg = cfg_with(sensor__clutter_rate=4.0, sensor__detection_prob=0.7)
    a, b = generate_scenario(cfg), generate_scenario(cfg)
    for s, t in zip(a, b):
        assert s.truth == t.truth
        assert all(np.array_equal(x, y) for x, y in zip(s.measurements, t.measurements))
    c = generate_scenario(cfg.with_seed(4))
    assert any(len(s.measurements) != len(t.measurements) or s.truth != t.truth for s, t in zip(a, c))


def test_ospa_examples():
    X = validate_lfs([LabeledState((0.0,), Label(1, 1))])
    assert ospa(X, [[0.0]], 5.0) == 0.0
    assert ospa(validate_lfs([]), [[0.0], [1.0]], 5.0) == 5.0
    assert ospa(X, [[2.5]], 5.0, 1.0) == pytest.approx(2.5)
    assert ospa(X, [[9.0]], 5.0) == 5.0
    with pytest.raises(ValueError):
        ospa(X, [[0.0]], 0.0)


def test_empty_scan_list():
    res = run_filter(cfg_with(), [], "slc")
    assert len(res) == 1 and res[0].k == 0


def test_one_step_hand_evaluated():
    cfg = cfg_with(
        steps=1,
        birth__target=[{"existence": 0.4, "mean": [0.0], "std": [1.0]}],
        sensor__detection_prob=0.8,
        sensor__clutter_rate=2.0,
        sensor__measurement_noise=[[0.5]],
    )
    z = np.array([0.7])
    scan = ScanRecord(1, validate_lfs([]), (z,))
    d = run_filter(cfg, [scan], "glmb")[-1].density
    l = Label(1, 1)
    s = cfg.birth_model(1).spatial[l]
    raw = {(): 0.6, "miss": 0.4 * 0.2, "hit": 0.4 * detection_functional(s, cfg.sensor, z)}
    total = sum(raw.values())
    assert d.weight(((("z", (0,)),)), ()) == pytest.approx(raw[()] / total, rel=1e-12)
    assert d.weight(((("z", (0,)),)), (l,)) == pytest.approx(raw["miss"] / total, rel=1e-12)
    assert d.weight(((("z", (1,)),)), (l,)) == pytest.approx(raw["hit"] / total, rel=1e-12)


def test_glmb_and_slc_runs_agree():
    cfg = load_config(resources.files("slcglmb") / "scenarios" / "cluster.toml")
    scans = generate_scenario(cfg)[:3]
    a, b = run_filter(cfg, scans, "glmb"), run_filter(cfg, scans, "slc")
    for x, y in zip(a, b):
        assert x.labels == y.labels
        for l in x.labels:
            np.testing.assert_allclose(x.states[l], y.states[l], atol=1e-8)
        assert x.residual_update <= 1e-9 and y.residual_update <= 1e-9


def test_errors_report_the_step():
    cfg = cfg_with(steps=2, sensor__clutter_rate=1.0, sensor__detection_prob=0.9)
    scans = generate_scenario(cfg)
    bad = [scans[0], ScanRecord(2, scans[1].truth, (np.array([1e9]),))]
    with pytest.raises(ZeroClutterDensity) as e:
        run_filter(cfg, bad, "slc")
    assert e.value.step == 2
