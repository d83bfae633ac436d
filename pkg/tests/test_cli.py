import csv
from importlib import resources

import numpy as np

import pytest

from slcglmb.cli import main

CLUSTER = str(resources.files("slcglmb") / "scenarios" / "cluster.toml")


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def test_simulate_and_track(tmp_path):
    assert run(tmp_path, "simulate", "--config", CLUSTER, "--seed", "5") == 0
    head = (tmp_path / "truth.csv").read_text().splitlines()
    assert head[0] == "# seed=5" and head[2] == "step,label,x0,x1"
    assert run(tmp_path, "track", "--config", CLUSTER, "--filter", "both", "--snapshots") == 0
    for name in ("tracks_glmb.csv", "tracks_slc.csv", "diagnostics_slc.csv", "snapshots/slc_step005.json"):
        assert (tmp_path / name).exists()
    glmb = list(csv.reader((tmp_path / "tracks_glmb.csv").read_text().splitlines()[4:]))
    slc = list(csv.reader((tmp_path / "tracks_slc.csv").read_text().splitlines()[4:]))
    assert [r[:2] for r in glmb] == [r[:2] for r in slc]
    def nums(rows):
        return np.array([[float(v) if v else np.nan for v in r[2:]] for r in rows])

    np.testing.assert_allclose(nums(glmb), nums(slc), atol=1e-8)


def test_compare_verify_correlate(tmp_path):
    assert run(tmp_path, "compare", "--config", CLUSTER) == 0
    assert run(tmp_path, "verify", "--seed", "3") == 0
    assert run(tmp_path, "correlate", "--config", CLUSTER) == 0
    lines = (tmp_path / "fcd.csv").read_text().splitlines()
    assert "x1,x2,fcd" in lines and len(lines) - lines.index("x1,x2,fcd") - 1 == 21 * 21


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("seed = 1\nsteps = 2\n")
    assert run(tmp_path, "track", "--config", str(bad)) == 2
    assert run(tmp_path, "simulate", "--config", str(tmp_path / "missing.toml")) == 2
    with pytest.raises(SystemExit) as e:
        main(["track", "--filter", "nope"])
    assert e.value.code == 2


def test_numerical_failure_exit_3(tmp_path):
    cfg = tmp_path / "zero.toml"
    text = open(CLUSTER).read().replace("survival_prob = 0.99", "survival_prob = 1e-320")
    cfg.write_text(text)
    assert run(tmp_path, "track", "--config", str(cfg)) == 3
