import itertools
import math

import numpy as np
import pytest

from widthlab.experiments import (
    ExperimentConfig,
    RunRecord,
    ValidationError,
    empirical_l0_separation,
    gluskin_experiment,
    l0_rigidity_experiment,
    l1_rigidity_experiment,
    lacunary_experiment,
    make_model,
    quantile_separation,
    random_matrix_l0_experiment,
    replay,
    run,
    write_config,
)
from widthlab.metricspace import KYFAN, DomainError, Lp, lp, matrix_distance
from widthlab.systems import rademacher, random_signs, substream
from widthlab.widths import altmin_lowrank


def test_l1_endpoints():
    m = random_signs(16)
    r0 = l1_rigidity_experiment(m, 16, 0, 5, seed=1)
    assert np.allclose(r0.values(), 1.0, atol=1e-9)
    rN = l1_rigidity_experiment(m, 16, 16, 5, seed=1)
    assert np.allclose(rN.values(), 0.0, atol=1e-9)
    r = l1_rigidity_experiment(m, 16, 8, 10, seed=1)
    assert np.all(r.values() > 0)
    assert r.columns[:3] == ["trial", "seed", "value"]


def test_l1_small_scale_oracle():
    # the altmin-adversarial value should not be far above the best Haar subspace
    r = l1_rigidity_experiment(random_signs(16), 16, 8, 30, "AltMin", seed=2)
    haar = np.array([row[3] for row in r.rows])
    assert r.summary["mean"] <= haar.mean() * 1.05
    assert r.summary["mean"] > 0


def test_separation_examples(rng):
    z = rng.permutation(np.repeat([-1.0, 1.0], 1000))
    sep, c = empirical_l0_separation(z)
    assert sep == pytest.approx(0.5)
    a, b = quantile_separation(z, 0.5, 0.25)
    assert -1 < a < b < 1
    assert np.sum((z > a) & (z < b)) == 0
    u = rng.random(3000)
    a, b = quantile_separation(u, 0.3, 0.5)
    n = u.size
    assert np.sum(u <= a) >= 0.1 * n and np.sum(u >= b) >= 0.1 * n
    assert np.sum((u > a) & (u < b)) <= 0.5 * n and b - a >= 0.075
    with pytest.raises(DomainError):
        quantile_separation(np.full(100, 2.0), 0.1, 0.5)


def test_l0_experiment_basics():
    g = make_model("gaussian", 16)
    r = l0_rigidity_experiment(g, 16, 2, 0.0, 10, seed=3)
    assert r.summary["hit_rate"] == 0
    assert r.summary["bound"] == 2.0
    assert r.summary["floor"] == min(r.values())


def test_random_matrix_examples():
    r = random_matrix_l0_experiment(16, 0.25, 3, seed=1)
    assert np.all(r.values() > 0)
    full = random_matrix_l0_experiment(8, 1.0, 2, seed=1)
    assert np.allclose(full.values(), 0, atol=1e-9)
    grid = [-1, -0.5, 0, 0.5, 1]
    vecs = [np.array(v) for v in itertools.product(grid, repeat=3)]
    for t in range(3):
        E = rademacher(substream(4, t), (3, 3))
        best = min(matrix_distance(E, np.outer(u, v), KYFAN) for u in vecs for v in vecs)
        got = altmin_lowrank(E, 1, KYFAN, restarts=2, iters=10, seed=t).error
        assert got <= best + 1e-12


def test_random_matrix_hamming_option():
    r = random_matrix_l0_experiment(8, 0.25, 2, seed=2, hamming=True)
    assert all(0 < row[3] <= 1 for row in r.rows)
    r2 = random_matrix_l0_experiment(8, 0.25, 2, seed=2)
    assert all(math.isnan(row[3]) for row in r2.rows)


def test_lacunary_examples():
    r = lacunary_experiment("cos", [4.0], 32, 16, Lp(1), 3, seed=1, points=128)
    assert np.all(r.values() > 0.05)
    full = lacunary_experiment("cos", [2.0, 4.0], 8, 8, Lp(1), 2, seed=1, points=64)
    assert np.allclose(full.values(), 0, atol=1e-9)
    assert set(full.summary["per_lambda"]) == {"2.0", "4.0"}


def test_gluskin_examples():
    r = gluskin_experiment("orthonormal", 1.5, 32, 8, 20, seed=1)
    assert r.summary["quantiles"]["q50"] > 0
    assert r.summary["sound"]
    full = gluskin_experiment("rademacher", 1.5, 8, 8, 5, seed=1)
    assert np.allclose(full.values(), 0)
    two = gluskin_experiment("rademacher", 2.0, 16, 4, 5, seed=2)
    for row in two.rows:
        assert row[2] == pytest.approx(row[3], abs=1e-9)


CONFIGS = [
    {"kind": "L1Rigidity", "N": 16, "n": 4, "trials": 4, "seed": 5},
    {"kind": "GluskinP12", "N": 16, "n": 4, "p": 1.5, "trials": 4, "seed": 6},
    {"kind": "TrigWidth", "N": 256, "m": [2, 3], "p": 0.5, "seed": 7},
]


@pytest.mark.parametrize("d", CONFIGS, ids=lambda d: d["kind"])
def test_replay_is_identical(d):
    rec = run(ExperimentConfig.from_dict(d))
    again = replay(rec)
    assert again.csv_text() == rec.csv_text()


def test_validation_errors():
    with pytest.raises(ValidationError, match="unknown experiment kind"):
        ExperimentConfig.from_dict({"kind": "Nope"})
    with pytest.raises(ValidationError, match="delta"):
        ExperimentConfig.from_dict({"kind": "L0Rigidity", "N": 8, "n": 1})
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"kind": "L1Rigidity", "N": 8, "n": 1, "strategy": "Bogus"})
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"kind": "L1Rigidity", "N": 8, "n": 1, "trials": 0})


def test_toml_roundtrip(tmp_path):
    cfg = ExperimentConfig.from_dict({"kind": "Lacunary", "lambdas": [2.0, 3.0], "N": 8, "n": 2,
                                      "profile": "sign", "trials": 2, "seed": 11})
    path = tmp_path / "c.toml"
    write_config(cfg, path)
    back = ExperimentConfig.from_toml(path)
    assert back.to_dict() == cfg.to_dict()
    (tmp_path / "bad.toml").write_text("kind = [")
    with pytest.raises(ValidationError):
        ExperimentConfig.from_toml(tmp_path / "bad.toml")


def test_record_write(tmp_path):
    rec = run(ExperimentConfig.from_dict(CONFIGS[0]))
    csv_path, json_path = rec.write(tmp_path / "out.csv")
    text = open(csv_path).read()
    assert text.splitlines()[0] == "trial,seed,value,aux1,aux2"
    assert text == rec.csv_text()
    assert '"summary"' in open(json_path).read()
    assert isinstance(rec, RunRecord)


def test_sparse_config_power_shorthand():
    rec = run(ExperimentConfig.from_dict({"kind": "SparseP", "p": 4, "N": 64, "n": "^0.5",
                                          "eps": 0.02, "trials": 20, "seed": 1}))
    assert rec.config["resolved"]["n"] == 8
