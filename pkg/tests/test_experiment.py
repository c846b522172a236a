from __future__ import annotations

import json
import math

import numpy as np
import pytest

from randmax import experiment, learning, model, spaces
from randmax.experiment import ExperimentConfig, RepetitionReport
from randmax.spaces import Kind, Space

SMALL = Space(Kind.SET, 6, 2)


def test_generate_data_labels_are_maximisers():
    space = Space(Kind.TREE, 4)
    w_star, samples = experiment.generate_data(space, 30, 0)
    for s in samples:
        scores = model.score_row(space, s.x, w_star)
        assert model.score(space, s.x, s.y, w_star) == pytest.approx(scores.max())


def test_generate_data_deterministic():
    a = experiment.generate_data(SMALL, 10, 4)
    b = experiment.generate_data(SMALL, 10, 4)
    assert np.array_equal(a[0], b[0])
    assert all(np.array_equal(p.x, q.x) and p.y == q.y for p, q in zip(a[1], b[1]))


def test_zero_input_labels_first_output():
    space = Space(Kind.DAG, 4, 2)
    w = np.random.default_rng(0).standard_normal(space.ell)
    assert learning.infer_exact(space, np.zeros(space.ell), w) == spaces.enumerate_space(space)[0]


def test_angle():
    assert experiment.angle_degrees(np.array([1.0, 0]), np.array([0, 2.0])) == (pytest.approx(90.0), False)
    assert experiment.angle_degrees(np.zeros(2), np.ones(2)) == (90.0, True)
    assert experiment.angle_degrees(np.ones(2), -np.ones(2))[0] == pytest.approx(180.0)


def test_single_repetition_smoke():
    cfg = ExperimentConfig(Space(Kind.TREE, 6), n_train=20, n_test=20, repetitions=1, methods=("All",))
    reports, rows = experiment.run_experiment(cfg)
    assert len(reports) == 1
    r = reports[0]
    assert r.method == "All"
    assert 0 <= r.test_distortion <= 1 and 0 <= r.angle_to_truth <= 180
    assert rows[0]["test_distortion_ci"] == 0.0


def test_experiment_defaults():
    cfg = ExperimentConfig()
    assert (cfg.n_train, cfg.n_test, cfg.repetitions) == (100, 100, 30)
    assert cfg.train.iterations == 20 and cfg.train.lam == pytest.approx(0.01)
    assert ExperimentConfig(Space(Kind.DAG, 5, 2)).beta == 0.85
    with pytest.raises(ValueError):
        ExperimentConfig(repetitions=0)
    with pytest.raises(ValueError):
        ExperimentConfig(methods=("Nope",))


def _report(method, value, rep=0):
    return RepetitionReport("s", method, rep, 0, 1.0, value, 1.0, value, value, value)


def test_aggregate_constant_column():
    rows = experiment.aggregate([_report("All", 0.3, i) for i in range(5)])
    assert rows[0]["test_distortion"] == pytest.approx(0.3)
    assert rows[0]["test_distortion_ci"] == pytest.approx(0.0, abs=1e-15)


def test_aggregate_half_width():
    vals = [0.1, 0.2, 0.4, 0.3]
    rows = experiment.aggregate([_report("All", v, i) for i, v in enumerate(vals)])
    assert rows[0]["test_distortion_ci"] == pytest.approx(1.96 * np.std(vals, ddof=1) / 2)


def test_repetition_order_does_not_matter():
    cfg = ExperimentConfig(SMALL, n_train=15, n_test=15, repetitions=3)
    reports, rows = experiment.run_experiment(cfg)
    shuffled = [r for rep in (2, 0, 1) for r in experiment.run_repetition(cfg, rep)]
    strip = lambda rows: [{k: v for k, v in r.items() if "runtime" not in k} for r in rows]
    assert strip(experiment.aggregate(shuffled)) == strip(rows)


def test_csv_round_trip(tmp_path):
    cfg = ExperimentConfig(SMALL, n_train=10, n_test=10, repetitions=2, output_dir=str(tmp_path))
    reports, _ = experiment.run_experiment(cfg)
    text = (tmp_path / "repetitions.csv").read_text()
    assert experiment.parse_reports_csv(text) == reports
    assert (tmp_path / "table1.csv").exists()


def test_json_output(tmp_path):
    cfg = ExperimentConfig(SMALL, n_train=10, n_test=10, repetitions=1)
    reports, rows = experiment.run_experiment(cfg)
    experiment.write_reports(reports, tmp_path, rows, fmt="json")
    back = [RepetitionReport(**d) for d in json.loads((tmp_path / "repetitions.json").read_text())]
    assert back == reports


def test_config_json_round_trip():
    cfg = ExperimentConfig(Space(Kind.DAG, 4, 2), n_train=12, repetitions=2, seed=5)
    again = ExperimentConfig.from_json(json.dumps(cfg.to_dict()))
    assert again.to_dict() == cfg.to_dict()


def test_partial_results_flushed(tmp_path, monkeypatch):
    cfg = ExperimentConfig(SMALL, n_train=10, n_test=10, repetitions=3, output_dir=str(tmp_path))
    real = experiment.run_repetition

    def flaky(config, rep):
        if rep == 2:
            raise RuntimeError("boom")
        return real(config, rep)

    monkeypatch.setattr(experiment, "run_repetition", flaky)
    with pytest.raises(RuntimeError):
        experiment.run_experiment(cfg)
    assert len(experiment.parse_reports_csv((tmp_path / "repetitions.csv").read_text())) == 6


def test_parallel_matches_serial():
    base = dict(space=SMALL, n_train=10, n_test=10, repetitions=2, seed=3)
    a, _ = experiment.run_experiment(ExperimentConfig(**base, jobs=1))
    b, _ = experiment.run_experiment(ExperimentConfig(**base, jobs=2))
    assert experiment.reports_csv(a, include_wallclock=False) == experiment.reports_csv(b, include_wallclock=False)
