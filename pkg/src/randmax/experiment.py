"""Synthetic-data experiment comparing the three training/inference methods.

Each repetition draws a ground-truth ``w*`` and fresh train/test sets, then
runs the requested methods:

* ``All``: max loss over every output for training, exact inference.
* ``Random``: max loss over greedy proposal draws for training, inference
  by the best of a fresh proposal sample.
* ``RandomAll``: the same trained ``w`` as Random, exact inference.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from randmax import learning, spaces
from randmax.learning import Objective, TrainConfig
from randmax.model import Sample
from randmax.samplers import ProposalKind, required_set_size
from randmax.spaces import Kind, Space

METHODS = ("All", "Random", "RandomAll")

EXPERIMENT_SPACES = {
    Kind.TREE: Space(Kind.TREE, 6),
    Kind.DAG: Space(Kind.DAG, 5, 2),
    Kind.SET: Space(Kind.SET, 15, 4),
}
EXPERIMENT_BETA = {Kind.TREE: 0.8, Kind.DAG: 0.85, Kind.SET: 0.5}

# stream roles under one (seed, repetition) pair
_DATA, _TRAIN_ALL, _TRAIN_RANDOM, _EVAL_RANDOM = range(4)

WALLCLOCK_COLUMNS = ("train_runtime", "test_runtime")


@dataclass
class ExperimentConfig:
    space: Space = field(default_factory=lambda: EXPERIMENT_SPACES[Kind.TREE])
    n_train: int = 100
    n_test: int = 100
    repetitions: int = 30
    methods: tuple[str, ...] = METHODS
    beta: float | None = None
    train: TrainConfig | None = None
    seed: int = 0
    output_dir: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if isinstance(self.space, dict):
            self.space = Space(**self.space)
        if isinstance(self.train, dict):
            self.train = TrainConfig(**self.train)
        self.methods = tuple(self.methods)
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if self.repetitions < 1:
            raise ValueError("need at least one repetition")
        if self.beta is None:
            self.beta = EXPERIMENT_BETA[self.space.kind]
        if self.train is None:
            self.train = TrainConfig(lam=1.0 / self.n_train, iterations=20, beta=self.beta)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(**json.loads(text))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["space"] = {"kind": self.space.kind.value, "v": self.space.v, "b": self.space.b}
        d["train"] = {k: (v.value if hasattr(v, "value") else v) for k, v in d["train"].items()}
        d["methods"] = list(self.methods)
        return d


@dataclass
class RepetitionReport:
    space: str
    method: str
    repetition: int
    seed: int
    train_runtime: float
    train_distortion: float
    test_runtime: float
    test_distortion: float
    dist_to_truth: float
    angle_to_truth: float
    angle_degenerate: bool = False


def stream(seed: int, rep: int, role: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep, role)))


def generate_data(space: Space, n: int, rng, w_star=None):
    """Ground truth ``w*`` (standard normal) and ``n`` samples labelled by it.

    ``rng`` may be a seed. Passing ``w_star`` reuses an existing ground truth,
    which is how test sets are drawn.
    """
    rng = np.random.default_rng(rng)
    if w_star is None:
        w_star = rng.standard_normal(space.ell)
    outs = spaces.tables(space).outputs
    samples = []
    for _ in range(n):
        x = rng.integers(0, 2, size=space.ell).astype(np.int8)
        samples.append(Sample(x, outs[learning.infer_exact_index(space, x, w_star)], space))
    return w_star, samples


def angle_degrees(w_hat, w_star) -> tuple[float, bool]:
    """Angle between two vectors; 90 degrees with a flag when one is zero."""
    a, b = np.linalg.norm(w_hat), np.linalg.norm(w_star)
    if a == 0 or b == 0:
        return 90.0, True
    c = float(np.clip(w_hat @ w_star / (a * b), -1.0, 1.0))
    return math.degrees(math.acos(c)), False


def _approx_predictions(space, samples, w, beta, n, rng):
    return [learning.infer_approx_index(space, s.x, w, beta, n, ProposalKind.GREEDY, rng) for s in samples]


def _exact_predictions(space, samples, w):
    return [learning.infer_exact_index(space, s.x, w) for s in samples]


def run_repetition(config: ExperimentConfig, rep: int) -> list[RepetitionReport]:
    space, tc = config.space, config.train
    data_rng = stream(config.seed, rep, _DATA)
    w_star, train_set = generate_data(space, config.n_train, data_rng)
    _, test_set = generate_data(space, config.n_test, data_rng, w_star=w_star)
    ell = space.ell
    reports = []

    def report(method, tr_time, tr_dist, te_time, te_dist, w):
        angle, degenerate = angle_degrees(w, w_star)
        reports.append(
            RepetitionReport(
                str(space), method, rep, config.seed, tr_time, tr_dist, te_time, te_dist,
                float(np.linalg.norm(w - w_star) / math.sqrt(ell)), angle, degenerate,
            )
        )

    if "All" in config.methods:
        cfg = TrainConfig(**{**asdict(tc), "objective": Objective.MAX_ALL})
        res = learning.train(space, train_set, cfg, stream(config.seed, rep, _TRAIN_ALL))
        tr_dist = learning.predictions_distortion(space, train_set, _exact_predictions(space, train_set, res.w))
        t0 = time.perf_counter()
        preds = _exact_predictions(space, test_set, res.w)
        te_time = time.perf_counter() - t0
        report("All", res.wallclock, tr_dist, te_time,
               learning.predictions_distortion(space, test_set, preds), res.w)

    if "Random" in config.methods or "RandomAll" in config.methods:
        cfg = TrainConfig(**{**asdict(tc), "objective": Objective.MAX_RANDOM, "proposal": ProposalKind.GREEDY})
        res = learning.train(space, train_set, cfg, stream(config.seed, rep, _TRAIN_RANDOM))
        eval_rng = stream(config.seed, rep, _EVAL_RANDOM)
        n = config.n_train
        tr_dist = learning.predictions_distortion(
            space, train_set, _approx_predictions(space, train_set, res.w, cfg.beta, n, eval_rng)
        )
        if "Random" in config.methods:
            t0 = time.perf_counter()
            preds = _approx_predictions(space, test_set, res.w, cfg.beta, n, eval_rng)
            te_time = time.perf_counter() - t0
            report("Random", res.wallclock, tr_dist, te_time,
                   learning.predictions_distortion(space, test_set, preds), res.w)
        if "RandomAll" in config.methods:
            t0 = time.perf_counter()
            preds = _exact_predictions(space, test_set, res.w)
            te_time = time.perf_counter() - t0
            report("RandomAll", res.wallclock, tr_dist, te_time,
                   learning.predictions_distortion(space, test_set, preds), res.w)
    return reports


def _run_one(args):
    config, rep = args
    spaces.tables(config.space)
    return run_repetition(config, rep)


METRICS = ("train_runtime", "train_distortion", "test_runtime", "test_distortion", "dist_to_truth", "angle_to_truth")


def aggregate(reports: list[RepetitionReport]) -> list[dict]:
    """Mean and 95% half-width (1.96 standard errors) per space and method."""
    groups: dict[tuple[str, str], list[RepetitionReport]] = {}
    for r in reports:
        groups.setdefault((r.space, r.method), []).append(r)
    rows = []
    for (space, method), rs in groups.items():
        # fixed summation order, whatever order the repetitions finished in
        rs = sorted(rs, key=lambda r: (r.repetition, r.seed))
        row = {"space": space, "method": method, "repetitions": len(rs)}
        for m in METRICS:
            vals = np.array([getattr(r, m) for r in rs], dtype=np.float64)
            half = 0.0 if len(vals) < 2 else 1.96 * vals.std(ddof=1) / math.sqrt(len(vals))
            row[m] = float(vals.mean())
            row[m + "_ci"] = float(half)
        rows.append(row)
    by_space: dict[str, dict[str, dict]] = {}
    for row in rows:
        by_space.setdefault(row["space"], {})[row["method"]] = row
    for methods in by_space.values():
        base = methods.get("All", {}).get("train_runtime")
        for row in methods.values():
            row["train_runtime_ratio"] = row["train_runtime"] / base if base else float("nan")
    order = {m: i for i, m in enumerate(METHODS)}
    return sorted(rows, key=lambda r: (r["space"], order[r["method"]]))


def run_experiment(config: ExperimentConfig):
    """All repetitions of one space; returns ``(reports, aggregate_rows)``.

    Repetitions may run in worker processes (``config.jobs``); results are
    reduced in repetition order so the output does not depend on scheduling.
    Completed repetitions are written to ``output_dir`` even if a later one fails.
    """
    jobs = [(config, rep) for rep in range(config.repetitions)]
    results: list[list[RepetitionReport]] = []
    try:
        if config.jobs > 1:
            with ProcessPoolExecutor(max_workers=config.jobs) as pool:
                results = list(pool.map(_run_one, jobs))
        else:
            for job in jobs:
                results.append(_run_one(job))
    finally:
        reports = [r for rs in results for r in rs]
        if config.output_dir is not None and reports:
            write_reports(reports, Path(config.output_dir), aggregate(reports))
    return reports, aggregate(reports)


# ---------------------------------------------------------------------------
# serialisation


def report_columns() -> list[str]:
    return [f.name for f in fields(RepetitionReport)]


def reports_csv(reports, include_wallclock: bool = True) -> str:
    cols = [c for c in report_columns() if include_wallclock or c not in WALLCLOCK_COLUMNS]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in reports:
        w.writerow({k: _fmt(v) for k, v in asdict(r).items() if k in cols})
    return buf.getvalue()


def aggregate_csv(rows, include_wallclock: bool = True) -> str:
    cols = ["space", "method", "repetitions"]
    for m in METRICS:
        if include_wallclock or m not in WALLCLOCK_COLUMNS:
            cols += [m, m + "_ci"]
    if include_wallclock:
        cols.append("train_runtime_ratio")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: _fmt(v) for k, v in row.items()})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def parse_reports_csv(text: str) -> list[RepetitionReport]:
    types = {f.name: f.type for f in fields(RepetitionReport)}
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        kw = {}
        for k, v in row.items():
            t = types[k]
            if t == "int":
                kw[k] = int(v)
            elif t == "float":
                kw[k] = float(v)
            elif t == "bool":
                kw[k] = v == "True"
            else:
                kw[k] = v
        out.append(RepetitionReport(**kw))
    return out


def write_reports(reports, out_dir: Path, rows=None, fmt: str = "csv") -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = aggregate(reports) if rows is None else rows
    if fmt == "json":
        a = out_dir / "repetitions.json"
        b = out_dir / "table1.json"
        a.write_text(json.dumps([asdict(r) for r in reports], indent=2))
        b.write_text(json.dumps(rows, indent=2))
    else:
        a = out_dir / "repetitions.csv"
        b = out_dir / "table1.csv"
        a.write_text(reports_csv(reports))
        b.write_text(aggregate_csv(rows))
    return [a, b]
