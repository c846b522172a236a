"""Command line entry point: ``python -m randmax <command>``.

Commands: gen-data, train, eval, bounds, verify-claims, reproduce-table1.
Datasets and weights travel as JSON files so the commands can be chained.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from randmax import analysis, experiment, learning, spaces, verify
from randmax.errors import RandmaxError
from randmax.experiment import EXPERIMENT_BETA, EXPERIMENT_SPACES, ExperimentConfig
from randmax.learning import Inference, Objective, TrainConfig
from randmax.model import Sample
from randmax.samplers import ProposalKind
from randmax.spaces import DagEdges, ElemSet, Kind, Space, TreeParents

_DEFAULT_V = {Kind.TREE: 6, Kind.DAG: 5, Kind.SET: 15}
_DEFAULT_B = {Kind.TREE: 0, Kind.DAG: 2, Kind.SET: 4}


def _space(args) -> Space:
    kind = Kind(args.space)
    v = args.v if args.v is not None else _DEFAULT_V[kind]
    b = args.b if args.b is not None else _DEFAULT_B[kind]
    return Space(kind, v, b)


def output_to_json(y):
    if isinstance(y, TreeParents):
        return list(y.parents)
    if isinstance(y, DagEdges):
        return [list(e) for e in y.edges]
    return list(y.elems)


def output_from_json(space: Space, obj):
    if space.kind is Kind.TREE:
        return TreeParents(tuple(int(p) for p in obj))
    if space.kind is Kind.DAG:
        return DagEdges.of([tuple(e) for e in obj])
    return ElemSet.of(obj)


def dataset_to_json(space: Space, samples, w_star=None) -> dict:
    return {
        "space": {"kind": space.kind.value, "v": space.v, "b": space.b},
        "w_star": None if w_star is None else [float(a) for a in w_star],
        "samples": [{"x": [int(a) for a in s.x], "y": output_to_json(s.y)} for s in samples],
    }


def dataset_from_json(d: dict):
    space = Space(**d["space"])
    samples = [Sample(np.array(s["x"], dtype=np.int8), output_from_json(space, s["y"]), space) for s in d["samples"]]
    w_star = None if d.get("w_star") is None else np.array(d["w_star"])
    return space, samples, w_star


def _emit(obj, out):
    text = json.dumps(obj, indent=2, default=analysis._json_default)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _train_config(args, n: int, space: Space) -> TrainConfig:
    cfg = {}
    if args.config:
        cfg = json.loads(Path(args.config).read_text()).get("train", {}) or {}
    cfg.setdefault("lam", args.lam if args.lam is not None else 1.0 / n)
    if args.lam is not None:
        cfg["lam"] = args.lam
    if args.iters is not None:
        cfg["iterations"] = args.iters
    beta = args.beta if args.beta is not None else cfg.get("beta", EXPERIMENT_BETA[space.kind])
    cfg["beta"] = beta
    cfg["objective"] = Objective.MAX_RANDOM if args.objective == "random" else Objective.MAX_ALL
    cfg["seed"] = args.seed
    return TrainConfig(**cfg)


# ---------------------------------------------------------------------------
# commands


def cmd_gen_data(args) -> int:
    space = _space(args)
    w_star, train = experiment.generate_data(space, args.n_train, args.seed)
    _, test = experiment.generate_data(space, args.n_test, np.random.default_rng([args.seed, 1]), w_star=w_star)
    d = dataset_to_json(space, train, w_star)
    d["test_samples"] = dataset_to_json(space, test)["samples"]
    _emit(d, args.out)
    return 0


def cmd_train(args) -> int:
    d = json.loads(Path(args.data).read_text())
    space, samples, _ = dataset_from_json(d)
    cfg = _train_config(args, len(samples), space)
    res = learning.train(space, samples, cfg, np.random.default_rng(args.seed))
    _emit({
        "space": d["space"], "w": res.w.tolist(), "loss_trace": res.loss_trace,
        "objective": cfg.objective.value, "lam": cfg.lam, "iterations": cfg.iterations,
        "beta": cfg.beta, "n": len(samples),
    }, args.out)
    return 0


def cmd_eval(args) -> int:
    d = json.loads(Path(args.data).read_text())
    space, samples, w_star = dataset_from_json(d)
    if args.split == "test" and "test_samples" in d:
        samples = dataset_from_json({**d, "samples": d["test_samples"]})[1]
    wd = json.loads(Path(args.weights).read_text())
    w = np.array(wd["w"])
    inference = Inference(args.inference)
    beta = args.beta if args.beta is not None else wd.get("beta", EXPERIMENT_BETA[space.kind])
    dist = learning.evaluate_distortion(
        space, samples, w, inference, beta=beta, n=wd.get("n", len(samples)),
        proposal=ProposalKind.GREEDY, rng=np.random.default_rng(args.seed),
    )
    result = {"split": args.split, "inference": inference.value, "distortion": dist, "samples": len(samples)}
    if w_star is not None:
        angle, degenerate = experiment.angle_degrees(w, w_star)
        result.update({"angle_to_truth": angle, "angle_degenerate": degenerate,
                       "dist_to_truth": float(np.linalg.norm(w - w_star) / np.sqrt(space.ell))})
    _emit(result, args.out)
    return 0


def cmd_bounds(args) -> int:
    ell = args.ell
    r = args.r
    if ell is None or r is None:
        space = _space(args)
        ell = space.ell if ell is None else ell
        r = spaces.space_size(space) if r is None else r
    n = args.n_train
    inputs = analysis.BoundInputs(n, ell, args.w_norm_sq, args.empirical_loss, args.delta, r, args.sparsity, args.beta)
    out = {"n": n, "ell": ell, "r": r, "w_norm_sq": args.w_norm_sq, "delta": args.delta,
           "empirical_loss": args.empirical_loss}
    out["alpha"] = analysis.alpha(n, ell, args.w_norm_sq) if args.w_norm_sq > 0 else None
    b1 = analysis.theorem1_bound(inputs)
    out["all_outputs_bound"] = {"value": b1, "status": analysis.bound_status(b1)}
    if args.beta is not None:
        from randmax.samplers import required_set_size

        out["required_set_size"] = required_set_size(args.beta, n, args.w_norm_sq)
    lo, hi = analysis.sparsity_range(ell)
    s = args.sparsity if args.sparsity is not None else lo
    try:
        b2 = analysis.theorem2_bound(analysis.BoundInputs(n, ell, args.w_norm_sq, args.empirical_loss, args.delta, r, s,
                                                          args.beta if args.beta is not None else 0.5))
        out["random_outputs_bound"] = {"value": b2, "status": analysis.bound_status(b2), "sparsity": s}
    except RandmaxError as e:
        out["random_outputs_bound"] = {"value": None, "status": "skip", "reason": str(e)}
    _emit(out, args.out)
    return 0


def cmd_verify_claims(args) -> int:
    configs = None
    if args.config:
        configs = json.loads(Path(args.config).read_text())
        if isinstance(configs, dict):
            configs = configs.get("spaces", [])
    reports = verify.verify_claims(configs, seed=args.seed)
    text = analysis.reports_to_json(reports)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
        counts = {}
        for r in reports:
            counts[r.status] = counts.get(r.status, 0) + 1
        print(" ".join(f"{k}={v}" for k, v in sorted(counts.items())), file=sys.stderr)
    else:
        print(text)
    return 0


def _experiment_configs(args) -> list[ExperimentConfig]:
    base = json.loads(Path(args.config).read_text()) if args.config else {}
    if args.space:
        kinds = [Kind(args.space)]
    elif "space" in base:
        kinds = [None]
    else:
        kinds = list(EXPERIMENT_SPACES)
    configs = []
    for kind in kinds:
        d = dict(base)
        if kind is not None:
            d["space"] = asdict_space(_space(args) if args.space else EXPERIMENT_SPACES[kind])
        for key, attr in (("n_train", "n_train"), ("n_test", "n_test"), ("repetitions", "reps"),
                          ("beta", "beta"), ("seed", "seed"), ("jobs", "jobs")):
            val = getattr(args, attr)
            if val is not None:
                d[key] = val
        cfg = ExperimentConfig(**d)
        if args.lam is not None or args.iters is not None:
            tc = asdict(cfg.train)
            if args.lam is not None:
                tc["lam"] = args.lam
            if args.iters is not None:
                tc["iterations"] = args.iters
            cfg.train = TrainConfig(**tc)
        configs.append(cfg)
    return configs


def asdict_space(space: Space) -> dict:
    return {"kind": space.kind.value, "v": space.v, "b": space.b}


def cmd_reproduce_table1(args) -> int:
    all_reports = []
    for cfg in _experiment_configs(args):
        reports, rows = experiment.run_experiment(cfg)
        all_reports.extend(reports)
        for row in rows:
            print(
                f"{row['space']:<16} {row['method']:<10} "
                f"test distortion {100 * row['test_distortion']:5.1f}% ± {100 * row['test_distortion_ci']:4.1f}  "
                f"angle {row['angle_to_truth']:5.1f} ± {row['angle_to_truth_ci']:4.1f}  "
                f"train time ratio {row['train_runtime_ratio']:.3f}",
                file=sys.stderr,
            )
    if args.out:
        experiment.write_reports(all_reports, Path(args.out), fmt=args.format)
    else:
        sys.stdout.write(experiment.reports_csv(all_reports))
    return 0


# ---------------------------------------------------------------------------
# parser


def _space_flags(p, required: bool = False):
    p.add_argument("--space", choices=[k.value for k in Kind], required=required)
    p.add_argument("--v", type=int)
    p.add_argument("--b", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randmax", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="draw a ground truth and labelled train/test sets")
    _space_flags(p, required=True)
    p.add_argument("--n-train", type=int, default=100)
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="fit w on a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--objective", choices=["all", "random"], default="all")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="distortion of trained weights on a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--inference", choices=[i.value for i in Inference], default="exact")
    p.add_argument("--beta", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bounds", help="evaluate the generalization bounds")
    _space_flags(p)
    p.add_argument("--n-train", type=int, default=100)
    p.add_argument("--ell", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--w-norm-sq", type=float, default=1.0)
    p.add_argument("--empirical-loss", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--sparsity", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds, space="tree")

    p = sub.add_parser("verify-claims", help="run the numerical claim checks")
    p.add_argument("--config", help="JSON list of {space: {kind, v, b}} entries")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_claims)

    p = sub.add_parser("reproduce-table1", help="run the synthetic experiment")
    _space_flags(p)
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-test", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_reproduce_table1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RandmaxError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
