"""Batch driver running the analysis checks over a set of spaces.

A claim that does not hold shows up as a ``fail`` report; only internal
errors propagate. Each check gets its own random stream derived from the
suite seed, so the reports do not depend on execution order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from randmax import analysis, spaces
from randmax.analysis import BoundInputs, CheckReport
from randmax.errors import DomainError
from randmax.experiment import EXPERIMENT_BETA, generate_data
from randmax.model import DistortionKind, Sample
from randmax.samplers import ProposalKind
from randmax.spaces import Kind, Space


@dataclass(frozen=True)
class VerifyConfig:
    """One space to run the per-space checks on."""

    space: Space
    greedy_draws: int = 20_000

    @classmethod
    def from_dict(cls, d: dict) -> "VerifyConfig":
        d = dict(d)
        sp = d.pop("space")
        return cls(Space(**sp) if isinstance(sp, dict) else sp, **d)


DEFAULT_SPACES = (
    Space(Kind.TREE, 3),
    Space(Kind.TREE, 6),
    Space(Kind.DAG, 4, 2),
    Space(Kind.DAG, 5, 2),
    Space(Kind.SET, 4, 2),
    Space(Kind.SET, 15, 4),
)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def space_checks(cfg: VerifyConfig, seed: int = 0, tag: int = 0) -> list[CheckReport]:
    """Maximal-distortion, ordering and change-of-measure checks on one space."""
    space = cfg.space
    rng = _rng(seed, tag, 0)
    x = rng.integers(0, 2, size=space.ell)
    w = rng.standard_normal(space.ell)
    out = []
    for kind in (DistortionKind.BINARY, None):
        out.append(analysis.check_maximal_distortion(space, kind, ProposalKind.UNIFORM, x, w))
    # the beta the experiments use, for the proposal they use
    g = analysis.check_maximal_distortion(
        space, None, ProposalKind.GREEDY, x, w, exact=False,
        rng=int(rng.integers(2**31)), draws=cfg.greedy_draws, beta=EXPERIMENT_BETA[space.kind],
    )
    out.append(g)
    out.append(analysis.check_ordering_invariance(space, x, w, 2.0 * w, trials=1000, seed=int(rng.integers(2**31))))
    y = spaces.tables(space).outputs[int(rng.integers(spaces.tables(space).size))]
    out.append(analysis.check_change_of_measure(space, x, y, w, mix_weight=0.1, kind=DistortionKind.BINARY))
    for r in out:
        r.details.setdefault("space", str(space))
    return out


def fixture_checks(seed: int = 0) -> list[CheckReport]:
    """Space-free checks: low-norm constructions, lemmas and bound arithmetic."""
    out = []
    # sparse partition: 16 parts, norm exactly 1/4, holds for n <= 4
    phi_y, cands, probs = analysis.sparse_partition_fixture(16, 2, 3, _rng(seed, 1000))
    out.append(analysis.low_norm_report(phi_y, cands, probs, 4, "low_norm/sparse_partition",
                                        {"parts": 16, "identity": 1 / math.sqrt(16)}))
    phi_y, cands, probs = analysis.dense_fixture(16, 3, 40, _rng(seed, 1001))
    out.append(analysis.low_norm_report(phi_y, cands, probs, 4, "low_norm/dense", {"parts": 16}))

    # tail lemma on a partition fixture with a small w
    rng = _rng(seed, 1002)
    phi_y, cands, probs = analysis.sparse_partition_fixture(16, 1, 2, rng)
    out.append(analysis.check_tail_lemma(phi_y[None, :] - cands, probs, 0.3 * rng.standard_normal(16)))

    # Gaussian margin lemma, small sets space
    sp = Space(Kind.SET, 4, 2)
    w = rng.standard_normal(sp.ell)
    w /= np.linalg.norm(w)
    _, samples = generate_data(sp, 100, _rng(seed, 1003))
    out.append(analysis.check_gaussian_margin_lemma(sp, samples, w, 100_000, _rng(seed, 1004)))

    # gap between perturbed decoding and the random max loss
    sp, samples = a_bound_fixture(_rng(seed, 1005))
    w = 0.25 * _rng(seed, 1006).standard_normal(sp.ell)
    out.append(analysis.check_A_bound(sp, samples, w, mc_draws=20_000, rng=_rng(seed, 1007)))

    out.extend(bound_reports())
    return out


def a_bound_fixture(rng, n: int = 16, active: int = 2):
    """Sets of 2 out of 6 where each input switches on ``active`` pairs and
    the true output's own pair is off; both assumptions then hold for the
    uniform proposal."""
    sp = Space(Kind.SET, 6, 2)
    outs = spaces.tables(sp).outputs
    samples = []
    for _ in range(n):
        x = np.zeros(sp.ell, dtype=np.int8)
        on = rng.choice(sp.ell, size=active, replace=False)
        x[on] = 1
        free = [o for o in outs if spaces.pair_index(*o.elems, sp.v) not in on]
        samples.append(Sample(x, free[int(rng.integers(len(free)))], sp))
    return sp, samples


def bound_reports() -> list[CheckReport]:
    """Bound values at the experiment scale, flagging vacuity and empty sparsity ranges."""
    out = []
    for kind, space in (("tree", Space(Kind.TREE, 6)), ("dag", Space(Kind.DAG, 5, 2)), ("set", Space(Kind.SET, 15, 4))):
        r = spaces.space_size(space)
        b1 = analysis.theorem1_bound(BoundInputs(100, space.ell, 1.0, 0.0))
        out.append(CheckReport(f"bound/all_outputs/{kind}", analysis.bound_status(b1), b1, 1.0, 0.0, None,
                               {"n": 100, "ell": space.ell, "w_norm_sq": 1.0, "empirical_loss": 0.0}))
        lo, hi = analysis.sparsity_range(space.ell)
        try:
            b2 = analysis.theorem2_bound(BoundInputs(100, space.ell, 1.0, 0.0, 0.05, r, lo, EXPERIMENT_BETA[space.kind]))
            out.append(CheckReport(f"bound/random_outputs/{kind}", analysis.bound_status(b2), b2, 1.0))
        except DomainError as e:
            out.append(CheckReport(f"bound/random_outputs/{kind}", analysis.SKIP, None, 1.0, 0.0, None,
                                   {"reason": str(e), "sparsity_range": [lo, 0.45 * math.sqrt(space.ell + 1)]}))
    return out


def verify_claims(configs=None, output_path=None, seed: int = 0, include_fixtures: bool = True) -> list[CheckReport]:
    """Run every check; writes the JSON report when ``output_path`` is given.

    ``configs=None`` uses :data:`DEFAULT_SPACES`; an empty list runs no
    per-space checks, and no fixture checks either.
    """
    if configs is None:
        configs = [VerifyConfig(s) for s in DEFAULT_SPACES]
    else:
        configs = [c if isinstance(c, VerifyConfig) else VerifyConfig.from_dict(c) for c in configs]
        include_fixtures = include_fixtures and bool(configs)
    reports = []
    for i, cfg in enumerate(configs):
        reports.extend(space_checks(cfg, seed, i))
    if include_fixtures:
        reports.extend(fixture_checks(seed))
    if output_path is not None:
        Path(output_path).parent.mkdir(parents=True, exist_ok=True)
        Path(output_path).write_text(analysis.reports_to_json(reports))
    return reports
