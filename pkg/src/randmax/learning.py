"""Margin-based training with the max loss over all outputs or over random
outputs, plus exact and sampled inference.

The per-sample loss is ``max_k d(y, y_k) * L(H(y, y_k) - m(y, y_k, w))``
over a candidate list, where ``L`` is either the 0/1 step or the hinge
``max(0, 1 + z)``. Candidates are the whole enumeration (``MAX_ALL``) or a
fresh proposal sample drawn with the current ``w`` (``MAX_RANDOM``). Ties
go to the output that comes first in canonical order.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from randmax import model, samplers, spaces
from randmax.errors import EmptyCandidates, InvalidOutput
from randmax.model import DistortionKind, Sample
from randmax.samplers import ProposalKind
from randmax.spaces import Space


class Objective(str, Enum):
    MAX_ALL = "max_all"
    MAX_RANDOM = "max_random"


class LossForm(str, Enum):
    ZERO_ONE = "zero_one"
    HINGE = "hinge"


class Inference(str, Enum):
    EXACT = "exact"
    APPROX = "approx"


@dataclass
class TrainConfig:
    objective: Objective = Objective.MAX_ALL
    lam: float = 0.01
    iterations: int = 20
    step_scale: float = 1.0
    beta: float = 0.5
    proposal: ProposalKind = ProposalKind.GREEDY
    loss_form: LossForm = LossForm.HINGE
    seed: int = 0
    distortion: DistortionKind | None = None

    def __post_init__(self):
        self.objective = Objective(self.objective)
        self.proposal = ProposalKind(self.proposal)
        self.loss_form = LossForm(self.loss_form)
        if self.distortion is not None:
            self.distortion = DistortionKind(self.distortion)
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.iterations < 1:
            raise ValueError(f"need at least one iteration, got {self.iterations}")


@dataclass
class TrainResult:
    w: np.ndarray
    loss_trace: list[float]
    wallclock: float
    resample_count: int = 0
    history: list[np.ndarray] = field(default_factory=list, repr=False)


class _Prepared:
    """w-independent quantities of one sample, cached across iterations."""

    __slots__ = ("x", "mask", "k", "hamming", "dist")

    def __init__(self, space: Space, sample: Sample, kind: DistortionKind):
        self.x = np.asarray(sample.x)
        self.mask = (self.x != 0).astype(np.float64)
        self.k = spaces.index_of(space, sample.y)
        self.hamming = model.hamming_row(space, self.x, self.k)
        self.dist = model.distortion_row(kind, space, self.k)


def _kind(space: Space, kind) -> DistortionKind:
    return model.default_distortion(space) if kind is None else DistortionKind(kind)


def _candidate_indices(space: Space, candidates) -> np.ndarray:
    if candidates is None:
        return np.arange(spaces.tables(space).size)
    if isinstance(candidates, np.ndarray) and candidates.dtype.kind in "iu":
        idx = candidates
    else:
        idx = np.array([spaces.index_of(space, c) for c in candidates], dtype=np.int64)
    if idx.size == 0:
        raise EmptyCandidates("candidate list is empty")
    return idx


def _losses(prep: _Prepared, scores: np.ndarray, cand: np.ndarray, loss_form: LossForm) -> np.ndarray:
    z = prep.hamming[cand] - (scores[prep.k] - scores[cand])
    if loss_form is LossForm.HINGE:
        return prep.dist[cand] * np.maximum(0.0, 1.0 + z)
    return prep.dist[cand] * (z >= 0)


def _argmax(values: np.ndarray, cand: np.ndarray) -> int:
    best = values.max()
    return int(cand[values == best].min())


def _loss_and_arg(space, prep, w, cand, loss_form):
    scores = spaces.tables(space).incidence @ (w * prep.mask)
    vals = _losses(prep, scores, cand, loss_form)
    return float(vals.max()), _argmax(vals, cand)


def sample_loss_argmax(space: Space, sample: Sample, w, candidates=None, loss_form=LossForm.HINGE, kind=None):
    """Loss of one sample and the enumeration index of the maximising candidate."""
    w = np.asarray(w, dtype=np.float64)
    prep = _Prepared(space, sample, _kind(space, kind))
    cand = _candidate_indices(space, candidates)
    return _loss_and_arg(space, prep, w, cand, LossForm(loss_form))


def sample_loss(space: Space, sample: Sample, w, candidates=None, loss_form=LossForm.HINGE, kind=None) -> float:
    return sample_loss_argmax(space, sample, w, candidates, loss_form, kind)[0]


def _subgrad(space, prep, w, cand, lam):
    loss, k = _loss_and_arg(space, prep, w, cand, LossForm.HINGE)
    inc = spaces.tables(space).incidence
    g = 2.0 * lam * w
    if loss > 0:
        g = g + prep.dist[k] * (inc[k] - inc[prep.k]) * prep.mask
    return loss, k, g


def subgradient(space: Space, sample: Sample, w, candidates=None, lam: float = 0.0, kind=None) -> np.ndarray:
    """Subgradient of ``hinge sample loss + lam * |w|^2`` at ``w``."""
    w = np.asarray(w, dtype=np.float64)
    prep = _Prepared(space, sample, _kind(space, kind))
    return _subgrad(space, prep, w, _candidate_indices(space, candidates), lam)[2]


def draw_candidates(space, sample_or_x, w, config: TrainConfig, n: int, rng) -> np.ndarray:
    x = sample_or_x.x if isinstance(sample_or_x, Sample) else sample_or_x
    return samplers.sample_set(config.proposal, space, x, w, config.beta, n, rng).indices


def objective(space: Space, samples, w, config: TrainConfig, rng=None, candidates=None) -> float:
    """Average max loss plus ``lam * |w|^2``.

    ``candidates`` optionally freezes one candidate list per sample; otherwise
    they are the enumeration or fresh proposal draws, per ``config``.
    """
    if not samples:
        raise ValueError("need at least one sample")
    w = np.asarray(w, dtype=np.float64)
    kind = _kind(space, config.distortion)
    n = len(samples)
    total = 0.0
    for i, s in enumerate(samples):
        if candidates is not None:
            cand = _candidate_indices(space, candidates[i])
        elif config.objective is Objective.MAX_ALL:
            cand = _candidate_indices(space, None)
        else:
            cand = draw_candidates(space, s, w, config, n, rng)
        total += _loss_and_arg(space, _Prepared(space, s, kind), w, cand, config.loss_form)[0]
    return total / n + config.lam * float(w @ w)


def train(space: Space, samples, config: TrainConfig, rng=None, keep_history: bool = False) -> TrainResult:
    """Subgradient descent with step ``step_scale / sqrt(t)`` from ``w = 0``.

    Random candidate sets are redrawn every iteration with the current ``w``.
    The recorded loss is the hinge objective at the iterate before its update.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    start = time.perf_counter()
    kind = _kind(space, config.distortion)
    preps = [_Prepared(space, s, kind) for s in samples]
    n = len(preps)
    all_idx = np.arange(spaces.tables(space).size)
    w = np.zeros(space.ell)
    trace, history, drawn = [], [], 0
    for t in range(1, config.iterations + 1):
        grad = np.zeros(space.ell)
        total = 0.0
        for prep in preps:
            if config.objective is Objective.MAX_ALL:
                cand = all_idx
            else:
                cand = draw_candidates(space, prep.x, w, config, n, rng)
                drawn += cand.size
            loss, _, g = _subgrad(space, prep, w, cand, 0.0)
            total += loss
            grad += g
        trace.append(total / n + config.lam * float(w @ w))
        grad = grad / n + 2.0 * config.lam * w
        w = w - config.step_scale / math.sqrt(t) * grad
        if keep_history:
            history.append(w.copy())
    return TrainResult(w, trace, time.perf_counter() - start, drawn, history)


# ---------------------------------------------------------------------------
# inference


def infer_exact_index(space: Space, x, w) -> int:
    return int(np.argmax(model.score_row(space, x, w)))


def infer_exact(space: Space, x, w):
    """Highest-scoring output; the canonically first one on ties."""
    return spaces.tables(space).outputs[infer_exact_index(space, x, w)]


def infer_approx_index(space: Space, x, w, beta: float, n: int, proposal, rng) -> int:
    cand = samplers.sample_set(proposal, space, x, w, beta, n, rng).indices
    scores = model.score_row(space, x, w)[cand]
    return _argmax(scores, cand)


def infer_approx(space: Space, x, w, beta: float, n: int, proposal=ProposalKind.GREEDY, rng=None):
    """Highest-scoring output among a fresh proposal sample."""
    rng = np.random.default_rng(rng)
    return spaces.tables(space).outputs[infer_approx_index(space, x, w, beta, n, proposal, rng)]


def evaluate_distortion(
    space: Space,
    samples,
    w,
    inference=Inference.EXACT,
    kind=None,
    beta: float = 0.5,
    n: int | None = None,
    proposal=ProposalKind.GREEDY,
    rng=None,
) -> float:
    """Mean distortion between the true outputs and the decoder's predictions."""
    if not samples:
        raise ValueError("need at least one sample")
    kind = _kind(space, kind)
    inference = Inference(inference)
    n = len(samples) if n is None else n
    if inference is Inference.APPROX:
        rng = np.random.default_rng(rng)
    total = 0.0
    for s in samples:
        k = spaces.index_of(space, s.y)
        if inference is Inference.EXACT:
            pred = infer_exact_index(space, s.x, w)
        else:
            pred = infer_approx_index(space, s.x, w, beta, n, proposal, rng)
        total += model.distortion_row(kind, space, k)[pred]
    return total / len(samples)


def predictions_distortion(space: Space, samples, preds, kind=None) -> float:
    kind = _kind(space, kind)
    if len(preds) != len(samples):
        raise InvalidOutput("one prediction per sample is required")
    vals = [model.distortion_row(kind, space, spaces.index_of(space, s.y))[p] for s, p in zip(samples, preds)]
    return float(np.mean(vals))
