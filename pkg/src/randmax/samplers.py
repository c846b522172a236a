"""Proposal distributions over structured outputs.

The greedy local proposal starts from a uniform draw and keeps taking the
first strictly improving local move until none is left. It only ever
compares scores, so it depends on ``w`` solely through the ordering that
``w`` induces on the outputs.

Walks run on output indices against the cached neighbour table, which lets
many starts advance together.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from randmax import model, spaces
from randmax.errors import DomainError, IterationCap
from randmax.spaces import Space


class ProposalKind(str, Enum):
    UNIFORM = "uniform"
    GREEDY = "greedy"


def greedy_walk(scores: np.ndarray, neighbors: np.ndarray, starts) -> np.ndarray:
    """Run first-improvement hill climbing from every start index.

    ``neighbors`` is the padded (r, D) table of a space; ``scores`` holds one
    score per output. Returns the local optimum reached from each start.
    """
    pos = np.array(starts, dtype=np.int64, copy=True).reshape(-1)
    pad = neighbors < 0
    nb_scores = np.where(pad, -np.inf, scores[neighbors])
    active = np.arange(pos.size)
    for _ in range(len(scores) + 1):
        if active.size == 0:
            return pos
        cur = pos[active]
        better = nb_scores[cur] > scores[cur][:, None]
        moved = better.any(axis=1)
        first = better.argmax(axis=1)
        active = active[moved]
        pos[active] = neighbors[cur[moved], first[moved]]
    raise IterationCap("greedy walk did not reach a local optimum")


def greedy_distribution(space: Space, x, w) -> np.ndarray:
    """Exact output probabilities of the greedy proposal (uniform starts)."""
    t = spaces.tables(space)
    ends = greedy_walk(model.score_row(space, x, w), t.neighbors, np.arange(t.size))
    return np.bincount(ends, minlength=t.size) / t.size


def proposal_distribution(kind, space: Space, x, w) -> np.ndarray:
    if ProposalKind(kind) is ProposalKind.UNIFORM:
        r = spaces.tables(space).size
        return np.full(r, 1.0 / r)
    return greedy_distribution(space, x, w)


def propose_indices(kind, space: Space, x, w, rng: np.random.Generator, size: int) -> np.ndarray:
    t = spaces.tables(space)
    starts = rng.integers(t.size, size=size)
    if ProposalKind(kind) is ProposalKind.UNIFORM:
        return starts
    return greedy_walk(model.score_row(space, x, w), t.neighbors, starts)


def propose(kind, space: Space, x, w, rng: np.random.Generator):
    """Draw one output from the uniform or greedy local proposal."""
    k = propose_indices(kind, space, x, w, rng, 1)[0]
    return spaces.tables(space).outputs[k]


def required_set_size(beta: float, n: int, w_norm_sq: float) -> int:
    """Number of random outputs per sample that makes the sampling term vanish at rate 1/sqrt(n)."""
    if not 0 <= beta < 1:
        raise DomainError(f"beta must lie in [0, 1), got {beta}")
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    if w_norm_sq < 0:
        raise DomainError("squared norm cannot be negative")
    inv = 0.0 if beta == 0 else 1.0 / math.log(1.0 / beta)
    return max(1, math.ceil(0.5 * max(inv, 32.0 * w_norm_sq) * math.log(n)))


@dataclass(frozen=True, eq=False)
class SampleSet:
    indices: np.ndarray
    outputs: list
    beta: float
    w_norm_sq: float
    n: int

    @property
    def size(self) -> int:
        return len(self.outputs)


def sample_set(kind, space: Space, x, w, beta: float, n: int, rng: np.random.Generator) -> SampleSet:
    """i.i.d. proposal draws, as many as ``required_set_size`` asks for."""
    w = np.asarray(w, dtype=np.float64)
    w_norm_sq = float(w @ w)
    size = required_set_size(beta, n, w_norm_sq)
    idx = propose_indices(kind, space, x, w, rng, size)
    outs = spaces.tables(space).outputs
    return SampleSet(idx, [outs[k] for k in idx], beta, w_norm_sq, n)
