"""Pair features, Hamming distance, margins and distortions.

Inputs ``x`` are 0/1 vectors over the unordered index pairs of the space
(``space.ell`` entries, ordered as ``combinations(range(v), 2)``). The
feature of pair ``(i, j)`` fires when ``x_ij = 1`` and the output links
``i`` and ``j``: adjacent nodes for trees and DAGs (either direction), or
both elements present for sets. Features are therefore 0/1 counts.

Everything here has a scalar version working on output objects and, where
the learning code needs speed, a row version returning one value per
enumerated output.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from randmax import spaces
from randmax.errors import DimensionMismatch, IncompatibleKind, InvalidOutput
from randmax.spaces import Kind, Space


class DistortionKind(str, Enum):
    BINARY = "binary"
    TREE_EDGES = "tree_edges"
    DAG_EDGES = "dag_edges"
    SET_ELEMS = "set_elems"


_NATIVE = {
    Kind.TREE: DistortionKind.TREE_EDGES,
    Kind.DAG: DistortionKind.DAG_EDGES,
    Kind.SET: DistortionKind.SET_ELEMS,
}


def default_distortion(space: Space) -> DistortionKind:
    return _NATIVE[space.kind]


@dataclass(frozen=True, eq=False)
class Sample:
    x: np.ndarray
    y: object
    space: Space

    def __post_init__(self):
        check_input(self.space, self.x)
        if not spaces.validate(self.space, self.y):
            raise InvalidOutput(f"{self.y!r} is not a valid output of {self.space}")


def check_input(space: Space, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (space.ell,):
        raise DimensionMismatch(f"x has shape {x.shape}, expected ({space.ell},)")
    return x


def _check_w(space: Space, w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (space.ell,):
        raise DimensionMismatch(f"w has shape {w.shape}, expected ({space.ell},)")
    return w


def feature_map(space: Space, x, y) -> np.ndarray:
    """Dense integer feature vector of length ``space.ell``."""
    x = check_input(space, x)
    if not spaces.validate(space, y):
        raise InvalidOutput(f"{y!r} is not a valid output of {space}")
    phi = np.zeros(space.ell, dtype=np.int64)
    for p in spaces._incidence_row(space, spaces.canonical(space, y)):
        phi[p] = 1
    return phi * (x != 0)


def as_sparse(phi) -> dict[int, int]:
    """Index -> count mapping with the zero entries dropped."""
    return {int(i): int(phi[i]) for i in np.flatnonzero(phi)}


def parts(space: Space, x) -> set[int]:
    """Pairs active for ``x``: ones of ``x`` realised by some output."""
    x = check_input(space, x)
    realised = spaces.tables(space).incidence.any(axis=0)
    return set(np.flatnonzero(realised & (x != 0)).tolist())


def hamming(space: Space, x, y, y2) -> int:
    active = sorted(parts(space, x))
    diff = feature_map(space, x, y) - feature_map(space, x, y2)
    return int(np.abs(diff[active]).sum())


def score(space: Space, x, y, w) -> float:
    w = _check_w(space, w)
    return float(feature_map(space, x, y) @ w)


def margin(space: Space, x, y, y2, w) -> float:
    """How much ``y`` beats ``y2`` under ``w``."""
    return score(space, x, y, w) - score(space, x, y2, w)


def _adjacency(space: Space, y) -> np.ndarray:
    a = np.zeros((space.v, space.v), dtype=np.int64)
    if space.kind is Kind.TREE:
        for i, p in enumerate(y.parents):
            if p != spaces.ROOT:
                a[p, i] = 1
    else:
        for p, c in y.edges:
            a[p, c] = 1
    return a


def distortion(kind, space: Space, y, y2) -> float:
    kind = DistortionKind(kind)
    if kind is not DistortionKind.BINARY and kind is not _NATIVE[space.kind]:
        raise IncompatibleKind(f"{kind.value} distortion does not apply to {space}")
    for z in (y, y2):
        if not spaces.validate(space, z):
            raise InvalidOutput(f"{z!r} is not a valid output of {space}")
    y, y2 = spaces.canonical(space, y), spaces.canonical(space, y2)
    if kind is DistortionKind.BINARY:
        return float(y != y2)
    if kind is DistortionKind.SET_ELEMS:
        a, b = set(y.elems), set(y2.elems)
        return (len(a - b) + len(b - a)) / (2 * space.b)
    diff = np.abs(_adjacency(space, y) - _adjacency(space, y2)).sum()
    return float(diff) / spaces.distortion_norm(space)


# ---------------------------------------------------------------------------
# rows over the whole enumeration


def feature_rows(space: Space, x) -> np.ndarray:
    """(r, ell) matrix whose row k is the feature vector of output k."""
    x = check_input(space, x)
    return spaces.tables(space).incidence * (x != 0)


def score_row(space: Space, x, w) -> np.ndarray:
    x = check_input(space, x)
    w = _check_w(space, w)
    return spaces.tables(space).incidence @ (w * (x != 0))


def hamming_row(space: Space, x, k: int) -> np.ndarray:
    """Hamming distance from output ``k`` to every output."""
    x = check_input(space, x)
    inc = spaces.tables(space).incidence
    return (inc != inc[k]) @ (x != 0).astype(np.float64)


def distortion_counts(space: Space, k: int) -> np.ndarray:
    """Unnormalised edge/element distortion from output ``k`` to every output."""
    ind = spaces.tables(space).indicator
    return np.abs(ind - ind[k]).sum(axis=1, dtype=np.int64)


def distortion_row(kind, space: Space, k: int) -> np.ndarray:
    kind = DistortionKind(kind)
    t = spaces.tables(space)
    if kind is DistortionKind.BINARY:
        row = np.ones(t.size)
        row[k] = 0.0
        return row
    if kind is not _NATIVE[space.kind]:
        raise IncompatibleKind(f"{kind.value} distortion does not apply to {space}")
    return distortion_counts(space, k) / t.norm
