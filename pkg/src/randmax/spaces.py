"""Structured-output families: rooted spanning trees, bounded DAGs and
cardinality-constrained sets.

Every family is small enough to enumerate, so the whole output set of a
space is materialised once and cached together with a few dense tables
(pair incidence, distortion indicators, local-move neighbours) that the
vectorised code paths in the rest of the package index into.

Nodes and elements are 0-based throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import combinations, permutations, product
from typing import Union

import numpy as np

from randmax.errors import InvalidOutput, InvalidSpace, SizeCapExceeded

DEFAULT_CAP = 10**6
ROOT = -1


class Kind(str, Enum):
    TREE = "tree"
    DAG = "dag"
    SET = "set"


@dataclass(frozen=True)
class TreeParents:
    """Parent array of a rooted labelled tree; ``ROOT`` marks the root."""

    parents: tuple[int, ...]

    @property
    def root(self) -> int:
        return self.parents.index(ROOT)


@dataclass(frozen=True)
class DagEdges:
    """Edge set of a DAG as sorted ``(parent, child)`` pairs."""

    edges: tuple[tuple[int, int], ...]

    @classmethod
    def of(cls, edges) -> "DagEdges":
        return cls(tuple(sorted((int(p), int(c)) for p, c in edges)))


@dataclass(frozen=True)
class ElemSet:
    elems: tuple[int, ...]

    @classmethod
    def of(cls, elems) -> "ElemSet":
        return cls(tuple(sorted(int(e) for e in elems)))


Output = Union[TreeParents, DagEdges, ElemSet]
_OUTPUT_TYPE = {Kind.TREE: TreeParents, Kind.DAG: DagEdges, Kind.SET: ElemSet}


@dataclass(frozen=True)
class Space:
    """The feasible output set for one input.

    ``v`` is the node (or element-universe) count. ``b`` is the number of
    parents per DAG node, or the set cardinality; trees ignore it.
    """

    kind: Kind
    v: int
    b: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        v, b = self.v, self.b
        if self.kind is Kind.TREE:
            if v < 2:
                raise InvalidSpace(f"trees need v >= 2, got {v}")
            object.__setattr__(self, "b", 0)
        elif self.kind is Kind.DAG:
            # The construction is well defined for 1 <= b <= v-1; the narrower
            # 2 <= b <= v-2 regime is only required by the distortion claim.
            if v < 2 or not 1 <= b <= v - 1:
                raise InvalidSpace(f"DAGs need 1 <= b <= v-1, got v={v}, b={b}")
        else:
            if not 1 <= b <= v / 2:
                raise InvalidSpace(f"sets need 1 <= b <= v/2, got v={v}, b={b}")

    @property
    def ell(self) -> int:
        """Feature dimension: one feature per unordered index pair."""
        return self.v * (self.v - 1) // 2

    def __str__(self):
        if self.kind is Kind.TREE:
            return f"tree(v={self.v})"
        return f"{self.kind.value}(v={self.v}, b={self.b})"


def pair_index(i: int, j: int, v: int) -> int:
    """Position of the unordered pair {i, j} in ``combinations(range(v), 2)``."""
    if i > j:
        i, j = j, i
    if i == j or i < 0 or j >= v:
        raise ValueError(f"bad pair ({i}, {j}) for v={v}")
    return i * (2 * v - i - 1) // 2 + (j - i - 1)


def pairs(v: int) -> list[tuple[int, int]]:
    return list(combinations(range(v), 2))


# ---------------------------------------------------------------------------
# validation


def _tree_ok(parents, v: int) -> bool:
    if len(parents) != v or list(parents).count(ROOT) != 1:
        return False
    for i, p in enumerate(parents):
        if p == ROOT:
            continue
        if not isinstance(p, (int, np.integer)) or not 0 <= p < v or p == i:
            return False
    for start in range(v):
        node, steps = start, 0
        while parents[node] != ROOT:
            node = parents[node]
            steps += 1
            if steps > v:
                return False
    return True


def _dag_ok(edges, v: int, b: int) -> bool:
    edges = list(edges)
    if len(set(edges)) != len(edges):
        return False
    parents = [set() for _ in range(v)]
    for e in edges:
        if len(e) != 2:
            return False
        p, c = e
        if not (0 <= p < v and 0 <= c < v) or p == c:
            return False
        parents[c].add(p)
    # Place nodes one at a time: position i needs exactly min(i, b) parents,
    # all already placed. Below b the candidate is unique, above it any
    # eligible node can go first without blocking later placements.
    placed: set[int] = set()
    remaining = set(range(v))
    for i in range(v):
        need = min(i, b)
        pick = next(
            (n for n in sorted(remaining) if len(parents[n]) == need and parents[n] <= placed),
            None,
        )
        if pick is None:
            return False
        placed.add(pick)
        remaining.discard(pick)
    return True


def _set_ok(elems, v: int, b: int) -> bool:
    elems = list(elems)
    return len(elems) == b and len(set(elems)) == b and all(0 <= e < v for e in elems)


def validate(space: Space, y) -> bool:
    """True iff ``y`` is a well-formed member of the space. Never raises."""
    try:
        if not isinstance(y, _OUTPUT_TYPE[space.kind]):
            return False
        if space.kind is Kind.TREE:
            return _tree_ok(y.parents, space.v)
        if space.kind is Kind.DAG:
            return _dag_ok(y.edges, space.v, space.b)
        return _set_ok(y.elems, space.v, space.b)
    except (TypeError, ValueError, IndexError):
        return False


def canonical(space: Space, y):
    """Canonical representative of ``y`` (sorted edge/element tuples)."""
    if space.kind is Kind.DAG:
        return DagEdges.of(y.edges)
    if space.kind is Kind.SET:
        return ElemSet.of(y.elems)
    return TreeParents(tuple(int(p) for p in y.parents))


# ---------------------------------------------------------------------------
# enumeration


def space_size(space: Space, cap: int = DEFAULT_CAP) -> int:
    if space.kind is Kind.SET:
        size = math.comb(space.v, space.b)
    elif space.kind is Kind.TREE:
        # rooted labelled trees on v nodes
        size = space.v ** (space.v - 1)
    else:
        return len(enumerate_space(space, cap))
    if size > cap:
        raise SizeCapExceeded(f"{space} has {size} outputs (cap {cap})")
    return size


def _enum_trees(v: int) -> list[TreeParents]:
    out = []
    for root in range(v):
        others = [i for i in range(v) if i != root]
        for choice in product(range(v), repeat=v - 1):
            if any(c == i for c, i in zip(choice, others)):
                continue
            parents = [ROOT] * v
            for i, c in zip(others, choice):
                parents[i] = c
            if _tree_ok(parents, v):
                out.append(TreeParents(tuple(parents)))
    return out


def _enum_dags(v: int, b: int, cap: int) -> list[DagEdges]:
    per_perm = 1
    for i in range(v):
        per_perm *= math.comb(i, min(i, b))
    # every edge set arises from at most v! node orders
    if per_perm > cap:
        raise SizeCapExceeded(f"DAG space v={v}, b={b} exceeds cap {cap}")
    found: set[tuple] = set()
    for perm in permutations(range(v)):
        choices = [combinations(perm[:i], min(i, b)) for i in range(v)]
        for parent_sets in product(*choices):
            edges = tuple(sorted((p, perm[i]) for i, ps in enumerate(parent_sets) for p in ps))
            found.add(edges)
        if len(found) > cap:
            raise SizeCapExceeded(f"DAG space v={v}, b={b} exceeds cap {cap}")
    return [DagEdges(e) for e in sorted(found)]


def _enum_sets(v: int, b: int) -> list[ElemSet]:
    return [ElemSet(c) for c in combinations(range(v), b)]


def enumerate_space(space: Space, cap: int = DEFAULT_CAP) -> list:
    """All outputs of the space exactly once, in canonical order.

    Trees are ordered by (root, parent array), DAGs by sorted edge list and
    sets by sorted element tuple.
    """
    if space.kind is not Kind.DAG:
        space_size(space, cap)
    if cap == DEFAULT_CAP:
        return list(tables(space).outputs)
    return list(_enumerate(space, cap))


def _enumerate(space: Space, cap: int) -> tuple:
    if space.kind is Kind.TREE:
        return tuple(_enum_trees(space.v))
    if space.kind is Kind.DAG:
        return tuple(_enum_dags(space.v, space.b, cap))
    return tuple(_enum_sets(space.v, space.b))


def uniform_sample(space: Space, rng: np.random.Generator):
    t = tables(space)
    return t.outputs[int(rng.integers(len(t.outputs)))]


# ---------------------------------------------------------------------------
# local moves


def tree_postorder(parents) -> list[int]:
    v = len(parents)
    children = [[] for _ in range(v)]
    for i, p in enumerate(parents):
        if p != ROOT:
            children[p].append(i)
    order: list[int] = []
    stack = [(parents.index(ROOT), False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        stack.append((node, True))
        for c in reversed(children[node]):
            stack.append((c, False))
    return order


def dag_postorder(edges, v: int) -> list[int]:
    children = [[] for _ in range(v)]
    indeg = [0] * v
    for p, c in edges:
        children[p].append(c)
        indeg[c] += 1
    for ch in children:
        ch.sort()
    seen = [False] * v
    order: list[int] = []

    def visit(n):
        seen[n] = True
        for c in children[n]:
            if not seen[c]:
                visit(c)
        order.append(n)

    for n in sorted(range(v), key=lambda n: (indeg[n] != 0, n)):
        if not seen[n]:
            visit(n)
    return order


def _is_ancestor(parents, a: int, node: int) -> bool:
    while node != ROOT:
        if node == a:
            return True
        node = parents[node]
    return False


def _tree_moves(space: Space, y: TreeParents) -> list[TreeParents]:
    parents = y.parents
    order = tree_postorder(parents)
    out = []
    for t in order:
        if parents[t] == ROOT:
            continue
        for u in order:
            # u inside t's subtree would close a cycle
            if u == t or u == parents[t] or _is_ancestor(parents, t, u):
                continue
            new = list(parents)
            new[t] = u
            out.append(TreeParents(tuple(new)))
    return out


def _dag_moves(space: Space, y: DagEdges, index) -> list[DagEdges]:
    edges = set(y.edges)
    parents = [set() for _ in range(space.v)]
    for p, c in y.edges:
        parents[c].add(p)
    order = dag_postorder(y.edges, space.v)
    out = []
    for c in order:
        for p in sorted(parents[c]):
            for q in order:
                if q == c or q in parents[c]:
                    continue
                cand = DagEdges(tuple(sorted((edges - {(p, c)}) | {(q, c)})))
                if cand in index:
                    out.append(cand)
    return out


def _set_moves(space: Space, y: ElemSet) -> list[ElemSet]:
    members = set(y.elems)
    outside = [e for e in range(space.v) if e not in members]
    out = []
    for i, e in enumerate(y.elems):
        for f in outside:
            new = list(y.elems)
            new[i] = f
            out.append(ElemSet.of(new))
    return out


def _moves(space: Space, y, index) -> list:
    if space.kind is Kind.TREE:
        return _tree_moves(space, y)
    if space.kind is Kind.DAG:
        return _dag_moves(space, y, index)
    return _set_moves(space, y)


def local_moves(space: Space, y) -> list:
    """Neighbourhood scanned by the greedy sampler, in scan order.

    Trees: reassign the parent of each non-root node (nodes in post-order)
    to any other node outside its subtree, candidates also in post-order.
    DAGs: swap one parent of a node for a non-parent, keeping the result
    inside the space. Sets: swap one member for one non-member.
    """
    if not validate(space, y):
        raise InvalidOutput(f"{y!r} is not a valid output of {space}")
    return _moves(space, canonical(space, y), tables(space).index)


# ---------------------------------------------------------------------------
# cached dense tables


@dataclass(frozen=True, eq=False)
class SpaceTables:
    outputs: tuple
    index: dict
    # (r, ell) 0/1: pair p is realised by output y (adjacent nodes / co-members)
    incidence: np.ndarray
    # (r, k) 0/1 rows whose L1 differences give the edge/element distortion
    indicator: np.ndarray
    norm: int
    # (r, D) neighbour indices in scan order, padded with -1
    neighbors: np.ndarray

    @property
    def size(self) -> int:
        return len(self.outputs)


def _incidence_row(space: Space, y) -> list[int]:
    v = space.v
    if space.kind is Kind.TREE:
        return [pair_index(i, p, v) for i, p in enumerate(y.parents) if p != ROOT]
    if space.kind is Kind.DAG:
        return [pair_index(p, c, v) for p, c in y.edges]
    return [pair_index(i, j, v) for i, j in combinations(y.elems, 2)]


def _indicator_row(space: Space, y) -> list[int]:
    v = space.v
    if space.kind is Kind.TREE:
        return [p * v + i for i, p in enumerate(y.parents) if p != ROOT]
    if space.kind is Kind.DAG:
        return [p * v + c for p, c in y.edges]
    return list(y.elems)


def distortion_norm(space: Space) -> int:
    """Largest possible L1 distance between two indicator rows."""
    v, b = space.v, space.b
    if space.kind is Kind.TREE:
        return 2 * (v - 1)
    if space.kind is Kind.DAG:
        return b * (2 * v - b - 1)
    return 2 * b


@lru_cache(maxsize=None)
def _tables(space: Space, cap: int) -> SpaceTables:
    outputs = _enumerate(space, cap)
    r = len(outputs)
    if r > cap:
        raise SizeCapExceeded(f"{space} has {r} outputs (cap {cap})")
    index = {y: i for i, y in enumerate(outputs)}
    width = space.v * space.v if space.kind is not Kind.SET else space.v
    inc = np.zeros((r, space.ell), dtype=np.float64)
    ind = np.zeros((r, width), dtype=np.int8)
    for i, y in enumerate(outputs):
        inc[i, _incidence_row(space, y)] = 1.0
        ind[i, _indicator_row(space, y)] = 1
    nbrs = [[index[z] for z in _moves(space, y, index)] for y in outputs]
    deg = max((len(n) for n in nbrs), default=0)
    table = np.full((r, max(deg, 1)), -1, dtype=np.int64)
    for i, n in enumerate(nbrs):
        table[i, : len(n)] = n
    for arr in (inc, ind, table):
        arr.setflags(write=False)
    return SpaceTables(outputs, index, inc, ind, distortion_norm(space), table)


def tables(space: Space, cap: int = DEFAULT_CAP) -> SpaceTables:
    """Enumeration plus dense lookup tables, built once per space."""
    if space.kind is not Kind.DAG:
        space_size(space, cap)
    return _tables(space, cap)


def index_of(space: Space, y) -> int:
    try:
        return tables(space).index[canonical(space, y)]
    except (KeyError, AttributeError, TypeError):
        raise InvalidOutput(f"{y!r} is not a member of {space}") from None
