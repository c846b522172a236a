from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randmax import model, spaces
from randmax.errors import DimensionMismatch, IncompatibleKind, InvalidOutput
from randmax.model import DistortionKind, Sample
from randmax.spaces import ROOT, ElemSet, Kind, Space, TreeParents

from conftest import SMALL_SPACES, space_id

SET42 = Space(Kind.SET, 4, 2)
TREE3 = Space(Kind.TREE, 3)


def direct_phi(space, x, y):
    """Straight from the definition: pairs of linked nodes or co-present elements."""
    v = space.v
    linked = set()
    if space.kind is Kind.TREE:
        linked = {frozenset((i, p)) for i, p in enumerate(y.parents) if p != ROOT}
    elif space.kind is Kind.DAG:
        linked = {frozenset(e) for e in y.edges}
    else:
        linked = {frozenset(c) for c in itertools.combinations(y.elems, 2)}
    return np.array([int(x[k] == 1 and frozenset(pq) in linked)
                     for k, pq in enumerate(itertools.combinations(range(v), 2))])


def adjacency(space, y):
    a = np.zeros((space.v, space.v), int)
    edges = [(p, i) for i, p in enumerate(y.parents) if p != ROOT] if space.kind is Kind.TREE else y.edges
    for p, c in edges:
        a[p, c] = 1
    return a


def test_set_feature_example():
    phi = model.feature_map(SET42, np.ones(6), ElemSet((0, 1)))
    assert model.as_sparse(phi) == {spaces.pair_index(0, 1, 4): 1}


def test_tree_star_features():
    star = TreeParents((ROOT, 0, 0))
    phi = model.feature_map(TREE3, np.ones(3), star)
    assert set(model.as_sparse(phi)) == {spaces.pair_index(0, 1, 3), spaces.pair_index(0, 2, 3)}


@pytest.mark.parametrize("space", SMALL_SPACES, ids=space_id)
def test_zero_input_gives_zero_features(space):
    for y in spaces.enumerate_space(space)[:20]:
        assert not model.feature_map(space, np.zeros(space.ell), y).any()


@pytest.mark.parametrize("space", SMALL_SPACES, ids=space_id)
def test_feature_map_matches_definition(space):
    rng = np.random.default_rng(0)
    for y in spaces.enumerate_space(space):
        x = rng.integers(0, 2, space.ell)
        phi = model.feature_map(space, x, y)
        assert np.array_equal(phi, direct_phi(space, x, y))
        assert set(np.unique(phi)) <= {0, 1}


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        model.feature_map(SET42, np.ones(5), ElemSet((0, 1)))
    with pytest.raises(DimensionMismatch):
        model.score(SET42, np.ones(6), ElemSet((0, 1)), np.ones(3))
    with pytest.raises(InvalidOutput):
        Sample(np.ones(6), ElemSet((0, 7)), SET42)


def test_parts():
    assert model.parts(SET42, np.zeros(6)) == set()
    assert model.parts(SET42, np.ones(6)) == set(range(6))
    assert model.parts(TREE3, np.ones(3)) == {0, 1, 2}


def test_hamming_set_example():
    assert model.hamming(SET42, np.ones(6), ElemSet((0, 1)), ElemSet((2, 3))) == 2
    assert model.hamming(SET42, np.ones(6), ElemSet((0, 1)), ElemSet((0, 1))) == 0


def test_score_and_margin_examples():
    x = np.ones(6)
    w = np.zeros(6)
    assert model.score(SET42, x, ElemSet((0, 1)), w) == 0
    w[spaces.pair_index(0, 1, 4)] = 1.0
    assert model.score(SET42, x, ElemSet((0, 1)), w) == 1
    assert model.margin(SET42, x, ElemSet((0, 1)), ElemSet((2, 3)), w) == 1
    assert model.margin(SET42, x, ElemSet((0, 1)), ElemSet((0, 1)), w) == 0


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(SMALL_SPACES), st.integers(0, 2**32 - 1))
def test_algebraic_properties(space, seed):
    rng = np.random.default_rng(seed)
    y, y2 = (spaces.uniform_sample(space, rng) for _ in range(2))
    x = rng.integers(0, 2, space.ell)
    w1, w2 = rng.standard_normal((2, space.ell))
    a = rng.normal()
    # Hamming symmetry and equality with the full L1 difference
    h = model.hamming(space, x, y, y2)
    assert h == model.hamming(space, x, y2, y)
    assert h == np.abs(model.feature_map(space, x, y) - model.feature_map(space, x, y2)).sum()
    # score linearity, margin antisymmetry
    lhs = model.score(space, x, y, a * w1 + w2)
    assert lhs == pytest.approx(a * model.score(space, x, y, w1) + model.score(space, x, y, w2), abs=1e-9)
    assert model.margin(space, x, y, y2, w1) == pytest.approx(-model.margin(space, x, y2, y, w1))
    # distortion: symmetric, in range, zero on the diagonal
    kind = model.default_distortion(space)
    d = model.distortion(kind, space, y, y2)
    assert 0 <= d <= 1
    assert d == model.distortion(kind, space, y2, y)
    assert model.distortion(kind, space, y, y) == 0


def test_set_disjoint_distortion_is_one():
    sp = Space(Kind.SET, 8, 4)
    assert model.distortion(DistortionKind.SET_ELEMS, sp, ElemSet((0, 1, 2, 3)), ElemSet((4, 5, 6, 7))) == 1


def test_tree_distortion_example():
    y = TreeParents((ROOT, 0, 0))
    y2 = TreeParents((1, ROOT, 1))
    assert np.abs(adjacency(TREE3, y) - adjacency(TREE3, y2)).sum() == 4
    assert model.distortion(DistortionKind.TREE_EDGES, TREE3, y, y2) == 1.0


def test_incompatible_kind():
    with pytest.raises(IncompatibleKind):
        model.distortion(DistortionKind.SET_ELEMS, TREE3, TreeParents((ROOT, 0, 0)), TreeParents((ROOT, 0, 0)))
    assert model.distortion(DistortionKind.BINARY, TREE3, TreeParents((ROOT, 0, 0)), TreeParents((ROOT, 0, 1))) == 1


@pytest.mark.parametrize("space", SMALL_SPACES, ids=space_id)
def test_distortion_matches_adjacency_formula(space):
    outs = spaces.enumerate_space(space)
    kind = model.default_distortion(space)
    for y in outs:
        k = spaces.index_of(space, y)
        row = model.distortion_row(kind, space, k)
        for j, y2 in enumerate(outs):
            if space.kind is Kind.SET:
                a, b = set(y.elems), set(y2.elems)
                want = (len(a - b) + len(b - a)) / (2 * space.b)
            else:
                norm = 2 * (space.v - 1) if space.kind is Kind.TREE else space.b * (2 * space.v - space.b - 1)
                want = np.abs(adjacency(space, y) - adjacency(space, y2)).sum() / norm
            assert row[j] == pytest.approx(want)
            assert 0 <= row[j] <= 1


@pytest.mark.parametrize("v", [2, 3, 4])
def test_tree_distortion_one_iff_no_shared_edge(v):
    space = Space(Kind.TREE, v)
    outs = spaces.enumerate_space(space)
    for y in outs:
        for y2 in outs:
            shared = (adjacency(space, y) * adjacency(space, y2)).sum()
            assert (model.distortion(DistortionKind.TREE_EDGES, space, y, y2) == 1) == (shared == 0)


@pytest.mark.parametrize("space", SMALL_SPACES, ids=space_id)
def test_rows_match_scalar_versions(space):
    rng = np.random.default_rng(3)
    x = rng.integers(0, 2, space.ell)
    w = rng.standard_normal(space.ell)
    outs = spaces.enumerate_space(space)
    k = int(rng.integers(len(outs)))
    s = model.score_row(space, x, w)
    h = model.hamming_row(space, x, k)
    for j, y in enumerate(outs):
        assert s[j] == pytest.approx(model.score(space, x, y, w))
        assert h[j] == model.hamming(space, x, outs[k], y)
    assert np.array_equal(model.feature_rows(space, x)[k], model.feature_map(space, x, outs[k]))
