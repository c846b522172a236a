"""Walk through the three output spaces and the two proposal distributions.

Run with ``python3 demos/spaces_and_proposals.py``.
"""
from __future__ import annotations

import numpy as np

from randmax import model, samplers, spaces
from randmax.samplers import ProposalKind
from randmax.spaces import Kind, Space

rng = np.random.default_rng(0)

for space in (Space(Kind.TREE, 6), Space(Kind.DAG, 5, 2), Space(Kind.SET, 15, 4)):
    print(f"{space}: {spaces.space_size(space)} outputs, feature dimension {space.ell}")
    y = spaces.uniform_sample(space, rng)
    print(f"  a uniform draw: {y}")
    print(f"  it has {len(spaces.local_moves(space, y))} local moves")

# Greedy proposals end at local optima of the score, so the proposal mass
# piles up on a handful of outputs while the uniform one spreads it evenly.
space = Space(Kind.TREE, 4)
x = np.ones(space.ell, dtype=int)
w = rng.standard_normal(space.ell)
greedy = samplers.proposal_distribution(ProposalKind.GREEDY, space, x, w)
uniform = samplers.proposal_distribution(ProposalKind.UNIFORM, space, x, w)
scores = model.score_row(space, x, w)
print(f"\n{space}: greedy puts mass on {np.count_nonzero(greedy)} of {greedy.size} outputs")
print(f"  expected score under greedy {greedy @ scores:.3f}, under uniform {uniform @ scores:.3f}, best {scores.max():.3f}")

# Scaling w keeps the score ordering, so the greedy walks are unchanged.
a = samplers.propose_indices(ProposalKind.GREEDY, space, x, w, np.random.default_rng(1), 1000)
b = samplers.propose_indices(ProposalKind.GREEDY, space, x, 5 * w, np.random.default_rng(1), 1000)
print(f"  same walks for w and 5w: {np.array_equal(a, b)}")

n, w_norm_sq = 100, 1.0
for beta in (0.5, 0.8, 0.85):
    print(f"required sample-set size at beta={beta}, n={n}, |w|^2={w_norm_sq}: "
          f"{samplers.required_set_size(beta, n, w_norm_sq)}")
