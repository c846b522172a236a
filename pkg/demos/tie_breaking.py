"""Count tied maximizers and see how much the tie-break rule matters.

Node-pair features cannot see edge directions, so many trees and DAGs share
the top score. Decoding to the canonically first maximizer is deterministic;
picking a random maximizer instead costs a large distortion even with the
true weights. Run with ``python3 demos/tie_breaking.py``.
"""
from __future__ import annotations

import numpy as np

from randmax import experiment, model, spaces
from randmax.spaces import Kind, Space

rng = np.random.default_rng(0)
for space in (Space(Kind.TREE, 6), Space(Kind.DAG, 5, 2), Space(Kind.SET, 15, 4)):
    kind = model.default_distortion(space)
    w_star, samples = experiment.generate_data(space, 200, rng)
    ties, random_pick = [], []
    for s in samples:
        scores = model.score_row(space, s.x, w_star)
        top = np.flatnonzero(np.isclose(scores, scores.max()))
        ties.append(top.size)
        k = spaces.index_of(space, s.y)
        random_pick.append(model.distortion_row(kind, space, k)[top].mean())
    print(f"{space}: mean tied maximizers {np.mean(ties):.1f}; "
          f"distortion of a random maximizer under the true w {100 * np.mean(random_pick):.1f}%")
