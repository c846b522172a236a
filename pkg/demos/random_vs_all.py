"""Train with the max over all outputs and with the max over a random sample set.

A single repetition on cardinality sets, where the difference between the two
objectives is easiest to see. Run with ``python3 demos/random_vs_all.py``.
"""
from __future__ import annotations

import numpy as np

from randmax import experiment, learning
from randmax.learning import Inference, Objective, TrainConfig
from randmax.spaces import Kind, Space

space = Space(Kind.SET, 15, 4)
beta = 0.5
rng = np.random.default_rng(3)
w_star, train_set = experiment.generate_data(space, 100, rng)
_, test_set = experiment.generate_data(space, 100, rng, w_star=w_star)

for objective in (Objective.MAX_ALL, Objective.MAX_RANDOM):
    cfg = TrainConfig(objective=objective, beta=beta, seed=1)
    res = learning.train(space, train_set, cfg)
    angle, _ = experiment.angle_degrees(res.w, w_star)
    exact = learning.evaluate_distortion(space, test_set, res.w)
    print(f"{objective.value:>10}: {res.wallclock:.2f}s, final objective {res.loss_trace[-1]:.3f}, "
          f"angle to truth {angle:.1f} deg, test distortion {100 * exact:.1f}%")
    if objective is Objective.MAX_RANDOM:
        approx = learning.evaluate_distortion(space, test_set, res.w, Inference.APPROX, beta=beta,
                                              n=len(train_set), rng=2)
        print(f"{'':>10}  with sampled inference at test time: {100 * approx:.1f}%")
