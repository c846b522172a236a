"""Evaluate the two generalization bounds and see where they become vacuous.

Run with ``python3 demos/generalization_bounds.py``.
"""
from __future__ import annotations

from randmax import analysis
from randmax.analysis import BoundInputs
from randmax.errors import DomainError

for n in (100, 1000, 10_000, 100_000):
    b = BoundInputs(n=n, ell=15, w_norm_sq=1.0, empirical_loss=0.3)
    value = analysis.theorem1_bound(b)
    print(f"all-outputs bound, n={n:>6}: {value:.4f} ({analysis.bound_status(value)})")

print()
for ell in (15, 105, 10_000):
    lo, hi = analysis.sparsity_range(ell)
    b = BoundInputs(n=10_000, ell=ell, w_norm_sq=1.0, empirical_loss=0.3, r=7776, s=3, beta=0.5)
    try:
        value = analysis.theorem2_bound(b)
        print(f"random-outputs bound, ell={ell}: sparsity in [{lo}, {hi}], value {value:.4f}")
    except DomainError as err:
        print(f"random-outputs bound, ell={ell}: {err}")

# An overly large weight norm makes the scale parameter undefined.
try:
    analysis.theorem1_bound(BoundInputs(n=2, ell=1, w_norm_sq=10.0, empirical_loss=0.0))
except DomainError as err:
    print(f"\ndegenerate scale: {err}")
