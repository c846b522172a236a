"""Measure maximal-distortion probabilities and the other assumptions exactly.

The verifier enumerates each space and compares against the asserted values.
Several of them do not hold; the report says so rather than hiding it.
Run with ``python3 demos/claim_checks.py``.
"""
from __future__ import annotations

from collections import Counter

from randmax import analysis, verify
from randmax.model import DistortionKind
from randmax.spaces import Kind, Space

for space in (Space(Kind.TREE, 3), Space(Kind.TREE, 6), Space(Kind.DAG, 5, 2), Space(Kind.SET, 15, 4)):
    native = analysis.check_maximal_distortion(space)
    binary = analysis.check_maximal_distortion(space, DistortionKind.BINARY)
    print(f"{space}: P[maximal distortion] = {native.measured:.4f} (needs >= {native.asserted:.4f}, {native.status}); "
          f"binary distortion {binary.measured:.4f} ({binary.status})")

reports = verify.verify_claims(seed=0)
print(f"\nfull suite: {dict(Counter(r.status for r in reports))}")
for r in reports:
    if r.status == analysis.FAIL:
        print(f"  fail  {r.check_id} on {r.details.get('space')}: measured {r.measured:.4g} vs {r.asserted:.4g}")
