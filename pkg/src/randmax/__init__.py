"""Structured prediction with the max loss over all outputs or over random outputs."""
from __future__ import annotations

from randmax.spaces import DagEdges, ElemSet, Kind, Space, TreeParents
from randmax.model import DistortionKind, Sample
from randmax.samplers import ProposalKind
from randmax.learning import Objective, TrainConfig, train

__all__ = [
    "DagEdges", "DistortionKind", "ElemSet", "Kind", "Objective", "ProposalKind",
    "Sample", "Space", "TrainConfig", "TreeParents", "train",
]
__version__ = "0.1.0"
