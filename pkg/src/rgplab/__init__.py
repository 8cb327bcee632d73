"""Simulation and verification tools for learning on random graph processes."""

from .process import ProcessSpec, TemporalGraph, TemporalSample, build_temporal_graph, simulate_rgp
from .hypotheses import SequenceClass, TimestampClass

__all__ = [
    "ProcessSpec",
    "SequenceClass",
    "TemporalGraph",
    "TemporalSample",
    "TimestampClass",
    "build_temporal_graph",
    "simulate_rgp",
]
__version__ = "0.1.0"
