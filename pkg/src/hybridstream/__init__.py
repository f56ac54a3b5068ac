"""Hybrid batch/speed stream analytics with an edge-cloud deployment simulator.

The engine combines a pre-trained historical model with per-window
retrained models through simplex-constrained weighting, and replays the
whole pipeline over a simulated edge-cloud fabric for latency accounting.
"""

__version__ = "0.1.0"
