"""Exact and Monte Carlo checks for the Erdos-Ko-Rado property of random k-graphs.

The package is organised bottom-up: ``combinat`` (ranking and tail bounds),
``layergraph`` (the containment bigraph between two middle layers),
``families`` (maximal intersecting families), ``containers`` (the
record-based approximations), ``randmodel`` (sampling), ``ekr`` (verdicts and
the event Q) and ``sperner`` (widths of random subsets of the cube).
"""

__version__ = "0.1.0"
