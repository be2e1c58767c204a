"""Consensus and velocity synchronization on Lie groups with bi-invariant
metrics: S^1, R^n, SO(3) and their direct products.

The package provides group/algebra primitives (``groups``), spring-like
polar potentials (``morse``), weighted-graph spectral machinery
(``graphs``), the flow right-hand sides (``dynamics``), geometric
integrators (``integrate``), stability/synchronization analysis
(``analysis``) and a scenario CLI (``lie-consensus``).
"""

__version__ = "0.1.0"

from . import analysis, dynamics, errors, graphs, groups, integrate, morse  # noqa: F401
from .dynamics import FlowMode, FlowSpec, SwarmState  # noqa: F401
from .groups import GroupDescriptor, GroupElement, AlgebraVector  # noqa: F401
