"""Desk-scale convex-integration engine for 1-D non-convex elastodynamics.

Builds approximate Lipschitz weak solutions with laminate microstructure:
a smooth backbone is solved for a monotone surrogate stress, then iterated
rank-one laminate patches drive the space-time gradient into the two-phase
target set while a verification layer quantifies the weak-form residual.
"""

__version__ = "0.1.0"
