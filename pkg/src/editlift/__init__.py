"""editlift: feedforward two-view 3D editing.

Edits a sparse pair of views with a consistency-tuned rectified-flow model,
lifts the edited pair into a 3D Gaussian scene with a feedforward network,
renders novel views, and scores semantic/consistency metrics.
"""

__version__ = "0.1.0"
