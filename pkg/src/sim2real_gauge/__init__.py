"""Offline scoring of vision encoder embeddings for sim-to-real transfer.

Two complementary metrics per encoder, computed from stored embeddings:

* domain invariance score (DIS): one minus the dimension-normalized
  Euclidean distance between the sim and real embedding centroids after
  L2 row normalization, per-feature standardization, PCA projection to a
  shared dimension, and per-feature min-max scaling; higher means the two
  domains overlap more,
* action score (AS): one minus the held-out per-element MSE of a linear
  probe predicting standardized robot actions from the embeddings; higher
  means actions are more linearly recoverable.
"""

from .report import ENGINE_VERSION as __version__

__all__ = ["__version__"]
