"""layoutkie: desk-scale key information extraction from document layouts.

A numpy-based stack: reverse-mode autodiff, a transformer encoder whose
attention sees relative 2D block positions, token- and area-masked LM
pretraining, and both sequence-tagging and graph-based entity decoders,
exercised end-to-end on synthetic form-like documents.
"""

__version__ = "0.1.0"

from . import autograd, spatial, encoder, masking, heads, metrics, training  # noqa: F401
