"""Distributed differentiable architecture search at desk scale.

Subpackages
-----------
autodiff   dense tensors with reverse-mode gradients and the candidate operations
search     supernet, losses, search loop, operation benchmark

Modules
-------
ops, genotype, alpha, handcrafted, derive, metric
"""
from .alpha import AlphaTable, dominant_fraction, genotype_to_alpha, parse_alpha
from .derive import DeriveRequest, UnderivableSource, derive_genotype, derive_indices
from .genotype import (CellSpec, EdgeSpec, Genotype, GenotypeError, InvariantViolation,
                       MalformedDocument, UnknownOperation, deserialize, serialize)
from .handcrafted import encode_handcrafted
from .metric import (DistanceTrace, hamming, hausdorff_cell, metric_M, pairwise_matrix,
                     plateau_stop)
from .ops import (OP_SCORES, PRIMITIVES, OpKind, hamming_weights, search_space_size,
                  total_space_size)

__version__ = "0.1.0"
