"""
Genotypes, stretching and distances
===================================

Encode a few handcrafted networks as cell genotypes, compare them with the
weighted Hamming/Hausdorff distance, and stretch a genotype to more cells.
"""
import numpy as np

from ddarts import (derive_genotype, derive_indices, encode_handcrafted, metric_M,
                    pairwise_matrix, serialize)

# a residual network is two 3x3 convs plus an identity shortcut per cell
r18 = encode_handcrafted("resnet18")
print(r18.n_cells, "cells,", r18.search_space, "space")
print(serialize(r18).decode()[:200], "...")

# distances between handcrafted genotypes of the same length
names = ["resnet18", "resnet50"]
gs = [encode_handcrafted(n) for n in names]
print("d(resnet18, resnet50) =", metric_M(*gs))
print(np.round(pairwise_matrix(gs), 4))

# stretching: an 8-cell source becomes 14 cells, reductions land at n//3 and 2n//3
print("copy pattern 8 -> 14:", derive_indices(8, 14))
x = encode_handcrafted("xception")
big = derive_genotype(x, 20)
print("xception stretched to", big.n_cells, "cells, reductions at", big.reduction_positions)
