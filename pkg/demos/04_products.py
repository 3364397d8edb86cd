"""
Products of systems
===================

The product of two systems on the full shift acts coordinatewise. Its
attractor is the Cartesian product of the factor attractors, and the
separation conditions carry over.
"""

import math

from isss import CondensationSet, RatioVector, Sft
from isss.boxcount import fit_dimension
from isss.construct import SystemSpec, attractor_cloud
from isss.geometry import AmbientBox, Similarity, hausdorff_distance
from isss.product import cartesian, check_iosc, check_issc, product_system

unit = AmbientBox.make([0.0], [1.0])
maps = (Similarity.line(1 / 3, 0.0), Similarity.line(1 / 3, 2 / 3))
cantor = SystemSpec(maps, Sft.full(2), CondensationSet.empty(), unit, osc_asserted=True)

P = product_system(cantor, cantor)
res = 3.0 ** -7
A = attractor_cloud(P.combined, res)
B = cartesian(attractor_cloud(cantor, res), attractor_cloud(cantor, res))
print("Hausdorff distance to the Cartesian product:", hausdorff_distance(A, B, metric="max"))

scan = fit_dimension(A, [2.0 ** -j for j in range(2, 11)])
print(f"slope={scan.fitted_slope:.4f}  2 log2/log3={2 * math.log(2) / math.log(3):.4f}")

# Separation: certified gaps between first-level images.
print(check_issc(P, 1e-2))
print(check_iosc(P, P.combined.ambient))
