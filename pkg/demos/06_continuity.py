"""
Level roots and the condensation floor
======================================

Each level root ``s_k`` gives an estimate ``max(s_k, dim_H C)`` of the
Hausdorff dimension of the inhomogeneous set. With a point as the
condensation set the floor is zero and the table follows ``s_k`` down to
its limit.
"""

from isss import CondensationSet, golden_mean
from isss.construct import SystemSpec, continuity_report
from isss.geometry import AmbientBox, Similarity

maps = (Similarity.line(0.5, 0.0), Similarity.line(0.5, 0.5))
spec = SystemSpec(maps, golden_mean(), CondensationSet.points([[0.5]]), AmbientBox.make([0.0], [1.0]))
for row in continuity_report(spec, 20):
    label = "limit" if row.k is None else f"{row.k:5d}"
    print(f"{label}  s_k={row.s_k:.6f}  dim_H={row.dim_h:.6f}")
