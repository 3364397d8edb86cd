"""
Box counting
============

Counting occupied grid cells over dyadic scales and fitting the slope of
``log N`` against ``-log delta`` estimates the box dimension. Adding a
single point to the Cantor set does not change it; adding a segment lifts
it to one.
"""

from isss import bundled_config
from isss.boxcount import fit_dimension, regularity_exponent
from isss.cli import parse_config
from isss.construct import isss_cloud
from isss.geometry import CondensationSet, discretize

for name in ("cantor_point", "quarter_segment"):
    cloud = isss_cloud(parse_config(bundled_config(name)), 1e-5)
    deltas = [2.0 ** -j for j in range(2, 16)]
    scan = fit_dimension(cloud, deltas)
    print(f"{name:16s} {len(cloud):7d} points  slope={scan.fitted_slope:.4f}")

# The regularity exponent P_t(delta) is the largest p on a 1/16 grid with
# N at scale delta**p at least delta**(-p t). For a segment it drops from 1
# to near 0 as t crosses 1.
seg = discretize(CondensationSet.segment([0.0], [1.0]), 1e-5)
for t in (0.5, 1.0, 1.5):
    print(f"P_{t}(0.01) = {regularity_exponent(seg, t, 1e-2):.4f}")
