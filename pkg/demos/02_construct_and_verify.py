"""
Building an inhomogeneous set
=============================

The set is the union of the sub-self-similar part ``E`` and the orbit of
the condensation set ``C`` under all admissible word maps. We build both
as point clouds and check the defining inclusion numerically.
"""

from isss import bundled_config, bundled_configs
from isss.cli import parse_config
from isss.construct import covering_inclusion, isss_cloud, orbit_cloud, sss_cloud, verify_closure, verify_inclusion

print("bundled systems:", ", ".join(bundled_configs()))

spec = parse_config(bundled_config("cantor_point"))
res = 1e-3
E, O = sss_cloud(spec, res), orbit_cloud(spec, res)
F = isss_cloud(spec, res)
print(f"E has {len(E)} points, the orbit {len(O)}, the union {len(F)}")

# Every point of F must lie near C or near some image f_i(F).
rep = verify_inclusion(F, spec, 2 * res)
print("inclusion holds:", rep.passed, " worst gap:", rep.worst_gap)

# E sits inside the closure of the orbit.
print("E in closure of orbit:", verify_closure(E, O, 3 * res))

# The stopping-set images of E and C cover F at scale delta.
for delta in (0.3, 0.1):
    print(f"covering at delta={delta}:", covering_inclusion(spec, delta, res).passed)
