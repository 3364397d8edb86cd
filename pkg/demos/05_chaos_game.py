"""
Invariant measures by the chaos game
====================================

With probabilities ``(p_0, p_1, ..., p_N)`` the invariant measure solves
``nu = p_0 nu_C + sum p_i nu o f_i**-1``. A chaos game samples it, and for
a product system two independent factor chains sample the product measure.
"""

from isss import bundled_config
from isss.cli import parse_config
from isss.product import chaos_game, mean_fixed_point, moment_estimates, product_measure_check, product_system

spec = parse_config(bundled_config("cantor_point"))
sample = chaos_game(spec, 10 ** 6, seed=0)
m = moment_estimates(sample, (1,))
print(f"mean {m.mean:.5f} +- {m.stderr:.5f}, fixed point of the mean equation {mean_fixed_point(spec)[0]:.5f}")

P = product_system(spec, spec)
print("condensation weight of the product:", P.condensation_weight)
rep = product_measure_check(P, 2 * 10 ** 5, seed=1)
for c in rep.comparisons:
    print(f"orders {c.orders}: z = {c.z:+.2f}")
print("samplers agree:", rep.passed)
