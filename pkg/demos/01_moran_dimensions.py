"""
Dimension of a symbolic set
===========================

For a subshift of finite type with contraction ratios, the dimension ``s``
is the limit of per-level Moran roots ``s_k``. It can also be read off the
transfer matrix ``M(s)[i, j] = T[i, j] * rho_j**s`` as the exponent where
its spectral radius equals one.
"""

import math

from isss import RatioVector, Sft, golden_mean
from isss.dimension import dim_limit, spectral_dim, tail_mass

# Middle-thirds Cantor set: every level already gives log 2 / log 3.
thirds = RatioVector.of(1 / 3, 1 / 3)
seq = dim_limit(Sft.full(2), thirds)
print("cantor   s_k =", seq.s_estimate, " exact =", math.log(2) / math.log(3))

# The golden-mean shift forbids the word "22" (1-based), so s_k decreases
# towards log2 of the golden ratio.
S, halves = golden_mean(), RatioVector.of(0.5, 0.5)
seq = dim_limit(S, halves, k_max=20)
for k, s_k in seq.s_values[::4]:
    print(f"golden   k={k:2d}  s_k={s_k:.6f}")
print("spectral        ", spectral_dim(S, halves))

# Above the dimension the word series converges; tail_mass brackets its sum.
lo, hi = tail_mass(S, halves, 0.8)
print(f"sum of rho_w**0.8 lies in [{lo:.6f}, {hi:.6f}]")
