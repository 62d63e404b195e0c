"""
Random polytopes
================

The convex hull of ``n`` Gaussian points against the floating polytope at
level ``1/n``.
"""
# %%
import math

from floatpoly import Gaussian, build_net, floating_polytope, hausdorff_distance, log_hausdorff
from floatpoly import random_polytope, sample, vertex_count_2d

net = build_net(2, 0.1)
for n in (1000, 10_000, 100_000):
    S = sample(Gaussian(2), n, seed=(7, n))
    P = random_polytope(S, net)
    F = floating_polytope(Gaussian(2), net, 1 / n)
    d = log_hausdorff(P, F)[0]
    print(n, vertex_count_2d(S), round(hausdorff_distance(P, F), 4), round(d, 4),
          round((d - 1) * math.log(n) / math.log(math.log(n)), 4))
