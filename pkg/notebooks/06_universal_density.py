"""
A density with many shapes
==========================

A log-concave density whose level sets pass close to homothets of each body
in a chosen family, one body per scale.
"""
# %%
import numpy as np

from floatpoly import KappaMap, UniversalDensity, bm_density_check, build_net, g_eval, level_set_identity_check
from floatpoly.universal import dominance_ratio, family_from_spec

net = build_net(2, 0.066)
kmap = KappaMap(family_from_spec(["square", "disk", "triangle"], net))
f = UniversalDensity(kmap)
print("scale c =", f.c)

# %% At the n-th breakpoint the n-th body dominates the series.
for n in (1, 2, 3):
    print(n, round(dominance_ratio(n), 4), round(bm_density_check(kmap, n), 4))

# %% Level sets of f are rescaled copies of the body map.
print([round(level_set_identity_check(f, n), 4) for n in (1, 4, 16)])
print(g_eval(kmap, np.array([[4.0, 0.0], [0.0, 4.0]])))

# %% Sampling is rejection from an exponential envelope.
from floatpoly import sample

print(sample(f, 5, seed=1).points)
