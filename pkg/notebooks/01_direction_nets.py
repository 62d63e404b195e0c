"""
Direction nets on the sphere
============================

A net is a set of unit vectors that are pairwise more than ``eps`` apart and
leave no point of the sphere farther than ``eps`` from the set.  Bodies in
this package are stored as one number per net direction.
"""
# %%
import numpy as np

from floatpoly import build_net, net_functional, series_decompose, validate

net = build_net(2, 0.1)
print(len(net), "directions in the plane, tolerance factor", round(net.tolerance, 4))

# %% In three dimensions the net is greedy over a Sobol pool and its covering
# radius is computed exactly from the spherical Voronoi vertices.
net3 = build_net(3, 0.3)
print(validate(net3.directions, net3.eps))

# %% The max of <x, w> over the net underestimates |x| by at most a factor 1 - eps.
x = np.random.default_rng(0).standard_normal((5, 3))
print(np.column_stack([net_functional(x, net3), np.linalg.norm(x, axis=1)]))

# %% Any unit vector expands as a net direction plus geometrically shrinking corrections.
theta = np.array([0.6, 0.0, 0.8])
idx, coef, rest = series_decompose(theta, net3, 4)
print(idx, np.round(coef, 5), rest)
