"""
Bodies and distances
====================

Support bodies, radial bodies, and the three distances used throughout:
Hausdorff, logarithmic Hausdorff (best homothety ratio about a center) and
a Banach-Mazur upper bound.
"""
# %%
import numpy as np

from floatpoly import ball, bm_upper_scaled, build_net, hausdorff_distance, log_hausdorff, polytope
from floatpoly.body import log_hausdorff_grid

net = build_net(2, 0.05)
square = polytope([[-1, -1], [1, -1], [1, 1], [-1, 1]], net, np.zeros(2))
disk = ball(net)

# %%
print("Hausdorff(square, disk)        ", hausdorff_distance(square, disk))
value, center = log_hausdorff(square, disk)
print("log-Hausdorff(square, disk)    ", value, "about", np.round(center, 6))
print("Banach-Mazur upper bound       ", bm_upper_scaled(square, disk)[0])

# %% A skew rectangle: the best center is not the obvious one.
rect = polytope([[0, -0.5], [3, -0.5], [3, 0.5], [0, 0.5]], net)
print(log_hausdorff(rect, ball(net, 1.0, np.array([1.5, 0.0]))))
print(log_hausdorff_grid(rect, ball(net, 1.0, np.array([1.5, 0.0])), [0.5, -0.4], [2.5, 0.4], 21))
