"""
Floating, level-set and Radon bodies
====================================

Three bodies attached to a density and a small level ``delta``: half-spaces
of mass ``delta`` cut off (floating), the super-level set of the density
(level set), and the marginal density level (Radon).  As ``delta`` shrinks,
the three approach each other.
"""
# %%
from floatpoly import SchechtmanZinn, build_net, floating_polytope, level_set_body, log_hausdorff, radon_body

net = build_net(2, 0.05)
sz = SchechtmanZinn(2, 2.0)
for delta in (1e-2, 1e-4, 1e-6):
    F = floating_polytope(sz, net, delta)
    D = level_set_body(sz, net, delta)
    R = radon_body(sz, net, delta)
    print(f"{delta:.0e}  d(F, D) = {log_hausdorff(F, D)[0]:.4f}  d(F, R) = {log_hausdorff(F, R)[0]:.4f}")

# %% The convex floating body of a polygon, cut by exact clipping.
from floatpoly import convex_floating_body_2d

K = convex_floating_body_2d([[0, 0], [1, 0], [1, 1], [0, 1]], 0.01, net)
print(K.absolute_support()[:5])

# %% Monte Carlo tails give the same body within their confidence interval.
from floatpoly import MonteCarloContext, ProductDensity
from floatpoly.density import Uniform1D
from floatpoly.floating import floating_ci

u = ProductDensity([Uniform1D(), Uniform1D()])
ctx = MonteCarloContext(seed=0, samples=200_000)
mc = floating_polytope(u, net, 0.01, backend="monte-carlo", context=ctx)
print(abs(mc.h - K.h).max(), floating_ci(u, net, 0.01, ctx).max())
