"""
Tails and the maximum of a sample
=================================

For a log-concave law on the line, the largest of ``n`` draws sits in a
short interval between two upper quantiles, with an exactly computable
probability.
"""
# %%
import numpy as np

from floatpoly import ExpPower1D, Gaussian1D, gnedenko_interval, tail_bracket
from floatpoly.density import u_convexity_report

g = Gaussian1D()
for n in (100, 1000, 10_000):
    iv = gnedenko_interval(g, n, 1.0)
    print(n, round(iv.lo, 4), round(iv.hi, 4), round(iv.prob, 6))

# %% Monte Carlo check at n = 100.
rng = np.random.default_rng(1)
iv = gnedenko_interval(g, 100, 1.0)
maxima = rng.standard_normal((10_000, 100)).max(axis=1)
print("simulated", np.mean((maxima >= iv.lo) & (maxima <= iv.hi)), "exact", iv.prob)

# %% Upper and lower bounds for the exponential-power tail integral.
for p in (1.0, 2.0, 4.0):
    print(p, tail_bracket(p, 2.0))

# %% -log of the tail is convex for every log-concave law.
for dist in (g, ExpPower1D(1.0), ExpPower1D(4.0)):
    print(type(dist).__name__, u_convexity_report(dist, np.linspace(-3, 6, 1000)))
