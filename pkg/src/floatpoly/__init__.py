"""Floating bodies, random polytopes and distances between convex bodies on direction nets."""
from .body import (
    RadialBody,
    SupportBody,
    ball,
    bm_upper,
    bm_upper_scaled,
    centroid,
    circumradius,
    gauge,
    hausdorff_distance,
    inradius,
    log_hausdorff,
    log_hausdorff_about,
    polar,
    polytope,
    volume,
)
from .density import (
    ExpPower1D,
    Gaussian,
    Gaussian1D,
    MonteCarloContext,
    ProductDensity,
    RadialDensity,
    SchechtmanZinn,
    density_from_spec,
    gnedenko_interval,
    marginal,
    quantile,
    radon,
    tail,
    tail_bracket,
)
from .errors import *  # noqa: F401,F403
from .floating import (
    convex_floating_body_2d,
    floating_polytope,
    level_set_body,
    radon_body,
    zeta,
)
from .lab import ExperimentConfig, run
from .net import DirectionNet, build_net, net_functional, series_decompose, validate
from .sampler import SampleSet, random_polytope, sample, vertex_count_2d
from .universal import (
    BodyFamily,
    KappaMap,
    UniversalDensity,
    bm_density_check,
    g_eval,
    kappa_at,
    level_set_identity_check,
)

__version__ = "0.1.0"
