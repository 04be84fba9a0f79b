"""Distances between probability measures on finite metric spaces.

W_p for all p, Levy-Prokhorov, bottleneck matching, limit and pro-W_inf
metrics of inverse systems, intertwining-gap certificates, fractal and
simplicial example geometries, and concentration experiments.
"""

__version__ = "0.1.0"

from .errors import (
    DisconnectedGraphError,
    IncompatibleThreadError,
    MalformedInputError,
    ResourceLimitError,
    SpaceMismatchError,
)
from .metric_core import (
    FiniteMetricSpace,
    LengthGraph,
    box_counting_dimension,
    eps_net,
    gen_equidistant,
    gen_sierpinski,
    gen_simplicial,
    gen_sphere_sample,
    intrinsic_metric,
    validate_metric,
)
from .measures import ProbabilityMeasure, dirac, empirical, mixture, pushforward
from .ot_distances import (
    Coupling,
    Distance,
    bottleneck_match,
    levy_prokhorov,
    quasiconvexity_modulus,
    wasserstein_1_dual,
    wasserstein_inf,
    wasserstein_p,
)
from .lyre import (
    AffineStageMap,
    InductiveSystem,
    Stage,
    check_nonexpansive,
    limit_metric,
    pro_winf,
    simplex_embed,
    skeleton_project,
)
from .gap import GapCertificate, check_maps, gamma_q_upper, gromov_hausdorff_small
from .concentration import (
    ExperimentConfig,
    TrialResult,
    median_concentration,
    sanov_experiment,
    variance_experiment,
)
