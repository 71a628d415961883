"""Simulation lab for retraining linear classifiers on noisy labels."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .bounds import (
    BoundInputs,
    BoundReport,
    alpha0_lower,
    alpha0_upper,
    alpha1_upper,
    err0_bounds,
    err1_upper,
    retrain_aux,
    retraining_helps_window,
    sample_complexity_initial,
    sample_complexity_lower_curve,
)
from .datagen import (
    Dataset,
    HalfNormal,
    NoiseSpec,
    PointMass,
    ProblemSpec,
    Uniform,
    canonical_mu,
    flip_fraction,
    sample_dataset,
)
from .evaluation import (
    ErrorEstimate,
    consensus_diagnostics,
    exact_error,
    monte_carlo_error,
    std_normal_cdf,
)
from .experiments import (
    SweepGrid,
    TrialConfig,
    phase_diagram,
    reproduce_figure1,
    run_sweep,
    run_trial,
)
from .linear import (
    EmptyConsensusError,
    LinearClassifier,
    fit_initial,
    predict,
    retrain_confidence,
    retrain_consensus,
    retrain_full,
)
