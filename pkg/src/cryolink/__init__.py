"""Gaussian-state simulation of a cryogenic microwave quantum link.

Covariance-matrix propagation of squeezed states through beam splitters and
thermal loss channels, entanglement metrics, Planck-law thresholds and a
steady-state thermal model of the superconducting cable.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConvergenceError,
    CryolinkError,
    DomainError,
    IllConditionedError,
    InvalidStateError,
    TopologyError,
)
from .gaussian import (
    BeamSplitter,
    GaussianState,
    Loss,
    Squeeze,
    apply_beam_splitter,
    apply_chain,
    apply_loss,
    apply_squeeze,
    make_thermal_state,
    partial_trace,
    sample_quadratures,
    vacuum,
)
from .metrics import MetricReport, metric_report, negativity, purity, squeezing_level
from .thermal import planck_occupation, threshold_kappa

__all__ = [
    "__version__",
    "BeamSplitter",
    "ConfigError",
    "ConvergenceError",
    "CryolinkError",
    "DomainError",
    "GaussianState",
    "IllConditionedError",
    "InvalidStateError",
    "Loss",
    "MetricReport",
    "Squeeze",
    "TopologyError",
    "apply_beam_splitter",
    "apply_chain",
    "apply_loss",
    "apply_squeeze",
    "make_thermal_state",
    "metric_report",
    "negativity",
    "partial_trace",
    "planck_occupation",
    "purity",
    "sample_quadratures",
    "squeezing_level",
    "threshold_kappa",
    "vacuum",
]
