"""Base-temperature calibration of the free transfer-chain parameters.

The published operating point fixes three numbers: squeezing at the hybrid
ring input, squeezing received by Bob and the Alice-Bob negativity.  They
determine three free parameters: the squeeze factor, the post-splitter loss
of Alice's local arm and the post-splitter loss of the transmitted arm.
Added squeezer noise is held at the configured value.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .errors import ConvergenceError
from .network import ExperimentConfig, LossSegment, SqueezeSpec, run_transfer

PUBLISHED_HR_INPUT_DB = 6.70
PUBLISHED_RECEIVER_DB = 2.10
PUBLISHED_NEGATIVITY = 0.501


@dataclass(frozen=True)
class CalibrationResult:
    r: float
    local_arm_loss: float
    transfer_arm_loss: float
    config: ExperimentConfig
    residuals: tuple[float, float, float]


def _with_parameters(config: ExperimentConfig, r, eps_local, eps_transfer) -> ExperimentConfig:
    sender, receiver, _ = config.endpoints()
    kept = tuple(s for s in sender.local_losses if s.stage != "L3")
    segments = kept + (LossSegment("L3", 0, eps_local), LossSegment("L3", 1, eps_transfer))
    new_sender = replace(sender, local_losses=segments)
    nodes = tuple(new_sender if n.name == sender.name else n for n in config.nodes)
    squeeze = SqueezeSpec(r, config.squeeze.theta, config.squeeze.n_added)
    return replace(config, nodes=nodes, squeeze=squeeze)


def calibrate_base_point(
    config: ExperimentConfig,
    hr_input_db: float = PUBLISHED_HR_INPUT_DB,
    receiver_db: float = PUBLISHED_RECEIVER_DB,
    negativity: float = PUBLISHED_NEGATIVITY,
    tol: float = 1e-9,
) -> CalibrationResult:
    """Fit ``r`` and the two L3 losses so the base point reproduces the targets."""
    config = replace(config, taps=("hr_input", "hr_output", "receiver"))

    def residuals(p):
        reports = run_transfer(_with_parameters(config, *p)).reports
        return [
            reports["hr_input"].squeezing_db[0] - hr_input_db,
            reports["receiver"].squeezing_db[1] - receiver_db,
            reports["receiver"].negativity - negativity,
        ]

    fit = optimize.least_squares(
        residuals, x0=[0.8, 0.05, 0.02], bounds=([0, 0, 0], [5, 1, 1]), xtol=1e-15, ftol=1e-15, gtol=1e-15
    )
    res = tuple(float(v) for v in residuals(fit.x))
    if np.max(np.abs(res)) > tol:
        raise ConvergenceError(f"calibration targets not reachable (residuals {res})", residual=max(map(abs, res)))
    r, eps_local, eps_transfer = (float(v) for v in fit.x)
    return CalibrationResult(r, eps_local, eps_transfer, _with_parameters(config, r, eps_local, eps_transfer), res)
