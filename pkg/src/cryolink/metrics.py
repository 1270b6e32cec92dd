"""Figures of merit for Gaussian states: squeezing, purity, symplectic
eigenvalues and the PPT negativity of two-mode states."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .constants import VACUUM_VARIANCE
from .errors import DomainError, InvalidStateError
from .gaussian import GaussianState, partial_trace, symplectic_form

log = logging.getLogger(__name__)

DISCRIMINANT_TOL = 1e-12
NU_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class TwoModeBlocks:
    """``V = [[A, C], [C^T, B]]`` for a two-mode covariance."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @classmethod
    def from_state(cls, state: GaussianState) -> TwoModeBlocks:
        _require_two_modes(state)
        v = state.covariance
        return cls(v[:2, :2].copy(), v[2:, 2:].copy(), v[:2, 2:].copy())

    def assemble(self) -> np.ndarray:
        return np.block([[self.A, self.C], [self.C.T, self.B]])

    @property
    def delta(self) -> float:
        """Seralian invariant ``det A + det B + 2 det C``."""
        return float(np.linalg.det(self.A) + np.linalg.det(self.B) + 2.0 * np.linalg.det(self.C))

    @property
    def delta_pt(self) -> float:
        """Seralian of the partially transposed state, ``det A + det B - 2 det C``."""
        return float(np.linalg.det(self.A) + np.linalg.det(self.B) - 2.0 * np.linalg.det(self.C))


@dataclass(frozen=True)
class MetricReport:
    squeezing_db: tuple[float, ...]
    purity: float
    symplectic_eigenvalues: tuple[float, float]
    pt_symplectic_min: float
    negativity: float
    mode_purity: tuple[float, ...] = ()
    degenerate: bool = False


def _require_two_modes(state: GaussianState):
    if state.n_modes != 2:
        raise DomainError(f"operation requires a two-mode state, got {state.n_modes} modes")


def squeezing_level(state: GaussianState, mode: int) -> float:
    """``-10 log10(sigma_s^2 / 0.25)`` with sigma_s^2 the minimum variance of the mode."""
    sigma_s2 = float(np.linalg.eigvalsh(state.mode_block(mode))[0])
    return -10.0 * np.log10(sigma_s2 / VACUUM_VARIANCE)


def purity(state: GaussianState) -> float:
    det = float(np.linalg.det(state.covariance))
    if det <= 0:
        raise InvalidStateError(f"covariance determinant {det} is not positive")
    return float((4.0 ** (2 * state.n_modes) * det) ** -0.5)


#: below this relative discriminant the closed form loses half its digits
NEAR_DEGENERATE = 1e-6

_PT_FLIP = np.array([1.0, 1.0, 1.0, -1.0])


def _hermitian_spectrum(cov: np.ndarray) -> tuple[float, float]:
    # eigenvalues of L^T (i Omega) L are +/- nu for V = L L^T; well conditioned at degeneracy
    chol = np.linalg.cholesky(cov)
    eig = np.linalg.eigvalsh(chol.T @ (1j * symplectic_form(2)) @ chol)
    return float(eig[3]), float(eig[2])


def _nu_pair(delta: float, cov: np.ndarray) -> tuple[float, float]:
    det_v = float(np.linalg.det(cov))
    disc = delta * delta - 4.0 * det_v
    if disc < -DISCRIMINANT_TOL:
        raise InvalidStateError(f"negative discriminant {disc:.3e} in symplectic eigenvalue formula")
    if disc < NEAR_DEGENERATE * delta * delta:
        return _hermitian_spectrum(cov)
    root = np.sqrt(disc)
    plus = np.sqrt(max((delta + root) / 2.0, 0.0))
    minus = np.sqrt(max((delta - root) / 2.0, 0.0))
    return float(plus), float(minus)


def symplectic_eigenvalues(state: GaussianState) -> tuple[float, float]:
    """``(nu_plus, nu_minus)`` of a two-mode covariance from its Seralian.

    Near-degenerate spectra (``nu_plus ~ nu_minus``) are taken from a
    Hermitian eigenproblem instead, since the closed form's inner square
    root amplifies rounding there.
    """
    blocks = TwoModeBlocks.from_state(state)
    return _nu_pair(blocks.delta, state.covariance)


def pt_symplectic_eigenvalues(state: GaussianState) -> tuple[float, float]:
    """Symplectic eigenvalues of the partial transpose (Q2 -> -Q2)."""
    blocks = TwoModeBlocks.from_state(state)
    return _nu_pair(blocks.delta_pt, state.covariance * np.outer(_PT_FLIP, _PT_FLIP))


def _negativity_from_nu(nu: float) -> tuple[float, bool]:
    floored = nu < NU_FLOOR
    if floored:
        log.error("partially transposed symplectic eigenvalue %.3e floored at %.0e", nu, NU_FLOOR)
        nu = NU_FLOOR
    return max(0.0, (1.0 - 4.0 * nu) / (8.0 * nu)), floored


def negativity(state: GaussianState) -> float:
    """PPT negativity ``max[0, (1 - 4 nu~) / (8 nu~)]`` of a two-mode state."""
    _, nu = pt_symplectic_eigenvalues(state)
    return _negativity_from_nu(nu)[0]


def negativity_from_squeezing(s_db: float) -> float:
    """Lossless, noiseless negativity expected from a squeezing level in dB."""
    if not np.isfinite(s_db):
        raise DomainError(f"squeezing level must be finite, got {s_db}")
    return max((10.0 ** (s_db / 10.0) - 1.0) / 2.0, 0.0)


def metric_report(state: GaussianState) -> MetricReport:
    _require_two_modes(state)
    nu_plus, nu_minus = symplectic_eigenvalues(state)
    _, nu_pt = pt_symplectic_eigenvalues(state)
    neg, floored = _negativity_from_nu(nu_pt)
    return MetricReport(
        squeezing_db=tuple(squeezing_level(state, m) for m in range(2)),
        purity=purity(state),
        symplectic_eigenvalues=(nu_plus, nu_minus),
        pt_symplectic_min=nu_pt,
        negativity=neg,
        mode_purity=tuple(purity(partial_trace(state, [m])) for m in range(2)),
        degenerate=floored,
    )
