"""Planck occupation, threshold temperatures and the fluctuation-dissipation
voltage variance of a (superconducting) transmission line.

Frequencies are ordinary frequencies in Hz, temperatures in K.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .constants import HBAR, H, K_B
from .errors import ConvergenceError, DomainError


def _check_frequency(frequency):
    if not np.all(np.isfinite(frequency)) or np.any(np.asarray(frequency) <= 0):
        raise DomainError(f"frequency must be positive, got {frequency}")


def quantum_temperature(frequency):
    """``h f / k_B``: the temperature scale of a photon at ``frequency``."""
    _check_frequency(frequency)
    return H * np.asarray(frequency, dtype=float) / K_B


def planck_occupation(frequency, temperature):
    """Mean thermal photon number ``1 / (exp(h f / k_B T) - 1)``; zero at T = 0."""
    _check_frequency(frequency)
    temperature = np.asarray(temperature, dtype=float)
    if np.any(temperature < 0) or np.any(np.isnan(temperature)):
        raise DomainError(f"temperature must be >= 0, got {temperature}")
    t0 = quantum_temperature(frequency)
    with np.errstate(divide="ignore", over="ignore"):
        n = 1.0 / np.expm1(t0 / temperature)
    n = np.where(temperature > 0, n, 0.0)
    return float(n) if n.ndim == 0 else n


def _third_derivative_sign(u):
    # d^3 n / dT^3 = (k_B / h f)^3 u^4 e^u P(u) / (e^u - 1)^4 with u = h f / k_B T;
    # this is P(u) e^{-2u}, which shares its sign.
    em, em2 = np.exp(-u), np.exp(-2 * u)
    return u**2 * (1 + 4 * em + em2) - 6 * u * (1 - em2) + 6 * (1 - em) ** 2


def planck_third_derivative(frequency, temperature):
    """Analytic ``d^3 n_th / dT^3`` in photons per K^3."""
    t0 = quantum_temperature(frequency)
    u = t0 / np.asarray(temperature, dtype=float)
    num = u**4 * _third_derivative_sign(u) * np.exp(-u)
    den = (1 - np.exp(-u)) ** 4
    return num / den / t0**3


def threshold_kappa(frequency) -> float:
    """Temperature of maximal Planck curvature, the root of ``d^3 n_th / dT^3``.

    The root is bracketed on ``[0.05, 1.0] h f / k_B``; the ratio to
    ``h f / k_B`` is frequency independent (about 0.2227).
    """
    t0 = float(quantum_temperature(frequency))
    # T in [0.05, 1] t0  <=>  u in [1, 20]
    try:
        u_root, info = optimize.brentq(_third_derivative_sign, 1.0, 20.0, xtol=1e-14, rtol=1e-14, full_output=True)
    except ValueError as exc:
        raise ConvergenceError(f"no sign change of d^3 n/dT^3 in bracket: {exc}") from exc
    if not info.converged:
        raise ConvergenceError("threshold root finder did not converge", iterations=info.iterations)
    return t0 / u_root


def crossover_temperature(frequency) -> float:
    return float(quantum_temperature(frequency)) / 2.0


def sudden_death_temperature(frequency) -> float:
    """Temperature at which the bath carries exactly one photon."""
    return float(quantum_temperature(frequency)) / np.log(2.0)


def max_input_temperature_for_squeezing(frequency) -> float:
    """Largest input temperature (n_th = 1/2) still allowing squeezing after a balanced splitter."""
    return float(quantum_temperature(frequency)) / np.log(3.0)


# -- fluctuation-dissipation --------------------------------------------------


def superconducting_dissipation(frequency, temperature, gap_frequency, prefactor=1.0):
    """Exponentially suppressed dissipation ``prefactor * exp(-h f_gap / (2 k_B T))``.

    Uses the temperature-independent gap ``Delta = h f_gap / 2``.
    """
    if np.any(np.asarray(frequency) >= gap_frequency):
        raise DomainError(f"frequency {frequency} Hz is not below the gap frequency {gap_frequency} Hz")
    if temperature < 0:
        raise DomainError(f"temperature must be >= 0, got {temperature}")
    value = 0.0 if temperature == 0 else prefactor * np.exp(-H * gap_frequency / (2.0 * K_B * temperature))
    out = value * np.ones_like(np.asarray(frequency, dtype=float))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConstantDissipation:
    epsilon: float

    def __post_init__(self):
        if self.epsilon < 0:
            raise DomainError("dissipation must be >= 0")

    def __call__(self, frequency):
        return self.epsilon * np.ones_like(np.asarray(frequency, dtype=float))


@dataclass(frozen=True)
class SuperconductingDissipation:
    prefactor: float
    gap_frequency: float
    temperature: float

    def __post_init__(self):
        if self.prefactor < 0 or self.gap_frequency <= 0 or self.temperature < 0:
            raise DomainError("invalid superconducting dissipation parameters")

    def __call__(self, frequency):
        return superconducting_dissipation(frequency, self.temperature, self.gap_frequency, self.prefactor)


DissipationSpectrum = ConstantDissipation | SuperconductingDissipation


def fdt_voltage_variance(center_temperature, spectrum, center_frequency, half_bandwidth, rtol=1e-8) -> float:
    """``2 hbar * integral coth(hbar w / 2 k_B T) eps(w) dw`` over ``w0 +/- B``.

    ``center_frequency`` and ``half_bandwidth`` are ordinary frequencies in Hz;
    the integral runs over angular frequency, so at T = 0 with constant
    ``eps0`` the result is ``4 hbar eps0 (2 pi B)``.  Units are normalized:
    the spectrum's prefactor absorbs line geometry and impedance.
    """
    if half_bandwidth <= 0:
        raise DomainError(f"half bandwidth must be positive, got {half_bandwidth}")
    if center_frequency - half_bandwidth <= 0:
        raise DomainError("integration band must lie at positive frequencies")
    if center_temperature < 0:
        raise DomainError(f"temperature must be >= 0, got {center_temperature}")
    lo = 2 * np.pi * (center_frequency - half_bandwidth)
    hi = 2 * np.pi * (center_frequency + half_bandwidth)

    def integrand(w):
        eps = float(spectrum(w / (2 * np.pi)))
        if center_temperature == 0:
            return eps
        x = HBAR * w / (2 * K_B * center_temperature)
        return eps / np.tanh(x)

    # rescale to O(1) so the absolute tolerance does not dominate
    scale = hi - lo
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(lambda s: integrand(lo + s * scale), 0.0, 1.0, epsabs=0.0, epsrel=rtol, limit=200)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"voltage variance quadrature did not converge: {exc}") from exc
    return 2 * HBAR * value * scale
