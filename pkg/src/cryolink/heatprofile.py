"""Quasi-1D steady-state temperature profile of the superconducting cables
and the sigmoid-smoothed piecewise-linear temperature response fit.

The cable is anchored at both ends (Dirichlet boundaries) through silver
wires whose conductance sets the axial heat flow.  Distributed loads are a
weak linear conductance to the mixing-chamber tube, gray-body radiation from
warmer surroundings and an optional Gaussian heater.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize
from scipy.linalg import solve_banded

from .constants import STEFAN_BOLTZMANN
from .errors import ConvergenceError, DomainError, IllConditionedError

#: low-temperature slope of silver conductivity, W / (m K^2)
DEFAULT_KAPPA0 = 100.0


def silver_conductivity(temperature, kappa0: float = DEFAULT_KAPPA0):
    """Linear metallic law ``kappa0 * T`` in W/(m K)."""
    temperature = np.asarray(temperature, dtype=float)
    if np.any(temperature <= 0):
        raise DomainError("silver conductivity needs T > 0")
    out = kappa0 * temperature
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LinearConductivity:
    kappa0: float = DEFAULT_KAPPA0

    def __call__(self, temperature):
        return self.kappa0 * np.asarray(temperature, dtype=float)


@dataclass(frozen=True)
class ConstantConductivity:
    value: float

    def __call__(self, temperature):
        return self.value * np.ones_like(np.asarray(temperature, dtype=float))


@dataclass(frozen=True)
class HeatModel:
    """Parameters of the cable heat balance (SI units, temperatures in K).

    The defaults reproduce a 110 mK cable center between 35 mK and 21 mK
    anchors with the tube at 52 mK; ``emissivity`` is the calibrated constant
    (see :func:`calibrate_emissivity`).
    """

    length: float = 6.0
    grid_points: int = 601
    boundary_left: float = 0.035
    boundary_right: float = 0.021
    conductivity: LinearConductivity | ConstantConductivity = field(default_factory=LinearConductivity)
    wire_cross_section: float = 3 * np.pi * 0.25e-3**2
    perimeter: float = 3 * np.pi * 2.2e-3
    emissivity: float = 0.4207037728
    radiation_temperature: float = 3.5
    coupling: float = 1e-8
    tube_temperature: float = 0.052
    heater_position: float = 3.0
    heater_power: float = 0.0
    heater_width: float = 0.05
    max_iterations: int = 500
    tolerance: float = 1e-6
    relaxation: float = 0.7

    def __post_init__(self):
        if self.grid_points < 3:
            raise DomainError(f"grid_points must be >= 3, got {self.grid_points}")
        if self.length <= 0 or self.wire_cross_section <= 0:
            raise DomainError("length and wire cross section must be positive")
        if self.boundary_left <= 0 or self.boundary_right <= 0:
            raise DomainError("boundary temperatures must be positive")
        for name in ("perimeter", "emissivity", "radiation_temperature", "coupling", "tube_temperature",
                     "heater_power", "heater_width"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value}")
        if not 0 < self.relaxation <= 1:
            raise DomainError("relaxation factor must lie in (0, 1]")

    def positions(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.grid_points)

    def heater_density(self) -> np.ndarray:
        """Gaussian heater profile in W/m, normalized so the grid integral equals the power."""
        x = self.positions()
        if self.heater_power == 0:
            return np.zeros_like(x)
        if self.heater_width == 0:
            shape = (np.abs(x - self.heater_position) == np.min(np.abs(x - self.heater_position))).astype(float)
        else:
            shape = np.exp(-0.5 * ((x - self.heater_position) / self.heater_width) ** 2)
        shape[0] = shape[-1] = 0.0  # boundary nodes are Dirichlet
        dx = x[1] - x[0]
        total = shape.sum() * dx
        if total == 0:
            raise DomainError("heater lies outside the cable interior")
        return self.heater_power * shape / total


@dataclass(frozen=True, eq=False)
class TemperatureProfile:
    positions: np.ndarray
    temperatures: np.ndarray
    converged: bool
    iterations: int

    def temperature_at(self, x: float) -> float:
        return float(np.interp(x, self.positions, self.temperatures))

    @property
    def center_temperature(self) -> float:
        return self.temperature_at(0.5 * (self.positions[0] + self.positions[-1]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["position_m", "temperature_K"])
        for x, t in zip(self.positions, self.temperatures):
            writer.writerow([f"{x:.9g}", f"{t:.9g}"])
        return buf.getvalue()


def solve_profile(model: HeatModel) -> TemperatureProfile:
    """Finite-difference solution of ``-(lambda A T')' = Q_c + Q_r + Q_h``.

    Face conductances use the mean face temperature; the tube coupling and the
    ``T^4`` radiation term are lagged by Picard iteration with under-relaxation.
    Raises :class:`ConvergenceError` after ``max_iterations`` or when an
    iterate turns non-positive.
    """
    x = model.positions()
    n = x.size
    dx = x[1] - x[0]
    area = model.wire_cross_section
    rad = STEFAN_BOLTZMANN * model.emissivity * model.perimeter
    q_heater = model.heater_density()
    q_fixed = model.coupling * model.tube_temperature + rad * model.radiation_temperature**4 + q_heater

    temps = np.linspace(model.boundary_left, model.boundary_right, n)
    change = np.inf
    for iteration in range(1, model.max_iterations + 1):
        k_face = model.conductivity(0.5 * (temps[1:] + temps[:-1])) * area / dx**2
        west, east = k_face[:-1], k_face[1:]
        sink = model.coupling + rad * temps[1:-1] ** 3
        banded = np.zeros((3, n))
        banded[1, 0] = banded[1, -1] = 1.0
        banded[1, 1:-1] = west + east + sink
        banded[0, 2:] = -east
        banded[2, :-2] = -west
        rhs = np.empty(n)
        rhs[0], rhs[-1] = model.boundary_left, model.boundary_right
        rhs[1:-1] = q_fixed[1:-1]
        solution = solve_banded((1, 1), banded, rhs)
        if np.any(solution <= 0) or not np.all(np.isfinite(solution)):
            raise ConvergenceError(
                "non-positive temperature iterate; the load configuration is unphysical",
                iterations=iteration,
            )
        change = float(np.max(np.abs(solution - temps)))
        if change < model.tolerance:
            temps = solution
            break
        temps = temps + model.relaxation * (solution - temps)
    else:
        raise ConvergenceError(
            f"heat solver did not converge in {model.max_iterations} iterations (last change {change:.3e} K)",
            iterations=model.max_iterations,
            residual=change,
        )
    temps[0], temps[-1] = model.boundary_left, model.boundary_right
    return TemperatureProfile(x, temps, True, iteration)


def heater_power_for_center(model: HeatModel, center_temperature: float, tol: float = 1e-12) -> float:
    """Heater power that holds the cable midpoint at ``center_temperature``."""
    model = replace(model, heater_position=0.5 * model.length)
    base = solve_profile(replace(model, heater_power=0.0)).center_temperature
    if center_temperature <= base:
        return 0.0

    def excess(power):
        return solve_profile(replace(model, heater_power=power)).center_temperature - center_temperature

    hi = 1e-9
    while excess(hi) < 0:
        hi *= 4
        if hi > 1e3:
            raise ConvergenceError(f"cannot reach center temperature {center_temperature} K")
    return optimize.brentq(excess, 0.0, hi, xtol=tol, rtol=1e-10)


def calibrate_emissivity(model: HeatModel, center_temperature: float) -> float:
    """Effective emissivity that yields ``center_temperature`` without heating."""

    def excess(e):
        return solve_profile(replace(model, emissivity=e, heater_power=0.0)).center_temperature - center_temperature

    return optimize.brentq(excess, 0.0, 10.0, xtol=1e-12, rtol=1e-12)


# -- temperature response fit --------------------------------------------------

#: center temperature (K) at which the fit switches slope
BREAKPOINT = 0.4


@dataclass(frozen=True)
class ResponseFit:
    """``f(T) = a T + b + (1 + tanh[4 (T - 0.4)]) / 2 (c - a) (T - 0.4)``."""

    a: float
    b: float
    c: float
    residual: float = 0.0

    def __call__(self, temperature):
        return evaluate_fit(self, temperature)


def _switch(t):
    return 0.5 * (1.0 + np.tanh(4.0 * (t - BREAKPOINT)))


def evaluate_fit(fit: ResponseFit, temperature):
    t = np.asarray(temperature, dtype=float)
    if np.any(t < 0):
        raise DomainError("fit is defined for T >= 0")
    out = fit.a * t + fit.b + _switch(t) * (fit.c - fit.a) * (t - BREAKPOINT)
    return float(out) if out.ndim == 0 else out


def fit_response(center_temps, measured_temps) -> ResponseFit:
    """Least-squares ``(a, b, c)``; the model is linear in the parameters."""
    t = np.asarray(center_temps, dtype=float)
    y = np.asarray(measured_temps, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise DomainError("center and measured temperatures must be 1-D arrays of equal length")
    if t.size < 4:
        raise IllConditionedError(f"need at least 4 points, got {t.size}")
    if not (np.any(t < BREAKPOINT) and np.any(t > BREAKPOINT)):
        raise IllConditionedError(f"data must span both sides of T = {BREAKPOINT} K")
    s = _switch(t)
    design = np.column_stack([t - s * (t - BREAKPOINT), np.ones_like(t), s * (t - BREAKPOINT)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    if np.linalg.cond(design) > 1e12:
        raise IllConditionedError("design matrix is ill-conditioned")
    a, b, c = (float(v) for v in coef)
    residual = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    return ResponseFit(a, b, c, residual)
