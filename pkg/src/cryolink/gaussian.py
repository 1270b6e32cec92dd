"""N-mode Gaussian states, symplectic maps and Gaussian noise channels.

Quadratures are ordered ``(I1, Q1, I2, Q2, ...)`` and the vacuum variance is
1/4, so a thermal mode with ``n`` photons has variance ``(1 + 2n)/4`` in each
quadrature.  Every operation returns a new :class:`GaussianState`; states are
never mutated.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .constants import VACUUM_VARIANCE
from .errors import DomainError, InvalidStateError

SYMMETRY_TOL = 1e-10
UNCERTAINTY_TOL = 1e-9


def uncertainty_tolerance(cov: np.ndarray) -> float:
    """Slack on ``nu_min >= 1/4``: 1e-9, widened to the float64 resolution of ill-conditioned covariances."""
    return max(UNCERTAINTY_TOL, 16.0 * VACUUM_VARIANCE * np.finfo(float).eps * np.linalg.cond(cov))


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form with 2x2 blocks ``[[0, 1], [-1, 0]]``."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def is_symplectic(matrix: np.ndarray, atol: float = 1e-10) -> bool:
    matrix = np.asarray(matrix, dtype=float)
    dim = matrix.shape[0]
    if matrix.shape != (dim, dim) or dim % 2:
        return False
    omega = symplectic_form(dim // 2)
    return bool(np.allclose(matrix @ omega @ matrix.T, omega, atol=atol, rtol=0))


def symplectic_spectrum(cov: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of ``cov`` in ascending order (one per mode).

    Computed as the moduli of the eigenvalues of ``i Omega V``, which come in
    ``+/-`` pairs.
    """
    cov = np.asarray(cov, dtype=float)
    n_modes = cov.shape[0] // 2
    eig = np.abs(np.linalg.eigvals(1j * symplectic_form(n_modes) @ cov))
    return np.sort(eig)[::2]


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Displacement vector and covariance matrix of an N-mode Gaussian state.

    The covariance is symmetrized on construction and checked against the
    uncertainty bound (all symplectic eigenvalues >= 1/4).
    """

    displacement: np.ndarray
    covariance: np.ndarray
    n_modes: int = field(init=False)

    def __post_init__(self):
        cov = np.array(self.covariance, dtype=float)
        disp = np.array(self.displacement, dtype=float).reshape(-1)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2 or cov.shape[0] == 0:
            raise InvalidStateError(f"covariance must be a non-empty 2N x 2N matrix, got shape {cov.shape}")
        if disp.shape != (cov.shape[0],):
            raise InvalidStateError(
                f"displacement length {disp.shape[0]} does not match covariance size {cov.shape[0]}"
            )
        if not (np.all(np.isfinite(cov)) and np.all(np.isfinite(disp))):
            raise InvalidStateError("state contains non-finite entries")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
            raise InvalidStateError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        nu_min = symplectic_spectrum(cov)[0]
        if nu_min < VACUUM_VARIANCE - uncertainty_tolerance(cov):
            raise InvalidStateError(
                f"uncertainty bound violated: smallest symplectic eigenvalue {nu_min:.6g} < 1/4"
            )
        cov.setflags(write=False)
        disp.setflags(write=False)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "displacement", disp)
        object.__setattr__(self, "n_modes", cov.shape[0] // 2)

    def mode_block(self, mode: int) -> np.ndarray:
        _check_mode(self, mode)
        return self.covariance[2 * mode : 2 * mode + 2, 2 * mode : 2 * mode + 2]

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_spectrum(self.covariance)

    def __repr__(self):
        return f"GaussianState(n_modes={self.n_modes}, displacement={self.displacement!r}, covariance={self.covariance!r})"


def _check_mode(state: GaussianState, mode: int):
    if not isinstance(mode, (int, np.integer)) or not 0 <= mode < state.n_modes:
        raise DomainError(f"mode index {mode!r} out of range for a {state.n_modes}-mode state")


def vacuum(n_modes: int) -> GaussianState:
    return make_thermal_state(n_modes, [0.0] * n_modes)


def make_thermal_state(n_modes: int, photons_per_mode) -> GaussianState:
    """Product of thermal states with zero displacement.

    >>> make_thermal_state(1, [0.5]).covariance
    array([[0.5, 0. ],
           [0. , 0.5]])
    """
    if int(n_modes) != n_modes or n_modes < 1:
        raise DomainError(f"n_modes must be a positive integer, got {n_modes!r}")
    photons = np.asarray(photons_per_mode, dtype=float).reshape(-1)
    if photons.shape != (n_modes,):
        raise DomainError(f"expected {n_modes} photon numbers, got {photons.shape[0]}")
    if np.any(~np.isfinite(photons)) or np.any(photons < 0):
        raise DomainError(f"thermal photon numbers must be finite and >= 0, got {photons.tolist()}")
    variances = np.repeat(VACUUM_VARIANCE * (1.0 + 2.0 * photons), 2)
    return GaussianState(np.zeros(2 * n_modes), np.diag(variances))


def apply_symplectic(state: GaussianState, matrix: np.ndarray, modes=None) -> GaussianState:
    """Apply a symplectic matrix acting on ``modes`` (all modes by default)."""
    if modes is None:
        modes = range(state.n_modes)
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
    full = np.eye(2 * state.n_modes)
    full[np.ix_(idx, idx)] = matrix
    return GaussianState(full @ state.displacement, full @ state.covariance @ full.T)


def apply_channel(state: GaussianState, transfer: np.ndarray, noise: np.ndarray, modes) -> GaussianState:
    """Gaussian channel ``V -> X V X^T + Y``, ``d -> X d`` on the listed modes."""
    for m in modes:
        _check_mode(state, m)
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
    x = np.eye(2 * state.n_modes)
    x[np.ix_(idx, idx)] = transfer
    y = np.zeros_like(x)
    y[np.ix_(idx, idx)] = noise
    return GaussianState(x @ state.displacement, x @ state.covariance @ x.T + y)


def rotation_matrix(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def squeeze_matrix(r: float, theta: float = 0.0) -> np.ndarray:
    """Single-mode squeezer scaling the axis at angle ``theta`` by ``exp(-r)``."""
    rot = rotation_matrix(theta)
    return rot @ np.diag([np.exp(-r), np.exp(r)]) @ rot.T


def beam_splitter_matrix(tau: float) -> np.ndarray:
    t, s = np.sqrt(tau), np.sqrt(1.0 - tau)
    eye = np.eye(2)
    return np.block([[t * eye, s * eye], [-s * eye, t * eye]])


def apply_rotation(state: GaussianState, mode: int, phi: float) -> GaussianState:
    _check_mode(state, mode)
    return apply_symplectic(state, rotation_matrix(phi), [mode])


def apply_squeeze(state: GaussianState, mode: int, r: float, theta: float = 0.0, n_added: float = 0.0) -> GaussianState:
    """Noisy squeezer: ideal squeeze by ``r`` then ``n_added/2`` added to both variances."""
    _check_mode(state, mode)
    if not np.isfinite(r) or r < 0:
        raise DomainError(f"squeeze factor must be >= 0, got {r}")
    if not np.isfinite(n_added) or n_added < 0:
        raise DomainError(f"added noise photons must be >= 0, got {n_added}")
    noise = 2.0 * VACUUM_VARIANCE * n_added * np.eye(2)
    return apply_channel(state, squeeze_matrix(r, theta), noise, [mode])


def apply_beam_splitter(state: GaussianState, mode_i: int, mode_j: int, tau: float) -> GaussianState:
    """Two-mode mixing with amplitude transmission ``sqrt(tau)``.

    ``tau = 0.5`` is the balanced splitter (hybrid ring).
    """
    _check_mode(state, mode_i)
    _check_mode(state, mode_j)
    if mode_i == mode_j:
        raise DomainError("beam splitter needs two distinct modes")
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"transmissivity must lie in [0, 1], got {tau}")
    return apply_symplectic(state, beam_splitter_matrix(tau), [mode_i, mode_j])


def apply_loss(state: GaussianState, mode: int, epsilon: float, n_env: float = 0.0) -> GaussianState:
    """Beam-splitter loss coupling ``mode`` to a thermal bath with ``n_env`` photons."""
    _check_mode(state, mode)
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError(f"loss must lie in [0, 1], got {epsilon}")
    if not np.isfinite(n_env) or n_env < 0:
        raise DomainError(f"environment photons must be >= 0, got {n_env}")
    transfer = np.sqrt(1.0 - epsilon) * np.eye(2)
    noise = epsilon * VACUUM_VARIANCE * (1.0 + 2.0 * n_env) * np.eye(2)
    return apply_channel(state, transfer, noise, [mode])


def partial_trace(state: GaussianState, keep_modes) -> GaussianState:
    """Reduced state on ``keep_modes`` (in the order given)."""
    keep = list(keep_modes)
    if not keep:
        raise DomainError("keep_modes must not be empty")
    if len(set(keep)) != len(keep):
        raise DomainError(f"duplicate modes in {keep}")
    for m in keep:
        _check_mode(state, m)
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in keep])
    return GaussianState(state.displacement[idx], state.covariance[np.ix_(idx, idx)])


# -- channel elements ---------------------------------------------------------


@dataclass(frozen=True)
class Squeeze:
    mode: int
    r: float
    theta: float = 0.0
    n_added: float = 0.0
    label: str = "S"

    def __post_init__(self):
        if self.r < 0 or self.n_added < 0:
            raise DomainError(f"invalid squeeze parameters r={self.r}, n_added={self.n_added}")

    def apply(self, state: GaussianState) -> GaussianState:
        return apply_squeeze(state, self.mode, self.r, self.theta, self.n_added)


@dataclass(frozen=True)
class BeamSplitter:
    mode_i: int
    mode_j: int
    tau: float = 0.5
    label: str = "B"

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise DomainError(f"transmissivity must lie in [0, 1], got {self.tau}")
        if self.mode_i == self.mode_j:
            raise DomainError("beam splitter needs two distinct modes")

    def apply(self, state: GaussianState) -> GaussianState:
        return apply_beam_splitter(state, self.mode_i, self.mode_j, self.tau)


@dataclass(frozen=True)
class Loss:
    mode: int
    epsilon: float
    n_env: float = 0.0
    label: str = "L"

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0 or self.n_env < 0:
            raise DomainError(f"invalid loss parameters epsilon={self.epsilon}, n_env={self.n_env}")

    @property
    def transmissivity(self) -> float:
        return 1.0 - self.epsilon

    def apply(self, state: GaussianState) -> GaussianState:
        return apply_loss(state, self.mode, self.epsilon, self.n_env)


ChannelElement = Squeeze | BeamSplitter | Loss


def apply_chain(state: GaussianState, chain) -> GaussianState:
    for element in chain:
        state = element.apply(state)
    return state


# -- sampling and moment estimation -------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadratureSamples:
    """Rows of simulated heterodyne records ``(I1, Q1, ..., IN, QN)``."""

    data: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] % 2:
            raise DomainError(f"samples must be a non-empty (count, 2N) array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise DomainError("samples contain non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def count(self) -> int:
        return self.data.shape[0]


def _sampling_factor(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        # semidefinite within tolerance
        w, v = np.linalg.eigh(cov)
        return v * np.sqrt(np.clip(w, 0.0, None))


def sample_quadratures(state: GaussianState, count: int, seed: int) -> QuadratureSamples:
    """Draw ``count`` samples from N(displacement, covariance), reproducible per seed."""
    if int(count) != count or count < 1:
        raise DomainError(f"count must be a positive integer, got {count!r}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((int(count), 2 * state.n_modes))
    data = state.displacement + z @ _sampling_factor(state.covariance).T
    return QuadratureSamples(data, seed)


def _as_data(samples) -> np.ndarray:
    data = samples.data if isinstance(samples, QuadratureSamples) else np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0:
        raise DomainError("moment estimation needs a non-empty sample set")
    return data


def moment_exponents(n_quadratures: int, max_order: int):
    """All exponent tuples with total order between 1 and ``max_order``."""
    for exps in itertools.product(range(max_order + 1), repeat=n_quadratures):
        if 0 < sum(exps) <= max_order:
            yield exps


def estimate_moments(samples, max_order: int = 4) -> dict[tuple[int, ...], float]:
    """Empirical raw moments ``<I1^k Q1^l I2^m Q2^n ...>`` up to ``max_order``.

    Keys are exponent tuples in quadrature order, e.g. ``(2, 0, 0, 0)`` is
    ``<I1^2>``.
    """
    if not 1 <= max_order <= 4:
        raise DomainError(f"max_order must be between 1 and 4, got {max_order}")
    data = _as_data(samples)
    powers = [np.ones_like(data)]
    for _ in range(max_order):
        powers.append(powers[-1] * data)
    table = {}
    for exps in moment_exponents(data.shape[1], max_order):
        prod = np.ones(data.shape[0])
        for q, k in enumerate(exps):
            if k:
                prod = prod * powers[k][:, q]
        table[exps] = float(prod.mean())
    return table


def central_moments(samples, max_order: int = 4) -> dict[tuple[int, ...], float]:
    data = _as_data(samples)
    return estimate_moments(data - data.mean(axis=0), max_order)


def fourth_cumulants(samples) -> dict[tuple[int, int, int, int], float]:
    """Joint fourth-order cumulants ``k(i, j, k, l)`` for ``i <= j <= k <= l``.

    All of them vanish for a Gaussian distribution.
    """
    data = _as_data(samples)
    x = data - data.mean(axis=0)
    cov = x.T @ x / x.shape[0]
    out = {}
    for i, j, k, l in itertools.combinations_with_replacement(range(x.shape[1]), 4):
        m4 = float(np.mean(x[:, i] * x[:, j] * x[:, k] * x[:, l]))
        out[(i, j, k, l)] = m4 - cov[i, j] * cov[k, l] - cov[i, k] * cov[j, l] - cov[i, l] * cov[j, k]
    return out


def excess_kurtosis(samples) -> np.ndarray:
    """Per-quadrature ``k4 / sigma^4``."""
    data = _as_data(samples)
    x = data - data.mean(axis=0)
    var = np.mean(x**2, axis=0)
    return np.mean(x**4, axis=0) / var**2 - 3.0


def moments_to_covariance(samples) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian reconstruction from first and second moments."""
    data = _as_data(samples)
    mean = data.mean(axis=0)
    x = data - mean
    return mean, x.T @ x / x.shape[0]


__all__ = [
    "GaussianState",
    "QuadratureSamples",
    "Squeeze",
    "BeamSplitter",
    "Loss",
    "ChannelElement",
    "symplectic_form",
    "uncertainty_tolerance",
    "symplectic_spectrum",
    "is_symplectic",
    "vacuum",
    "make_thermal_state",
    "apply_symplectic",
    "apply_channel",
    "apply_rotation",
    "apply_squeeze",
    "apply_beam_splitter",
    "apply_loss",
    "apply_chain",
    "partial_trace",
    "sample_quadratures",
    "estimate_moments",
    "central_moments",
    "fourth_cumulants",
    "excess_kurtosis",
    "moments_to_covariance",
]
