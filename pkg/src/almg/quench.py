"""Sudden quenches xi1 -> xi2: LDOS, survival probability and the tangent method."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from almg.errors import InvalidInput, UnreachableQuench
from almg.model import ModelParams
from almg.spectra import SpectralData, StateSelector, diagonalize, hf_slope, select_state

DEFAULT_T_MAX = 50.0
DEFAULT_N_POINTS = 2000

# automated "drops to zero" detection
COLLAPSE_MEAN = 0.05
COLLAPSE_REVIVAL = 0.2


@dataclass(frozen=True)
class QuenchSpec:
    N: int
    alpha: float
    xi1: float
    xi2: float
    initial: StateSelector = StateSelector.ground()

    def __post_init__(self):
        ModelParams(self.N, self.xi1, self.alpha)
        ModelParams(self.N, self.xi2, self.alpha)

    @property
    def params1(self) -> ModelParams:
        return ModelParams(self.N, self.xi1, self.alpha)

    @property
    def params2(self) -> ModelParams:
        return ModelParams(self.N, self.xi2, self.alpha)


@dataclass(frozen=True)
class Ldos:
    """Stick spectrum of the initial state over the post-quench eigenbasis."""

    energies: np.ndarray
    weights: np.ndarray
    eps: np.ndarray
    parities: np.ndarray
    N: int

    @property
    def energy_per_site(self) -> np.ndarray:
        return self.energies / self.N

    def sector(self, parity: int) -> Tuple[np.ndarray, np.ndarray]:
        """(E/N, weight) restricted to one parity sector."""
        mask = self.parities == parity
        return self.energy_per_site[mask], self.weights[mask]


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray

    def window(self, t0: float, t1: float) -> "TimeSeries":
        mask = (self.times >= t0) & (self.times <= t1)
        return TimeSeries(self.times[mask], self.values[mask])


def time_grid(t_max: float = DEFAULT_T_MAX, n_points: int = DEFAULT_N_POINTS, t_min: float = 0.0) -> np.ndarray:
    if n_points < 1 or not t_max > t_min:
        raise InvalidInput(f"bad time grid t in [{t_min}, {t_max}] with {n_points} points")
    return np.linspace(t_min, t_max, int(n_points))


def _as_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).ravel()
    if t.size == 0:
        raise InvalidInput("empty time grid")
    if not np.all(np.isfinite(t)):
        raise InvalidInput("non-finite time values")
    return t


def quench_coefficients(
    spec: QuenchSpec,
    initial: Optional[SpectralData] = None,
    final: Optional[SpectralData] = None,
) -> Ldos:
    """|C_j|^2 = |<psi_j(xi2)|Psi0>|^2 over the merged eigenbasis of H(xi2).

    Precomputed spectra for xi1 and xi2 may be passed to share them across quenches.
    """
    initial = initial if initial is not None else diagonalize(spec.params1)
    final = final if final is not None else diagonalize(spec.params2)
    psi0, _ = select_state(initial, spec.initial)
    c = final.vectors.T @ psi0
    weights = c * c
    return Ldos(final.energies.copy(), weights, final.eps.copy(), final.parities.copy(), spec.N)


def amplitude(energies: np.ndarray, weights: np.ndarray, times, sign: float = -1.0, chunk: int = 4096) -> np.ndarray:
    """sum_j w_j exp(sign * i E_j t) on a time grid, chunked to bound memory."""
    t = _as_times(times)
    keep = weights != 0
    E, w = energies[keep], weights[keep]
    out = np.empty(t.size, dtype=complex)
    for start in range(0, t.size, chunk):
        tt = t[start : start + chunk]
        out[start : start + chunk] = np.exp(sign * 1j * np.outer(tt, E)) @ w
    return out


def survival_probability(ldos: Ldos, times) -> TimeSeries:
    """F(t) = |sum_j |C_j|^2 exp(-i E_j t)|^2."""
    t = _as_times(times)
    a = amplitude(ldos.energies, ldos.weights, t)
    F = np.clip(np.abs(a) ** 2, 0.0, 1.0)
    F[t == 0] = 1.0
    return TimeSeries(t, F)


def broadened_ldos(ldos: Ldos, grid, sigma: float) -> np.ndarray:
    """Gaussian-smoothed LDOS on a grid of E/N values (plotting only)."""
    if sigma <= 0:
        raise InvalidInput("sigma must be positive")
    x = np.asarray(grid, dtype=float)
    z = (x[:, None] - ldos.energy_per_site[None, :]) / sigma
    return np.exp(-0.5 * z * z) @ ldos.weights / (sigma * np.sqrt(2 * np.pi))


def collapse_signature(series: TimeSeries, window: Tuple[float, float] = (20.0, 200.0)) -> Tuple[float, float]:
    """(mean, max) of F(t) inside the window."""
    w = series.window(*window)
    if w.values.size == 0:
        raise InvalidInput(f"no samples inside window {window}")
    return float(w.values.mean()), float(w.values.max())


def is_critical_collapse(series: TimeSeries, window: Tuple[float, float] = (20.0, 200.0)) -> bool:
    mean, peak = collapse_signature(series, window)
    return mean < COLLAPSE_MEAN and peak <= COLLAPSE_REVIVAL


# ---------------------------------------------------------------------------
# tangent method


def tangent_to_diagonal(slope: float, xi1: float, eps1: float) -> float:
    """Where eps = slope (xi - xi1) + eps1 meets the line eps = xi."""
    if abs(slope - 1.0) <= 1e-12:
        raise UnreachableQuench("tangent is parallel to the eps = xi critical line")
    return (slope * xi1 - eps1) / (slope - 1.0)


def tangent_to_level(slope: float, xi1: float, eps1: float, eps0: float) -> float:
    """Where eps = slope (xi - xi1) + eps1 meets the flat line eps = eps0."""
    if abs(slope) <= 1e-12:
        raise UnreachableQuench("tangent is parallel to the flat critical line")
    return (slope * xi1 + eps0 - eps1) / slope


def _check_reachable(xi_c: float, label: str) -> float:
    if not (0.0 <= xi_c <= 1.0):
        raise UnreachableQuench(f"{label} critical xi = {xi_c:.6g} lies outside [0, 1]")
    return float(xi_c)


def critical_xi_from_ground(alpha: float, xi1: float, N: int, spec: Optional[SpectralData] = None) -> float:
    """xi2 at which a quench from the xi1 ground state lands on eps_c1 = xi."""
    params = ModelParams(N, xi1, alpha)
    spec = spec if spec is not None else diagonalize(params)
    sel = StateSelector.ground()
    m = hf_slope(params, sel, spec)
    eps_gs = select_state(spec, sel)[1] / N
    return _check_reachable(tangent_to_diagonal(m, xi1, eps_gs), "first")


def critical_xi_from_highest(
    alpha: float,
    xi1: float,
    N: int,
    eps0: Optional[float] = None,
    selector: StateSelector = StateSelector.highest_even(),
    spec: Optional[SpectralData] = None,
) -> float:
    """xi2 at which a quench from the highest even state lands on eps_c2 = eps0 (default 1 + alpha)."""
    if eps0 is None:
        eps0 = 1.0 + alpha
    params = ModelParams(N, xi1, alpha)
    spec = spec if spec is not None else diagonalize(params)
    m2 = hf_slope(params, selector, spec)
    eps_star = select_state(spec, selector)[1] / N
    xi_c = tangent_to_level(m2, xi1, eps_star, eps0)
    if alpha == 0.0:
        # reported as is, even outside [0, 1]: there is no line to reach
        warnings.warn("alpha = 0 has no anharmonicity-induced critical line; value is only formal", stacklevel=2)
        return float(xi_c)
    return _check_reachable(xi_c, "second")


def tangent_data(params: ModelParams, sel: StateSelector, spec: Optional[SpectralData] = None) -> Tuple[float, float]:
    """(slope, eps) of the selected level at params.xi, with eps = E/N."""
    spec = spec if spec is not None else diagonalize(params)
    return hf_slope(params, sel, spec), select_state(spec, sel)[1] / params.N


def scan_quenches(
    N: int, alpha: float, xi1: float, xi2_values: Sequence[float], initial: StateSelector, times
) -> list:
    """Survival probabilities for a list of xi2 values sharing one initial spectrum."""
    first = diagonalize(ModelParams(N, xi1, alpha))
    out = []
    for xi2 in xi2_values:
        q = QuenchSpec(N, alpha, xi1, xi2, initial)
        out.append(survival_probability(quench_coefficients(q, initial=first), times))
    return out
