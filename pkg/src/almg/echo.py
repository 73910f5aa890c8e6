"""Loschmidt echoes of eigenstates under a perturbation xi -> xi + delta."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from almg.errors import InvalidInput
from almg.model import EVEN, ModelParams, parse_parity
from almg.quench import TimeSeries, _as_times, amplitude
from almg.spectra import SpectralData, diagonalize

DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True)
class EchoSpec:
    """Echo of state ``(parity, j)`` of H(xi, alpha) under H(xi + delta, alpha + delta_alpha)."""

    params: ModelParams
    delta: float
    state: Tuple[int, int] = (EVEN, 0)
    delta_alpha: float = 0.0

    def __post_init__(self):
        parity, j = self.state
        object.__setattr__(self, "state", (parse_parity(parity), int(j)))
        self.perturbed  # raises when xi + delta leaves [0, 1]

    @property
    def perturbed(self) -> ModelParams:
        p = self.params
        try:
            return ModelParams(p.N, p.xi + self.delta, p.alpha + self.delta_alpha)
        except InvalidInput as exc:
            raise InvalidInput(f"perturbed parameters invalid: {exc}") from exc


def echo_overlaps(
    spec: EchoSpec, unperturbed: Optional[SpectralData] = None, perturbed: Optional[SpectralData] = None
) -> Tuple[np.ndarray, SpectralData, SpectralData]:
    """c_k = <psi_k(xi + delta)|psi_j(xi)> over the merged perturbed eigenbasis."""
    unperturbed = unperturbed if unperturbed is not None else diagonalize(spec.params)
    perturbed = perturbed if perturbed is not None else diagonalize(spec.perturbed)
    k = unperturbed.global_index(*spec.state)
    c = perturbed.vectors.T @ unperturbed.vectors[:, k]
    return c, unperturbed, perturbed


def loschmidt_echo(
    spec: EchoSpec,
    times,
    unperturbed: Optional[SpectralData] = None,
    perturbed: Optional[SpectralData] = None,
) -> TimeSeries:
    """M_j(t) = |<psi_j| exp(i H(xi + delta) t) |psi_j>|^2.

    The forward leg exp(-i H(xi) t) only contributes a global phase because
    psi_j is an eigenstate of H(xi).
    """
    t = _as_times(times)
    c, _, pert = echo_overlaps(spec, unperturbed, perturbed)
    a = amplitude(pert.energies, c * c, t, sign=+1.0)
    M = np.clip(np.abs(a) ** 2, 0.0, 1.0)
    M[t == 0] = 1.0  # exact by normalization; the phase sum rounds to 1 - O(eps)
    return TimeSeries(t, M)


def time_averaged_echo(
    spec: EchoSpec,
    convention: str = "exact",
    unperturbed: Optional[SpectralData] = None,
    perturbed: Optional[SpectralData] = None,
) -> float:
    """Long-time average of M_j(t) as a sum of fourth powers.

    ``exact`` sums |<psi_k(xi + delta)|psi_j(xi)>|^4, which is the t -> infinity
    average of ``loschmidt_echo`` for a non-degenerate perturbed spectrum.
    ``swapped`` sums |<psi_k(xi)|psi_j(xi + delta)>|^4 (perturbed state expanded in
    the unperturbed basis); the two agree only to first order in delta.
    """
    unperturbed = unperturbed if unperturbed is not None else diagonalize(spec.params)
    perturbed = perturbed if perturbed is not None else diagonalize(spec.perturbed)
    if convention == "exact":
        c, _, _ = echo_overlaps(spec, unperturbed, perturbed)
    elif convention == "swapped":
        k = perturbed.global_index(*spec.state)
        c = unperturbed.vectors.T @ perturbed.vectors[:, k]
    else:
        raise InvalidInput(f"unknown convention {convention!r}")
    p = c * c
    return float(np.sum(p * p))


@dataclass(frozen=True)
class EchoAverages:
    """Time-averaged echoes for every state of one parity sector."""

    parity: int
    j: np.ndarray
    energies: np.ndarray
    eps: np.ndarray
    energy_per_site: np.ndarray
    m_bar: np.ndarray
    degenerate: np.ndarray  # weight spread over an (almost) degenerate perturbed subspace


def _degenerate_mask(energies: np.ndarray, overlaps: np.ndarray) -> np.ndarray:
    tol = DEGENERACY_RTOL * max(1.0, np.abs(energies).max())
    close = np.abs(np.diff(energies)) < tol
    pairs = np.zeros(len(energies), dtype=bool)
    pairs[:-1] |= close
    pairs[1:] |= close
    # a state is flagged when it overlaps two or more members of one degenerate cluster
    return ((overlaps != 0) & pairs[:, None]).sum(axis=0) >= 2


def echo_averages(
    params: ModelParams,
    delta: float,
    parity=EVEN,
    convention: str = "exact",
    delta_alpha: float = 0.0,
) -> EchoAverages:
    if convention not in ("exact", "swapped"):
        raise InvalidInput(f"unknown convention {convention!r}")
    parity = parse_parity(parity)
    probe = EchoSpec(params, delta, (parity, 0), delta_alpha)
    unpert = diagonalize(params)
    pert = diagonalize(probe.perturbed)
    cols_u = unpert.sector(parity)
    cols_p = pert.sector(parity)
    overlaps = pert.vectors[:, cols_p].T @ unpert.vectors[:, cols_u]  # [k, j]
    p = overlaps * overlaps
    axis = 0 if convention == "exact" else 1
    m_bar = np.sum(p * p, axis=axis)
    degenerate = _degenerate_mask(pert.energies[cols_p], overlaps)
    return EchoAverages(
        parity,
        np.arange(len(cols_u)),
        unpert.energies[cols_u],
        unpert.eps[cols_u],
        unpert.energy_per_site[cols_u],
        m_bar,
        degenerate,
    )


def numeric_time_average(series: TimeSeries) -> float:
    """Plain mean of a uniformly sampled series."""
    return float(np.mean(series.values))
