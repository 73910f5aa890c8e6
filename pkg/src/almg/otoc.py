"""Microcanonical out-of-time-order correlators in the Hamiltonian eigenbasis.

With W(t) = exp(iHt) W exp(-iHt) and an eigenstate |n>, define

    p(t) = W(t) V |n>,    q(t) = V W(t) |n>.

Then F_n(t) = Re <q|p>, A_n(t) = |p|^2 + |q|^2 and C_n(t) = |p - q|^2 = A - 2F.
In the eigenbasis W(t)_ab = exp(i(E_a - E_b)t) W_ab, so each time point costs two
matrix-vector products once W and V have been transformed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from almg.errors import InvalidInput
from almg.model import EVEN, ModelParams, SpinOperator, build_full_operator, parse_parity
from almg.quench import _as_times
from almg.spectra import SpectralData, diagonalize

OperatorLike = Union[str, SpinOperator, np.ndarray]

ZERO_FREQUENCY_RTOL = 1e-9
_CHUNK = 2048


def operator_matrix(op: OperatorLike, N: int, normalized: bool = True) -> np.ndarray:
    """Dense full-space matrix for a spin-operator name or an explicit array.

    Explicit arrays are used as given (no normalization).
    """
    if isinstance(op, np.ndarray):
        if op.shape != (N + 1, N + 1):
            raise InvalidInput(f"operator has shape {op.shape}, expected {(N + 1, N + 1)}")
        return op
    return build_full_operator(op, N, normalized).dense()


@dataclass(frozen=True)
class OtocRequest:
    params: ModelParams
    state: Tuple[int, int] = (EVEN, 0)
    W: OperatorLike = "sp"
    V: OperatorLike = "sm"
    times: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 50.0, 2000))
    normalized: bool = True

    def __post_init__(self):
        parity, j = self.state
        object.__setattr__(self, "state", (parse_parity(parity), int(j)))
        for op in (self.W, self.V):
            if not isinstance(op, np.ndarray):
                SpinOperator.parse(op)


@dataclass
class OtocSeries:
    times: np.ndarray
    f_values: np.ndarray
    c_values: Optional[np.ndarray] = None
    a_values: Optional[np.ndarray] = None
    steady: Optional[float] = None


class EigenbasisPair:
    """W and V transformed once into the eigenbasis of a SpectralData."""

    def __init__(self, spec: SpectralData, W: OperatorLike, V: OperatorLike, normalized: bool = True):
        N = spec.params.N
        U = spec.vectors
        self.spec = spec
        self.energies = spec.energies
        self.W = U.T @ operator_matrix(W, N, normalized) @ U
        self.V = U.T @ operator_matrix(V, N, normalized) @ U
        self._pairs = None

    def vectors(self, n: int, times: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """p(t) and q(t) for eigenstate n as (T, D) arrays."""
        E = self.energies
        ph = np.exp(1j * np.outer(times, E))  # (T, D)
        ph_n = ph[:, n : n + 1]
        # W(t)|n>
        wn = ph * np.conj(ph_n) * self.W[:, n][None, :]
        q = wn @ self.V.T
        # W(t) V|n>
        y = np.conj(ph) * self.V[:, n][None, :]
        p = ph * (y @ self.W.T)
        return p, q

    def series(self, n: int, times, with_commutator: bool = False):
        t = _as_times(times)
        F = np.empty(t.size)
        A = np.empty(t.size) if with_commutator else None
        C = np.empty(t.size) if with_commutator else None
        for s in range(0, t.size, _CHUNK):
            p, q = self.vectors(n, t[s : s + _CHUNK])
            F[s : s + _CHUNK] = np.real(np.sum(np.conj(q) * p, axis=1))
            if with_commutator:
                A[s : s + _CHUNK] = np.sum(np.abs(p) ** 2 + np.abs(q) ** 2, axis=1)
                C[s : s + _CHUNK] = np.sum(np.abs(p - q) ** 2, axis=1)
        return t, F, A, C

    def _pair_table(self):
        if self._pairs is None:
            E = self.energies
            diff = (E[:, None] - E[None, :]).ravel()  # E_b - E_c, flat index b*D + c
            order = np.argsort(diff, kind="stable")
            self._pairs = (diff[order], order)
        return self._pairs

    def zero_frequency(self, n: int, rtol: float = ZERO_FREQUENCY_RTOL) -> float:
        """Infinite-time average of F_n: keep terms with E_b - E_c - E_a + E_n ~ 0."""
        E = self.energies
        D = len(E)
        tol = rtol * max(np.abs(E).max(), 1.0)
        sorted_diff, order = self._pair_table()
        wn = self.W[:, n]
        vn = self.V[:, n]
        total = 0.0 + 0.0j
        targets = E - E[n]
        active = np.flatnonzero(wn != 0)
        lo = np.searchsorted(sorted_diff, targets[active] - tol, side="left")
        hi = np.searchsorted(sorted_diff, targets[active] + tol, side="right")
        for a, i0, i1 in zip(active, lo, hi):
            if i1 <= i0:
                continue
            b, c = np.divmod(order[i0:i1], D)
            # conj(V_ba W_an) W_bc V_cn
            total += np.sum(np.conj(self.V[b, a] * wn[a]) * self.W[b, c] * vn[c])
        return float(np.real(total))


def _pair_for(req: OtocRequest, spec: Optional[SpectralData]) -> EigenbasisPair:
    spec = spec if spec is not None else diagonalize(req.params)
    return EigenbasisPair(spec, req.W, req.V, req.normalized)


def microcanonical_otoc(
    req: OtocRequest, spec: Optional[SpectralData] = None, pair: Optional[EigenbasisPair] = None
) -> OtocSeries:
    """F_n(t) = Re <n| W(t)^dag V^dag W(t) V |n> on the request's time grid."""
    pair = pair if pair is not None else _pair_for(req, spec)
    n = pair.spec.global_index(*req.state)
    t, F, _, _ = pair.series(n, req.times)
    return OtocSeries(t, F)


def squared_commutator(
    req: OtocRequest, spec: Optional[SpectralData] = None, pair: Optional[EigenbasisPair] = None
) -> OtocSeries:
    """C_n(t) = <n|[W(t), V]^dag [W(t), V]|n> together with A_n(t) and F_n(t)."""
    pair = pair if pair is not None else _pair_for(req, spec)
    n = pair.spec.global_index(*req.state)
    t, F, A, C = pair.series(n, req.times, with_commutator=True)
    return OtocSeries(t, F, C, A)


def steady_state_otoc(
    req: OtocRequest,
    horizon: float = 1e4,
    samples: int = 100_000,
    method: str = "numeric",
    spec: Optional[SpectralData] = None,
    pair: Optional[EigenbasisPair] = None,
) -> float:
    """Long-time average of F_n(t).

    ``numeric`` averages F on the uniform grid t_k = k T / samples, k < samples.
    ``analytic`` sums the zero-frequency terms of the eigenbasis expansion.
    """
    if method == "numeric":
        if not horizon > 0:
            raise InvalidInput(f"horizon must be positive, got {horizon!r}")
        if samples < 1000:
            raise InvalidInput(f"need at least 1000 samples, got {samples}")
    elif method != "analytic":
        raise InvalidInput(f"unknown steady-state method {method!r}")
    pair = pair if pair is not None else _pair_for(req, spec)
    n = pair.spec.global_index(*req.state)
    if method == "analytic":
        return pair.zero_frequency(n)
    t = np.arange(int(samples)) * (horizon / samples)
    _, F, _, _ = pair.series(n, t)
    return float(F.mean())


@dataclass(frozen=True)
class SteadyProfile:
    parity: int
    j: np.ndarray
    energies: np.ndarray
    eps: np.ndarray
    energy_per_site: np.ndarray
    f_bar: np.ndarray


def steady_state_profile(
    params: ModelParams,
    W: OperatorLike = "sp",
    V: OperatorLike = "sm",
    parity=EVEN,
    normalized: bool = True,
    spec: Optional[SpectralData] = None,
) -> SteadyProfile:
    """Analytic steady-state OTOC for every state of one parity sector."""
    parity = parse_parity(parity)
    spec = spec if spec is not None else diagonalize(params)
    pair = EigenbasisPair(spec, W, V, normalized)
    idx = spec.sector(parity)
    f_bar = np.array([pair.zero_frequency(int(k)) for k in idx])
    return SteadyProfile(
        parity, np.arange(len(idx)), spec.energies[idx], spec.eps[idx], spec.energy_per_site[idx], f_bar
    )
