"""Collective-spin basis, parity blocks and operator matrices for the ALMG Hamiltonian.

The Hamiltonian acts in the maximal irrep S = N/2,

    H = (1 - xi) (S + Sz) + (2 xi / S) (S^2 - Sx^2) + (alpha / 2S) (S + Sz)(S + Sz + 1),

written in the u(1) basis |S, Mz>, Mz = -S..S. Full-space arrays are indexed by
n = S + Mz (ascending Mz). Parity (-1)^(S + Mz) = (-1)^n is conserved and the only
off-diagonal couplings are Mz -> Mz +/- 2, so each parity sector, ordered by
ascending n in steps of 2, is an exactly tridiagonal block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from almg.errors import InvalidInput

EVEN = +1
ODD = -1


def parse_parity(parity) -> int:
    """Accept +1/-1 or 'even'/'odd' and return +1/-1."""
    if isinstance(parity, str):
        key = parity.strip().lower()
        if key in ("even", "+", "+1"):
            return EVEN
        if key in ("odd", "-", "-1"):
            return ODD
    elif parity in (EVEN, ODD):
        return int(parity)
    raise InvalidInput(f"parity must be 'even'/'odd' or +1/-1, got {parity!r}")


def parity_name(parity: int) -> str:
    return "even" if parity == EVEN else "odd"


@dataclass(frozen=True)
class ModelParams:
    N: int
    xi: float
    alpha: float = 0.0

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N:
            raise InvalidInput(f"N must be an integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if self.N < 2 or self.N % 2:
            raise InvalidInput(f"N must be even and >= 2, got {self.N}")
        xi = float(self.xi)
        if not (0.0 <= xi <= 1.0):
            raise InvalidInput(f"xi must lie in [0, 1], got {self.xi!r}")
        alpha = float(self.alpha)
        if not math.isfinite(alpha):
            raise InvalidInput(f"alpha must be finite, got {self.alpha!r}")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "alpha", alpha)

    @property
    def S(self) -> float:
        return self.N / 2

    @property
    def dim(self) -> int:
        return self.N + 1

    def with_xi(self, xi: float) -> "ModelParams":
        return ModelParams(self.N, xi, self.alpha)


def _check_N(N) -> int:
    if isinstance(N, bool) or int(N) != N or N < 2 or N % 2:
        raise InvalidInput(f"N must be an even integer >= 2, got {N!r}")
    return int(N)


def mz_values(N: int) -> np.ndarray:
    """Full u(1) basis labels Mz = -N/2 .. N/2 (float, exact for half-integers)."""
    N = _check_N(N)
    return np.arange(N + 1) - N / 2


def sector_indices(N: int, parity) -> np.ndarray:
    """Full-space positions n = S + Mz belonging to a parity sector, ascending."""
    N = _check_N(N)
    start = 0 if parse_parity(parity) == EVEN else 1
    return np.arange(start, N + 1, 2)


def parity_of_state(mz: int, N: int) -> int:
    """(-1)^(N/2 + mz) for a basis state |S, mz>."""
    N = _check_N(N)
    if int(mz) != mz or abs(mz) > N // 2:
        raise InvalidInput(f"mz={mz!r} outside [-{N // 2}, {N // 2}]")
    return EVEN if (N // 2 + int(mz)) % 2 == 0 else ODD


def parity_diagonal(N: int) -> np.ndarray:
    """Diagonal of the parity operator in the full basis."""
    n = np.arange(_check_N(N) + 1)
    return np.where(n % 2 == 0, 1.0, -1.0)


@dataclass(frozen=True)
class ParityBlock:
    """One parity sector of H as a real symmetric tridiagonal matrix."""

    parity: int
    positions: np.ndarray  # full-space indices n of the sector basis
    diag: np.ndarray
    offdiag: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.diag)

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def _ladder_up(S: float, m: np.ndarray) -> np.ndarray:
    """<m+1|S+|m> = sqrt(S(S+1) - m(m+1)), clipped at the top of the multiplet."""
    return np.sqrt(np.clip(S * (S + 1) - m * (m + 1), 0.0, None))


def build_block_hamiltonian(params: ModelParams, parity) -> ParityBlock:
    parity = parse_parity(parity)
    N, S, xi, alpha = params.N, params.S, params.xi, params.alpha
    n = sector_indices(N, parity)
    if n.size == 0:
        raise RuntimeError(f"empty {parity_name(parity)} sector for N={N}")
    m = n - S
    # S+S- + S-S+ = N(N/2 + 1) - 2 Mz^2 on the diagonal
    sx2_diag = 0.25 * (N * (N / 2 + 1) - 2 * m * m)
    diag = (1 - xi) * n + (2 * xi / S) * (S * S - sx2_diag) + alpha / (2 * S) * n * (n + 1)
    lower = m[:-1]
    sp2 = _ladder_up(S, lower) * _ladder_up(S, lower + 1)
    offdiag = -(2 * xi / S) * 0.25 * sp2
    return ParityBlock(parity, n, diag.astype(float), offdiag.astype(float))


def dense_hamiltonian(params: ModelParams) -> np.ndarray:
    """Full (N+1)x(N+1) Hamiltonian assembled from the two parity blocks."""
    H = np.zeros((params.dim, params.dim))
    for parity in (EVEN, ODD):
        block = build_block_hamiltonian(params, parity)
        H[np.ix_(block.positions, block.positions)] = block.dense()
    return H


class SpinOperator(str, Enum):
    Sz = "sz"
    Sp = "sp"
    Sm = "sm"
    Sx = "sx"
    Sy = "sy"
    Sx2 = "sx2"
    Nop = "n"
    NopSq = "nsq"

    @classmethod
    def parse(cls, name) -> "SpinOperator":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {"s+": "sp", "splus": "sp", "s-": "sm", "sminus": "sm", "nop": "n", "nopsq": "nsq"}
        key = aliases.get(key, key)
        for member in cls:
            if member.value == key:
                return member
        raise InvalidInput(f"unknown spin operator {name!r}; choose from {[m.value for m in cls]}")

    @property
    def parity_odd(self) -> bool:
        return self in (SpinOperator.Sp, SpinOperator.Sm, SpinOperator.Sx, SpinOperator.Sy)


class OperatorMatrix(NamedTuple):
    """A full-space operator stored as ``1j * real`` when ``imaginary`` is set, else ``real``."""

    real: np.ndarray
    imaginary: bool = False

    def dense(self) -> np.ndarray:
        return 1j * self.real if self.imaginary else self.real


def build_full_operator(kind, N: int, normalized: bool = False) -> OperatorMatrix:
    """Matrix of a collective spin operator in the full ascending-Mz basis.

    Sy = i (S- - S+) / 2 is returned as its real antisymmetric part with the
    ``imaginary`` flag set; every other kind is purely real.
    """
    kind = SpinOperator.parse(kind)
    N = _check_N(N)
    S = N / 2
    m = mz_values(N)
    dim = N + 1

    sp = np.zeros((dim, dim))
    k = np.arange(dim - 1)
    sp[k + 1, k] = _ladder_up(S, m[:-1])
    imaginary = False

    if kind is SpinOperator.Sz:
        mat = np.diag(m)
    elif kind is SpinOperator.Sp:
        mat = sp
    elif kind is SpinOperator.Sm:
        mat = sp.T.copy()
    elif kind is SpinOperator.Sx:
        mat = 0.5 * (sp + sp.T)
    elif kind is SpinOperator.Sy:
        mat = 0.5 * (sp.T - sp)
        imaginary = True
    elif kind is SpinOperator.Sx2:
        # built from the closed-form elements rather than by squaring Sx
        mat = np.diag(0.25 * (N * (N / 2 + 1) - 2 * m * m))
        lower = m[:-2]
        sp2 = _ladder_up(S, lower) * _ladder_up(S, lower + 1)
        j = np.arange(dim - 2)
        mat[j + 2, j] = 0.25 * sp2
        mat[j, j + 2] = 0.25 * sp2
    elif kind is SpinOperator.Nop:
        mat = np.diag(S + m)
    else:  # NopSq
        mat = np.diag((S + m) * (S + m + 1))

    if normalized:
        mat = mat / S
    return OperatorMatrix(mat, imaginary)


def xi_derivative_operator(N: int) -> np.ndarray:
    """dH/dxi = (2/S)(S^2 - Sx^2) - (S + Sz), independent of xi and alpha."""
    S = N / 2
    sx2 = build_full_operator(SpinOperator.Sx2, N).real
    nop = build_full_operator(SpinOperator.Nop, N).real
    return (2 / S) * (S * S * np.eye(N + 1) - sx2) - nop
