"""Block diagonalization, merged spectra and eigenstate selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from almg.errors import InvalidInput, NumericError
from almg.model import (
    EVEN,
    ODD,
    ModelParams,
    build_block_hamiltonian,
    parity_name,
    parse_parity,
    xi_derivative_operator,
)

log = logging.getLogger(__name__)

_SIGN_FLOOR = 1e-12


@dataclass(frozen=True)
class SpectralData:
    """Eigen-decomposition of H(N, xi, alpha) merged over both parity sectors.

    ``vectors[:, k]`` is the eigenvector of ``energies[k]`` in the full u(1) basis;
    entries outside its parity sector are exactly zero.
    """

    params: ModelParams
    energies: np.ndarray
    parities: np.ndarray
    vectors: np.ndarray
    sector_index: np.ndarray  # position of each state inside its own parity sector
    gs_energy: float
    eps: np.ndarray  # (E - E_gs) / N

    @property
    def dim(self) -> int:
        return len(self.energies)

    @property
    def energy_per_site(self) -> np.ndarray:
        """E / N: the scale on which the critical lines eps_c1 = xi, eps_c2 = 1 + alpha sit."""
        return self.energies / self.params.N

    def sector(self, parity) -> np.ndarray:
        """Global indices of one parity sector, ascending in energy."""
        return np.flatnonzero(self.parities == parse_parity(parity))

    def global_index(self, parity, j: int) -> int:
        idx = self.sector(parity)
        if isinstance(j, bool) or int(j) != j or not (0 <= j < len(idx)):
            raise InvalidInput(
                f"{parity_name(parse_parity(parity))} state index {j!r} out of range [0, {len(idx)})"
            )
        return int(idx[int(j)])

    def nearest(self, energy_per_site: float, parity=EVEN) -> int:
        """Sector index of the state whose E/N is closest to the target."""
        idx = self.sector(parity)
        return int(np.argmin(np.abs(self.energy_per_site[idx] - energy_per_site)))


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # first component above a relative floor made positive
    big = np.abs(vecs) > _SIGN_FLOOR * np.abs(vecs).max(axis=0)
    first = np.argmax(big, axis=0)
    signs = np.sign(vecs[first, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def solve_block(params: ModelParams, parity) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenvalues, sign-fixed sector eigenvectors and sector positions of one block."""
    block = build_block_hamiltonian(params, parity)
    try:
        if block.dim == 1:
            w, v = block.diag.copy(), np.ones((1, 1))
        else:
            w, v = eigh_tridiagonal(block.diag, block.offdiag)
    except (LinAlgError, ValueError) as exc:
        raise NumericError(f"eigensolver failed on {parity_name(block.parity)} block of {params}") from exc
    return w, _fix_signs(v), block.positions


def diagonalize(params: ModelParams) -> SpectralData:
    dim = params.dim
    energies, parities, local, columns = [], [], [], []
    for parity in (EVEN, ODD):
        w, v, pos = solve_block(params, parity)
        full = np.zeros((dim, len(w)))
        full[pos, :] = v
        energies.append(w)
        parities.append(np.full(len(w), parity))
        local.append(np.arange(len(w)))
        columns.append(full)

    E = np.concatenate(energies)
    P = np.concatenate(parities)
    J = np.concatenate(local)
    V = np.hstack(columns)
    # even first on exact ties
    order = np.lexsort((P == ODD, E))
    E, P, J, V = E[order], P[order], J[order], V[:, order]
    gs = float(E[0])
    return SpectralData(params, E, P, V, J, gs, (E - gs) / params.N)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateSelector:
    """Which eigenstate to pick: ``ground``, ``highest_even``, ``highest`` or ``index``."""

    mode: str = "ground"
    parity: int = EVEN
    index: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("ground", "highest_even", "highest", "index"):
            raise InvalidInput(f"unknown selector mode {self.mode!r}")
        object.__setattr__(self, "parity", parse_parity(self.parity))
        if self.mode == "index" and self.index is None:
            raise InvalidInput("index selector needs an index")

    @classmethod
    def ground(cls) -> "StateSelector":
        return cls("ground")

    @classmethod
    def highest_even(cls) -> "StateSelector":
        return cls("highest_even")

    @classmethod
    def at(cls, parity, j: int) -> "StateSelector":
        return cls("index", parity, j)

    @classmethod
    def parse(cls, text: str) -> "StateSelector":
        """``ground``, ``highest-even``, ``highest`` or ``even:12`` / ``odd:3``."""
        key = text.strip().lower().replace("-", "_")
        if key in ("ground", "gs"):
            return cls.ground()
        if key in ("highest_even", "highest"):
            return cls(key)
        if ":" in key:
            parity, j = key.split(":", 1)
            try:
                return cls.at(parity, int(j))
            except ValueError as exc:
                raise InvalidInput(f"bad state selector {text!r}") from exc
        raise InvalidInput(f"bad state selector {text!r}")

    def __str__(self) -> str:
        if self.mode == "index":
            return f"{parity_name(self.parity)}:{self.index}"
        return self.mode.replace("_", "-")

    def resolve(self, spec: SpectralData) -> int:
        """Global index of the selected state in ``spec``."""
        if self.mode == "ground":
            return 0
        if self.mode == "highest":
            return spec.dim - 1
        if self.mode == "highest_even":
            return int(spec.sector(EVEN)[-1])
        return spec.global_index(self.parity, self.index)


def select_state(spec: SpectralData, sel: StateSelector) -> Tuple[np.ndarray, float]:
    k = sel.resolve(spec)
    return spec.vectors[:, k], float(spec.energies[k])


def participation_ratio(components, atol: float = 1e-10) -> float:
    """1 / sum |a_m|^4 of a normalized state."""
    a = np.asarray(components)
    p = np.abs(a) ** 2
    norm = p.sum()
    if not np.isfinite(norm) or abs(norm - 1.0) > atol:
        raise InvalidInput(f"state is not normalized (norm^2 = {norm!r})")
    return float(1.0 / np.sum(p * p))


def hf_slope(params: ModelParams, sel: StateSelector, spec: Optional[SpectralData] = None) -> float:
    """d(E/N)/dxi of the selected eigenstate via the Hellmann-Feynman theorem."""
    if spec is None:
        spec = diagonalize(params)
    vec, _ = select_state(spec, sel)
    dH = xi_derivative_operator(params.N)
    return float(vec @ dH @ vec) / params.N


# ---------------------------------------------------------------------------
# on-disk cache: one .npz per (N, xi, alpha), keyed by the exact repr of the floats


def cache_key(params: ModelParams) -> str:
    return f"almg_N{params.N}_xi{params.xi!r}_alpha{params.alpha!r}"


def save_spectrum(spec: SpectralData, directory) -> Path:
    path = Path(directory) / f"{cache_key(spec.params)}.npz"
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(
        path,
        N=spec.params.N,
        xi=repr(spec.params.xi),
        alpha=repr(spec.params.alpha),
        energies=spec.energies,
        parities=spec.parities,
        sector_index=spec.sector_index,
        vectors=spec.vectors,
    )
    return path


def load_spectrum(params: ModelParams, directory) -> Optional[SpectralData]:
    path = Path(directory) / f"{cache_key(params)}.npz"
    if not path.exists():
        return None
    with np.load(path) as data:
        if (
            int(data["N"]) != params.N
            or str(data["xi"]) != repr(params.xi)
            or str(data["alpha"]) != repr(params.alpha)
        ):
            log.warning("cache file %s does not match %s, ignoring", path, params)
            return None
        E = data["energies"]
        gs = float(E[0])
        return SpectralData(
            params, E, data["parities"], data["vectors"], data["sector_index"], gs, (E - gs) / params.N
        )


def cached_diagonalize(params: ModelParams, directory=None) -> SpectralData:
    if directory is None:
        return diagonalize(params)
    spec = load_spectrum(params, directory)
    if spec is None:
        spec = diagonalize(params)
        save_spectrum(spec, directory)
    return spec
