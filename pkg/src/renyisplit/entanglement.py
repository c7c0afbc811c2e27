"""Schmidt spectra and Renyi entropies of edge bipartitions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import InvalidRegion, Region

__all__ = [
    "EntanglementSpectrum",
    "RenyiPoint",
    "schmidt_spectrum",
    "renyi",
    "renyi_value",
    "schmidt_rank",
    "RANK_TOL",
    "SPECTRUM_FLOOR",
]

RANK_TOL = 1e-10
SPECTRUM_FLOOR = 1e-30  # SVD noise in p sits near 1e-32


@dataclass(frozen=True)
class EntanglementSpectrum:
    """Eigenvalues of the reduced density matrix, sorted descending."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.sort(np.asarray(self.probs, dtype=float))[::-1]
        if np.any(p < 0):
            raise ValueError("negative probability in spectrum")
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_values(cls, values) -> "EntanglementSpectrum":
        return cls(np.asarray(values, dtype=float))

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    def __len__(self):
        return len(self.probs)


@dataclass(frozen=True)
class RenyiPoint:
    alpha: float
    value: float


def _bipartition_matrix(v: np.ndarray, region_mask: int, n: int) -> np.ndarray:
    a_bits = [i for i in range(n) if region_mask >> i & 1]
    b_bits = [i for i in range(n) if not region_mask >> i & 1]
    # reshape puts bit n-1 on axis 0
    axes = [n - 1 - i for i in a_bits] + [n - 1 - i for i in b_bits]
    t = v.reshape((2,) * n).transpose(axes)
    return t.reshape(1 << len(a_bits), 1 << len(b_bits))


def schmidt_spectrum(v: np.ndarray, A: Region | int, n_sites: int | None = None) -> EntanglementSpectrum:
    """Squared singular values of ``v`` reshaped across the cut ``A | B``."""
    if isinstance(A, Region):
        mask, n = A.edges, A.n_edges
    else:
        mask = int(A)
        n = n_sites if n_sites is not None else int(v.shape[0]).bit_length() - 1
    if v.shape[0] != 1 << n:
        raise ValueError(f"state length {v.shape[0]} does not match {n} sites")
    full = (1 << n) - 1
    if mask == 0 or mask & full == full:
        raise InvalidRegion("region must cover some but not all sites")
    M = _bipartition_matrix(np.asarray(v, dtype=float), mask, n)
    s = np.linalg.svd(M, compute_uv=False)
    p = s * s
    return EntanglementSpectrum(p[p >= SPECTRUM_FLOOR])


def schmidt_rank(spec: EntanglementSpectrum, tau: float = RANK_TOL) -> int:
    """Number of eigenvalues above ``tau`` times the largest one."""
    if len(spec) == 0:
        return 0
    return int(np.count_nonzero(spec.probs > tau * spec.probs[0]))


def renyi_value(spec: EntanglementSpectrum, alpha: float, tau: float = RANK_TOL, base: float = math.e) -> float:
    if not alpha >= 0:
        raise ValueError(f"Renyi index must be >= 0, got {alpha}")
    p = spec.probs
    if alpha == 0:
        s = math.log(schmidt_rank(spec, tau))
    elif alpha == 1:
        q = p[p > 0]
        s = float(-np.sum(q * np.log(q)))
    elif math.isinf(alpha):
        s = -math.log(p[0])
    else:
        s = math.log(float(np.sum(p**alpha))) / (1.0 - alpha)
    s = max(s, 0.0)
    return s / math.log(base) if base != math.e else s


def renyi(spec: EntanglementSpectrum, alpha: float, tau: float = RANK_TOL, base: float = math.e) -> RenyiPoint:
    return RenyiPoint(float(alpha), renyi_value(spec, alpha, tau, base))
