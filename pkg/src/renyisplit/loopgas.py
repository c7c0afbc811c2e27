"""Exact loop-gas ground states of the star-deformed toric code.

With the star perturbation ``exp(-lam * sum_{i in s} sigma^z_i)`` the model

    H = sum_s (exp(-lam sum_{i in s} sigma^z_i) - A_s) - sum_p B_p

is frustration free (each bracket is a positive 2x2 block on the pair
``|g>, A_s|g>``).  Its ground state in the trivial winding sector is the
loop gas

    |psi> = Z^{-1/2} sum_{g in G} exp(-lam * L_g) |g>,

so configuration probabilities carry ``exp(-2 lam L_g)``.  The factor 2 is
the ``weight`` of :class:`CCModel`; every closed-form quantity below uses
``mu = weight * lam`` in ``Z = sum_g exp(-mu L_g)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entanglement import EntanglementSpectrum
from .lattice import LatticeGeometry, Region, horizontal_loops, wilson_loops
from .pauli import OperatorSum, PauliString, PerturbationSpec, build_model

__all__ = [
    "GaugeGroup",
    "RegionSubgroups",
    "CCModel",
    "GroupTooLarge",
    "LAMBDA_C",
    "enumerate_group",
    "loop_length",
    "partition_Z",
    "region_subgroups",
    "coset_weights",
    "exact_spectrum",
    "renyi_exact",
    "cc_state_vector",
    "cc_hamiltonian",
    "cc_hamiltonian_literal",
]

LAMBDA_C = 0.44
MAX_STARS = 21


class GroupTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class GaugeGroup:
    """All products of star supports, as flipped-edge masks."""

    elements: np.ndarray  # uint64 masks
    n_edges: int

    def __len__(self):
        return len(self.elements)

    @property
    def lengths(self) -> np.ndarray:
        return np.bitwise_count(self.elements).astype(np.int64)

    def length_histogram(self) -> dict[int, int]:
        vals, counts = np.unique(self.lengths, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}


@dataclass(frozen=True)
class RegionSubgroups:
    GA: np.ndarray
    GB: np.ndarray


@dataclass(frozen=True)
class CCModel:
    lam: float
    geom: LatticeGeometry
    weight: float = 2.0

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ValueError("lam must be finite and >= 0")

    @property
    def mu(self) -> float:
        return self.weight * self.lam

    @property
    def topological(self) -> bool:
        return self.lam < LAMBDA_C


def _independent(masks) -> list[int]:
    basis: dict[int, int] = {}  # leading bit -> reduced vector
    out = []
    for m in masks:
        r = m
        while r:
            top = r.bit_length() - 1
            if top not in basis:
                basis[top] = r
                out.append(m)
                break
            r ^= basis[top]
    return out


def _span(generators, n_edges: int) -> np.ndarray:
    elems = np.zeros(1 << len(generators), dtype=np.uint64)
    size = 1
    for g in generators:
        elems[size : 2 * size] = elems[:size] ^ np.uint64(g)
        size *= 2
    return elems


def enumerate_group(geom: LatticeGeometry) -> GaugeGroup:
    if geom.n_stars > MAX_STARS:
        raise GroupTooLarge(f"{geom.n_stars} stars exceeds the enumeration cap of {MAX_STARS}")
    gens = _independent(geom.stars)
    return GaugeGroup(_span(gens, geom.n_edges), geom.n_edges)


def loop_length(g: int) -> int:
    return int(g).bit_count()


def partition_Z(G: GaugeGroup, lam: float, weight: float = 2.0) -> float:
    """``sum_g exp(-weight * lam * L_g)``."""
    return float(np.sum(np.exp(-weight * lam * G.lengths)))


def region_subgroups(G: GaugeGroup, A: Region) -> RegionSubgroups:
    a = np.uint64(A.edges)
    b = np.uint64(A.complement)
    el = G.elements
    return RegionSubgroups(el[(el & ~a) == 0], el[(el & ~b) == 0])


def _coset_labels(G: GaugeGroup, sub: RegionSubgroups) -> tuple[np.ndarray, np.ndarray]:
    """Canonical representative of each element's coset modulo ``GA * GB``."""
    H = (sub.GA[:, None] ^ sub.GB[None, :]).ravel()
    reps = np.empty_like(G.elements)
    chunk = max(1, (1 << 22) // len(H))
    for i in range(0, len(G.elements), chunk):
        blk = G.elements[i : i + chunk]
        reps[i : i + chunk] = (blk[:, None] ^ H[None, :]).min(axis=1)
    return reps, H


def coset_weights(G: GaugeGroup, sub: RegionSubgroups, mu: float) -> np.ndarray:
    """``W_c = sum_{g in c} exp(-mu L_g)`` for each coset ``c`` of ``GA * GB``."""
    reps, _ = _coset_labels(G, sub)
    _, inv = np.unique(reps, return_inverse=True)
    return np.bincount(inv, weights=np.exp(-mu * G.lengths))


def exact_spectrum(model: CCModel, A: Region, G: GaugeGroup | None = None) -> EntanglementSpectrum:
    """Entanglement spectrum ``{W_c / Z}`` of the loop gas, one value per coset."""
    G = G or enumerate_group(model.geom)
    W = coset_weights(G, region_subgroups(G, A), model.mu)
    return EntanglementSpectrum(W / W.sum())


def renyi_exact(model: CCModel, A: Region, alpha: float, G: GaugeGroup | None = None) -> float:
    """Closed-form Renyi entropy of the loop gas.

    For ``alpha != 1`` this evaluates

        (1 - alpha)^-1 log( Z^-alpha sum_g e^{-mu L_g} w(g)^(alpha - 1) ),
        w(g) = sum_{h in GA, k in GB} e^{-mu L_{hgk}},

    element by element.  ``alpha = 1`` and ``alpha = inf`` are read off the
    coset spectrum instead.
    """
    if not alpha >= 0:
        raise ValueError("alpha must be >= 0")
    G = G or enumerate_group(model.geom)
    sub = region_subgroups(G, A)
    mu = model.mu
    if alpha == 1 or math.isinf(alpha):
        p = exact_spectrum(model, A, G).probs
        if alpha == 1:
            return float(-np.sum(p * np.log(p)))
        return float(-np.log(p[0]))
    reps, H = _coset_labels(G, sub)
    q = np.exp(-mu * G.lengths)
    # w(g) depends on g only through its coset
    _, inv = np.unique(reps, return_inverse=True)
    w = np.bincount(inv, weights=q)[inv]
    Z = q.sum()
    if alpha == 0:
        total = float(np.sum(q / w))
        return math.log(round(total))
    log_sum = math.log(float(np.sum(q * w ** (alpha - 1)))) - alpha * math.log(Z)
    return max(log_sum / (1.0 - alpha), 0.0)


def _sector_offset(geom: LatticeGeometry, sector: tuple[int, int]) -> int:
    """Configuration flipping the z-loop eigenvalues to ``sector``.

    Sector labels refer to ``(l^z_1, l^z_x)``: the z-loops winding around y
    and around x.
    """
    off = 0
    if sector[0] == -1:
        off ^= horizontal_loops(geom)[1].mask  # crosses l^z_1 once
    if sector[1] == -1:
        off ^= wilson_loops(geom)[1].mask  # crosses the x-winding z-loop once
    return off


def cc_state_vector(
    geom: LatticeGeometry, lam: float, sector: tuple[int, int] = (1, 1), weight: float = 2.0
) -> np.ndarray:
    """Normalized loop gas ``sum_g exp(-(weight/2) lam L_g) |g + offset>``."""
    if geom.n_edges > 24:
        raise GroupTooLarge("state vector too large")
    G = enumerate_group(geom)
    off = np.uint64(_sector_offset(geom, sector)) if geom.boundary == "torus" else np.uint64(0)
    conf = G.elements ^ off
    amp = np.exp(-0.5 * weight * lam * np.bitwise_count(conf).astype(float))
    v = np.zeros(1 << geom.n_edges)
    v[conf.astype(np.int64)] = amp
    return v / np.linalg.norm(v)


def cc_hamiltonian_literal(geom: LatticeGeometry, lam: float) -> OperatorSum:
    """Toric code plus ``sum_s exp(-lam sum_{i in s} sigma^z_i)`` as written."""
    return build_model(geom, PerturbationSpec("CCExp", lam=lam))


def cc_hamiltonian(geom: LatticeGeometry, lam: float) -> OperatorSum:
    """Frustration-free form ``sum_s (exp(-lam Z_s) - A_s) - sum_p B_p``.

    Assembled star by star from its positive blocks; it coincides term for
    term with :func:`cc_hamiltonian_literal`.
    """
    ch, sh = math.cosh(lam), math.sinh(lam)
    strings = []
    for m in geom.stars:
        edges = [i for i in range(geom.n_edges) if m >> i & 1]
        # exp(-lam sum Z) = prod_i (cosh - sinh Z_i), via iterated products
        factor = [PauliString(0, 0, 1.0)]
        for i in edges:
            factor = [f @ PauliString(0, 0, ch) for f in factor] + [
                f @ PauliString(0, 1 << i, -sh) for f in factor
            ]
        strings += factor + [PauliString(m, 0, -1.0)]
    strings += [PauliString(0, m, -1.0) for m in geom.plaquettes]
    return OperatorSum.from_strings(geom.n_edges, strings)
