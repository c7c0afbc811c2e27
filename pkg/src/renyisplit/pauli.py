"""Pauli strings over edge spins and the perturbed toric-code Hamiltonians.

A string with masks ``(x, z)`` and coefficient ``c`` stands for
``c * X^x Z^z``: on a z-basis configuration ``b`` (bit set = spin down) the
Z factors act first, giving ``c * (-1)^popcount(z & b)``, then the X factors
flip the bits in ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Literal

import numpy as np

from .lattice import LatticeGeometry, LoopSpec, edges_to_mask, mask_to_edges

__all__ = [
    "PauliString",
    "OperatorSum",
    "PerturbationSpec",
    "InvalidSpec",
    "DimensionMismatch",
    "apply",
    "matvec",
    "build_model",
    "toric_code",
    "star_operator",
    "plaquette_operator",
    "loop_operator",
    "single_site",
    "parity_array",
]

DROP_TOL = 1e-15
# cached diagonals are kept only while they fit in this many float64 entries
CACHE_ENTRIES = 48 * 2**20


class InvalidSpec(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class PauliString:
    xmask: int
    zmask: int
    coeff: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.coeff):
            raise InvalidSpec("Pauli coefficient must be finite")

    def __matmul__(self, other: "PauliString") -> "PauliString":
        # Z^z1 X^x2 = (-1)^{|z1 & x2|} X^x2 Z^z1
        sign = -1.0 if (self.zmask & other.xmask).bit_count() & 1 else 1.0
        return PauliString(
            self.xmask ^ other.xmask,
            self.zmask ^ other.zmask,
            sign * self.coeff * other.coeff,
        )

    def scaled(self, c: float) -> "PauliString":
        return PauliString(self.xmask, self.zmask, self.coeff * c)

    def commutes_with(self, other: "PauliString") -> bool:
        n = (self.xmask & other.zmask).bit_count() + (self.zmask & other.xmask).bit_count()
        return n % 2 == 0


def apply(P: PauliString, b: int) -> tuple[int, float]:
    sign = -1.0 if (P.zmask & b).bit_count() & 1 else 1.0
    return b ^ P.xmask, P.coeff * sign


def parity_array(idx: np.ndarray, mask: int) -> np.ndarray:
    """+1/-1 array of ``(-1)^popcount(idx & mask)``."""
    bits = np.bitwise_count(idx & np.uint64(mask)) & 1
    return 1.0 - 2.0 * bits


@dataclass
class OperatorSum:
    """Real linear combination of Pauli strings on ``n_sites`` spins."""

    n_sites: int
    terms: dict = field(default_factory=dict)
    _cache: dict | None = field(default=None, init=False, repr=False, compare=False)

    @classmethod
    def from_strings(cls, n_sites: int, strings) -> "OperatorSum":
        op = cls(n_sites)
        for s in strings:
            op._add_string(s)
        op._prune()
        return op

    @classmethod
    def identity(cls, n_sites: int, coeff: float = 1.0) -> "OperatorSum":
        return cls.from_strings(n_sites, [PauliString(0, 0, coeff)])

    def _add_string(self, s: PauliString) -> None:
        key = (s.xmask, s.zmask)
        self.terms[key] = self.terms.get(key, 0.0) + s.coeff

    def _prune(self) -> None:
        self.terms = {k: c for k, c in self.terms.items() if abs(c) >= DROP_TOL}

    def strings(self) -> list[PauliString]:
        return [PauliString(x, z, c) for (x, z), c in self.terms.items()]

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        if other.n_sites != self.n_sites:
            raise DimensionMismatch("operators act on different numbers of sites")
        return OperatorSum.from_strings(self.n_sites, self.strings() + other.strings())

    def __mul__(self, c: float) -> "OperatorSum":
        return OperatorSum.from_strings(self.n_sites, [s.scaled(c) for s in self.strings()])

    __rmul__ = __mul__

    def __matmul__(self, other: "OperatorSum") -> "OperatorSum":
        return OperatorSum.from_strings(
            self.n_sites, [a @ b for a in self.strings() for b in other.strings()]
        )

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def _groups(self):
        groups: dict[int, list[tuple[int, float]]] = {}
        for (x, z), c in self.terms.items():
            groups.setdefault(x, []).append((z, c))
        return groups

    def _diagonals(self, idx):
        """Per-xmask diagonal factors, cached when they fit in memory."""
        if self._cache is not None:
            return self._cache
        groups = self._groups()
        diags = {}
        for x, zs in groups.items():
            d = np.zeros(idx.shape[0])
            for z, c in zs:
                d += c * parity_array(idx, z) if z else c
            diags[x] = d
        if len(groups) * self.dim <= CACHE_ENTRIES:
            self._cache = diags
        return diags

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Apply the operator to a vector or to the columns of a block."""
        if v.shape[0] != self.dim:
            raise DimensionMismatch(f"vector length {v.shape[0]} != 2^{self.n_sites}")
        idx = np.arange(self.dim, dtype=np.uint64)
        out = np.zeros(v.shape, dtype=np.result_type(v.dtype, np.float64))
        diags = self._diagonals(idx)
        for x, d in diags.items():
            w = d * v if v.ndim == 1 else d[:, None] * v
            if x:
                out += w[idx ^ np.uint64(x)]
            else:
                out += w
        return out

    def to_dense(self) -> np.ndarray:
        if self.n_sites > 14:
            raise DimensionMismatch("dense realization is limited to 14 sites")
        return self.matvec(np.eye(self.dim))

    def commutes_with(self, other: "OperatorSum", tol: float = 1e-12) -> bool:
        comm = (self @ other) + (other @ self) * -1.0
        return all(abs(c) <= tol for c in comm.terms.values())


def matvec(O: OperatorSum, v: np.ndarray) -> np.ndarray:
    return O.matvec(v)


def single_site(n_sites: int, kind: Literal["x", "z"], i: int, coeff: float = 1.0) -> PauliString:
    m = 1 << i
    return PauliString(m, 0, coeff) if kind == "x" else PauliString(0, m, coeff)


def star_operator(geom: LatticeGeometry, s: int, coeff: float = 1.0) -> OperatorSum:
    return OperatorSum.from_strings(geom.n_edges, [PauliString(geom.stars[s], 0, coeff)])


def plaquette_operator(geom: LatticeGeometry, p: int, coeff: float = 1.0) -> OperatorSum:
    return OperatorSum.from_strings(geom.n_edges, [PauliString(0, geom.plaquettes[p], coeff)])


def loop_operator(geom: LatticeGeometry, loop: LoopSpec) -> OperatorSum:
    m = loop.mask
    s = PauliString(m, 0) if loop.kind == "x" else PauliString(0, m)
    return OperatorSum.from_strings(geom.n_edges, [s])


def toric_code(geom: LatticeGeometry) -> list[PauliString]:
    return [PauliString(m, 0, -1.0) for m in geom.stars] + [
        PauliString(0, m, -1.0) for m in geom.plaquettes
    ]


@dataclass(frozen=True)
class PerturbationSpec:
    """One row of the perturbation table.

    ``variant`` is one of ``"None"``, ``"CCExp"`` (param ``lam``),
    ``"HorizontalZ"`` (``lam_h``), ``"UniformZ"`` (``lam_z``) and
    ``"UniformXZ"`` (``lam_x``, ``lam_z``).
    """

    variant: str = "None"
    lam: float = 0.0
    lam_h: float = 0.0
    lam_z: float = 0.0
    lam_x: float = 0.0

    VARIANTS = ("None", "CCExp", "HorizontalZ", "UniformZ", "UniformXZ")

    def __post_init__(self):
        if self.variant not in self.VARIANTS:
            raise InvalidSpec(f"unknown perturbation {self.variant!r}")
        for name in ("lam", "lam_h", "lam_z", "lam_x"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidSpec(f"{name} must be finite")
        if self.variant == "CCExp" and self.lam < 0:
            raise InvalidSpec("CCExp needs lam >= 0")

    @property
    def gauge_invariant(self) -> bool:
        return self.variant != "UniformXZ"

    def params(self) -> dict:
        keys = {
            "None": (),
            "CCExp": ("lam",),
            "HorizontalZ": ("lam_h",),
            "UniformZ": ("lam_z",),
            "UniformXZ": ("lam_x", "lam_z"),
        }[self.variant]
        return {k: getattr(self, k) for k in keys}


def _cc_star_strings(mask: int, lam: float) -> list[PauliString]:
    # prod_{i in s} (cosh lam - sinh lam sigma^z_i), expanded term by term
    ch, sh = math.cosh(lam), math.sinh(lam)
    edges = mask_to_edges(mask)
    out = []
    for k in range(len(edges) + 1):
        c = ch ** (len(edges) - k) * (-sh) ** k
        for sub in combinations(edges, k):
            out.append(PauliString(0, edges_to_mask(sub), c))
    return out


def perturbation_strings(geom: LatticeGeometry, spec: PerturbationSpec) -> list[PauliString]:
    n = geom.n_edges
    if spec.variant == "None":
        return []
    if spec.variant == "CCExp":
        return [s for m in geom.stars for s in _cc_star_strings(m, spec.lam)]
    if spec.variant == "HorizontalZ":
        return [single_site(n, "z", i, spec.lam_h) for i in mask_to_edges(geom.horizontal_mask())]
    if spec.variant == "UniformZ":
        return [single_site(n, "z", i, spec.lam_z) for i in range(n)]
    return [single_site(n, "z", i, spec.lam_z) for i in range(n)] + [
        single_site(n, "x", i, spec.lam_x) for i in range(n)
    ]


def build_model(geom: LatticeGeometry, spec: PerturbationSpec | None = None) -> OperatorSum:
    """``-sum_s A_s - sum_p B_p + V`` with ``V`` taken from ``spec``."""
    spec = spec or PerturbationSpec()
    return OperatorSum.from_strings(geom.n_edges, toric_code(geom) + perturbation_strings(geom, spec))
