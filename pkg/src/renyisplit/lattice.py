"""Square-lattice geometry with spin-1/2 degrees of freedom on the edges.

Edges are indexed row-major over cells, the horizontal edge of a cell before
its vertical edge.  On a torus with ``Lx`` x ``Ly`` cells this gives

    h(x, y) -> 2 * (y * Lx + x)
    v(x, y) -> 2 * (y * Lx + x) + 1

where ``h(x, y)`` joins vertex ``(x, y)`` to ``(x + 1, y)`` and ``v(x, y)``
joins ``(x, y)`` to ``(x, y + 1)``.  All edge sets are stored as integer bit
masks so they can be combined with ``^``, ``&`` and ``|`` directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

__all__ = [
    "InvalidGeometry",
    "InvalidRegion",
    "LatticeGeometry",
    "Region",
    "LoopSpec",
    "build_torus",
    "build_cylinder",
    "star_support",
    "plaquette_support",
    "region_star",
    "region_star_plaquette",
    "region_half",
    "region_from_edges",
    "wilson_loops",
    "horizontal_loops",
    "mask_to_edges",
    "edges_to_mask",
]


class InvalidGeometry(ValueError):
    pass


class InvalidRegion(ValueError):
    pass


def edges_to_mask(edges) -> int:
    mask = 0
    for e in edges:
        mask |= 1 << int(e)
    return mask


def mask_to_edges(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


@dataclass(frozen=True)
class LatticeGeometry:
    """Edge lattice of an ``Lx`` x ``Ly`` square lattice.

    ``boundary`` is ``"torus"`` (periodic in both directions) or
    ``"cylinder"`` (periodic in y, open in x with ``Lx + 1`` vertex columns).
    Stars and plaquettes are stored as edge masks; ``stars[s]`` belongs to
    vertex ``(s % nvx, s // nvx)`` and ``plaquettes[p]`` to the cell with
    lower-left corner ``(p % Lx, p // Lx)``.
    """

    Lx: int
    Ly: int
    boundary: Literal["torus", "cylinder"]
    edge_index: dict = field(repr=False, compare=False)
    stars: tuple = field(repr=False, compare=False)
    plaquettes: tuple = field(repr=False, compare=False)

    @property
    def n_edges(self) -> int:
        return len(self.edge_index)

    @property
    def n_stars(self) -> int:
        return len(self.stars)

    @property
    def n_plaquettes(self) -> int:
        return len(self.plaquettes)

    @property
    def full_mask(self) -> int:
        return (1 << self.n_edges) - 1

    @property
    def n_vertex_columns(self) -> int:
        return self.Lx if self.boundary == "torus" else self.Lx + 1

    def h(self, x: int, y: int) -> int:
        """Id of the horizontal edge leaving vertex (x, y) to the right."""
        if self.boundary == "torus":
            x %= self.Lx
        return self.edge_index[("h", x, y % self.Ly)]

    def v(self, x: int, y: int) -> int:
        """Id of the vertical edge leaving vertex (x, y) upward."""
        if self.boundary == "torus":
            x %= self.Lx
        return self.edge_index[("v", x, y % self.Ly)]

    def horizontal_mask(self) -> int:
        return edges_to_mask(i for (kind, _, _), i in self.edge_index.items() if kind == "h")

    def edge_column(self, e: int) -> int:
        for (kind, x, y), i in self.edge_index.items():
            if i == e:
                return x
        raise IndexError(e)

    def star_vertex(self, s: int) -> tuple[int, int]:
        nvx = self.n_vertex_columns
        return s % nvx, s // nvx

    def plaquette_corner(self, p: int) -> tuple[int, int]:
        return p % self.Lx, p // self.Lx

    def translate_edges(self, dx: int, dy: int) -> list[int]:
        """Edge permutation induced by a lattice translation (torus only)."""
        if self.boundary != "torus":
            raise InvalidGeometry("translations are only defined on the torus")
        perm = [0] * self.n_edges
        for (kind, x, y), i in self.edge_index.items():
            perm[i] = self.edge_index[(kind, (x + dx) % self.Lx, (y + dy) % self.Ly)]
        return perm


def _check_dims(Lx: int, Ly: int) -> None:
    if int(Lx) != Lx or int(Ly) != Ly or Lx < 2 or Ly < 2:
        raise InvalidGeometry(f"need integer Lx, Ly >= 2, got ({Lx}, {Ly})")


def build_torus(Lx: int, Ly: int) -> LatticeGeometry:
    _check_dims(Lx, Ly)
    index = {}
    for y in range(Ly):
        for x in range(Lx):
            c = y * Lx + x
            index[("h", x, y)] = 2 * c
            index[("v", x, y)] = 2 * c + 1

    def h(x, y):
        return index[("h", x % Lx, y % Ly)]

    def v(x, y):
        return index[("v", x % Lx, y % Ly)]

    stars = tuple(
        edges_to_mask([h(x, y), h(x - 1, y), v(x, y), v(x, y - 1)])
        for y in range(Ly)
        for x in range(Lx)
    )
    plaquettes = tuple(
        edges_to_mask([h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)])
        for y in range(Ly)
        for x in range(Lx)
    )
    return LatticeGeometry(Lx, Ly, "torus", index, stars, plaquettes)


def build_cylinder(Lx: int, Ly: int) -> LatticeGeometry:
    """Cylinder periodic in y with open, smooth boundaries at both x ends.

    Boundary stars carry 3 edges; every plaquette carries 4.
    """
    _check_dims(Lx, Ly)
    index = {}
    n = 0
    for y in range(Ly):
        for x in range(Lx + 1):
            if x < Lx:
                index[("h", x, y)] = n
                n += 1
            index[("v", x, y)] = n
            n += 1

    def h(x, y):
        return index[("h", x, y % Ly)]

    def v(x, y):
        return index[("v", x, y % Ly)]

    stars = []
    for y in range(Ly):
        for x in range(Lx + 1):
            edges = [v(x, y), v(x, y - 1)]
            if x < Lx:
                edges.append(h(x, y))
            if x > 0:
                edges.append(h(x - 1, y))
            stars.append(edges_to_mask(edges))
    plaquettes = tuple(
        edges_to_mask([h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)])
        for y in range(Ly)
        for x in range(Lx)
    )
    return LatticeGeometry(Lx, Ly, "cylinder", index, tuple(stars), plaquettes)


def star_support(geom: LatticeGeometry, s: int) -> int:
    if not 0 <= s < geom.n_stars:
        raise IndexError(f"star index {s} out of range 0..{geom.n_stars - 1}")
    return geom.stars[s]


def plaquette_support(geom: LatticeGeometry, p: int) -> int:
    if not 0 <= p < geom.n_plaquettes:
        raise IndexError(f"plaquette index {p} out of range 0..{geom.n_plaquettes - 1}")
    return geom.plaquettes[p]


@dataclass(frozen=True)
class Region:
    """Subsystem A as an edge mask; the complement is subsystem B."""

    label: str
    edges: int
    n_edges: int

    def __post_init__(self):
        full = (1 << self.n_edges) - 1
        if self.edges == 0 or self.edges & ~full:
            raise InvalidRegion(f"region {self.label!r} must be a non-empty edge subset")
        if self.edges == full:
            raise InvalidRegion(f"region {self.label!r} covers every edge")

    @property
    def size(self) -> int:
        return self.edges.bit_count()

    @property
    def complement(self) -> int:
        return ((1 << self.n_edges) - 1) & ~self.edges

    def edge_list(self) -> list[int]:
        return mask_to_edges(self.edges)

    def swapped(self) -> "Region":
        return Region(f"{self.label}^c", self.complement, self.n_edges)


def region_from_edges(geom: LatticeGeometry, edges, label: str = "custom") -> Region:
    edges = list(edges)
    if any(not 0 <= e < geom.n_edges for e in edges):
        raise InvalidRegion("edge id out of range")
    return Region(label, edges_to_mask(edges), geom.n_edges)


def region_star(geom: LatticeGeometry, s: int = 0) -> Region:
    return Region(f"A_s[{s}]", star_support(geom, s), geom.n_edges)


def region_star_plaquette(geom: LatticeGeometry, s: int = 0, p: int | None = None) -> Region:
    """Union of a star and a plaquette that has the star's vertex as a corner.

    The two supports always overlap in exactly two edges, so the region has
    six edges.  With ``p=None`` the plaquette to the upper right of the
    vertex is used.
    """
    star = star_support(geom, s)
    if p is None:
        x, y = geom.star_vertex(s)
        if geom.boundary == "cylinder" and x == geom.Lx:
            x -= 1
        p = (y % geom.Ly) * geom.Lx + (x % geom.Lx)
    plaq = plaquette_support(geom, p)
    if not star & plaq:
        raise InvalidRegion(f"star {s} and plaquette {p} are not adjacent")
    return Region(f"A_sp[{s},{p}]", star | plaq, geom.n_edges)


def region_half(geom: LatticeGeometry) -> Region:
    """All edges in the first ``Lx // 2`` columns (straight vertical cut)."""
    ncol = geom.Lx // 2
    mask = edges_to_mask(i for (_, x, _), i in geom.edge_index.items() if x < ncol)
    return Region("C_half", mask, geom.n_edges)


@dataclass(frozen=True)
class LoopSpec:
    """Non-contractible Wilson loop: a product of sigma^z or sigma^x."""

    kind: Literal["z", "x"]
    edges: tuple

    @property
    def mask(self) -> int:
        return edges_to_mask(self.edges)


def wilson_loops(geom: LatticeGeometry, column: int = 0) -> tuple[LoopSpec, LoopSpec]:
    """Loops ``l^z_1`` and ``l^x_2`` winding around the periodic y direction.

    ``l^z_1`` is the product of sigma^z on the vertical edges of a vertex
    column (a primal cycle); ``l^x_2`` the product of sigma^x on the
    horizontal edges crossed by a vertical dual cycle.  The two loops share
    no edge and commute; each commutes with every star and plaquette.
    """
    if not 0 <= column < geom.Lx:
        raise InvalidGeometry(f"loop column {column} out of range")
    lz = LoopSpec("z", tuple(geom.v(column, y) for y in range(geom.Ly)))
    lx = LoopSpec("x", tuple(geom.h(column, y) for y in range(geom.Ly)))
    return lz, lx


def horizontal_loops(geom: LatticeGeometry, row: int = 0) -> tuple[LoopSpec, LoopSpec]:
    """Loops winding around x (torus only): z on a row of horizontal edges,
    x on the vertical edges crossed by a horizontal dual cycle."""
    if geom.boundary != "torus":
        raise InvalidGeometry("x-winding loops need periodic x")
    lz = LoopSpec("z", tuple(geom.h(x, row) for x in range(geom.Lx)))
    lx = LoopSpec("x", tuple(geom.v(x, row) for x in range(geom.Lx)))
    return lz, lx
