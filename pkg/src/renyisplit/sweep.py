"""Parameter sweeps, finite-difference slopes and the alpha-splitting verdict."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ed import (
    ConvergenceFailure,
    GroundSpace,
    connected_correlator,
    expectation,
    ground_space,
    select_sector,
)
from .entanglement import RANK_TOL, renyi_value, schmidt_rank, schmidt_spectrum
from .lattice import LatticeGeometry, Region, horizontal_loops, wilson_loops
from .pauli import PauliString, PerturbationSpec, build_model

__all__ = [
    "DEFAULT_ALPHAS",
    "DEFAULT_DIRECTIONS",
    "ParameterPath",
    "SolverConfig",
    "SweepGrid",
    "SweepResult",
    "DerivativeTable",
    "SplittingReport",
    "run_sweep",
    "solve_point",
    "derivatives",
    "detect_splitting",
    "estimate_xi",
]

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 20.0)
DEFAULT_EPS = 1e-7

DEFAULT_DIRECTIONS = {
    "None": {},
    "CCExp": {"lam": 1.0},
    "HorizontalZ": {"lam_h": 1.0},
    "UniformZ": {"lam_z": 1.0},
    "UniformXZ": {"lam_x": 1.0, "lam_z": 0.5},
}


@dataclass(frozen=True)
class ParameterPath:
    """Straight ray ``lam -> lam * direction`` through a perturbation family."""

    family: str
    direction: dict | None = None

    def __post_init__(self):
        if self.family not in DEFAULT_DIRECTIONS:
            raise ValueError(f"unknown family {self.family!r}")
        if self.direction is None:
            object.__setattr__(self, "direction", dict(DEFAULT_DIRECTIONS[self.family]))

    def spec(self, lam: float) -> PerturbationSpec:
        return PerturbationSpec(self.family, **{k: lam * v for k, v in self.direction.items()})

    @property
    def gauge_invariant(self) -> bool:
        return self.family != "UniformXZ"


@dataclass
class SolverConfig:
    tol: float = 1e-10
    seed: int = 0
    max_iter: int = 500
    k: int | None = None
    # levels within this energy window of E0 form the quasi-degenerate manifold
    sector_window: float = 0.5
    # "zx": (l^z_1, l^x_2); "zz": (l^z_1, x-winding z loop); "auto" picks by family
    sector_loops: str = "auto"
    target: tuple = (1.0, 1.0)
    workers: int = 1
    rank_tol: float = RANK_TOL


@dataclass
class SweepGrid:
    lams: np.ndarray
    alphas: tuple
    region: Region

    def __post_init__(self):
        self.lams = np.asarray(self.lams, dtype=float)
        a = np.asarray(self.alphas, dtype=float)
        if np.any(a < 0) or len(set(a.tolist())) != len(a):
            raise ValueError("alpha values must be distinct and >= 0")
        self.alphas = tuple(sorted(a.tolist()))


@dataclass
class SweepResult:
    lams: np.ndarray
    alphas: tuple
    S: np.ndarray  # [lambda, alpha], nats
    ranks: np.ndarray
    energies: np.ndarray
    lz1: np.ndarray
    lx2: np.ndarray
    xi: np.ndarray  # approximate, from connected correlators
    params: list = field(default_factory=list)
    failed: np.ndarray | None = None
    seed: int | None = None
    label: str = ""
    residuals: dict = field(default_factory=dict)  # lambda index -> residuals of failed solves

    def column(self, alpha: float) -> np.ndarray:
        return self.S[:, self.alphas.index(alpha)]


@dataclass
class DerivativeTable:
    lams: np.ndarray
    alphas: tuple
    D: np.ndarray  # [lambda, alpha], nats per unit lambda
    uniform: bool


@dataclass
class SplittingReport:
    split: bool
    split_steps: list
    alpha0_intervals: list  # per step: list of (lo, hi) crossings
    non_monotone: list
    signs: np.ndarray  # [lambda, alpha] in {-1, 0, 1}
    dlc_increasing: list
    dlc_decreasing: list
    eps: float

    @property
    def alpha0_interval(self):
        """Crossing interval at the first split step, or None."""
        for iv in self.alpha0_intervals:
            if iv:
                return iv[0]
        return None

    @property
    def dlc(self) -> str:
        """Verdict toward larger lambda over the whole path."""
        return "convertible" if all(self.dlc_increasing) else "not-convertible"

    @property
    def dlc_toward_smaller(self) -> str:
        return "convertible" if all(self.dlc_decreasing) else "not-convertible"


def _default_loops(geom: LatticeGeometry, path: ParameterPath, cfg: SolverConfig):
    kind = cfg.sector_loops
    if kind == "auto":
        kind = "zz" if path.gauge_invariant and geom.boundary == "torus" else "zx"
    lz, lx = wilson_loops(geom)
    if kind == "zx":
        return (lz, lx)
    return (lz, horizontal_loops(geom)[0])


def estimate_xi(psi: np.ndarray, geom: LatticeGeometry, kind: str = "z") -> float:
    """Rough correlation length from connected two-point functions along x.

    Uses horizontal edges of row 0 for ``kind="z"`` and vertical edges for
    ``kind="x"``; fits ``log|C(r)|`` against ``r`` for ``r = 1..Lx//2``.
    With a single separation the amplitude is taken as 1.
    """
    n = geom.n_edges
    edge = geom.h if kind == "z" else geom.v
    rs = list(range(1, geom.Lx // 2 + 1))
    vals = []
    for r in rs:
        P = PauliString(0, 1 << edge(0, 0)) if kind == "z" else PauliString(1 << edge(0, 0), 0)
        Q = PauliString(0, 1 << edge(r, 0)) if kind == "z" else PauliString(1 << edge(r, 0), 0)
        vals.append(abs(connected_correlator(psi, P, Q)))
    vals = np.array(vals)
    if np.all(vals < 1e-14):
        return 0.0
    logs = np.log(np.maximum(vals, 1e-300))
    if len(rs) == 1:
        return float(-1.0 / logs[0]) if logs[0] < 0 else math.inf
    slope = np.polyfit(rs, logs, 1)[0]
    return float(-1.0 / slope) if slope < 0 else math.inf


def solve_point(
    geom: LatticeGeometry,
    spec: PerturbationSpec,
    cfg: SolverConfig,
    loops,
) -> tuple[np.ndarray, GroundSpace]:
    """Ground state in the target sector for one parameter point."""
    H = build_model(geom, spec)
    k = cfg.k or (4 if geom.boundary == "torus" else 2)
    gs = ground_space(H, k=k, tol=cfg.tol, seed=cfg.seed, max_iter=cfg.max_iter)
    keep = np.flatnonzero(gs.energies - gs.energies[0] <= cfg.sector_window)
    sub = GroundSpace(gs.energies[keep], gs.states[:, keep], gs.residuals[keep], gs.seed)
    return select_sector(sub, loops, cfg.target), gs


def run_sweep(
    path: ParameterPath | str,
    grid: SweepGrid,
    geom: LatticeGeometry,
    cfg: SolverConfig | None = None,
) -> SweepResult:
    """Entropy surface ``S_alpha(lambda)`` along ``path`` for ``grid.region``."""
    if isinstance(path, str):
        path = ParameterPath(path)
    cfg = cfg or SolverConfig()
    loops = _default_loops(geom, path, cfg)
    lz, lx = wilson_loops(geom)
    nl, na = len(grid.lams), len(grid.alphas)

    def one(lam):
        spec = path.spec(float(lam))
        try:
            psi, gs = solve_point(geom, spec, cfg, loops)
        except ConvergenceFailure as exc:
            log.warning("solver failed at lam=%g: %s", lam, exc)
            return exc
        sp = schmidt_spectrum(psi, grid.region)
        row = [renyi_value(sp, a, cfg.rank_tol) for a in grid.alphas]
        return (
            row,
            schmidt_rank(sp, cfg.rank_tol),
            expectation(psi, build_model(geom, spec)),
            expectation(psi, lz),
            expectation(psi, lx),
            estimate_xi(psi, geom),
        )

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            out = list(ex.map(one, grid.lams))
    else:
        out = [one(lam) for lam in grid.lams]

    S = np.full((nl, na), np.nan)
    ranks = np.zeros(nl, dtype=int)
    energies, lz1, lx2, xi = (np.full(nl, np.nan) for _ in range(4))
    failed = np.zeros(nl, dtype=bool)
    residuals = {}
    for i, r in enumerate(out):
        if isinstance(r, ConvergenceFailure):
            failed[i] = True
            residuals[i] = [float(x) for x in np.ravel(r.residuals)] if r.residuals is not None else []
            continue
        S[i], ranks[i], energies[i], lz1[i], lx2[i], xi[i] = r
    return SweepResult(
        grid.lams.copy(),
        grid.alphas,
        S,
        ranks,
        energies,
        lz1,
        lx2,
        xi,
        params=[path.spec(float(l)).params() for l in grid.lams],
        failed=failed,
        seed=cfg.seed,
        label=f"{path.family}:{grid.region.label}",
        residuals=residuals,
    )


def derivatives(r: SweepResult) -> DerivativeTable:
    """``dS_alpha / dlambda``: central differences inside, one-sided at the ends.

    Non-uniform grids fall back to divided differences and are flagged.
    """
    lams = np.asarray(r.lams, dtype=float)
    if len(lams) < 3:
        raise ValueError("need at least 3 lambda points")
    h = np.diff(lams)
    uniform = bool(np.allclose(h, h[0], rtol=1e-9, atol=1e-12))
    S = r.S
    D = np.empty_like(S)
    if uniform:
        D[1:-1] = (S[2:] - S[:-2]) / (2 * h[0])
    else:
        D[1:-1] = (S[2:] - S[:-2]) / (lams[2:] - lams[:-2])[:, None]
    D[0] = (S[1] - S[0]) / h[0]
    D[-1] = (S[-1] - S[-2]) / h[-1]
    return DerivativeTable(lams, tuple(r.alphas), D, uniform)


def detect_splitting(derivs: DerivativeTable, eps: float = DEFAULT_EPS) -> SplittingReport:
    """Sign analysis of ``dS_alpha/dlambda`` over ``alpha > 0``.

    A step splits when some slope exceeds ``eps`` and another is below
    ``-eps``.  ``alpha = 0`` (log rank) is excluded: the convertibility
    condition only involves positive indices.
    """
    alphas = np.asarray(derivs.alphas)
    pos = alphas > 0
    signs = np.where(derivs.D > eps, 1, np.where(derivs.D < -eps, -1, 0))
    split_steps, intervals, non_mono, inc, dec = [], [], [], [], []
    a_pos = alphas[pos]
    for i in range(len(derivs.lams)):
        s = signs[i, pos]
        is_split = bool(np.any(s > 0) and np.any(s < 0))
        crossings = []
        if is_split:
            nz = np.flatnonzero(s != 0)
            for j0, j1 in zip(nz[:-1], nz[1:]):
                if s[j0] != s[j1]:
                    crossings.append((float(a_pos[j0]), float(a_pos[j1])))
            split_steps.append(i)
        intervals.append(crossings)
        non_mono.append(len(crossings) > 1)
        inc.append(bool(np.all(derivs.D[i, pos] <= eps)))
        dec.append(bool(np.all(derivs.D[i, pos] >= -eps)))
    return SplittingReport(
        split=bool(split_steps),
        split_steps=split_steps,
        alpha0_intervals=intervals,
        non_monotone=non_mono,
        signs=signs,
        dlc_increasing=inc,
        dlc_decreasing=dec,
        eps=eps,
    )
