"""Matrix-free ground-space solver, sector selection and observables."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .lattice import LoopSpec
from .pauli import DimensionMismatch, OperatorSum, PauliString

__all__ = [
    "ConvergenceFailure",
    "SectorAmbiguous",
    "CapExceeded",
    "GroundSpace",
    "ground_space",
    "ground_space_dense",
    "select_sector",
    "loop_matrix_operator",
    "expectation",
    "string_expectation",
    "connected_correlator",
    "MAX_SITES",
    "DENSE_MAX_SITES",
]

log = logging.getLogger(__name__)

MAX_SITES = 24
DENSE_MAX_SITES = 14


class ConvergenceFailure(RuntimeError):
    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class SectorAmbiguous(RuntimeError):
    pass


class CapExceeded(ValueError):
    pass


@dataclass
class GroundSpace:
    """Lowest eigenpairs, energies ascending, states as columns."""

    energies: np.ndarray
    states: np.ndarray
    residuals: np.ndarray
    seed: int | None = None
    iterations: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.energies)

    @property
    def degeneracy_gap(self) -> float:
        """Spread of the returned levels, ``E[k-1] - E[0]``."""
        return float(self.energies[-1] - self.energies[0])

    def state(self, i: int = 0) -> np.ndarray:
        return self.states[:, i]

    def blocks(self, rel_gap: float = 1e-8) -> list[list[int]]:
        """Group levels whose consecutive spacing is below ``rel_gap * max(1, |E|)``."""
        out = [[0]]
        for i in range(1, self.k):
            e0, e1 = self.energies[i - 1], self.energies[i]
            if e1 - e0 <= rel_gap * max(1.0, abs(e0)):
                out[-1].append(i)
            else:
                out.append([i])
        return out


def _orthonormalize(W: np.ndarray, against: list[np.ndarray], rng, drop: float = 1e-10):
    """Block Gram-Schmidt (two passes) with random refill of deflated columns."""
    for _ in range(2):
        for Q in against:
            W = W - Q @ (Q.T @ W)
    Qn, R = np.linalg.qr(W)
    scale = max(1.0, float(np.max(np.abs(np.diag(R)))) if R.size else 1.0)
    weak = np.abs(np.diag(R)) < drop * scale
    tries = 0
    while np.any(weak):
        tries += 1
        if tries > 5:
            raise ConvergenceFailure("could not extend the Krylov basis")
        W = Qn.copy()
        W[:, weak] = rng.standard_normal((W.shape[0], int(weak.sum())))
        for _ in range(2):
            for Q in against:
                W = W - Q @ (Q.T @ W)
        Qn, R = np.linalg.qr(W)
        weak = np.abs(np.diag(R)) < drop
    return Qn


def ground_space(
    H: OperatorSum,
    k: int = 1,
    tol: float = 1e-10,
    seed: int = 0,
    max_iter: int = 500,
    block: int | None = None,
    krylov_blocks: int | None = None,
) -> GroundSpace:
    """Lowest ``k`` eigenpairs by thick-restarted block Lanczos.

    Each cycle extends the kept Ritz vectors by ``krylov_blocks`` blocks of
    ``block`` vectors, starting from the residual block and fully
    reorthogonalized, then performs a Rayleigh-Ritz step on the whole
    basis.  The block is wider than ``k`` so exactly degenerate multiplets
    are resolved.  Deterministic for a fixed ``seed``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if H.n_sites > MAX_SITES:
        raise CapExceeded(f"{H.n_sites} sites exceeds the cap of {MAX_SITES}")
    dim = H.dim
    if dim <= 256:
        return ground_space_dense(H, k)
    rng = np.random.default_rng(seed)
    b = min(block or k + 3, dim)
    m = krylov_blocks or max(3, min(16, 96 // b))
    keep = min(2 * b + 4, dim // 4)
    X = np.empty((dim, 0))
    HX = np.empty((dim, 0))
    Q = np.linalg.qr(rng.standard_normal((dim, b)))[0]
    res = None
    for it in range(1, max_iter + 1):
        basis, images = [X, Q], [HX, H.matvec(Q)]
        for _ in range(m - 1):
            Qn = _orthonormalize(images[-1], basis, rng)
            basis.append(Qn)
            images.append(H.matvec(Qn))
        V = np.hstack(basis)
        HV = np.hstack(images)
        T = V.T @ HV
        theta, S = np.linalg.eigh(0.5 * (T + T.T))
        p = min(keep, len(theta))
        X = V @ S[:, :p]
        HX = HV @ S[:, :p]
        R = HX[:, :b] - X[:, :b] * theta[:b]
        res = np.linalg.norm(R, axis=0)
        if np.all(res[:k] <= tol):
            return GroundSpace(
                theta[:k].copy(), X[:, :k].copy(), res[:k].copy(), seed, it,
                {"ritz_values": theta[:b].copy(), "ritz_residuals": res.copy()},
            )
        Q = _orthonormalize(R, [X], rng)
        log.debug("cycle %d residuals %s", it, res[:k])
    raise ConvergenceFailure(
        f"no convergence after {max_iter} cycles, residuals {res[:k]}", residuals=res[:k]
    )


def ground_space_dense(H: OperatorSum, k: int = 1) -> GroundSpace:
    """Oracle path: full diagonalization of the dense matrix (N <= 14)."""
    if H.n_sites > DENSE_MAX_SITES:
        raise CapExceeded(f"dense path limited to {DENSE_MAX_SITES} sites")
    M = H.to_dense()
    w, U = np.linalg.eigh(0.5 * (M + M.T))
    X = U[:, :k]
    res = np.linalg.norm(M @ X - X * w[:k], axis=0)
    return GroundSpace(w[:k].copy(), X.copy(), res, None, 0, {"dense": True, "ritz_values": w[: k + 3].copy()})


def loop_matrix_operator(n_sites: int, loop: LoopSpec) -> OperatorSum:
    m = loop.mask
    s = PauliString(m, 0) if loop.kind == "x" else PauliString(0, m)
    return OperatorSum.from_strings(n_sites, [s])


def _as_operator(n_sites: int, op) -> OperatorSum:
    if isinstance(op, OperatorSum):
        return op
    if isinstance(op, LoopSpec):
        return loop_matrix_operator(n_sites, op)
    if isinstance(op, PauliString):
        return OperatorSum.from_strings(n_sites, [op])
    raise TypeError(f"cannot interpret {op!r} as an operator")


def select_sector(
    gs: GroundSpace,
    loops,
    target: tuple[float, float] = (1.0, 1.0),
    commute_tol: float = 0.05,
) -> np.ndarray:
    """State of the ground space closest to the joint loop eigenvalues ``target``.

    The two loop operators are projected onto the span of ``gs.states``; the
    returned state is the top eigenvector of ``t1 * L1 + t2 * L2`` within
    that span.  At an exact fixed point this is the joint eigenvector with
    eigenvalues ``target``.
    """
    V = gs.states
    if V.shape[1] == 1:
        return V[:, 0].copy()
    n = int(V.shape[0]).bit_length() - 1
    ops = [_as_operator(n, L) for L in loops]
    A = V.T @ ops[0].matvec(V)
    B = V.T @ ops[1].matvec(V)
    A, B = 0.5 * (A + A.T), 0.5 * (B + B.T)
    if np.linalg.norm(A @ B - B @ A) > commute_tol:
        raise SectorAmbiguous("loop operators do not commute on the ground space")
    C = target[0] * A + target[1] * B
    w, U = np.linalg.eigh(C)
    if len(w) > 1 and w[-1] - w[-2] < 1e-9:
        raise SectorAmbiguous("target sector is degenerate within the ground space")
    psi = V @ U[:, -1]
    psi /= np.linalg.norm(psi)
    j = int(np.argmax(np.abs(psi)))
    return psi if psi[j] > 0 else -psi


def expectation(v: np.ndarray, O) -> float:
    n = int(v.shape[0]).bit_length() - 1
    op = _as_operator(n, O)
    if op.dim != v.shape[0]:
        raise DimensionMismatch("state and operator dimensions differ")
    return float(v @ op.matvec(v))


def string_expectation(v: np.ndarray, P: PauliString) -> float:
    """<v|P|v> for a single Pauli string without building an operator."""
    idx = np.arange(v.shape[0], dtype=np.uint64)
    w = v
    if P.zmask:
        bits = np.bitwise_count(idx & np.uint64(P.zmask)) & 1
        w = v * (1.0 - 2.0 * bits)
    if P.xmask:
        w = w[idx ^ np.uint64(P.xmask)]
    return float(P.coeff * (v @ w))


def connected_correlator(v: np.ndarray, P: PauliString, Q: PauliString) -> float:
    """<PQ> - <P><Q>."""
    return string_expectation(v, P @ Q) - string_expectation(v, P) * string_expectation(v, Q)
