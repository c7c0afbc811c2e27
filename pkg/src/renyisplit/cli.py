"""Command-line entry point: ``renyisplit {sweep,loopgas,chain,crosscheck} CONFIG``.

Exit codes: 0 success, 1 crosscheck deviation above its gate, 2 schema
violation, 3 solver failure, 4 size cap exceeded, 5 no exact path.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import CHAIN_FAMILIES, FAMILIES_2D, ConfigError, ExperimentConfig, load_config
from .ed import MAX_SITES, CapExceeded, ConvergenceFailure, SectorAmbiguous, expectation, string_expectation
from .entanglement import renyi_value, schmidt_spectrum
from .ising import ChainSpec, chain_hamiltonian, chain_sweep, even_ground_state, tfim_solve
from .lattice import (
    InvalidGeometry,
    InvalidRegion,
    LatticeGeometry,
    Region,
    build_cylinder,
    build_torus,
    region_half,
    region_star,
    region_star_plaquette,
)
from .loopgas import CCModel, GroupTooLarge, enumerate_group, exact_spectrum, renyi_exact
from .output import fmt, report_dict, surface_csv, to_json
from .pauli import PauliString, PerturbationSpec, build_model
from .sweep import (
    ParameterPath,
    SolverConfig,
    SweepGrid,
    SweepResult,
    _default_loops,
    derivatives,
    detect_splitting,
    run_sweep,
    solve_point,
)

__all__ = ["main", "run", "crosscheck", "EXIT_OK", "EXIT_GATE", "EXIT_SCHEMA", "EXIT_SOLVER", "EXIT_CAP", "EXIT_NO_EXACT"]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_GATE, EXIT_SCHEMA, EXIT_SOLVER, EXIT_CAP, EXIT_NO_EXACT = 0, 1, 2, 3, 4, 5

GATES = {"entropy": 1e-8, "overlap": 1e-10, "energy": 1e-9, "correlator": 1e-9}
EXACT_FAMILIES = ("CCExp", "HorizontalZ", "TFIM-V1")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _schema(path: str, msg: str) -> CliError:
    return CliError(EXIT_SCHEMA, f"config error at {path}: {msg}")


# ---- builders ---------------------------------------------------------------


def _geometry(cfg: ExperimentConfig) -> LatticeGeometry:
    g = cfg.geometry
    try:
        geom = build_torus(g.Lx, g.Ly) if g.boundary == "torus" else build_cylinder(g.Lx, g.Ly)
    except InvalidGeometry as exc:
        raise _schema("geometry", str(exc)) from None
    if geom.n_edges > MAX_SITES:
        raise CliError(EXIT_CAP, f"{geom.n_edges} spins exceeds the cap of {MAX_SITES}")
    return geom


def _region(cfg: ExperimentConfig, geom: LatticeGeometry) -> Region:
    m = cfg.model
    if m.star >= geom.n_stars:
        raise _schema("model.star", f"star index {m.star} out of range (n_stars = {geom.n_stars})")
    try:
        if m.region == "star":
            return region_star(geom, m.star)
        if m.region == "star_plaquette":
            return region_star_plaquette(geom, m.star)
        return region_half(geom)
    except InvalidRegion as exc:
        raise _schema("model.region", str(exc)) from None


def _path(cfg: ExperimentConfig) -> ParameterPath:
    m = cfg.model
    if m.family not in FAMILIES_2D:
        raise _schema("model.family", f"{m.family!r} is not a lattice family")
    path = ParameterPath(m.family, dict(m.direction) if m.direction is not None else None)
    allowed = set(PerturbationSpec(m.family).params())
    bad = set(path.direction) - allowed
    if bad:
        raise _schema("model.direction", f"keys {sorted(bad)} not valid for {m.family}")
    return path


def _solver(cfg: ExperimentConfig) -> SolverConfig:
    s = cfg.solver
    return SolverConfig(
        tol=s.tol, seed=s.seed, max_iter=s.max_iter, k=s.k, sector_window=s.sector_window, sector_loops=s.sector_loops, rank_tol=s.rank_tol
    )


def _report(r: SweepResult, cfg: ExperimentConfig, extra: dict | None = None) -> dict:
    d = rep = None
    if len(r.lams) >= 3 and not np.any(r.failed):
        d = derivatives(r)
        rep = detect_splitting(d, cfg.analysis.eps)
    return report_dict(r, d, rep, cfg.echo(), cfg.output.units, extra)


def _write(cfg: ExperimentConfig, csv_text: str | None, report: dict) -> None:
    if csv_text is not None:
        Path(cfg.output.csv).write_text(csv_text)
    Path(cfg.output.report).write_text(to_json(report) + "\n")


# ---- subcommands ------------------------------------------------------------


def cmd_sweep(cfg: ExperimentConfig) -> int:
    geom = _geometry(cfg)
    path = _path(cfg)
    grid = SweepGrid(cfg.model.lambda_values(), tuple(cfg.model.alphas), _region(cfg, geom))
    try:
        r = run_sweep(path, grid, geom, _solver(cfg))
    except SectorAmbiguous as exc:
        raise CliError(EXIT_SOLVER, f"sector selection failed: {exc}") from None
    _write(cfg, surface_csv(r, cfg.output.units), _report(r, cfg))
    if np.any(r.failed):
        raise CliError(EXIT_SOLVER, f"solver failed at lambda indices {sorted(r.residuals)}; residuals {r.residuals}")
    return EXIT_OK


def loopgas_surface(cfg: ExperimentConfig) -> SweepResult:
    """Closed-form loop-gas surface on the configured grid."""
    if cfg.model.family != "CCExp":
        raise _schema("model.family", "loopgas requires family = 'CCExp'")
    geom = _geometry(cfg)
    A = _region(cfg, geom)
    try:
        G = enumerate_group(geom)
    except GroupTooLarge as exc:
        raise CliError(EXIT_CAP, str(exc)) from None
    lams = np.asarray(cfg.model.lambda_values(), dtype=float)
    if np.any(lams < 0):
        raise _schema("model.lambdas", "CCExp needs lambda >= 0")
    alphas = tuple(sorted(cfg.model.alphas))
    S = np.array([[renyi_exact(CCModel(l, geom), A, a, G) for a in alphas] for l in lams])
    ranks = np.array([len(exact_spectrum(CCModel(l, geom), A, G).probs) for l in lams])
    n = len(lams)
    return SweepResult(
        lams,
        alphas,
        S,
        ranks,
        np.full(n, -float(geom.n_plaquettes)),
        np.ones(n),  # z-loop eigenstate
        np.zeros(n),  # x-loop maps the gas to another sector
        np.zeros(n),
        params=[{"lam": float(l)} for l in lams],
        failed=np.zeros(n, dtype=bool),
        seed=cfg.solver.seed,
        label=f"loopgas:{A.label}",
    )


def cmd_loopgas(cfg: ExperimentConfig) -> int:
    r = loopgas_surface(cfg)
    _write(cfg, surface_csv(r, cfg.output.units), _report(r, cfg, {"method": "closed-form loop gas"}))
    return EXIT_OK


def cmd_chain(cfg: ExperimentConfig) -> int:
    fam = cfg.model.family
    if fam not in CHAIN_FAMILIES:
        raise _schema("model.family", "chain requires family 'TFIM-V1' or 'TFIM-V2'")
    N = cfg.chain.N
    if N > MAX_SITES:
        raise CliError(EXIT_CAP, f"chain of {N} sites exceeds the cap of {MAX_SITES}")
    r = chain_sweep(
        fam.split("-")[1],
        N,
        cfg.model.lambda_values(),
        cfg.model.alphas,
        break_symmetry=cfg.chain.break_symmetry,
        seed=cfg.solver.seed,
    )
    extra = {"magnetization_per_site": r.lz1.tolist(), "region": f"sites 0..{N // 2 - 1}"}
    _write(cfg, surface_csv(r, cfg.output.units, observables=False), _report(r, cfg, extra))
    return EXIT_OK


# ---- crosscheck -------------------------------------------------------------


def _row(quantity: str, lam: float, exact: float, ed: float, gate: float, **kw) -> dict:
    row = {"quantity": quantity, "lambda": float(lam)}
    row.update(kw)
    row.update({"exact": float(exact), "ed": float(ed), "deviation": abs(float(exact) - float(ed)), "gate": gate})
    return row


def _check_cc(cfg: ExperimentConfig) -> list[dict]:
    from .loopgas import cc_state_vector

    geom = _geometry(cfg)
    if geom.boundary != "torus":
        raise _schema("geometry.boundary", "the CCExp crosscheck runs on the torus")
    A = _region(cfg, geom)
    G = enumerate_group(geom)
    solver = _solver(cfg)
    path = ParameterPath("CCExp")
    solver.sector_loops = "zz"
    loops = _default_loops(geom, path, solver)
    rows = []
    for lam in cfg.model.lambda_values():
        if lam < 0:
            raise _schema("model.lambdas", "CCExp needs lambda >= 0")
        psi, _ = solve_point(geom, path.spec(lam), solver, loops)
        sp = schmidt_spectrum(psi, A)
        model = CCModel(lam, geom)
        for a in sorted(cfg.model.alphas):
            rows.append(_row("S", lam, renyi_exact(model, A, a, G), renyi_value(sp, a), GATES["entropy"], alpha=a))
        E = expectation(psi, build_model(geom, path.spec(lam)))
        rows.append(_row("energy", lam, -geom.n_plaquettes, E, GATES["energy"]))
        ov = abs(float(cc_state_vector(geom, lam) @ psi))
        rows.append(_row("overlap", lam, 1.0, ov, GATES["overlap"]))
    return rows


def _check_horizontal(cfg: ExperimentConfig) -> list[dict]:
    geom = _geometry(cfg)
    if geom.boundary != "torus":
        raise _schema("geometry.boundary", "the HorizontalZ crosscheck runs on the torus")
    if geom.Lx < 3:
        raise _schema("geometry.Lx", "dual rows need Lx >= 3 (Lx = 2 doubles the ring bond)")
    solver = _solver(cfg)
    solver.sector_loops = "zz"
    path = ParameterPath("HorizontalZ")
    loops = _default_loops(geom, path, solver)
    rows = []
    for lam in cfg.model.lambda_values():
        psi, _ = solve_point(geom, path.spec(lam), solver, loops)
        # each row of stars is a periodic chain with coupling -lam, unit field
        sol = tfim_solve(ChainSpec(geom.Lx, -lam, 1.0, 0.0, "periodic"))
        E = expectation(psi, build_model(geom, path.spec(lam)))
        rows.append(_row("energy", lam, -geom.n_plaquettes + geom.Ly * sol.ground_energy, E, GATES["energy"]))
        for x in range(geom.Lx):
            sz = string_expectation(psi, PauliString(0, 1 << geom.h(x, 0)))
            exact = sol.tau_x_tau_x(x, (x + 1) % geom.Lx)
            rows.append(_row("sigma_z_h", lam, exact, sz, GATES["correlator"], edge=geom.h(x, 0)))
    return rows


def _check_tfim(cfg: ExperimentConfig) -> list[dict]:
    N = cfg.chain.N
    if N > MAX_SITES:
        raise CliError(EXIT_CAP, f"chain of {N} sites exceeds the cap of {MAX_SITES}")
    half = (1 << (N // 2)) - 1
    rows = []
    for lam in cfg.model.lambda_values():
        spec = ChainSpec(N, 1.0, lam, 0.0, "open")
        sol = tfim_solve(spec)
        psi = even_ground_state(spec, seed=cfg.solver.seed, tol=cfg.solver.tol)
        rows.append(_row("energy", lam, sol.ground_energy, expectation(psi, chain_hamiltonian(spec)), GATES["energy"]))
        for m in range(N):
            rows.append(_row("tau_z", lam, sol.tau_z(m), string_expectation(psi, PauliString(0, 1 << m)), GATES["correlator"], site=m))
        for i, j in [(m, m + 1) for m in range(N - 1)] + [(0, N - 1)]:
            ed = string_expectation(psi, PauliString((1 << i) | (1 << j), 0))
            rows.append(_row("tau_x_tau_x", lam, sol.tau_x_tau_x(i, j), ed, GATES["correlator"], sites=[i, j]))
        sp = schmidt_spectrum(psi, half, N)
        for a in sorted(cfg.model.alphas):
            rows.append(_row("S", lam, sol.renyi_block(N // 2, a), renyi_value(sp, a), GATES["entropy"], alpha=a))
    return rows


def crosscheck(cfg: ExperimentConfig) -> tuple[list[dict], bool]:
    fam = cfg.model.family
    if fam not in EXACT_FAMILIES:
        raise CliError(EXIT_NO_EXACT, f"no exact path for family {fam!r}; crosscheck supports {', '.join(EXACT_FAMILIES)}")
    rows = {"CCExp": _check_cc, "HorizontalZ": _check_horizontal, "TFIM-V1": _check_tfim}[fam](cfg)
    ok = all(r["deviation"] <= r["gate"] for r in rows)
    return rows, ok


def cmd_crosscheck(cfg: ExperimentConfig) -> int:
    rows, ok = crosscheck(cfg)
    worst: dict[str, float] = {}
    for r in rows:
        worst[r["quantity"]] = max(worst.get(r["quantity"], 0.0), r["deviation"])
    print(f"{'quantity':<14}{'max_abs_deviation':>26}{'gate':>12}")
    for q, dev in worst.items():
        gate = next(r["gate"] for r in rows if r["quantity"] == q)
        print(f"{q:<14}{fmt(dev):>26}{gate:>12.0e}{'' if dev <= gate else '  FAIL'}")
    report = {
        "family": cfg.model.family,
        "passed": ok,
        "max_abs_deviation": worst,
        "rows": rows,
        "config_echo": cfg.echo(),
        "seed": cfg.solver.seed,
    }
    _write(cfg, None, report)
    return EXIT_OK if ok else EXIT_GATE


COMMANDS = {"sweep": cmd_sweep, "loopgas": cmd_loopgas, "chain": cmd_chain, "crosscheck": cmd_crosscheck}


def run(command: str, config_path: str | Path) -> int:
    """Run one subcommand; returns the process exit code."""
    try:
        cfg = load_config(config_path)
        return COMMANDS[command](cfg)
    except ConfigError as exc:
        print(f"config error at {exc.path}: {exc.message}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except ConvergenceFailure as exc:
        print(f"solver failure: {exc}; residuals {exc.residuals}", file=sys.stderr)
        return EXIT_SOLVER
    except (CapExceeded, GroupTooLarge) as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="renyisplit", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="TOML experiment config")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return run(args.command, args.config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
