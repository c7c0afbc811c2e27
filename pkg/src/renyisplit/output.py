"""Byte-deterministic CSV and JSON writers (17 significant digits)."""

from __future__ import annotations

import json
import math

import numpy as np

from .sweep import DerivativeTable, SplittingReport, SweepResult

__all__ = ["CSV_HEADER", "fmt", "to_json", "surface_csv", "report_dict", "convert_units"]

CSV_HEADER = "lambda_index,lambda_params,alpha,S,rank,energy,lz1,lx2"


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """Minimal JSON emitter; floats use 17 significant digits, NaN becomes null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or (isinstance(obj, float) and math.isnan(obj)):
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else f'"{fmt(obj)}"'
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def convert_units(S: np.ndarray, units: str) -> np.ndarray:
    return S / math.log(2) if units == "bits" else S


def _params(p: dict) -> str:
    return ";".join(f"{k}={fmt(v)}" for k, v in sorted(p.items())) or "lam=0"


def surface_csv(r: SweepResult, units: str = "nats", observables: bool = True) -> str:
    """One row per (lambda, alpha); failed points keep NaN entries."""
    S = convert_units(r.S, units)
    lines = [CSV_HEADER]
    for i in range(len(r.lams)):
        p = r.params[i] if r.params else {"lam": r.lams[i]}
        lz = r.lz1[i] if observables else math.nan
        lx = r.lx2[i] if observables else math.nan
        for j, a in enumerate(r.alphas):
            lines.append(
                ",".join(
                    [str(i), _params(p), fmt(a), fmt(S[i, j]), str(int(r.ranks[i])), fmt(r.energies[i]), fmt(lz), fmt(lx)]
                )
            )
    return "\n".join(lines) + "\n"


def report_dict(
    r: SweepResult,
    derivs: DerivativeTable | None,
    rep: SplittingReport | None,
    config_echo: dict,
    units: str = "nats",
    extra: dict | None = None,
) -> dict:
    scale = 1.0 / math.log(2) if units == "bits" else 1.0
    out = {
        "split": None if rep is None else rep.split,
        "alpha0_interval": None if rep is None or rep.alpha0_interval is None else list(rep.alpha0_interval),
        "dlc": None if rep is None else rep.dlc,
        "dlc_toward_smaller": None if rep is None else rep.dlc_toward_smaller,
        "derivative_table": None
        if derivs is None
        else {
            "lambdas": derivs.lams.tolist(),
            "alphas": list(derivs.alphas),
            "dS_dlambda": (derivs.D * scale).tolist(),
            "uniform_grid": derivs.uniform,
            "units": f"{units} per unit lambda",
        },
        "split_steps": None if rep is None else rep.split_steps,
        "alpha0_intervals": None if rep is None else [[list(c) for c in iv] for iv in rep.alpha0_intervals],
        "failed_points": [int(i) for i in np.flatnonzero(r.failed)] if r.failed is not None else [],
        "config_echo": config_echo,
        "seed": r.seed,
    }
    if extra:
        out.update(extra)
    return out
