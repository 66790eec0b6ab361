"""``deltadimer`` command line front end.

Inputs are dimensionless: ``a = 1`` and ``m1 = 1``, so momenta are given
as ``P a`` and the impurity as ``a1/a``.  Every command echoes its
effective configuration into the output so reruns can be diffed.

Exit status: 0 on success, 2 for bad input or a point outside the
applicability window, 1 for a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from typing import Any, Optional

import numpy as np

from . import __version__
from .bound import solve_bound_state
from .kernel import kernel_matrix
from .oracle import OracleError, momentum_averaged_reflection, run_oracle
from .params import OFF, DomainError, new_params
from .quadrature import build_grid
from .scatter import scattering_energy, solve_scattering, sweep

CSV_TAG = "# deltadimer v1"
SWEEP_HEADER = ["value", "R", "T", "Re_f_even", "Im_f_even", "Re_f_odd", "Im_f_odd",
                "unitarity_defect", "shaded"]
COMMANDS = ("bound", "scatter", "sweep", "oracle", "kernel-dump")

DEFAULTS: dict[str, Any] = {
    "mass_ratio": 1.0,
    "a1_ratio": None,
    "Pa": None,
    "grid_n": 300,
    "quad_n": 400,
    "scale": None,
    "output": None,
    "format": None,
    "jobs": None,
    "parity": "even",
    "axis": "P",
    "range": None,
    "values": None,
    "sigma": 10.0,
    "d": 0.25,
    "dt": 0.05,
    "r_extent": 16.0,
    "t_final": None,
    "x_cut": 10.0,
    "trapped_tol": 1e-4,
    "reference": False,
    "snapshots": None,
    "snapshot_csv": None,
    "energy_ratio": None,
}
VALUE_FLAGS = ("--range", "--values", "--a1_ratio")
NEGATIVE_VALUE = re.compile(r"^-[0-9.]")
COMMON_KEYS = ("mass_ratio", "a1_ratio", "grid_n", "quad_n", "scale", "format")
COMMAND_KEYS = {
    "bound": ("parity",),
    "scatter": ("Pa",),
    "sweep": ("axis", "Pa", "range", "values", "jobs"),
    "oracle": ("Pa", "sigma", "d", "dt", "r_extent", "t_final", "x_cut", "trapped_tol",
               "reference", "snapshots", "snapshot_csv"),
    "kernel-dump": ("parity", "energy_ratio", "Pa"),
}
DEFAULT_FORMAT = {"bound": "json", "scatter": "json", "sweep": "csv", "oracle": "json",
                  "kernel-dump": "csv"}


class ConfigError(ValueError):
    pass


def fmt(x: float) -> str:
    return "%.12e" % x


def _clean(x):
    """Fixed-precision, JSON-safe copy of nested output values."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, complex):
        return {"re": _clean(x.real), "im": _clean(x.imag)}
    x = float(x)
    return float(fmt(x)) if math.isfinite(x) else None


def parse_range(text: str) -> list[float]:
    """``start:stop:step`` with ``stop`` included when it falls on the lattice."""
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"range must be start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"range needs step > 0 and stop >= start, got {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) + 0.0 for i in range(count)]


def _a1_value(raw):
    if raw is None or (isinstance(raw, str) and raw.lower() == OFF):
        return OFF
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"a1_ratio must be a number or {OFF!r}, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deltadimer", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file with option values; flags override it")
    common.add_argument("--mass_ratio", type=float, help="m2/m1 (default 1)")
    common.add_argument("--a1_ratio", help="impurity length a1/a, or 'off'")
    common.add_argument("--grid_n", type=int, help="outer grid nodes (default 300)")
    common.add_argument("--quad_n", type=int, help="inner kernel nodes (default 400)")
    common.add_argument("--scale", type=float, help="outer grid map scale, in 1/a")
    common.add_argument("--output", "-o", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))

    p = sub.add_parser("bound", parents=[common], help="localized dimer state",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--parity", choices=("even", "odd"))

    p = sub.add_parser("scatter", parents=[common], help="R and T at one momentum",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--Pa", type=float)

    p = sub.add_parser("sweep", parents=[common], help="scan P a or a1/a",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--axis", choices=("P", "a1_ratio"))
    p.add_argument("--Pa", type=float, help="fixed P a for an a1_ratio sweep")
    p.add_argument("--range", help="start:stop:step")
    p.add_argument("--values", help="comma-separated list instead of --range")
    p.add_argument("--jobs", type=int, help="worker threads (default $DELTADIMER_JOBS or 1)")

    p = sub.add_parser("oracle", parents=[common], help="wave-packet simulation",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--Pa", type=float)
    p.add_argument("--sigma", type=float, help="packet width in a (default 10)")
    p.add_argument("--d", type=float, help="lattice spacing in a (default 0.25)")
    p.add_argument("--dt", type=float, help="time step (default 0.05)")
    p.add_argument("--r_extent", type=float, help="relative-coordinate box (default 16)")
    p.add_argument("--t_final", type=float)
    p.add_argument("--x_cut", type=float, help="|X| beyond which R and T are counted (default 10)")
    p.add_argument("--trapped_tol", type=float)
    p.add_argument("--reference", action="store_true", default=argparse.SUPPRESS,
                   help="also compute the momentum-averaged stationary R")
    p.add_argument("--snapshots", help="comma-separated times for |psi|^2 marginals")
    p.add_argument("--snapshot_csv", help="file for the marginals")

    p = sub.add_parser("kernel-dump", parents=[common], help="kernel block as (p, s, value)",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--parity", choices=("even", "odd"))
    p.add_argument("--energy_ratio", type=float, help="E/eps (> 1 and below the capture threshold)")
    p.add_argument("--Pa", type=float, help="use the scattering energy at this P a instead")
    return parser


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def effective_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    cfg = dict(DEFAULTS)
    if "config" in vars(args):
        data = load_config(args.config)
        command = data.pop("command", args.command)
        if command != args.command:
            raise ConfigError(f"config is for command {command!r}, not {args.command!r}")
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(data)
    cfg.update(flags)
    if cfg["format"] is None:
        cfg["format"] = DEFAULT_FORMAT[args.command]
    if cfg["jobs"] is None:
        cfg["jobs"] = int(os.environ.get("DELTADIMER_JOBS", "1"))
    cfg["a1_ratio"] = _a1_value(cfg["a1_ratio"])
    cfg["command"] = args.command
    return cfg


def _params(cfg):
    a1 = cfg["a1_ratio"]
    return new_params(1.0, float(cfg["mass_ratio"]), 1.0, a1)


def _metadata(cfg) -> dict:
    keys = COMMON_KEYS + COMMAND_KEYS[cfg["command"]]
    return {"version": __version__, "command": cfg["command"], **{k: cfg[k] for k in keys}}


def _need(cfg, key):
    if cfg[key] is None:
        raise ConfigError(f"--{key} is required for {cfg['command']}")
    return cfg[key]


def _csv_text(header, rows, cfg) -> str:
    buf = io.StringIO()
    buf.write(CSV_TAG + "\n")
    buf.write("# config " + json.dumps(_clean(_metadata(cfg)), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _json_text(payload, cfg) -> str:
    payload = {**payload, "config": _metadata(cfg)}
    return json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def run_bound(cfg) -> str:
    params = _params(cfg)
    res = solve_bound_state(params, cfg["parity"], n=cfg["grid_n"], quad_n=cfg["quad_n"],
                            scale=cfg["scale"])
    th = params.threshold
    summary = {
        "found": res is not None,
        "parity": cfg["parity"],
        "grid_n": cfg["grid_n"],
        "window_ratio": [10.0 * th / params.eps, th / params.eps],
        "energy_ratio": None if res is None else res.energy_ratio,
        "residual": None if res is None else res.lambda_residual,
    }
    if cfg["format"] == "json":
        return _json_text(summary, cfg)
    if res is None:
        raise DomainError(f"no {cfg['parity']} localized state in the searched window")
    sys.stderr.write(_json_text(summary, cfg))
    rows = [[float(p), float(c)] for p, c in zip(res.grid.nodes, res.c)]
    return _csv_text(["p", "c_plus"], rows, cfg)


def _sweep_row(value, R, T, fe, fo, defect, shaded):
    return [value, R, T, fe.real, fe.imag, fo.real, fo.imag, defect, int(shaded)]


def run_scatter(cfg) -> str:
    params = _params(cfg)
    Pa = _need(cfg, "Pa")
    res = solve_scattering(params, Pa / params.a, cfg["grid_n"], cfg["quad_n"], cfg["scale"])
    if cfg["format"] == "csv":
        row = _sweep_row(Pa, res.R, res.T, res.f_even_onshell, res.f_odd_onshell,
                         res.unitarity_defect, False)
        return _csv_text(SWEEP_HEADER, [row], cfg)
    summary = {
        "Pa": Pa,
        "energy_ratio": res.E / params.eps,
        "R": res.R,
        "T": res.T,
        "unitarity_defect": res.unitarity_defect,
        "channel_defects": list(res.channel_defects),
        "f_even": res.f_even_onshell,
        "f_odd": res.f_odd_onshell,
        "r_amp": res.r_amp,
        "t_amp": res.t_amp,
        "grid_n": cfg["grid_n"],
        "nodes": res.grid.n,
    }
    return _json_text(summary, cfg)


def run_sweep(cfg) -> str:
    params = _params(cfg)
    if cfg["values"] is not None:
        try:
            values = [float(v) for v in str(cfg["values"]).split(",")]
        except ValueError:
            raise ConfigError(f"values must be comma-separated numbers, got {cfg['values']!r}") from None
    else:
        values = parse_range(_need(cfg, "range"))
    if cfg["axis"] == "P":
        rows = sweep(params, "P", [v / params.a for v in values], n=cfg["grid_n"],
                     quad_n=cfg["quad_n"], scale=cfg["scale"], jobs=cfg["jobs"])
    else:
        P = _need(cfg, "Pa") / params.a
        rows = sweep(params, "a1_ratio", values, P=P, n=cfg["grid_n"], quad_n=cfg["quad_n"],
                     scale=cfg["scale"], jobs=cfg["jobs"])
    table = [_sweep_row(v, r.R, r.T, r.f_even, r.f_odd, r.unitarity_defect, r.shaded)
             for v, r in zip(values, rows)]
    if cfg["format"] == "csv":
        return _csv_text(SWEEP_HEADER, table, cfg)
    out = [dict(zip(SWEEP_HEADER, row), reason=r.reason) for row, r in zip(table, rows)]
    for item in out:
        item["shaded"] = bool(item["shaded"])
    return _json_text({"axis": cfg["axis"], "rows": out}, cfg)


def run_oracle_cmd(cfg) -> str:
    params = _params(cfg)
    Pa = _need(cfg, "Pa")
    times = [float(t) for t in str(cfg["snapshots"]).split(",")] if cfg["snapshots"] else []
    res = run_oracle(params, Pa / params.a, cfg["sigma"], d=cfg["d"], dt=cfg["dt"],
                     r_extent=cfg["r_extent"], t_final=cfg["t_final"], X_cut=cfg["x_cut"],
                     trapped_tol=cfg["trapped_tol"], snapshot_times=times)
    payload = {"R": res.R, "T": res.T, "trapped": res.trapped, "norm_drift": res.norm_drift,
               "energy_drift": res.energy_drift, "parameters": res.parameters}
    if cfg["reference"]:
        payload["R_stationary"] = momentum_averaged_reflection(
            params, Pa / params.a, cfg["sigma"], n=cfg["grid_n"], quad_n=cfg["quad_n"])
    if res.snapshots and cfg["snapshot_csv"]:
        rows = []
        for t, bins, hist in res.snapshots:
            centers = 0.5 * (bins[1:] + bins[:-1])
            rows.extend([float(t), float(x), float(h)] for x, h in zip(centers, hist))
        _emit(_csv_text(["t", "X", "probability"], rows, cfg), cfg["snapshot_csv"])
    return _json_text(payload, cfg)


def run_kernel_dump(cfg) -> str:
    params = _params(cfg)
    if cfg["Pa"] is not None:
        E = scattering_energy(params, cfg["Pa"] / params.a)
    else:
        E = _need(cfg, "energy_ratio") * params.eps
    scale = params.momentum_scale() if cfg["scale"] is None else cfg["scale"]
    grid = build_grid(cfg["grid_n"], scale)
    K = kernel_matrix(grid, E, params, cfg["parity"], cfg["quad_n"]).entries
    rows = [[float(p), float(s), float(K[i, j])]
            for i, p in enumerate(grid.nodes) for j, s in enumerate(grid.nodes)]
    return _csv_text(["p", "s", "value"], rows, cfg)


RUNNERS = {
    "bound": run_bound,
    "scatter": run_scatter,
    "sweep": run_sweep,
    "oracle": run_oracle_cmd,
    "kernel-dump": run_kernel_dump,
}


def _fail(code: int, exc: BaseException) -> int:
    sys.stdout.write(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}) + "\n")
    return code


def _attach_negative_values(argv: list[str]) -> list[str]:
    """Join ``--range -12:12:0.05`` into ``--range=-12:12:0.05`` so argparse accepts it."""
    out: list[str] = []
    it = iter(argv)
    for token in it:
        if token in VALUE_FLAGS:
            nxt = next(it, None)
            if nxt is not None and NEGATIVE_VALUE.match(nxt):
                out.append(f"{token}={nxt}")
                continue
            out.append(token)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(token)
    return out


def main(argv: Optional[list[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_attach_negative_values(argv))
    try:
        cfg = effective_config(args)
        text = RUNNERS[args.command](cfg)
    except (OracleError, np.linalg.LinAlgError, RuntimeError, FloatingPointError) as exc:
        return _fail(1, exc)
    except ValueError as exc:  # ConfigError, DomainError and bad numeric input
        return _fail(2, exc)
    _emit(text, cfg["output"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
