"""Command-line interface: scans, gap profiles, exact sector spectra,
overlaps, static-approximation solves and path evaluation, serialized as
CSV or JSON with byte-stable formatting.

Exit codes: 0 success, 1 validation error, 2 numerical failure.  Errors
are emitted as machine-readable JSON on stderr.  Flag values take
precedence over the (flat ``key=value``) config file, which takes
precedence over built-in defaults; ``PSPIN_THREADS`` overrides
``--threads``.
"""

from __future__ import annotations

import argparse
import functools
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__, exactdiag, pathlab, semiclassical, spinwave, statapprox
from ._pool import effective_threads
from .model import AnnealPoint, ModelParams, Phase
from .pathlab import AnnealPath
from .semiclassical import LineKind

__all__ = ["RunConfig", "load_path_file", "main", "run"]

COMMANDS = (
    "phase-diagram",
    "transition-lines",
    "gap-scan",
    "exact-gap",
    "overlap",
    "stat-approx",
    "path-eval",
)

_ANALYTIC_CARRIER_P = 3  # ModelParams stand-in when --p inf; only k is read


class ValidationError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    k: int
    p: int | None = None              # None means the analytic large-p mode
    lam: float | None = None
    s: float | None = None
    n: int | None = None
    count: int = 2
    res: tuple[int, int] | None = None
    s_min: float = 0.0
    s_max: float = 1.0
    s_steps: int = 101
    beta: float = math.inf
    driver: str = "vk"
    pair: tuple[Phase, Phase] | None = None
    seed: AnnealPoint | None = None
    path_file: str | None = None
    strict: bool = True
    samples: int = 1024
    out: str | None = None
    fmt: str | None = None            # csv | json; default depends on command
    threads: int | None = None

    @property
    def analytic(self) -> bool:
        return self.p is None

    def params(self) -> ModelParams:
        return ModelParams(self.p if self.p is not None else _ANALYTIC_CARRIER_P, self.k)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _phase_name(code_or_phase) -> str:
    if isinstance(code_or_phase, Phase):
        return code_or_phase.value
    return semiclassical.CODE_TO_PHASE[int(code_or_phase)].value


def load_path_file(path: str, strict: bool = True) -> AnnealPath:
    """Parse a waypoint file: one ``lambda s`` pair per line, # comments."""
    waypoints = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValidationError(
                    f"{path}:{lineno}: expected 'lambda s', got {raw.strip()!r}"
                )
            try:
                lam, s = float(parts[0]), float(parts[1])
            except ValueError:
                raise ValidationError(
                    f"{path}:{lineno}: non-numeric waypoint {raw.strip()!r}"
                ) from None
            try:
                waypoints.append(AnnealPoint(lam, s))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    if not waypoints:
        raise ValidationError(f"{path}: no waypoints found")
    try:
        return AnnealPath(waypoints, strict=strict)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# Command implementations: each returns (columns, rows) for CSV or a data
# object for JSON.
# ---------------------------------------------------------------------------

def _run_phase_diagram(cfg: RunConfig):
    if cfg.res is None:
        raise ValidationError("phase-diagram requires --res WxH")
    header = ["lambda", "s", "theta0", "mx", "mz", "energy", "phase"]
    rows = []
    if cfg.analytic:
        n_lam, n_s = cfg.res
        params = cfg.params()
        for lam in np.linspace(0.0, 1.0, n_lam):
            for s in np.linspace(0.0, 1.0, n_s):
                phase, e = semiclassical.pinfty_winner(AnnealPoint(lam, s), params)
                theta = pathlab._analytic_theta(phase, lam, s, cfg.k)
                rows.append(
                    [lam, s, theta, math.cos(theta), math.sin(theta), e, phase.value]
                )
        return header, rows
    diagram = semiclassical.scan_diagram(cfg.params(), cfg.res, threads=cfg.threads)
    mx, mz = diagram.mx, diagram.mz
    for i, lam in enumerate(diagram.lambdas):
        for j, s in enumerate(diagram.svals):
            rows.append(
                [
                    lam,
                    s,
                    diagram.theta0[i, j],
                    mx[i, j],
                    mz[i, j],
                    diagram.energy[i, j],
                    _phase_name(diagram.phase[i, j]),
                ]
            )
    return header, rows


def _run_transition_lines(cfg: RunConfig):
    header = ["line", "kind", "phase_a", "phase_b", "lambda", "s"]
    rows = []
    if cfg.analytic:
        lines = semiclassical.analytic_transition_lines(cfg.k)
    else:
        if cfg.pair is None or cfg.seed is None:
            raise ValidationError(
                "finite-p transition-lines requires --pair and --seed"
            )
        try:
            lines = [
                semiclassical.trace_first_order(cfg.params(), cfg.pair, cfg.seed)
            ]
        except semiclassical.NoDiscontinuity as exc:
            raise NumericalFailure(str(exc)) from None
    for li, line in enumerate(lines):
        for pt in line.points:
            rows.append(
                [li, line.kind.value, line.pair[0].value, line.pair[1].value, pt.lam, pt.s]
            )
    return header, rows


def _run_gap_scan(cfg: RunConfig):
    if cfg.analytic:
        raise ValidationError("gap-scan requires a finite --p")
    if cfg.lam is None:
        raise ValidationError("gap-scan requires --lambda")
    if not cfg.s_min <= cfg.s_max:
        raise ValidationError("--s-min must not exceed --s-max")
    if cfg.s_steps < 2:
        raise ValidationError("--s-steps must be >= 2")
    s_grid = np.linspace(cfg.s_min, cfg.s_max, cfg.s_steps)
    results = spinwave.gap_profile(cfg.params(), cfg.lam, s_grid, threads=cfg.threads)
    header = ["lambda", "s", "delta", "gamma", "epsilon", "gap", "valid"]
    rows = [
        [
            cfg.lam,
            s,
            r.delta,
            r.gamma,
            r.epsilon,
            r.gap if r.gap is not None else math.nan,
            int(r.valid),
        ]
        for s, r in zip(s_grid, results)
    ]
    return header, rows


def _run_exact_gap(cfg: RunConfig):
    if cfg.analytic:
        raise ValidationError("exact-gap requires a finite --p")
    for name in ("lam", "s", "n"):
        if getattr(cfg, name) is None:
            raise ValidationError(f"exact-gap requires --{'lambda' if name == 'lam' else name}")
    op = exactdiag.SectorOperator(cfg.n, cfg.params(), AnnealPoint(cfg.lam, cfg.s))
    try:
        spectrum = exactdiag.lowest_eigenpairs(op, count=cfg.count)
    except exactdiag.NoConvergence as exc:
        raise NumericalFailure(str(exc)) from None
    return {
        "n": cfg.n,
        "p": cfg.p,
        "k": cfg.k,
        "lambda": cfg.lam,
        "s": cfg.s,
        "eigenvalues": [float(x) for x in spectrum.eigenvalues],
        "gap": spectrum.gap_n,
        "degenerate": spectrum.degenerate,
    }


def _run_overlap(cfg: RunConfig):
    if cfg.n is None:
        raise ValidationError("overlap requires --n")
    if cfg.driver == "tf":
        value = exactdiag.overlap_tf(cfg.n)
        return {"n": cfg.n, "driver": "tf", "overlap": value}
    value = exactdiag.overlap_vk(cfg.n, cfg.k)
    return {"n": cfg.n, "k": cfg.k, "overlap": value}


def _run_stat_approx(cfg: RunConfig):
    if cfg.analytic:
        raise ValidationError("stat-approx requires a finite --p")
    params = cfg.params()
    if cfg.res is not None:
        n_lam, n_s = cfg.res
        lambdas = np.linspace(0.0, 1.0, n_lam)
        svals = np.linspace(0.0, 1.0, n_s)
        mx, mz, f, conv, iters = statapprox.solve_grid(
            params, lambdas, svals, beta=cfg.beta, threads=cfg.threads
        )
        header = ["lambda", "s", "mx", "mz", "free_energy", "converged", "iterations"]
        rows = []
        for i, lam in enumerate(lambdas):
            for j, s in enumerate(svals):
                rows.append(
                    [lam, s, mx[i, j], mz[i, j], f[i, j], int(conv[i, j]), int(iters[i, j])]
                )
        return header, rows
    if cfg.lam is None or cfg.s is None:
        raise ValidationError("stat-approx requires --lambda and --s (or --res)")
    sol = statapprox.best_self_consistent(
        AnnealPoint(cfg.lam, cfg.s), params, beta=cfg.beta
    )
    if not sol.converged:
        raise NumericalFailure(
            f"self-consistent iteration did not converge at "
            f"(lambda={cfg.lam}, s={cfg.s}, beta={cfg.beta})"
        )
    return {
        "lambda": cfg.lam,
        "s": cfg.s,
        "beta": "inf" if math.isinf(sol.beta) else sol.beta,
        "mx": sol.mx,
        "mz": sol.mz,
        "free_energy": sol.free_energy,
        "phase": sol.phase.value,
        "converged": sol.converged,
        "iterations": sol.iterations,
    }


def _run_path_eval(cfg: RunConfig):
    if cfg.path_file is None:
        raise ValidationError("path-eval requires --path FILE")
    path = load_path_file(cfg.path_file, strict=cfg.strict)
    report = pathlab.evaluate_path(
        path, cfg.params(), cfg.samples, analytic=cfg.analytic, threads=cfg.threads
    )
    return {
        "samples": report.samples,
        "crossings": [
            {
                "kind": c.kind.value,
                "position": c.position,
                "lambda": c.point.lam,
                "s": c.point.s,
                "theta_jump": c.theta_jump,
                "gap_nearby": c.gap_nearby,
            }
            for c in report.crossings
        ],
        "first_order": report.count(LineKind.FIRST_ORDER),
        "second_order": report.count(LineKind.SECOND_ORDER),
        "min_gap": report.min_gap,
        "min_gap_position": report.min_gap_position,
        "breakdown_intervals": [list(iv) for iv in report.breakdown_intervals],
        "flags": report.flags,
    }


_RUNNERS = {
    "phase-diagram": _run_phase_diagram,
    "transition-lines": _run_transition_lines,
    "gap-scan": _run_gap_scan,
    "exact-gap": _run_exact_gap,
    "overlap": _run_overlap,
    "stat-approx": _run_stat_approx,
    "path-eval": _run_path_eval,
}

_TABLE_COMMANDS = {"phase-diagram", "transition-lines", "gap-scan"}


def _csv_text(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, str):
                cells.append(cell)
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            else:
                cells.append(_fmt(cell))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _rows_to_json(header: list[str], rows: list[list]):
    columns: dict[str, list] = {name: [] for name in header}
    for row in rows:
        for name, cell in zip(header, row):
            if isinstance(cell, (np.integer,)):
                cell = int(cell)
            elif isinstance(cell, (np.floating,)):
                cell = float(cell)
            columns[name].append(cell)
    return columns


def _meta(cfg: RunConfig) -> dict[str, Any]:
    return {
        "command": cfg.command,
        "params": {"p": "inf" if cfg.analytic else cfg.p, "k": cfg.k},
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    try:
        result = _RUNNERS[cfg.command](cfg)
        fmt = cfg.fmt
        if fmt is None:
            fmt = "csv" if cfg.command in _TABLE_COMMANDS else "json"
        if isinstance(result, tuple):
            header, rows = result
            if fmt == "csv":
                text = _csv_text(header, rows)
            else:
                data = _rows_to_json(header, rows)
                text = json.dumps({"meta": _meta(cfg), "data": data}, indent=None)
        else:
            if fmt == "csv":
                raise ValidationError(
                    f"{cfg.command} produces a single record; use --format json"
                )
            data = result
            text = json.dumps({"meta": _meta(cfg), "data": data}, indent=None)
        if cfg.out is None:
            if fmt == "csv":
                sys.stdout.write(text)
            else:
                # Bare data object on stdout keeps piping simple; the
                # meta wrapper is reserved for files.
                sys.stdout.write(json.dumps(data) + "\n")
        else:
            with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return 0
    except ValidationError as exc:
        _emit_error("validation", exc)
        return 1
    except (NumericalFailure, exactdiag.NoConvergence) as exc:
        _emit_error("numerical", exc)
        return 2
    except ValueError as exc:
        _emit_error("validation", exc)
        return 1


def _emit_error(kind: str, exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": str(exc)}}) + "\n")


# ---------------------------------------------------------------------------
# Argument parsing and config-file merging
# ---------------------------------------------------------------------------

def _parse_res(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        res = (int(a), int(b))
    except ValueError:
        raise ValidationError(f"--res must look like 256x256, got {text!r}") from None
    if res[0] < 2 or res[1] < 2:
        raise ValidationError("--res must be at least 2x2")
    return res


def _parse_pair(text: str) -> tuple[Phase, Phase]:
    names = {p.value: p for p in Phase}
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != 2 or not all(part in names for part in parts):
        raise ValidationError(
            f"--pair must be two of {sorted(names)} separated by a comma, got {text!r}"
        )
    return names[parts[0]], names[parts[1]]


def _parse_point(text: str) -> AnnealPoint:
    try:
        lam, s = (float(x) for x in text.split(","))
        return AnnealPoint(lam, s)
    except ValueError as exc:
        raise ValidationError(f"--seed must be 'lambda,s': {exc}") from None


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


_OPTIONS: dict[str, dict] = {
    "p": dict(flag="--p", help="target exponent p (odd, >= 3) or 'inf'"),
    "k": dict(flag="--k", help="driver exponent k (>= 2)"),
    "lambda": dict(flag="--lambda", help="mixing parameter in [0, 1]"),
    "s": dict(flag="--s", help="annealing parameter in [0, 1]"),
    "n": dict(flag="--n", help="number of spins"),
    "count": dict(flag="--count", help="number of eigenvalues (default 2)"),
    "res": dict(flag="--res", help="grid resolution, e.g. 256x256"),
    "s-min": dict(flag="--s-min", help="sweep start (default 0)"),
    "s-max": dict(flag="--s-max", help="sweep end (default 1)"),
    "s-steps": dict(flag="--s-steps", help="sweep points (default 101)"),
    "beta": dict(flag="--beta", help="inverse temperature or 'inf' (default)"),
    "driver": dict(flag="--driver", help="overlap driver: vk (default) or tf"),
    "pair": dict(flag="--pair", help="phase pair, e.g. \"F,F'\""),
    "seed": dict(flag="--seed", help="seed point 'lambda,s'"),
    "path": dict(flag="--path", help="waypoint file for path-eval"),
    "samples": dict(flag="--samples", help="path samples (default 1024)"),
    "out": dict(flag="--out", help="output file (stdout if omitted)"),
    "format": dict(flag="--format", help="csv or json"),
    "threads": dict(flag="--threads", help="worker threads (default: all cores)"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pspin",
        description=(
            "Numerical laboratory for quantum annealing of the infinite-range "
            "p-spin ferromagnet with a k-body transverse driver."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        cp = sub.add_parser(command)
        cp.add_argument("--config", default=None, help="key=value config file")
        cp.add_argument("--no-strict", action="store_true", default=None,
                        help="allow decreasing s in path files")
        for opt in _OPTIONS.values():
            cp.add_argument(opt["flag"], default=None, help=opt["help"])
    return parser


def _merged(args: argparse.Namespace, key: str, default=None):
    attr = key.replace("-", "_")
    value = getattr(args, attr, None)
    if value is None and args.config_values is not None:
        value = args.config_values.get(key)
    return default if value is None else value


def _to_int(value, name: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ValidationError(f"--{name} must be an integer, got {value!r}") from None


def _to_float(value, name: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"--{name} must be a number, got {value!r}") from None


def build_config(argv: list[str]) -> RunConfig:
    args = _build_parser().parse_args(argv)
    args.config_values = _read_config_file(args.config) if args.config else None

    p_raw = _merged(args, "p")
    p: int | None
    if p_raw is None:
        if args.command != "overlap":
            raise ValidationError("--p is required (integer or 'inf')")
        p = None
    elif str(p_raw).lower() in ("inf", "infinity"):
        p = None
    else:
        p = _to_int(p_raw, "p")

    k_raw = _merged(args, "k")
    if k_raw is None:
        raise ValidationError("--k is required")
    k = _to_int(k_raw, "k")

    cfg = RunConfig(command=args.command, k=k, p=p)
    try:
        ModelParams(p if p is not None else _ANALYTIC_CARRIER_P, k)
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from None

    lam = _merged(args, "lambda")
    if lam is not None:
        cfg.lam = _to_float(lam, "lambda")
        if not 0.0 <= cfg.lam <= 1.0:
            raise ValidationError(f"--lambda must lie in [0, 1], got {cfg.lam}")
    s = _merged(args, "s")
    if s is not None:
        cfg.s = _to_float(s, "s")
        if not 0.0 <= cfg.s <= 1.0:
            raise ValidationError(f"--s must lie in [0, 1], got {cfg.s}")
    n = _merged(args, "n")
    if n is not None:
        cfg.n = _to_int(n, "n")
        if cfg.n < 1:
            raise ValidationError("--n must be >= 1")
    cfg.count = _to_int(_merged(args, "count", 2), "count")
    if cfg.count < 1:
        raise ValidationError("--count must be >= 1")
    res = _merged(args, "res")
    if res is not None:
        cfg.res = _parse_res(str(res))
    cfg.s_min = _to_float(_merged(args, "s-min", 0.0), "s-min")
    cfg.s_max = _to_float(_merged(args, "s-max", 1.0), "s-max")
    cfg.s_steps = _to_int(_merged(args, "s-steps", 101), "s-steps")
    if not (0.0 <= cfg.s_min <= 1.0 and 0.0 <= cfg.s_max <= 1.0):
        raise ValidationError("--s-min/--s-max must lie in [0, 1]")
    beta = _merged(args, "beta", "inf")
    cfg.beta = math.inf if str(beta).lower() in ("inf", "infinity") else _to_float(beta, "beta")
    if cfg.beta <= 0.0:
        raise ValidationError("--beta must be positive")
    cfg.driver = str(_merged(args, "driver", "vk")).lower()
    if cfg.driver not in ("vk", "tf"):
        raise ValidationError(f"--driver must be vk or tf, got {cfg.driver!r}")
    pair = _merged(args, "pair")
    if pair is not None:
        cfg.pair = _parse_pair(str(pair))
    seed = _merged(args, "seed")
    if seed is not None:
        cfg.seed = _parse_point(str(seed))
    cfg.path_file = _merged(args, "path")
    no_strict = args.no_strict
    if no_strict is None and args.config_values is not None:
        raw = args.config_values.get("no-strict")
        no_strict = raw is not None and raw.lower() in ("1", "true", "yes")
    cfg.strict = not bool(no_strict)
    cfg.samples = _to_int(_merged(args, "samples", 1024), "samples")
    if cfg.samples < 16:
        raise ValidationError("--samples must be >= 16")
    cfg.out = _merged(args, "out")
    fmt = _merged(args, "format")
    if fmt is not None:
        fmt = str(fmt).lower()
        if fmt not in ("csv", "json"):
            raise ValidationError(f"--format must be csv or json, got {fmt!r}")
        cfg.fmt = fmt
    threads = _merged(args, "threads")
    if threads is not None:
        cfg.threads = _to_int(threads, "threads")
        if cfg.threads < 1:
            raise ValidationError("--threads must be >= 1")
    cfg.threads = effective_threads(cfg.threads)
    return cfg


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = build_config(argv)
    except ValidationError as exc:
        _emit_error("validation", exc)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
