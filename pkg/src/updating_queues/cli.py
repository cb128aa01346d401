"""Command-line interface.

Subcommands: simulate, amplitude, table, critical-delay, compare. Results go
to stdout (4-decimal columns) or, with --out, to a CSV file at full precision;
simulate and compare additionally render a PNG next to the CSV when --out is
given. Diagnostics go to stderr only, so stdout/file content is stable and
byte-identical across runs.

Exit codes: 0 success, 2 invalid parameters, 3 solver non-convergence,
4 output I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace

import numpy as np

from .model import (ModelParams, critical_delay, empirical_amplitude,
                    initial_state, settle_interval, simulate)
from .amplitude2d import (NoRealRootError, linear_approx_amplitude,
                          quadratic_approx_amplitude, solve_fixed_point)
from .amplitude_nd import even_amplitude, odd_linear_approx, odd_solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_IO = 4

DEFAULTS = {"lam": 10.0, "mu": 1.0, "theta": 1.0, "n": 2,
            "samples_per_interval": 32, "seed_perturbation": "0.01"}


class CLIError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class RunConfig:
    """Everything one invocation needs; built by parse_args.

    params.delta is meaningful for the delta-based commands; table rebuilds
    params per grid value and critical-delay ignores it.
    """

    command: str
    params: ModelParams
    delta_grid: tuple | None = None
    horizon: float | None = None
    burn_in: float | None = None
    samples_per_interval: int = 32
    output_path: str | None = None
    seed_perturbation: object = 0.01
    method: str = "all"


def parse_delta_grid(text: str) -> tuple:
    """start:stop:step (inclusive endpoints within 1e-12) or a comma list."""
    text = text.strip()
    if not text:
        raise CLIError("empty delta grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CLIError("delta grid must be start:stop:step")
        try:
            start, stop, step = (float(x) for x in parts)
        except ValueError as exc:
            raise CLIError(f"bad delta grid: {exc}") from None
        if step <= 0 or stop < start - 1e-12:
            raise CLIError("delta grid needs step > 0 and stop >= start")
        values = []
        k = 0
        while True:
            v = start + k * step
            if v > stop + 1e-12:
                break
            values.append(round(v, 12))
            k += 1
    else:
        try:
            values = [float(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise CLIError(f"bad delta grid: {exc}") from None
    if not values:
        raise CLIError("empty delta grid")
    if any(v <= 0 for v in values):
        raise CLIError("delta grid values must be positive")
    return tuple(values)


def parse_perturbation(text: str):
    """Scalar (default two-queue pattern) or comma list of per-queue offsets."""
    try:
        if "," in text:
            return [float(x) for x in text.split(",")]
        return float(text)
    except ValueError as exc:
        raise CLIError(f"bad seed perturbation: {exc}") from None


def read_config_file(path: str) -> dict:
    """key=value lines; '#' starts a comment. Keys use the flag spellings."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise CLIError(f"{path}:{lineno}: expected key=value")
                key, val = (s.strip() for s in line.split("=", 1))
                values[key.replace("-", "_").replace("lambda", "lam")] = val
    except OSError as exc:
        raise CLIError(f"cannot read config file: {exc}") from None
    return values


_CONFIG_TYPES = {"lam": float, "mu": float, "theta": float, "n": int,
                 "delta": float, "delta_grid": str, "horizon": float,
                 "burn_in": float, "samples_per_interval": int,
                 "out": str, "method": str, "seed_perturbation": str}


def parse_args(argv=None) -> RunConfig:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--lambda", dest="lam", type=float)
    parent.add_argument("--mu", type=float)
    parent.add_argument("--theta", type=float)
    parent.add_argument("--n", type=int)
    parent.add_argument("--config")
    parent.add_argument("--out")

    parser = argparse.ArgumentParser(
        prog="updating-queues",
        description="Oscillation amplitudes of queues whose arrivals see "
                    "periodically updated state")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", parents=[parent],
                           help="exact trajectory as t,q1..qN rows")
    p_sim.add_argument("--delta", type=float)
    p_sim.add_argument("--horizon", type=float)
    p_sim.add_argument("--samples-per-interval", type=int)
    p_sim.add_argument("--seed-perturbation")

    p_amp = sub.add_parser("amplitude", parents=[parent],
                           help="analytic amplitudes at one delta")
    p_amp.add_argument("--delta", type=float)
    p_amp.add_argument("--method", default="all")

    p_tab = sub.add_parser("table", parents=[parent],
                           help="amplitude columns over a delta grid")
    p_tab.add_argument("--delta-grid")
    p_tab.add_argument("--method", default="all")

    p_cd = sub.add_parser("critical-delay", parents=[parent],
                          help="stability threshold for the update interval")

    p_cmp = sub.add_parser("compare", parents=[parent],
                           help="simulated vs analytic amplitudes")
    p_cmp.add_argument("--delta", type=float)
    p_cmp.add_argument("--horizon", type=float)
    p_cmp.add_argument("--burn-in", type=float)
    p_cmp.add_argument("--samples-per-interval", type=int)
    p_cmp.add_argument("--seed-perturbation")

    ns = parser.parse_args(argv)
    merged = {k: v for k, v in vars(ns).items() if v is not None}

    if merged.get("config"):
        file_vals = read_config_file(merged["config"])
        for key, raw in file_vals.items():
            if key not in _CONFIG_TYPES:
                raise CLIError(f"unknown config key {key!r}")
            if key not in merged:  # flags override the file
                try:
                    merged[key] = _CONFIG_TYPES[key](raw)
                except ValueError as exc:
                    raise CLIError(f"bad config value for {key}: {exc}") from None

    def pick(key, fallback=None):
        return merged.get(key, DEFAULTS.get(key, fallback))

    command = ns.command
    try:
        params = ModelParams(lam=float(pick("lam")), mu=float(pick("mu")),
                             theta=float(pick("theta")), n=int(pick("n")),
                             delta=float(merged.get("delta", 1.0)))
    except ValueError as exc:
        raise CLIError(str(exc)) from None

    delta_grid = None
    if command == "table":
        grid_text = merged.get("delta_grid")
        if grid_text is None:
            raise CLIError("table requires --delta-grid")
        delta_grid = parse_delta_grid(str(grid_text))
    elif command in ("simulate", "amplitude", "compare") and "delta" not in merged:
        raise CLIError(f"{command} requires --delta")

    pert_raw = merged.get("seed_perturbation", DEFAULTS["seed_perturbation"])
    perturbation = parse_perturbation(str(pert_raw))

    return RunConfig(
        command=command,
        params=params,
        delta_grid=delta_grid,
        horizon=merged.get("horizon"),
        burn_in=merged.get("burn_in"),
        samples_per_interval=int(pick("samples_per_interval")),
        output_path=merged.get("out"),
        seed_perturbation=perturbation,
        method=str(merged.get("method", "all")),
    )


# ---------------------------------------------------------------------------
# table sweep


@dataclass(frozen=True)
class TableSweep:
    header: tuple
    rows: tuple          # one tuple per delta; None marks a failed cell
    flags: tuple         # per-row branch-transition flag
    warnings: tuple
    failed: bool


def emit_table(params: ModelParams, deltas) -> TableSweep:
    """Amplitude columns over a delta grid.

    Even n: Delta, FixedPoint, Linear, Quadratic (reference-table constant
    convention). Odd n: Delta, Nonlinear1, Linear1, Nonlinear2, Linear2.
    A failed row keeps its delta and leaves the failed cells as None, with a
    warning recorded. The flags mark quadratic-column rows that return to the
    real-root branch after the sweep has passed through the no-real-root
    regime; a sweep with such a transition gets a divergence warning.
    """
    warnings = []
    failed = False
    if params.n % 2 == 0:
        header = ("Delta", "FixedPoint", "Linear", "Quadratic")
        rows, midpoint = [], []
        for d in deltas:
            p = replace(params, delta=d)
            fp = even_amplitude(p, "fixed_point")
            lin = even_amplitude(p, "linear")
            quad = even_amplitude(p, "quadratic")
            rows.append((d, fp.amplitude, lin.amplitude, quad.amplitude))
            midpoint.append(bool(quad.note))
        flags = []
        seen_midpoint = False
        for is_mid in midpoint:
            seen_midpoint = seen_midpoint or is_mid
            flags.append(seen_midpoint and not is_mid)
        if any(flags):
            first = deltas[flags.index(True)]
            warnings.append(
                "quadratic column crosses back to the real-root branch at "
                f"delta={first:g}; flagged rows diverge from the no-real-root "
                "midpoint regime")
    else:
        header = ("Delta", "Nonlinear1", "Linear1", "Nonlinear2", "Linear2")
        rows, flags = [], []
        for d in deltas:
            p = replace(params, delta=d)
            lin = odd_linear_approx(p)
            nl = odd_solve(p)
            if nl.converged:
                rows.append((d, nl.A1, lin.A1, nl.A2, lin.A2))
            else:
                rows.append((d, None, lin.A1, None, lin.A2))
                warnings.append(f"row delta={d:g}: cluster solve did not "
                                f"converge (residual {nl.residual:.2e})")
                failed = True
            flags.append(False)
    return TableSweep(header=header, rows=tuple(rows), flags=tuple(flags),
                      warnings=tuple(warnings), failed=failed)


# ---------------------------------------------------------------------------
# rendering helpers


def _render_csv(header, rows, full_precision: bool) -> str:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, str):
            return v
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return repr(float(v)) if full_precision else f"{v:.4f}"

    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _deliver(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
        return
    try:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CLIError(f"cannot write {out_path}: {exc}", EXIT_IO) from None


def _png_path(out_path: str) -> str:
    stem = out_path[:-4] if out_path.lower().endswith(".csv") else out_path
    return stem + ".png"


# ---------------------------------------------------------------------------
# commands


def _cmd_simulate(cfg: RunConfig) -> int:
    params = cfg.params
    horizon = cfg.horizon if cfg.horizon is not None else 40.0
    try:
        ic = initial_state(params, cfg.seed_perturbation)
        traj = simulate(ic, params, horizon, cfg.samples_per_interval)
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    header = ("t",) + tuple(f"q{i + 1}" for i in range(params.n))
    rows = [(t,) + tuple(row) for t, row in zip(traj.times, traj.states)]
    _deliver(_render_csv(header, rows, full_precision=True), cfg.output_path)
    if cfg.output_path is not None:
        from .plots import save_trajectory_plot
        try:
            save_trajectory_plot(traj, _png_path(cfg.output_path))
        except OSError as exc:
            raise CLIError(f"cannot write figure: {exc}", EXIT_IO) from None
    return EXIT_OK


def _amplitude_rows(cfg: RunConfig):
    """(label, value, note) rows for the amplitude command."""
    params = cfg.params
    method = cfg.method.replace("_", "-")
    rows = []
    code = EXIT_OK
    if params.n % 2 == 0:
        if method not in ("all", "fixed-point", "linear", "quadratic"):
            raise CLIError(f"unknown method {cfg.method!r} for even n")
        if params.n == 2:
            # two queues use the tangent expansion; reductions of larger even
            # systems use the reference-table constants (see LogitExpansion)
            fp = solve_fixed_point(params)
            lin = linear_approx_amplitude(params)
            try:
                quad_res = quadratic_approx_amplitude(params)
            except NoRealRootError as exc:
                raise CLIError(str(exc), EXIT_SOLVER) from None
        else:
            fp = even_amplitude(params, "fixed_point")
            lin = even_amplitude(params, "linear")
            quad_res = even_amplitude(params, "quadratic")
        if method in ("all", "fixed-point"):
            rows.append(("fixed-point", fp.amplitude, fp.note))
        if method in ("all", "linear"):
            rows.append(("linear", lin.amplitude, lin.note))
        if method in ("all", "quadratic"):
            rows.append(("quadratic", quad_res.amplitude, quad_res.note))
        if not fp.converged:
            code = EXIT_SOLVER
    else:
        if method not in ("all", "nonlinear", "linear"):
            raise CLIError(f"unknown method {cfg.method!r} for odd n")
        nl = odd_solve(params)
        lin = odd_linear_approx(params)
        if method in ("all", "nonlinear"):
            rows.append(("nonlinear-1", nl.A1, ""))
        if method in ("all", "linear"):
            rows.append(("linear-1", lin.A1, ""))
        if method in ("all", "nonlinear"):
            rows.append(("nonlinear-2", nl.A2, ""))
        if method in ("all", "linear"):
            rows.append(("linear-2", lin.A2, ""))
        if not nl.converged and method in ("all", "nonlinear"):
            code = EXIT_SOLVER
    return rows, code


def _cmd_amplitude(cfg: RunConfig) -> int:
    rows, code = _amplitude_rows(cfg)
    for label, value, note in rows:
        if note:
            sys.stderr.write(f"note: {label}: {note}\n")
    if code == EXIT_SOLVER:
        sys.stderr.write("warning: solver did not converge\n")
    if cfg.output_path is None:
        text = "".join(f"{label} {value:.4f}\n" for label, value, _ in rows)
        sys.stdout.write(text)
    else:
        csv_rows = [(label, value) for label, value, _ in rows]
        _deliver(_render_csv(("method", "amplitude"), csv_rows, True),
                 cfg.output_path)
    return code


def _cmd_table(cfg: RunConfig) -> int:
    sweep = emit_table(cfg.params, cfg.delta_grid)
    for w in sweep.warnings:
        sys.stderr.write(f"warning: {w}\n")
    full = cfg.output_path is not None
    _deliver(_render_csv(sweep.header, sweep.rows, full), cfg.output_path)
    return EXIT_SOLVER if sweep.failed else EXIT_OK


def _cmd_critical_delay(cfg: RunConfig) -> int:
    value = critical_delay(cfg.params)
    if cfg.output_path is None:
        if value is None:
            sys.stdout.write("no finite threshold\n")
        else:
            sys.stdout.write(f"{value:.3f}\n")
    else:
        if value is None:
            sys.stderr.write("note: no finite threshold at these parameters\n")
        _deliver(_render_csv(("critical_delay",), [(value,)], True),
                 cfg.output_path)
    return EXIT_OK


def _cmd_compare(cfg: RunConfig) -> int:
    params = cfg.params
    horizon = cfg.horizon if cfg.horizon is not None else 320.0 * params.delta
    try:
        ic = initial_state(params, cfg.seed_perturbation)
        traj = simulate(ic, params, horizon, cfg.samples_per_interval)
    except ValueError as exc:
        raise CLIError(str(exc)) from None

    if cfg.burn_in is not None:
        burn_in = cfg.burn_in
    else:
        # 200 intervals, or as soon as the epoch sequence has settled
        settled = settle_interval(traj)
        intervals = min(200, settled) if settled is not None else 200
        burn_in = intervals * params.delta
    try:
        emp = empirical_amplitude(traj, burn_in)
    except ValueError as exc:
        raise CLIError(str(exc)) from None

    code = EXIT_OK
    if params.n % 2 == 0:
        res = even_amplitude(params, "fixed_point") if params.n > 2 \
            else solve_fixed_point(params)
        candidates = [res.amplitude]
        if not res.converged:
            code = EXIT_SOLVER
    else:
        nl = odd_solve(params)
        candidates = [nl.A1, nl.A2]
        if not nl.converged:
            code = EXIT_SOLVER
    if code == EXIT_SOLVER:
        sys.stderr.write("warning: analytic solver did not converge\n")

    eq = params.equilibrium
    report = []
    for i in range(params.n):
        e = float(emp.amplitudes[i])
        analytic = min(candidates, key=lambda c: abs(c - e))
        note = "decayed" if e < 1e-3 else ""
        report.append({"queue": i + 1, "empirical": e, "analytic": analytic,
                       "abs_error": abs(e - analytic), "equilibrium": eq,
                       "bar_low": eq - analytic, "bar_high": eq + analytic,
                       "note": note})
        if note:
            sys.stderr.write(f"note: queue {i + 1} decayed "
                             f"(empirical amplitude {e:.2e})\n")

    header = ("queue", "empirical", "analytic", "abs_error",
              "equilibrium", "bar_low", "bar_high", "note")
    rows = [tuple(r[k] for k in header) for r in report]
    full = cfg.output_path is not None
    _deliver(_render_csv(header, rows, full), cfg.output_path)
    if cfg.output_path is not None:
        from .plots import save_compare_plot
        try:
            save_compare_plot(traj, report, _png_path(cfg.output_path))
        except OSError as exc:
            raise CLIError(f"cannot write figure: {exc}", EXIT_IO) from None
    return code


def run(cfg: RunConfig) -> int:
    """Execute one parsed invocation; returns the process exit code."""
    handlers = {"simulate": _cmd_simulate, "amplitude": _cmd_amplitude,
                "table": _cmd_table, "critical-delay": _cmd_critical_delay,
                "compare": _cmd_compare}
    try:
        return handlers[cfg.command](cfg)
    except CLIError:
        raise
    except ValueError as exc:
        raise CLIError(str(exc)) from None


def main(argv=None) -> None:
    try:
        cfg = parse_args(argv)
        code = run(cfg)
    except CLIError as exc:
        sys.stderr.write(f"error: {exc}\n")
        code = exc.code
    sys.exit(code)
