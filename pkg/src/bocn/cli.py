"""Experiment driver and command-line interface.

A run is described by a ``RunSpec`` built from defaults, an optional
line-oriented ``key = value`` config file, and command-line flags (flags win
over the file, the file over defaults).  ``run_experiment`` writes
``trajectory.csv``, ``diagnostics.csv`` and a gnuplot script ``plot.gp``;
``table_driver`` sweeps element counts and writes ``table.csv`` with errors
and observed convergence rates.

Exit codes: 0 success, 2 usage error, 3 solver nonconvergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from dataclasses import dataclass, fields, replace

import numpy as np

from . import diagnostics as diag
from . import stepper
from .assembly import affine_weight, unit_weight
from .errors import ConfigurationError, NonconvergenceError
from .mesh import make_mesh

IC_CHOICES = ("two-soliton", "single-soliton", "zero")
WEIGHT_CHOICES = ("affine", "unit")
FINEST_GRID_ELEMENTS = 4096


@dataclass(frozen=True)
class RunSpec:
    """Complete description of one experiment.

    Defaults reproduce the reference two-soliton setup: domain [-100, 100],
    N = 256 elements, weight 120 + x, dt = 0.5 * dx / max|u0|, snapshots at
    t = 0, 90 and 180.
    """

    half_width: float = 100.0
    num_elements: int = 256
    weight_kind: str = "affine"
    weight_offset: float = 120.0
    dt_factor: float = 0.5
    dt: float | None = None
    t_final: float = 180.0
    snapshot_times: tuple = (0.0, 90.0, 180.0)
    ic: str = "two-soliton"
    c1: float = 0.3
    c2: float = 0.6
    d1: float = -30.0
    d2: float = -55.0
    out: str = "out"
    finest_dx: float | None = None
    seed: int = 0
    table: tuple = ()

    def validate(self) -> "RunSpec":
        if self.num_elements % 2 != 0 or self.num_elements < 4:
            raise ConfigurationError(
                f"elements must be even and >= 4, got {self.num_elements}"
            )
        if self.half_width <= 0:
            raise ConfigurationError(f"half-width must be positive, got {self.half_width}")
        if self.weight_kind not in WEIGHT_CHOICES:
            raise ConfigurationError(f"unknown weight kind {self.weight_kind!r}")
        if self.weight_kind == "affine" and self.weight_offset - self.half_width < 1.0:
            raise ConfigurationError(
                f"weight-offset {self.weight_offset} gives phi(-X) < 1 on "
                f"half-width {self.half_width}"
            )
        if self.ic not in IC_CHOICES:
            raise ConfigurationError(f"unknown ic {self.ic!r}")
        if self.t_final <= 0:
            raise ConfigurationError(f"t-final must be positive, got {self.t_final}")
        for t in self.snapshot_times:
            if not 0.0 <= t <= self.t_final:
                raise ConfigurationError(
                    f"snapshot time {t} outside [0, {self.t_final}]"
                )
        if self.ic == "two-soliton" and (
            self.c1 <= 0 or self.c2 <= 0 or self.c1 == self.c2
        ):
            raise ConfigurationError(
                f"two-soliton needs distinct positive speeds, got c1={self.c1}, c2={self.c2}"
            )
        if self.ic == "single-soliton" and self.c1 <= 0:
            raise ConfigurationError(f"single-soliton speed c1 must be positive, got {self.c1}")
        for n in self.table:
            if n % 2 != 0 or n < 4:
                raise ConfigurationError(f"table element count {n} must be even and >= 4")
        return self

    def resolved_finest_dx(self) -> float:
        if self.finest_dx is not None:
            return self.finest_dx
        return 2.0 * self.half_width / FINEST_GRID_ELEMENTS


_INT_KEYS = {"elements", "seed"}
_FLOAT_KEYS = {
    "half-width",
    "t-final",
    "dt-factor",
    "dt",
    "weight-offset",
    "c1",
    "c2",
    "d1",
    "d2",
    "finest-dx",
}
_STR_KEYS = {"ic", "out", "weight-kind"}
_LIST_KEYS = {"snapshots", "table"}
_KEY_TO_FIELD = {
    "elements": "num_elements",
    "half-width": "half_width",
    "t-final": "t_final",
    "dt-factor": "dt_factor",
    "dt": "dt",
    "weight-offset": "weight_offset",
    "weight-kind": "weight_kind",
    "ic": "ic",
    "c1": "c1",
    "c2": "c2",
    "d1": "d1",
    "d2": "d2",
    "out": "out",
    "finest-dx": "finest_dx",
    "seed": "seed",
    "snapshots": "snapshot_times",
    "table": "table",
}


def _parse_value(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key == "snapshots":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if key == "table":
            return tuple(int(v) for v in raw.split(",") if v.strip())
        return raw
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key!r}: {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment, blanks ignored."""
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _KEY_TO_FIELD:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        updates[_KEY_TO_FIELD[key]] = _parse_value(key, raw)
    return updates


def emit_config(spec: RunSpec) -> str:
    """Config-file text that parses back to ``spec``."""
    field_to_key = {v: k for k, v in _KEY_TO_FIELD.items()}
    lines = []
    for f in fields(RunSpec):
        key = field_to_key[f.name]
        value = getattr(spec, f.name)
        if value is None:
            continue
        if f.name in ("snapshot_times", "table"):
            value = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
            if not value:
                continue
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bocn",
        description="Crank-Nicolson Galerkin solver for the Benjamin-Ono equation",
    )
    p.add_argument("--config", metavar="FILE", help="key = value config file")
    p.add_argument("--elements", type=int)
    p.add_argument("--half-width", type=float, dest="half_width")
    p.add_argument("--t-final", type=float, dest="t_final")
    p.add_argument("--snapshots", help="comma-separated snapshot times")
    p.add_argument("--dt-factor", type=float, dest="dt_factor")
    p.add_argument("--dt", type=float, help="explicit time step (overrides the dt rule)")
    p.add_argument("--weight-offset", type=float, dest="weight_offset")
    p.add_argument("--weight-kind", choices=WEIGHT_CHOICES, dest="weight_kind")
    p.add_argument("--ic", choices=IC_CHOICES)
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--d1", type=float)
    p.add_argument("--d2", type=float)
    p.add_argument("--out")
    p.add_argument("--finest-dx", type=float, dest="finest_dx")
    p.add_argument("--seed", type=int)
    p.add_argument("--table", help="comma-separated element counts for a sweep")
    return p


def parse_config(argv=None) -> RunSpec:
    """RunSpec from defaults, then config file, then flags."""
    args = _build_parser().parse_args(argv)
    updates = {}
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            updates.update(parse_config_text(fh.read()))
    flag_values = {
        "num_elements": args.elements,
        "half_width": args.half_width,
        "t_final": args.t_final,
        "snapshot_times": None
        if args.snapshots is None
        else _parse_value("snapshots", args.snapshots),
        "dt_factor": args.dt_factor,
        "dt": args.dt,
        "weight_offset": args.weight_offset,
        "weight_kind": args.weight_kind,
        "ic": args.ic,
        "c1": args.c1,
        "c2": args.c2,
        "d1": args.d1,
        "d2": args.d2,
        "out": args.out,
        "finest_dx": args.finest_dx,
        "seed": args.seed,
        "table": None if args.table is None else _parse_value("table", args.table),
    }
    updates.update({k: v for k, v in flag_values.items() if v is not None})
    return RunSpec(**updates).validate()


def initial_condition(spec: RunSpec):
    """(u0 callable, exact(x, t) callable or None) for the chosen profile."""
    if spec.ic == "two-soliton":
        params = diag.TwoSolitonParams(spec.c1, spec.c2, spec.d1, spec.d2)

        def exact(x, t):
            return diag.two_soliton(x, t, params)

        return (lambda x: exact(x, 0.0)), exact
    if spec.ic == "single-soliton":

        def exact(x, t):
            return diag.single_soliton(x, t, spec.c1)

        return (lambda x: exact(x, 0.0)), exact
    return (lambda x: np.zeros_like(np.asarray(x, dtype=float))), None


def _weight(spec: RunSpec):
    return affine_weight(spec.weight_offset) if spec.weight_kind == "affine" else unit_weight()


def _scheme_config(spec: RunSpec) -> stepper.SchemeConfig:
    if spec.dt is not None:
        return stepper.SchemeConfig(dt=spec.dt, dt_rule=stepper.DT_EXPLICIT)
    return stepper.SchemeConfig(dt_rule=stepper.DT_PAPER, dt_factor=spec.dt_factor)


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.12g}"


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _snapshot_rows(spec: RunSpec, traj: stepper.Trajectory, exact):
    """DiagnosticsRow per snapshot time, t = 0 always included first."""
    times = [0.0] + sorted({float(t) for t in spec.snapshot_times} - {0.0})
    rows = {}
    base = None
    for t in times:
        coeffs = stepper.interpolant_coeffs(traj, t)
        q1, q2, q3 = diag.conserved(traj.mesh, coeffs)
        if base is None:
            base = (q1, q2, q3)
        rel = tuple(
            (q - q0) / q0 if q0 != 0.0 else 0.0 for q, q0 in zip((q1, q2, q3), base)
        )
        error = None
        if exact is not None:
            error = diag.relative_error(
                traj.mesh, coeffs, lambda x, t=t: exact(x, t), spec.resolved_finest_dx()
            )
        completed = [
            d.iterations for n, d in enumerate(traj.diagnostics) if (n + 1) * traj.dt <= t + 1e-9
        ]
        mean_iter = float(np.mean(completed)) if completed else 0.0
        rows[t] = diag.DiagnosticsRow(
            t=t, q1=q1, q2=q2, q3=q3, i1=rel[0], i2=rel[1], i3=rel[2],
            error=error, mean_iterations=mean_iter,
        )
    return [rows[t] for t in times], rows


def _plot_script(spec: RunSpec, snap_times, exact) -> str:
    lines = [
        "# gnuplot script: numerical vs exact profiles at the snapshot times",
        "set datafile separator ','",
        "set terminal pngcairo size 1200,500",
        "set output 'profiles.png'",
        "set xlabel 'x'",
        "set ylabel 'u'",
        f"set xrange [{-spec.half_width}:{spec.half_width}]",
    ]
    if exact is not None:
        xs = np.linspace(-spec.half_width, spec.half_width, 1024)
        for idx, t in enumerate(snap_times):
            lines.append(f"$exact_{idx} << EOD")
            for x, u in zip(xs, exact(xs, t)):
                lines.append(f"{_fmt(x)},{_fmt(u)}")
            lines.append("EOD")
    plots = []
    for idx, t in enumerate(snap_times):
        sel = f"(abs($1-{_fmt(t)})<1e-9?$2:1/0)"
        plots.append(f"'trajectory.csv' using {sel}:3 with lines title 'numerical t={_fmt(t)}'")
        if exact is not None:
            plots.append(f"$exact_{idx} using 1:2 with lines dt 2 title 'exact t={_fmt(t)}'")
    lines.append("plot \\")
    lines.append(", \\\n".join("  " + p for p in plots))
    return "\n".join(lines) + "\n"


def run_experiment(spec: RunSpec) -> dict:
    """Run one configuration and write trajectory/diagnostics/plot files."""
    spec.validate()
    mesh = make_mesh(spec.half_width, spec.num_elements)
    u0, exact = initial_condition(spec)
    traj = stepper.run(
        mesh, _weight(spec), _scheme_config(spec), u0, spec.t_final, spec.snapshot_times
    )
    rows, _ = _snapshot_rows(spec, traj, exact)
    snap_times = [row.t for row in rows]

    os.makedirs(spec.out, exist_ok=True)
    nodes = mesh.nodes
    traj_lines = ["t,x,u"]
    for t in snap_times:
        coeffs = stepper.interpolant_coeffs(traj, t)
        values = stepper.eval_fem(mesh, coeffs, nodes)
        for x, u in zip(nodes, values):
            traj_lines.append(f"{_fmt(t)},{_fmt(x)},{_fmt(u)}")
    diag_lines = ["t,Q1,Q2,Q3,I1,I2,I3,E,mean_iterations"]
    for row in rows:
        diag_lines.append(
            ",".join(
                [
                    _fmt(row.t), _fmt(row.q1), _fmt(row.q2), _fmt(row.q3),
                    _fmt(row.i1), _fmt(row.i2), _fmt(row.i3),
                    _fmt(row.error), _fmt(row.mean_iterations),
                ]
            )
        )
    paths = {
        "trajectory": os.path.join(spec.out, "trajectory.csv"),
        "diagnostics": os.path.join(spec.out, "diagnostics.csv"),
        "plot": os.path.join(spec.out, "plot.gp"),
    }
    _atomic_write(paths["trajectory"], "\n".join(traj_lines) + "\n")
    _atomic_write(paths["diagnostics"], "\n".join(diag_lines) + "\n")
    _atomic_write(paths["plot"], _plot_script(spec, snap_times, exact))
    return paths


def table_driver(element_counts, times, base: RunSpec) -> str:
    """Sweep element counts, write table.csv with E, rate and I1..I3.

    A failed run is recorded with an ERROR marker in its rows and the sweep
    continues with the remaining counts.
    """
    base.validate()
    times = sorted({float(t) for t in times})
    if not times:
        raise ConfigurationError("table mode needs at least one positive snapshot time")
    results = {}
    for n in element_counts:
        spec = replace(
            base,
            num_elements=int(n),
            table=(),
            t_final=max(times),
            snapshot_times=tuple(times),
        ).validate()
        mesh = make_mesh(spec.half_width, spec.num_elements)
        u0, exact = initial_condition(spec)
        try:
            traj = stepper.run(
                mesh, _weight(spec), _scheme_config(spec), u0, spec.t_final, times
            )
            _, rows = _snapshot_rows(spec, traj, exact)
            results[n] = rows
        except NonconvergenceError as exc:
            results[n] = exc

    lines = ["t,N,E,rate,I1,I2,I3"]
    for t in times:
        prev = None  # (N, E) of the previous successful run at this t
        for n in element_counts:
            outcome = results[n]
            if isinstance(outcome, NonconvergenceError):
                lines.append(f"{_fmt(t)},{n},ERROR,,,,")
                prev = None
                continue
            row = outcome[t]
            rate = None
            if prev is not None and row.error and prev[1]:
                rate = diag.conv_rate(prev[1], prev[0], row.error, n)
            lines.append(
                ",".join(
                    [
                        _fmt(t), str(n), _fmt(row.error), _fmt(rate),
                        _fmt(row.i1), _fmt(row.i2), _fmt(row.i3),
                    ]
                )
            )
            prev = (n, row.error)
    os.makedirs(base.out, exist_ok=True)
    path = os.path.join(base.out, "table.csv")
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def main(argv=None) -> int:
    try:
        spec = parse_config(argv)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    try:
        if spec.table:
            times = [t for t in spec.snapshot_times if t > 0] or [spec.t_final]
            path = table_driver(spec.table, times, spec)
            print(path)
        else:
            paths = run_experiment(spec)
            for path in paths.values():
                print(path)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonconvergenceError as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
