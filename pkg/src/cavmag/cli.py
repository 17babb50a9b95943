"""Command-line interface: config ingestion, scenario runs, CSV output.

Subcommands mirror the measurement families: ``steady`` (branch table at one
power), ``sweep`` (hysteretic parameter sweep), ``spectrum`` (probe
transmission), ``shift`` (polariton shift vs power), ``linear`` (Kerr-free
cross-check).  Output is deterministic CSV: LF endings, floats at 12
significant digits, summary lines as ``#`` comments.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import model, probe, steady, sweep
from .model import SystemParams, build_system

CONFIG_KEYS = {
    "omega_c_ghz", "gamma_c_mhz", "omega_d_ghz",
    "omega_1_ghz", "gamma_1_mhz", "g_1_mhz", "u_1_nhz",
    "omega_2_ghz", "gamma_2_mhz", "g_2_mhz", "u_2_nhz",
    "power_mw", "rabi_override",
    "sphere_diameter_mm", "spin_density_per_m3", "total_spin",
}

SWEEP_UNITS = {
    "power": ("power_mw", lambda v: v * 1e-3, lambda v: v * 1e3),
    "omega_d": ("omega_d_ghz", lambda v: model.angular(v * 1e9),
                lambda v: model.cycles(v) / 1e9),
    "omega_c": ("omega_c_ghz", lambda v: model.angular(v * 1e9),
                lambda v: model.cycles(v) / 1e9),
    "gamma_c": ("gamma_c_mhz", lambda v: model.rate_from_linewidth(v * 1e6),
                lambda v: model.linewidth_from_rate(v) / 1e6),
}


class ConfigError(ValueError):
    """Config file problem, with file/line context in the message."""


def resolve_config_path(name: str) -> Path:
    """Accept a filesystem path or the bare name of a bundled config."""
    p = Path(name)
    if p.exists():
        return p
    bundled = resources.files("cavmag") / "configs" / name
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"config not found: {name}")


def parse_config(path: Path) -> dict[str, float]:
    """Parse ``key = value`` lines; unknown keys are rejected."""
    values: dict[str, float] = {}
    text = path.read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = float(val.strip())
        except ValueError:
            raise ConfigError(
                f"{path}:{lineno}: invalid number {val.strip()!r}") from None
    return values


def load_params(config: str, power_mw: float | None = None) -> SystemParams:
    """Build system parameters from a config file, with optional power override."""
    cfg = parse_config(resolve_config_path(config))
    if power_mw is not None:
        cfg.pop("rabi_override", None)
        cfg["power_mw"] = power_mw
    if "power_mw" not in cfg and "rabi_override" not in cfg:
        raise ConfigError(f"{config}: set power_mw (or pass --power) "
                          "or rabi_override")
    try:
        return build_system(**cfg)
    except (TypeError, model.ParameterError) as exc:
        raise ConfigError(f"{config}: {exc}") from exc


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if np.isnan(v):
        return ""
    return f"{v:.12g}"


def write_table(stream, header: list[str], rows, comments=()) -> None:
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(_fmt(v) for v in row) + "\n")
    for line in comments:
        stream.write(f"# {line}\n")


STEADY_HEADER = ["x_magnons", "re_m1", "im_m1", "re_m2", "im_m2",
                 "re_a", "im_a", "residual_rad_s", "stable",
                 "max_re_eig_rad_s"]


def _branch_row(b: steady.SteadyBranch):
    m2 = (None, None) if b.m2 is None else (b.m2.real, b.m2.imag)
    return [b.x, b.m1.real, b.m1.imag, m2[0], m2[1], b.a.real, b.a.imag,
            b.residual, b.stable, float(b.eigenvalues.real.max())]


def cmd_steady(args, out) -> int:
    params = load_params(args.config, args.power)
    branches = steady.solve_steady(params)
    rows = [_branch_row(b) for b in branches]
    comments = [f"stable branches: {sum(b.stable for b in branches)} "
                f"of {len(branches)}"]
    write_table(out, STEADY_HEADER, rows, comments)
    return 0


def cmd_linear(args, out) -> int:
    params = load_params(args.config, args.power)
    x_lin = steady.linear_spin_current(params)
    kerr_free = SystemParams(
        constants=params.constants, cavity=params.cavity,
        magnons=tuple(model.MagnonMode(m.omega, m.gamma, m.coupling, 0.0)
                      for m in params.magnons),
        drive=params.drive)
    branches = steady.solve_two_yig(kerr_free)
    x_poly = branches[0].x if len(branches) == 1 else float("nan")
    denom = max(abs(x_lin), abs(x_poly))
    rel = abs(x_lin - x_poly) / denom if denom > 0 else 0.0
    write_table(out, ["x_linear", "x_poly_u0", "rel_diff"],
                [[x_lin, x_poly, rel]])
    return 0


def _sweep_spec_from_args(args) -> sweep.SweepSpec:
    col, to_internal, _ = SWEEP_UNITS[args.param]
    return sweep.SweepSpec(parameter=args.param,
                           start=to_internal(args.sweep_from),
                           stop=to_internal(args.sweep_to),
                           points=args.points,
                           direction=args.direction)


def cmd_sweep(args, out) -> int:
    params = load_params(args.config, args.power)
    spec = _sweep_spec_from_args(args)
    col, _, to_cli = SWEEP_UNITS[args.param]
    traces = sweep.run_sweep(params, spec)
    rows = []
    comments = []
    for tr in traces:
        jump_idx = {j.index for j in tr.jumps}
        counts = tr.stable_counts()
        for k, (v, b) in enumerate(zip(tr.values, tr.selected)):
            rows.append([tr.direction, to_cli(v), b.x, int(counts[k]),
                         k in jump_idx])
        for j in tr.jumps:
            mid = 0.5 * (to_cli(j.value_before) + to_cli(j.value_after))
            half = 0.5 * abs(to_cli(j.value_after) - to_cli(j.value_before))
            comments.append(
                f"{tr.direction} jump near {col} = {_fmt(mid)} +- {_fmt(half)}"
                f" (x: {_fmt(j.x_before)} -> {_fmt(j.x_after)})")
    if spec.direction == "both":
        report = sweep.classify_regime(params, spec)
        comments.append(f"regime: {report.regime} "
                        f"(max stable branches: {report.max_stable_count})")
        comments.append(f"up jumps: {report.up_jump_count}, "
                        f"down jumps: {report.down_jump_count}")
        for lo, hi in report.hysteresis_window:
            comments.append(f"hysteresis window {col}: "
                            f"[{_fmt(to_cli(lo))}, {_fmt(to_cli(hi))}]")
    write_table(out, ["direction", col, "x_selected", "n_stable", "jump"],
                rows, comments)
    return 0


def _parse_grid(text: str, params: SystemParams) -> probe.ProbeSpec:
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigError("--grid expects FROM:TO:POINTS in MHz") from None
    return probe.ProbeSpec(delta=np.linspace(model.angular(lo * 1e6),
                                             model.angular(hi * 1e6), n))


def cmd_spectrum(args, out) -> int:
    params = load_params(args.config, args.power)
    spec = (probe.default_probe_spec(params) if args.grid is None
            else _parse_grid(args.grid, params))
    branches = steady.solve_steady(params)
    stable = [b for b in branches if b.stable]
    if args.branch == "all":
        chosen = list(enumerate(stable))
    else:
        try:
            idx = int(args.branch)
        except ValueError:
            raise ConfigError("--branch expects an index or 'all'") from None
        if not 0 <= idx < len(stable):
            raise ConfigError(
                f"branch {idx} not available; stable branches: "
                + (", ".join(f"{i} (x={_fmt(b.x)})"
                             for i, b in enumerate(stable)) or "none"))
        chosen = [(idx, stable[idx])]
    rows = []
    comments = []
    for i, b in chosen:
        spectrum = (probe.response_two(params, b, spec)
                    if params.n_magnons == 2
                    else probe.response_single(params, b, spec))
        for d, t, m2 in zip(spectrum.delta, spectrum.transmission,
                            spectrum.magnitude2):
            rows.append([i, model.cycles(d) / 1e6, t.real, t.imag, m2])
        peaks = probe.extract_peaks(spectrum)
        for label, pos, h in zip(peaks.labels, peaks.delta, peaks.height):
            comments.append(
                f"peak branch {i}: {label} delta_mhz={_fmt(model.cycles(pos) / 1e6)}"
                f" height={_fmt(h)}")
    write_table(out, ["branch", "delta_mhz", "re_t", "im_t", "t_squared"],
                rows, comments)
    return 0


def cmd_shift(args, out) -> int:
    params = load_params(args.config, args.power)
    powers = np.linspace(args.sweep_from * 1e-3, args.sweep_to * 1e-3,
                         args.points)
    directions = (["up", "down"] if args.direction == "both"
                  else [args.direction])
    rows = []
    comments = []
    for direction in directions:
        curve = probe.shift_vs_power(params, powers, args.sigma, direction)
        for p, s in zip(curve.power, curve.shift):
            rows.append([direction, p * 1e3,
                         None if np.isnan(s) else model.cycles(s) / 1e6])
        for k, p_before, p_after in curve.jumps:
            mid = 0.5 * (p_before + p_after) * 1e3
            half = 0.5 * abs(p_after - p_before) * 1e3
            comments.append(f"{direction} shift jump near power_mw = "
                            f"{_fmt(mid)} +- {_fmt(half)}")
        n_gaps = int(np.isnan(curve.shift).sum())
        if n_gaps:
            comments.append(f"warning: {curve.sigma} peak unresolved at "
                            f"{n_gaps} points ({direction})")
        finite = curve.shift[np.isfinite(curve.shift)]
        if finite.size:
            comments.append(f"max |shift| ({direction}): "
                            f"{_fmt(np.abs(finite).max() / (2 * np.pi) / 1e6)} MHz")
    if args.direction == "both":
        spec = sweep.SweepSpec(parameter="power",
                               start=args.sweep_from * 1e-3,
                               stop=args.sweep_to * 1e-3,
                               points=args.points, direction="both")
        report = sweep.classify_regime(params, spec)
        comments.append(f"regime: {report.regime} "
                        f"(max stable branches: {report.max_stable_count})")
    write_table(out, ["direction", "power_mw", "shift_mhz"], rows, comments)
    return 0


PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Plot a cavmag CSV ({kind}). Usage: python {name} [csv_path]\"\"\"
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv!r}
rows = []
with open(path, newline="") as fh:
    reader = csv.reader(line for line in fh if not line.startswith("#"))
    header = next(reader)
    for row in reader:
        rows.append(row)

cols = {{name: i for i, name in enumerate(header)}}
x_col, y_col, series_col = {x!r}, {y!r}, {series!r}
series = sorted({{r[cols[series_col]] for r in rows}}) if series_col else [None]
fig, ax = plt.subplots()
for s in series:
    pts = [(float(r[cols[x_col]]), float(r[cols[y_col]]))
           for r in rows
           if (series_col is None or r[cols[series_col]] == s)
           and r[cols[y_col]] != ""]
    if not pts:
        continue
    xs, ys = zip(*pts)
    ax.plot(xs, ys, label=None if s is None else f"{{series_col}}={{s}}")
ax.set_xlabel(x_col)
ax.set_ylabel(y_col)
{yscale}
if series_col:
    ax.legend()
fig.tight_layout()
plt.show()
"""

PLOT_AXES = {
    "sweep": ("sweep", "x_selected", "direction", "ax.set_yscale('log')"),
    "spectrum": ("delta_mhz", "t_squared", "branch", ""),
    "shift": ("power_mw", "shift_mhz", "direction", ""),
}


def _emit_plot_script(kind: str, script_path: Path, csv_path: Path,
                      x_col: str) -> None:
    x, y, series, yscale = PLOT_AXES[kind]
    if kind == "sweep":
        x = x_col
    script_path.write_text(PLOT_SCRIPT.format(
        kind=kind, name=script_path.name, csv=str(csv_path),
        x=x, y=y, series=series, yscale=yscale))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavmag",
        description="Steady states, hysteresis sweeps and probe spectra of "
                    "Kerr-nonlinear magnon polaritons.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, power=True):
        p.add_argument("--config", required=True,
                       help="config file path or bundled config name")
        if power:
            p.add_argument("--power", type=float, default=None,
                           help="drive power in mW (overrides the config)")
        p.add_argument("--output", type=Path, default=None,
                       help="write CSV here instead of stdout")
        p.add_argument("--plot-script", type=Path, default=None,
                       help="also emit a matplotlib script reading the CSV "
                            "(requires --output)")

    p = sub.add_parser("steady", help="steady-state branch table")
    common(p)

    p = sub.add_parser("sweep", help="hysteretic parameter sweep")
    common(p)
    p.add_argument("--param", required=True, choices=sorted(SWEEP_UNITS),
                   help="swept parameter")
    p.add_argument("--from", dest="sweep_from", type=float, required=True,
                   help="start (mW / GHz / MHz per parameter)")
    p.add_argument("--to", dest="sweep_to", type=float, required=True)
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--direction", choices=["up", "down", "both"],
                   default="both")

    p = sub.add_parser("spectrum", help="probe transmission spectrum")
    common(p)
    p.add_argument("--branch", default="all",
                   help="stable branch index, or 'all'")
    p.add_argument("--grid", default=None,
                   help="probe grid FROM:TO:POINTS in MHz (detuning "
                        "from the drive)")

    p = sub.add_parser("shift", help="polariton shift vs drive power")
    common(p)
    p.add_argument("--sigma", required=True, choices=list(probe.SIGMAS))
    p.add_argument("--from", dest="sweep_from", type=float, required=True,
                   help="start power in mW")
    p.add_argument("--to", dest="sweep_to", type=float, required=True)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--direction", choices=["up", "down", "both"],
                   default="both")

    p = sub.add_parser("linear", help="Kerr-free spin current cross-check")
    common(p)
    return parser


COMMANDS = {
    "steady": cmd_steady,
    "sweep": cmd_sweep,
    "spectrum": cmd_spectrum,
    "shift": cmd_shift,
    "linear": cmd_linear,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.plot_script is not None and args.output is None:
        print("error: --plot-script requires --output", file=sys.stderr)
        return 2
    try:
        if args.output is not None:
            with open(args.output, "w", newline="\n") as fh:
                status = COMMANDS[args.command](args, fh)
        else:
            status = COMMANDS[args.command](args, sys.stdout)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (model.ParameterError, steady.DegenerateCouplingError,
            steady.RootSearchError, sweep.NoStableBranchError,
            ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.plot_script is not None and args.command in PLOT_AXES:
        col = SWEEP_UNITS[args.param][0] if args.command == "sweep" else ""
        _emit_plot_script(args.command, args.plot_script, args.output, col)
    return status


if __name__ == "__main__":
    sys.exit(main())
