"""Command-line entry point: ``rbcsim <subcommand> [options]``.

Subcommands
-----------
mode        solve one cavity mode and dump the field
sweep       displacement sweep, written as CSV (and SVG unless ``--no-plot``)
safety      radiant-exposure report
stability   ray-optics stability verdicts over a list of distances
raytrace    ray-capture counts for the configured cavity and its l = f twin
calibrate   small-signal gain that yields a target beam power

The output directory is ``--out``, else ``[output] directory`` from the
config, whose default comes from ``$RBCSIM_OUTPUT_DIR`` (fallback
``./results``).

Field dumps (``mode``) hold, for every grid sample in row-major order (y
slow, x fast), the four values ``x, y, |u|^2, arg u``.  ``--format csv``
writes them as text with a header; ``--format bin`` writes them as raw
little-endian float64, shape ``(n, n, 4)``, no header.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .errors import SimulationError
from .foxli import mode_radius, solve_mode
from .power import calibrate_gain, output_beam_power, output_electrical_power, radiant_exposure
from .rays import cavity_is_stable, cavity_path, count_captured, ftcr_focal_length, ray_fan
from .sweep import emit_csv, emit_plot, run_sweep, summarize

log = logging.getLogger("rbcsim")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.out:
        cfg = replace(cfg, output=replace(cfg.output, directory=args.out))
    if args.plot is not None:
        cfg = replace(cfg, output=replace(cfg.output, emit_plots=args.plot))
    return cfg


def _outdir(cfg: ExperimentConfig) -> str:
    os.makedirs(cfg.output.directory, exist_ok=True)
    return cfg.output.directory


def _write_rows(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def dump_field(field, path: str, fmt: str = "csv") -> None:
    """Write ``x, y, |u|^2, arg u`` per sample (layout in the module docstring)."""
    phys = field.physical()
    x, y = field.spec.coords()
    x = np.broadcast_to(x, phys.shape)
    y = np.broadcast_to(y, phys.shape)
    table = np.stack([x, y, np.abs(phys) ** 2, np.angle(phys)], axis=-1).astype("<f8")
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(np.ascontiguousarray(table).tobytes())
    else:
        np.savetxt(path, table.reshape(-1, 4), delimiter=",", header="x_m,y_m,intensity,phase_rad", comments="", fmt="%.17g")


# -- subcommands ----------------------------------------------------------------


def cmd_mode(args) -> int:
    cfg = _config(args)
    geom = cfg.geometry
    if any(v is not None for v in (args.dx, args.dy, args.dz)):
        d = geom.displacement
        geom = geom.moved(
            args.dx if args.dx is not None else d[0],
            args.dy if args.dy is not None else d[1],
            args.dz if args.dz is not None else d[2],
        )
    sol = solve_mode(geom, cfg.grid, cfg.foxli)
    pp = cfg.power_params()
    out = _outdir(cfg)
    rows = [
        ("eta_t", sol.eta_t),
        ("iterations", sol.iterations_used),
        ("converged", sol.converged),
        ("collapsed", sol.collapsed),
        ("beam_power_w", output_beam_power(sol.eta_t, pp)),
        ("electrical_power_w", output_electrical_power(sol.eta_t, pp)),
    ]
    if sol.oscillation_band:
        rows.append(("oscillation_band", f"{sol.oscillation_band[0]:.8f}..{sol.oscillation_band[1]:.8f}"))
    if not sol.collapsed:
        r = mode_radius(sol)
        rows += [("rms_radius_m", r.rms), ("enclosed_radius_m", r.enclosed)]
        ext = "bin" if args.format == "bin" else "csv"
        path = os.path.join(out, f"mode_field.{ext}")
        dump_field(sol.mode, path, args.format)
        rows.append(("field_dump", path))
    for k, v in rows:
        print(f"{k:20s} {v}")
    _write_rows(os.path.join(out, "mode_summary.csv"), ("quantity", "value"), rows)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    sw = cfg.sweep
    changes = {k: getattr(args, k) for k in ("axis", "start", "stop", "steps") if getattr(args, k) is not None}
    if args.point:
        changes["point"] = True
    if changes:
        cfg = replace(cfg, sweep=replace(sw, **changes))
    result = run_sweep(cfg, threads=args.threads)
    out = _outdir(cfg)
    stem = os.path.join(out, f"sweep_{cfg.sweep.axis}")
    emit_csv(result, stem + ".csv")
    print(summarize(result.records))
    print(f"wrote {stem}.csv")
    if cfg.output.emit_plots:
        emit_plot(result, stem + ".svg")
        print(f"wrote {stem}.svg")
    return 0


def cmd_safety(args) -> int:
    cfg = _config(args)
    s = cfg.safety
    if args.power is not None:
        s = replace(s, output_power=args.power)
    rep = radiant_exposure(s)
    rows = rep.rows(s)
    for name, sym, val, unit in rows:
        print(f"{name:32s} {sym:4s} {val:.4g} {unit}")
    print("compliant" if rep.compliant else "NOT compliant")
    _write_rows(
        os.path.join(_outdir(cfg), "safety.csv"),
        ("parameter", "symbol", "value", "unit"),
        [(n, sym, repr(v), u) for n, sym, v, u in rows] + [("Compliant", "", rep.compliant, "")],
    )
    return 0 if rep.compliant or not args.strict else 3


def cmd_stability(args) -> int:
    cfg = _config(args)
    g = cfg.geometry
    f_rr = ftcr_focal_length(g.tx)
    print(f"f_RR = {f_rr:.6g} m, boundary 4 f_RR = {4 * f_rr:.6g} m")
    rows = []
    for d in args.distances:
        v = cavity_is_stable(g.tx, g.rx, d)
        rows.append((repr(d), v.verdict, repr(v.margin)))
        print(f"d = {d:8.4f} m  {v.verdict:9s} margin {v.margin:+.4f} m")
    _write_rows(os.path.join(_outdir(cfg), "stability.csv"), ("distance_m", "verdict", "margin_m"), rows)
    return 0


def cmd_raytrace(args) -> int:
    cfg = _config(args)
    g = cfg.geometry
    fan = ray_fan(args.x_max, args.theta_max, args.rays)
    conventional = replace(g.tx, l=g.tx.f)
    conventional_rx = replace(g.rx, l=g.rx.f)
    rows = []
    for label, tx, rx in (("focusing", g.tx, g.rx), ("conventional", conventional, conventional_rx)):
        path = cavity_path(tx, rx, g.distance, g.offset[0], g.gain_radius)
        n = count_captured(fan, path, args.bounces)
        rows.append((label, repr(tx.l), len(fan), n))
        print(f"{label:13s} l = {tx.l * 1e3:.2f} mm  captured {n}/{len(fan)} after {args.bounces} round trips")
    _write_rows(os.path.join(_outdir(cfg), "raytrace.csv"), ("cavity", "l_m", "rays", "captured"), rows)
    return 0


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    g0 = calibrate_gain(cfg.power_params(), args.target, args.eta_t)
    print(f"g0_lg = {g0!r}")
    _write_rows(
        os.path.join(_outdir(cfg), "calibration.csv"),
        ("target_beam_power_w", "eta_t", "g0_lg"),
        [(repr(args.target), repr(args.eta_t), repr(g0))],
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, default=None, help="worker processes for sweeps (default: CPU count)")
    common.add_argument("--plot", action=argparse.BooleanOptionalAction, default=None, help="emit SVG plots")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rbcsim", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"rbcsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mode", parents=[common], help="solve one mode and dump the field")
    for ax in ("dx", "dy", "dz"):
        m.add_argument(f"--{ax}", type=float, help=f"receiver displacement {ax[1]} [m]")
    m.add_argument("--format", choices=("csv", "bin"), default="csv")
    m.set_defaults(func=cmd_mode)

    s = sub.add_parser("sweep", parents=[common], help="displacement sweep")
    s.add_argument("--axis", choices=("x", "y", "z"))
    s.add_argument("--start", type=float, help="first displacement [m]")
    s.add_argument("--stop", type=float, help="last displacement [m]")
    s.add_argument("--steps", type=int)
    s.add_argument("--point", action="store_true", help="single point at --start")
    s.set_defaults(func=cmd_sweep)

    sf = sub.add_parser("safety", parents=[common], help="radiant-exposure report")
    sf.add_argument("--power", type=float, help="output beam power [W]")
    sf.add_argument("--strict", action="store_true", help="exit 3 when not compliant")
    sf.set_defaults(func=cmd_safety)

    st = sub.add_parser("stability", parents=[common], help="stability verdicts")
    st.add_argument("--distances", type=float, nargs="+", default=[1.0, 2.0, 3.0, 3.5])
    st.set_defaults(func=cmd_stability)

    rt = sub.add_parser("raytrace", parents=[common], help="ray-capture counts")
    rt.add_argument("--rays", type=int, default=10, help="rays per fan axis")
    rt.add_argument("--x-max", type=float, default=2e-3)
    rt.add_argument("--theta-max", type=float, default=5e-3)
    rt.add_argument("--bounces", type=int, default=500)
    rt.set_defaults(func=cmd_raytrace)

    c = sub.add_parser("calibrate", parents=[common], help="gain for a target beam power")
    c.add_argument("--target", type=float, default=5.0, help="beam power [W]")
    c.add_argument("--eta-t", type=float, default=1.0)
    c.set_defaults(func=cmd_calibrate)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SimulationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
