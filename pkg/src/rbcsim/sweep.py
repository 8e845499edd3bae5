"""Displacement sweeps, CSV persistence and static plots."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Dict, List, Optional, Sequence

from .config import ExperimentConfig
from .errors import SimulationError
from .foxli import mode_radius, solve_mode
from .power import output_beam_power, output_electrical_power

__all__ = ["SweepRecord", "SweepResult", "solve_point", "run_sweep", "emit_csv", "read_csv", "emit_plot", "plot_figure", "CSV_HEADER"]

log = logging.getLogger(__name__)

CSV_HEADER = (
    "displacement_m",
    "eta_t",
    "beam_power_w",
    "electrical_power_w",
    "iterations",
    "converged",
    "mode_radius_m",
)


@dataclass(frozen=True)
class SweepRecord:
    displacement: float
    eta_t: float
    beam_power: float
    electrical_power: float
    iterations: int
    converged: bool
    mode_radius: float  # 86.5 % enclosed-power radius, nan if undefined
    error: Optional[str] = None


@dataclass
class SweepResult:
    axis: str
    records: List[SweepRecord] = field(default_factory=list)
    metadata: Dict[str, str] = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> List[float]:
        return [getattr(r, name) for r in self.records]


def _version() -> str:
    from . import __version__

    return __version__


def solve_point(cfg: ExperimentConfig, displacement: float) -> SweepRecord:
    """Solve the mode with the receiver moved ``displacement`` along the sweep axis.

    Solver faults are caught and reported in the record instead of raised.
    """
    axis = cfg.sweep.axis
    d = {"dx": 0.0, "dy": 0.0, "dz": 0.0}
    d["d" + axis] = displacement
    try:
        geom = cfg.geometry.moved(**d)
        sol = solve_mode(geom, cfg.grid, cfg.foxli)
        eta = sol.eta_t
        pp = cfg.power_params()
        beam = output_beam_power(eta, pp)
        elec = output_electrical_power(eta, pp)
        radius = math.nan if sol.collapsed else mode_radius(sol).enclosed
        return SweepRecord(displacement, eta, beam, elec, sol.iterations_used, sol.converged, radius)
    except (SimulationError, ArithmeticError, ValueError) as exc:
        log.warning("sweep point %s = %g failed: %s", axis, displacement, exc)
        return SweepRecord(displacement, 0.0, 0.0, 0.0, 0, False, math.nan, f"{type(exc).__name__}: {exc}")


def _solve_star(args):
    return solve_point(*args)


def run_sweep(
    cfg: ExperimentConfig,
    threads: Optional[int] = None,
    timestamp: Optional[str] = None,
) -> SweepResult:
    """Solve every sweep point, in parallel when ``threads`` > 1.

    ``threads`` defaults to the processor count.  Records are ordered by
    displacement whatever the completion order.
    """
    points = cfg.sweep.displacements()
    workers = threads or os.cpu_count() or 1
    workers = max(1, min(workers, len(points)))
    if workers == 1:
        records = [solve_point(cfg, p) for p in points]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_solve_star, [(cfg, p) for p in points]))
    records.sort(key=lambda r: r.displacement)
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).replace(microsecond=0).isoformat()
    meta = {
        "config_sha256": cfg.digest(),
        "timestamp": timestamp,
        "software": f"rbcsim {_version()}",
        "axis": cfg.sweep.axis,
    }
    return SweepResult(cfg.sweep.axis, records, meta)


# -- CSV ---------------------------------------------------------------------


def _f(v: float) -> str:
    # 17 significant digits: exact round trip for any double
    return f"{v:.16e}"


def emit_csv(result: SweepResult, path) -> None:
    path = os.fspath(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for k, v in result.metadata.items():
                fh.write(f"# {k}: {v}\n")
            for r in result.records:
                if r.error:
                    fh.write(f"# error at {_f(r.displacement)}: {r.error}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in result.records:
                w.writerow(
                    [
                        _f(r.displacement),
                        _f(r.eta_t),
                        _f(r.beam_power),
                        _f(r.electrical_power),
                        r.iterations,
                        "true" if r.converged else "false",
                        _f(r.mode_radius),
                    ]
                )
    except OSError as exc:
        raise OSError(f"cannot write sweep CSV {path}: {exc}") from exc


def read_csv(path) -> SweepResult:
    path = os.fspath(path)
    meta: Dict[str, str] = {}
    errors: Dict[float, str] = {}
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        body = []
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(": ")
                if key.startswith("error at "):
                    errors[float(key[len("error at ") :])] = val
                else:
                    meta[key] = val
            else:
                body.append(line)
    reader = csv.reader(body)
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header {header}")
    for row in reader:
        d = float(row[0])
        rows.append(
            SweepRecord(
                d,
                float(row[1]),
                float(row[2]),
                float(row[3]),
                int(row[4]),
                row[5] == "true",
                float(row[6]),
                errors.get(d),
            )
        )
    return SweepResult(meta.get("axis", "x"), rows, meta)


# -- plots -------------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_figure(result: SweepResult):
    """Two stacked panels: efficiency, then beam and electrical power."""
    if not result.records:
        raise ValueError("nothing to plot: sweep result is empty")
    plt = _pyplot()

    lateral = result.axis in ("x", "y")
    scale, unit = (100.0, "cm") if lateral else (1.0, "m")
    xs = [r.displacement * scale for r in result.records]
    # a lone point gets a marker only, never a line
    style = dict(marker="o", linestyle="-" if len(xs) > 1 else "none")

    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
    ax1.plot(xs, result.column("eta_t"), color="C0", **style)
    ax1.set_ylabel("transmission efficiency")
    ax1.set_ylim(-0.02, 1.02)
    ax2.plot(xs, result.column("beam_power"), color="C1", label="beam power", **style)
    ax2.plot(xs, result.column("electrical_power"), color="C2", label="electrical power", **style)
    ax2.set_ylabel("power (W)")
    ax2.set_xlabel(f"receiver displacement along {result.axis} ({unit})")
    ax2.legend()
    for ax in (ax1, ax2):
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def emit_plot(result: SweepResult, path) -> None:
    """Write :func:`plot_figure` as SVG.

    Output is byte-identical for identical results: the SVG id salt is fixed
    and no date is embedded.
    """
    plt = _pyplot()
    with plt.rc_context({"svg.hashsalt": "rbcsim", "svg.fonttype": "path"}):
        fig = plot_figure(result)
        try:
            fig.savefig(os.fspath(path), format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)


def with_points(cfg: ExperimentConfig, **sweep) -> ExperimentConfig:
    """Copy of ``cfg`` with sweep fields replaced."""
    return replace(cfg, sweep=replace(cfg.sweep, **sweep))


def summarize(records: Sequence[SweepRecord]) -> str:
    return "\n".join(
        f"{r.displacement:+.4f} m  eta_t={r.eta_t:.6f}  P_beam={r.beam_power:.4f} W  "
        f"P_el={r.electrical_power:.4f} W  it={r.iterations}  conv={r.converged}"
        for r in records
    )
