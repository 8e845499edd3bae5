"""Fox-Li power iteration for the self-reproducing cavity mode."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import DegenerateFieldError, InvalidGeometryError, NumericFaultError
from .field import (
    ComplexFieldGrid,
    GridSpec,
    enclosed_power_radius,
    normalize,
    plane_wave,
    rms_radius,
    total_power,
)
from .wave import CavityGeometry, forward_carrier, round_trip

__all__ = ["FoxLiConfig", "ModeSolution", "ModeRadius", "seed_field", "solve_mode", "mode_radius"]

log = logging.getLogger(__name__)

COLLAPSE_POWER = 1e-30
SEED_KINDS = ("plane_wave", "plane_wave_perturbed")


@dataclass(frozen=True)
class FoxLiConfig:
    max_iterations: int = 2000
    tolerance: float = 1e-4
    stability_window: int = 10
    seed_kind: str = "plane_wave"
    perturbation: float = 1e-3
    seed: int = 12345
    method: str = "auto"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidGeometryError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise InvalidGeometryError("tolerance must be positive")
        if self.stability_window < 2:
            raise InvalidGeometryError("stability_window must be >= 2")
        if self.seed_kind not in SEED_KINDS:
            raise InvalidGeometryError(f"seed_kind must be one of {SEED_KINDS}, got {self.seed_kind!r}")


@dataclass
class ModeSolution:
    mode: ComplexFieldGrid
    eta_t: float
    iterations_used: int
    converged: bool
    eta_t_history: List[float] = field(default_factory=list)
    collapsed: bool = False
    oscillation_band: Optional[Tuple[float, float]] = None

    @property
    def gamma_magnitude(self) -> float:
        return float(np.sqrt(self.eta_t))


def seed_field(geom: CavityGeometry, grid: GridSpec, cfg: FoxLiConfig, start: str = "gain") -> ComplexFieldGrid:
    """Normalised plane wave travelling along the transmitter-receiver line.

    The perturbed variant adds low-amplitude complex noise from a fixed seed.
    """
    kx, ky = forward_carrier(geom)
    carrier = (kx, ky) if start in ("gain", "receiver") else (0.0, 0.0)
    u = plane_wave(grid, geom.wavelength, carrier=carrier)
    if cfg.seed_kind == "plane_wave_perturbed":
        rng = np.random.default_rng(cfg.seed)
        noise = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n))
        u = u.with_values(u.values + cfg.perturbation * noise)
    return normalize(u)


def _stable(history: List[float], window: int, tol: float) -> bool:
    if len(history) < window:
        return False
    tail = history[-window:]
    hi = max(tail)
    return hi == 0.0 or (hi - min(tail)) <= tol * hi


def solve_mode(
    geom: CavityGeometry,
    grid: GridSpec,
    cfg: FoxLiConfig = FoxLiConfig(),
    start: str = "gain",
    initial: Optional[ComplexFieldGrid] = None,
) -> ModeSolution:
    """Iterate ``u <- normalize(T u)`` until the per-pass power ratio settles.

    ``eta_t`` is the last one-round-trip power ratio.  A run whose field power
    drops below ``1e-30`` is reported as converged with ``eta_t = 0`` and
    ``collapsed = True``.
    """
    grid.check_guard_band(geom.max_aperture_radius)
    u = normalize(initial) if initial is not None else seed_field(geom, grid, cfg, start)
    history: List[float] = []
    for it in range(1, cfg.max_iterations + 1):
        v = round_trip(u, geom, cfg.method, start)
        p = total_power(v)
        if not np.isfinite(p):
            raise NumericFaultError(f"non-finite power at iteration {it}")
        if p < COLLAPSE_POWER:
            log.info("field collapsed at iteration %d", it)
            history.append(0.0)
            return ModeSolution(u, 0.0, it, True, history, collapsed=True)
        history.append(p)
        u = v.with_values(v.values / np.sqrt(p))
        if _stable(history, cfg.stability_window, cfg.tolerance):
            return ModeSolution(u, min(p, 1.0), it, True, history)
    tail = history[-cfg.stability_window :]
    band = (min(tail), max(tail))
    log.warning("Fox-Li did not converge in %d iterations; last band %s", cfg.max_iterations, band)
    return ModeSolution(u, min(history[-1], 1.0), cfg.max_iterations, False, history, oscillation_band=band)


@dataclass(frozen=True)
class ModeRadius:
    rms: float
    enclosed: float  # radius holding 86.5 % of the power


def mode_radius(sol: ModeSolution) -> ModeRadius:
    if sol.collapsed or sol.eta_t <= 0:
        raise DegenerateFieldError("mode collapsed; no radius defined")
    return ModeRadius(rms_radius(sol.mode), enclosed_power_radius(sol.mode))
