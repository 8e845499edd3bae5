"""Laser output-power model and radiant-exposure safety check.

The output power follows the standard rate-equation result for a laser with
distributed losses: a saturation-intensity prefactor, an output-coupling
efficiency that depends on the per-leg loss factors, and a gain bracket that
vanishes at threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

from .errors import ConfigError, UnboundedPowerError

__all__ = [
    "PowerModelParams",
    "SafetyParams",
    "ExposureReport",
    "GAIN_PRESETS",
    "CALIBRATED_G0_LG",
    "ETA_G_G0_LG",
    "leg_factors",
    "round_trip_log_loss",
    "output_beam_power",
    "output_electrical_power",
    "electrical_power_factored",
    "excitation_efficiency",
    "extraction_efficiency",
    "threshold_power",
    "calibrate_gain",
    "overlap_efficiency",
    "radiant_exposure",
]

#: g0*l_g obtained by inverting the output-power formula for a 5 W beam at
#: eta_t = 1 with the default parameters.
CALIBRATED_G0_LG = 0.23580925798357721

#: g0*l_g implied by the tabulated excitation efficiency (0.72); below threshold.
ETA_G_G0_LG = 0.72 * 37.3 / (math.pi * 2.8e-3**2 * 1.26e7)

GAIN_PRESETS = {"calibrated": CALIBRATED_G0_LG, "eta_g": ETA_G_G0_LG}

VSplit = Union[str, Tuple[float, float, float, float]]


def _fraction(name: str, value: float, allow_zero: bool = False) -> None:
    lo_ok = value >= 0 if allow_zero else value > 0
    if not (lo_ok and value <= 1):
        interval = "[0, 1]" if allow_zero else "(0, 1]"
        raise ConfigError(f"{name} must lie in {interval}, got {value}")


@dataclass(frozen=True)
class PowerModelParams:
    """Inputs of the output-power model (SI units).

    ``v_split`` is ``"symmetric"`` (each leg factor ``eta_t ** 0.25``) or an
    explicit ``(V1, V2, V3, V4)`` tuple whose product must equal ``eta_t``.
    """

    p_in: float = 37.3
    i_s: float = 1.26e7
    reflectivity: float = 0.9
    v_s: float = 0.88
    g0_lg: float = CALIBRATED_G0_LG
    gain_radius: float = 2.8e-3
    eta_b: float = 1.0
    eta_pv: float = 0.12
    v_split: VSplit = "symmetric"

    def __post_init__(self):
        for name in ("reflectivity", "v_s", "eta_b"):
            _fraction(name, getattr(self, name))
        _fraction("eta_pv", self.eta_pv, allow_zero=True)
        for name in ("p_in", "i_s", "g0_lg", "gain_radius"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if isinstance(self.v_split, str):
            if self.v_split != "symmetric":
                raise ConfigError(f"unknown v_split rule {self.v_split!r}")
        else:
            legs = tuple(float(v) for v in self.v_split)
            if len(legs) != 4:
                raise ConfigError("v_split needs four factors (V1, V2, V3, V4)")
            for i, v in enumerate(legs, 1):
                _fraction(f"V{i}", v)
            object.__setattr__(self, "v_split", legs)

    @property
    def gain_area(self) -> float:
        return math.pi * self.gain_radius**2

    @property
    def beam_area(self) -> float:
        return self.eta_b * self.gain_area


def leg_factors(eta_t: float, p: PowerModelParams) -> Tuple[float, float, float, float]:
    """Per-leg loss factors ``(V1, V2, V3, V4)`` for a round-trip efficiency."""
    if isinstance(p.v_split, str):
        v = eta_t**0.25
        return v, v, v, v
    legs = p.v_split
    prod = legs[0] * legs[1] * legs[2] * legs[3]
    if abs(prod - eta_t) > 1e-12:
        raise ConfigError(f"leg factors multiply to {prod}, not eta_t = {eta_t}")
    return legs


def _check_eta(eta_t: float) -> None:
    if not (0.0 <= eta_t <= 1.0) or math.isnan(eta_t):
        raise ValueError(f"eta_t must lie in [0, 1], got {eta_t}")


def round_trip_log_loss(eta_t: float, p: PowerModelParams) -> float:
    """``|ln sqrt(R V_S^2 eta_t)|``, the single-pass logarithmic loss."""
    return abs(0.5 * math.log(p.reflectivity * p.v_s**2 * eta_t))


def extraction_efficiency(eta_t: float, p: PowerModelParams) -> float:
    """Fraction of the stored power leaving through the output mirror."""
    v1, v2, v3, _ = leg_factors(eta_t, p)
    r = p.reflectivity
    denom = 1.0 - r * v2 * v3 + math.sqrt(r * eta_t) * (1.0 / (v1 * v2 * p.v_s) - p.v_s)
    return p.eta_b * (1.0 - r) * v2 / denom


def excitation_efficiency(p: PowerModelParams) -> float:
    return p.gain_area * p.i_s * p.g0_lg / p.p_in


def output_beam_power(eta_t: float, p: PowerModelParams) -> float:
    """Beam power leaving the receiver mirror [W]; zero below threshold."""
    _check_eta(eta_t)
    if eta_t == 0.0:
        return 0.0
    bracket = p.g0_lg - round_trip_log_loss(eta_t, p)
    if bracket <= 0.0:
        return 0.0
    # extraction_efficiency already carries eta_b = A_b / A_g.
    return p.gain_area * p.i_s * extraction_efficiency(eta_t, p) * bracket


def output_electrical_power(eta_t: float, p: PowerModelParams) -> float:
    return p.eta_pv * output_beam_power(eta_t, p)


def threshold_power(eta_t: float, p: PowerModelParams) -> float:
    """Input power needed to reach lasing [W]; ``math.inf`` when ``eta_t == 0``."""
    _check_eta(eta_t)
    if eta_t == 0.0:
        return math.inf
    return round_trip_log_loss(eta_t, p) * p.p_in / p.g0_lg


def electrical_power_factored(eta_t: float, p: PowerModelParams) -> float:
    """Same quantity as :func:`output_electrical_power`, written as the chain
    ``eta_pv * eta_e * eta_g * (P_in - P_th)``."""
    _check_eta(eta_t)
    if eta_t == 0.0:
        return 0.0
    p_th = threshold_power(eta_t, p)
    if p_th >= p.p_in:
        return 0.0
    return p.eta_pv * extraction_efficiency(eta_t, p) * excitation_efficiency(p) * (p.p_in - p_th)


def calibrate_gain(p: PowerModelParams, target_beam_power: float, eta_t: float = 1.0) -> float:
    """``g0*l_g`` that makes :func:`output_beam_power` hit ``target_beam_power``.

    The model is affine in ``g0*l_g`` above threshold, so the inverse is exact.
    """
    if not target_beam_power > 0:
        raise ValueError(f"target beam power must be positive, got {target_beam_power}")
    _check_eta(eta_t)
    if eta_t == 0.0:
        raise ValueError("no finite gain lases with eta_t = 0")
    slope = p.gain_area * p.i_s * extraction_efficiency(eta_t, p)
    if slope <= 0:
        raise ValueError("target unreachable: output coupling is zero")
    return round_trip_log_loss(eta_t, p) + target_beam_power / slope


def overlap_efficiency(beam_radius: float, gain_radius: float) -> float:
    """``A_b / A_g`` for a beam of the given radius, capped at 1."""
    return min(1.0, (beam_radius / gain_radius) ** 2)


@dataclass(frozen=True)
class SafetyParams:
    """Inputs of the beam-interruption exposure estimate (SI units).

    ``beam_area`` defaults to a 7 mm radius disc, the receiver aperture.
    """

    output_power: float = 5.0
    reflectivity: float = 0.9
    cavity_length: float = 2.0
    light_speed: float = 3e8
    beam_area: float = math.pi * 7e-3**2
    mpe: float = 1000.0

    def __post_init__(self):
        if self.output_power < 0:
            raise ConfigError(f"output_power must be >= 0, got {self.output_power}")
        if not self.reflectivity > 0:
            raise ConfigError(f"reflectivity must be positive, got {self.reflectivity}")
        for name in ("cavity_length", "light_speed", "beam_area", "mpe"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class ExposureReport:
    stored_power: float  # P_s [W]
    storage_time: float  # t_s [s]
    radiant_exposure: float  # E_r [J/m^2]
    mpe: float
    compliant: bool

    def rows(self, s: Optional[SafetyParams] = None) -> Sequence[Tuple[str, str, float, str]]:
        """(parameter, symbol, value, unit) rows for reporting."""
        out = []
        if s is not None:
            out += [
                ("Cavity length", "L", s.cavity_length, "m"),
                ("Light speed", "c", s.light_speed, "m/s"),
            ]
        out.append(("Storage time", "t_s", self.storage_time, "s"))
        if s is not None:
            out.append(("Output beam power", "P_o", s.output_power, "W"))
        out.append(("Intra-cavity stored power", "P_s", self.stored_power, "W"))
        if s is not None:
            out.append(("Beam cross-sectional area", "A_r", s.beam_area, "m^2"))
        out += [
            ("Beam radiant exposure", "E_r", self.radiant_exposure, "J/m^2"),
            ("Maximum permissible exposure", "E_m", self.mpe, "J/m^2"),
        ]
        return out


def radiant_exposure(s: SafetyParams) -> ExposureReport:
    """Energy per area delivered to an object that cuts the beam.

    Circulating power ``P_o / (1 - R)`` persists for one transit ``L / c``
    before the resonance collapses.
    """
    if s.reflectivity >= 1:
        raise UnboundedPowerError(f"reflectivity {s.reflectivity} >= 1: circulating power is unbounded")
    p_s = s.output_power / (1.0 - s.reflectivity)
    t_s = s.cavity_length / s.light_speed
    e_r = p_s * t_s / s.beam_area
    return ExposureReport(p_s, t_s, e_r, s.mpe, e_r <= s.mpe)
