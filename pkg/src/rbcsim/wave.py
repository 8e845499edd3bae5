"""Field-transfer operators of the double-retroreflector cavity.

Free space uses the angular-spectrum transfer function with evanescent
components removed.  Lateral receiver offsets are applied as spectral phase
ramps.  Every operator respects the field carrier (see :mod:`rbcsim.field`),
so tilted beams between laterally offset retroreflectors are handled on the
same coarse grid as on-axis ones.

The retroreflector operator has two interchangeable implementations:

``"direct"``
    The eight elementary steps (propagate f, lens, propagate l, mirror,
    mirror, propagate l, lens, propagate f) on a single grid.  Requires the
    grid pitch to resolve the lens phase over the whole aperture.
``"fourier"``
    Same steps, but the lens-to-focal-plane legs are evaluated as exact
    Fresnel transforms onto a fine auxiliary grid around the focus, where the
    mirror sits.  The lens phase cancels analytically, so coarse grids work.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Tuple

import numpy as np
import scipy.fft as sfft

from .errors import AliasingRiskError, InvalidDistanceError, InvalidGeometryError, ShiftOverflowError
from .field import ComplexFieldGrid, GridSpec, check_finite, total_power
from .rays import FtcrGeometry

__all__ = [
    "CavityGeometry",
    "LegFactors",
    "propagation_kernel",
    "shift_kernel",
    "propagate",
    "shift",
    "free_space_leg",
    "apply_gain_aperture",
    "apply_mirror",
    "apply_lens",
    "lens_phase",
    "ftcr_reflect",
    "round_trip",
    "round_trip_legs",
    "forward_carrier",
    "resolve_method",
]

METHODS = ("auto", "direct", "fourier")


@dataclass(frozen=True)
class CavityGeometry:
    """Transmitter and receiver retroreflectors plus the gain aperture.

    The receiver's front focal plane sits at ``initial_position +
    displacement`` relative to the transmitter's, which coincides with the
    gain-medium front surface.
    """

    tx: FtcrGeometry = FtcrGeometry()
    rx: FtcrGeometry = FtcrGeometry()
    gain_radius: float = 2.8e-3
    reflectivity: float = 0.9
    initial_position: Tuple[float, float, float] = (0.0, 0.0, 2.0)
    displacement: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    wavelength: float = 1064e-9

    def __post_init__(self):
        object.__setattr__(self, "initial_position", tuple(float(v) for v in self.initial_position))
        object.__setattr__(self, "displacement", tuple(float(v) for v in self.displacement))
        if len(self.initial_position) != 3 or len(self.displacement) != 3:
            raise InvalidGeometryError("positions must have three components")
        if not self.gain_radius > 0:
            raise InvalidGeometryError(f"gain_radius must be positive, got {self.gain_radius}")
        if not 0 < self.reflectivity < 1:
            raise InvalidGeometryError(f"reflectivity R must lie in (0, 1), got {self.reflectivity}")
        if not self.wavelength > 0:
            raise InvalidGeometryError(f"wavelength must be positive, got {self.wavelength}")
        if not self.distance > 0:
            raise InvalidDistanceError(
                f"transmitter-receiver separation z0 + dz must be positive, got {self.distance}"
            )

    @property
    def offset(self) -> Tuple[float, float]:
        x0, y0, _ = self.initial_position
        dx, dy, _ = self.displacement
        return x0 + dx, y0 + dy

    @property
    def distance(self) -> float:
        return self.initial_position[2] + self.displacement[2]

    @property
    def max_aperture_radius(self) -> float:
        return max(self.tx.r, self.rx.r, self.gain_radius)

    def moved(self, dx: float = 0.0, dy: float = 0.0, dz: float = 0.0) -> "CavityGeometry":
        return replace(self, displacement=(dx, dy, dz))


# -- kernels -----------------------------------------------------------------


def _tan_from_carrier(carrier, wavelength) -> Tuple[float, float]:
    sx, sy = wavelength * carrier[0], wavelength * carrier[1]
    c = 1.0 - sx * sx - sy * sy
    if c <= 0:
        raise InvalidGeometryError("carrier lies outside the propagating band")
    c = math.sqrt(c)
    return sx / c, sy / c


def propagation_kernel(spec: GridSpec, wavelength: float, distance: float, carrier=(0.0, 0.0)) -> np.ndarray:
    """Angular-spectrum transfer function ``H`` on the unshifted FFT layout.

    Frequencies are offset by ``carrier``; evanescent components are zeroed.
    The returned array is cached and read-only.
    """
    return _propagation_kernel(spec, float(wavelength), float(distance), (float(carrier[0]), float(carrier[1])))


@lru_cache(maxsize=64)
def _propagation_kernel(spec, wavelength, distance, carrier):
    nx, ny = spec.frequencies()
    fx = nx + carrier[0]
    fy = ny + carrier[1]
    q = wavelength**2 * (fx * fx + fy * fy)
    prop = q < 1.0
    root = np.sqrt(np.where(prop, 1.0 - q, 0.0))
    k = 2 * np.pi / wavelength
    # kd*sqrt(1-q) = kd - kd*q/(1+sqrt(1-q)); the second form keeps precision.
    phase = -k * distance * q / (1.0 + root)
    global_phase = np.exp(2j * np.pi * _cycles(distance, wavelength))
    return _frozen(np.where(prop, global_phase * np.exp(1j * phase), 0.0))


def _cycles(distance: float, wavelength: float) -> float:
    """Fractional part of ``distance / wavelength``, evaluated exactly.

    Plain floating point loses ~1e-9 rad on a 1e7 rad phase, enough to break
    ``H(d1) H(d2) == H(d1 + d2)`` at the 1e-10 level.
    """
    return float((Fraction(distance) / Fraction(wavelength)) % 1)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def shift_kernel(spec: GridSpec, sx: float, sy: float, carrier=(0.0, 0.0)) -> np.ndarray:
    """Spectral ramp translating the field content by ``(sx, sy)``."""
    nx, ny = spec.frequencies()
    ramp = np.exp(-2j * np.pi * (nx * sx + ny * sy))
    # Carrier part of the ramp is a global phase.
    return ramp * np.exp(-2j * np.pi * (carrier[0] * sx + carrier[1] * sy))


def _spectral(field: ComplexFieldGrid, kernel: np.ndarray) -> ComplexFieldGrid:
    out = sfft.ifft2(sfft.fft2(field.values) * kernel)
    check_finite(out)
    return field.with_values(out)


def propagate(field: ComplexFieldGrid, distance: float) -> ComplexFieldGrid:
    """Free-space propagation over ``distance`` metres (forward only)."""
    if distance < 0:
        raise InvalidDistanceError(f"propagation distance must be >= 0, got {distance}")
    if distance == 0:
        return field
    return _spectral(field, propagation_kernel(field.spec, field.wavelength, distance, field.carrier))


def _check_shift(spec: GridSpec, sx: float, sy: float, what: str = "shift") -> None:
    limit = spec.window / 4
    if abs(sx) >= limit or abs(sy) >= limit:
        raise ShiftOverflowError(
            f"{what} ({sx:g}, {sy:g}) m exceeds the guard band (window/4 = {limit:g} m); "
            "enlarge the window"
        )


def shift(field: ComplexFieldGrid, sx: float, sy: float = 0.0) -> ComplexFieldGrid:
    """Translate the field by ``(sx, sy)`` metres via a spectral phase ramp."""
    _check_shift(field.spec, sx, sy)
    if sx == 0 and sy == 0:
        return field
    return _spectral(field, shift_kernel(field.spec, sx, sy, field.carrier))


def free_space_leg(field: ComplexFieldGrid, distance: float, sx: float, sy: float) -> ComplexFieldGrid:
    """Shift by ``(sx, sy)`` then propagate ``distance``, in one spectral product.

    Both kernels are diagonal in frequency, so only the *net* displacement of
    the envelope (the shift plus the carrier walk-off) must fit the guard band.
    """
    if distance < 0:
        raise InvalidDistanceError(f"propagation distance must be >= 0, got {distance}")
    tx, ty = _tan_from_carrier(field.carrier, field.wavelength)
    _check_shift(field.spec, sx + distance * tx, sy + distance * ty, "net envelope displacement")
    kernel = shift_kernel(field.spec, sx, sy, field.carrier)
    if distance > 0:
        kernel = kernel * propagation_kernel(field.spec, field.wavelength, distance, field.carrier)
    return _spectral(field, kernel)


def forward_carrier(geom: CavityGeometry) -> Tuple[float, float]:
    """Carrier of a beam leaving the gain plane toward the receiver centre.

    The outbound leg translates content by the receiver offset ``s``; the beam
    must walk off by ``-s`` over the cavity length to arrive centred.
    """
    sx, sy = geom.offset
    tx, ty = -sx / geom.distance, -sy / geom.distance
    norm = math.sqrt(1.0 + tx * tx + ty * ty)
    return tx / norm / geom.wavelength, ty / norm / geom.wavelength


# -- pointwise elements -------------------------------------------------------


@lru_cache(maxsize=64)
def _disc(spec: GridSpec, radius: float) -> np.ndarray:
    x, y = spec.coords()
    return _frozen((x * x + y * y) <= radius * radius)


@lru_cache(maxsize=32)
def _chirp(spec: GridSpec, lf: float) -> np.ndarray:
    """``exp(i pi (x^2 + y^2) / (lambda f))`` on ``spec``."""
    x, y = spec.coords()
    return _frozen(np.exp(1j * np.pi * (x * x + y * y) / lf))


def apply_gain_aperture(field: ComplexFieldGrid, radius: float) -> ComplexFieldGrid:
    """Hard circular aperture of the gain medium, centred on the grid axis."""
    if not radius > 0:
        raise InvalidGeometryError(f"aperture radius must be positive, got {radius}")
    return field.with_values(np.where(_disc(field.spec, radius), field.values, 0.0))


def apply_mirror(field: ComplexFieldGrid, radius: float) -> ComplexFieldGrid:
    """Finite mirror of the given radius: reflective disc, zero elsewhere."""
    return apply_gain_aperture(field, radius)


def lens_phase(x, y, wavelength: float, focal_length: float):
    """Thin-lens phase ``-pi (x^2 + y^2) / (lambda f)`` in radians (unwrapped)."""
    return -np.pi * (np.square(x) + np.square(y)) / (wavelength * focal_length)


def apply_lens(field: ComplexFieldGrid, focal_length: float, radius: float) -> ComplexFieldGrid:
    """Thin convex lens with a circular aperture."""
    if not focal_length > 0:
        raise InvalidGeometryError(f"focal length must be positive, got {focal_length}")
    field.spec.check_lens_sampling(field.wavelength, focal_length, radius)
    x, y = field.spec.coords()
    phase = lens_phase(x, y, field.wavelength, focal_length)
    t = np.where(_disc(field.spec, radius), np.exp(1j * phase), 0.0)
    return field.with_values(field.values * t)


# -- retroreflector ------------------------------------------------------------


def resolve_method(spec: GridSpec, wavelength: float, g: FtcrGeometry, method: str = "auto") -> str:
    if method not in METHODS:
        raise ValueError(f"unknown retroreflector method {method!r}; choose from {METHODS}")
    if method != "auto":
        return method
    try:
        spec.check_lens_sampling(wavelength, g.f, g.r)
    except AliasingRiskError:
        return "fourier"
    return "direct"


def _centered_dft2(values: np.ndarray, x0: Tuple[float, float], dx: float, nu0: Tuple[float, float]) -> np.ndarray:
    """``sum_j values_j exp(-2 pi i nu_k . x_j)`` on centred grids.

    ``x_j = x0 + (j - n/2) dx`` and ``nu_k = nu0 + (k - n/2) / (n dx)``.
    """
    n = values.shape[0]
    m = np.arange(n) - n // 2
    dnu = 1.0 / (n * dx)
    pre_x = np.exp(-2j * np.pi * nu0[0] * m * dx)
    pre_y = np.exp(-2j * np.pi * nu0[1] * m * dx)
    a = values * pre_x[None, :] * pre_y[:, None]
    out = sfft.fftshift(sfft.fft2(sfft.ifftshift(a)))
    post_x = np.exp(-2j * np.pi * x0[0] * (nu0[0] + m * dnu))
    post_y = np.exp(-2j * np.pi * x0[1] * (nu0[1] + m * dnu))
    return out * post_x[None, :] * post_y[:, None]


def _fresnel_prefactor(wavelength: float, distance: float) -> complex:
    return np.exp(2j * np.pi * _cycles(distance, wavelength)) / (1j * wavelength * distance)


def _fold_at_mirror(u: ComplexFieldGrid, g: FtcrGeometry, gap: float) -> Tuple[ComplexFieldGrid, float]:
    """``gap`` to the mirror, two mirror passes, ``gap`` back.

    Returns the field back at the starting plane and the power on the mirror.
    When the mirror disc covers the whole grid and nothing is evanescent, the
    two legs collapse into one propagation over ``2 * gap``.
    """
    if _disc(u.spec, g.r).all() and _band_limited(u.spec, u.wavelength, u.carrier):
        return propagate(u, 2.0 * gap), total_power(u)
    m = propagate(u, gap)
    m = apply_mirror(apply_mirror(m, g.r), g.r)
    return propagate(m, gap), total_power(m)


def _band_limited(spec: GridSpec, wavelength: float, carrier) -> bool:
    nu = 0.5 / spec.dx
    return wavelength * (nu + max(abs(carrier[0]), abs(carrier[1]))) * math.sqrt(2.0) < 1.0


def _ftcr_core(
    u: ComplexFieldGrid,
    g: FtcrGeometry,
    method: str,
    carrier_out: Tuple[float, float],
) -> Tuple[ComplexFieldGrid, float]:
    """Field arriving at the lens -> field leaving the lens after the fold.

    The output lives on the input grid with carrier ``carrier_out``.  The
    second return value is the power on the mirror.
    """
    if method == "direct":
        v = apply_lens(u, g.f, g.r)
        # Behind the lens the beam runs parallel to the axis.
        v = v.recarrier((0.0, 0.0))
        v, p_mirror = _fold_at_mirror(v, g, g.l)
        v = apply_lens(v, g.f, g.r)
        return v.recarrier(carrier_out), p_mirror

    # Lens aperture, then an exact Fresnel transform to the back focal plane;
    # the lens phase cancels the transform's quadratic input phase.
    v = apply_mirror(u, g.r)
    lam, spec = v.wavelength, v.spec
    lf = lam * g.f
    kx, ky = v.carrier
    dX = lf / (spec.n * spec.dx)
    focal = GridSpec(spec.n, spec.n * dX, (lf * kx, lf * ky))
    pref = _fresnel_prefactor(lam, g.f)
    b = pref * spec.dx**2 * _chirp(focal, lf) * _centered_dft2(v.values, spec.center, spec.dx, (0.0, 0.0))
    b, p_mirror = _fold_at_mirror(ComplexFieldGrid(focal, b, lam, (0.0, 0.0)), g, g.l - g.f)

    # Back through the lens onto the input grid.
    gvals = b.values * _chirp(focal, lf)
    s = _centered_dft2(gvals, focal.center, focal.dx, (spec.center[0] / lf, spec.center[1] / lf))
    x, y = spec.coords()
    demod = np.exp(-2j * np.pi * carrier_out[0] * x) * np.exp(-2j * np.pi * carrier_out[1] * y)
    out = ComplexFieldGrid(spec, pref * focal.dx**2 * s * demod, lam, carrier_out)
    return apply_mirror(out, g.r), p_mirror  # lens aperture


def ftcr_reflect(field: ComplexFieldGrid, g: FtcrGeometry, method: str = "auto") -> ComplexFieldGrid:
    """Retroreflect a field given on the retroreflector's front focal plane.

    Steps: propagate f, lens, propagate l, mirror, mirror, propagate l, lens,
    propagate f.  The output lives on the same grid with the carrier negated
    (a cat's eye sends a tilted beam back antiparallel).
    """
    method = resolve_method(field.spec, field.wavelength, g, method)
    u = propagate(field, g.f)
    u, _ = _ftcr_core(u, g, method, (-field.carrier[0], -field.carrier[1]))
    return propagate(u, g.f)


# -- round trip ----------------------------------------------------------------


@dataclass(frozen=True)
class LegFactors:
    """Per-leg power ratios of one round trip (product = round-trip ratio).

    ``v2``: gain plane -> receiver mirror, ``v3``: receiver mirror -> gain
    plane, ``v4``: gain plane -> transmitter mirror, ``v1``: transmitter
    mirror -> gain plane.
    """

    v1: float
    v2: float
    v3: float
    v4: float

    @property
    def product(self) -> float:
        return self.v1 * self.v2 * self.v3 * self.v4


def _ratio(p_out: float, p_in: float) -> float:
    return p_out / p_in if p_in > 0 else 0.0


def round_trip_legs(
    field: ComplexFieldGrid,
    geom: CavityGeometry,
    method: str = "auto",
) -> Tuple[ComplexFieldGrid, LegFactors]:
    """One full loop from the gain plane, with the four leg power ratios."""
    sx, sy = geom.offset
    d = geom.distance
    spec = field.spec
    p0 = total_power(field)

    # Free-space legs are fused with the neighbouring focal-length
    # propagations of the receiver (all diagonal in frequency).
    m_rx = resolve_method(spec, field.wavelength, geom.rx, method)
    u = free_space_leg(field, d + geom.rx.f, sx, sy)
    back_carrier = (-u.carrier[0], -u.carrier[1])
    u, p1 = _ftcr_core(u, geom.rx, m_rx, back_carrier)
    u = free_space_leg(u, geom.rx.f + d, -sx, -sy)
    u = apply_gain_aperture(u, geom.gain_radius)
    p2 = total_power(u)

    m_tx = resolve_method(spec, field.wavelength, geom.tx, method)
    out_carrier = (-u.carrier[0], -u.carrier[1])
    u = propagate(u, geom.tx.f)
    u, p3 = _ftcr_core(u, geom.tx, m_tx, out_carrier)
    u = propagate(u, geom.tx.f)
    u = apply_gain_aperture(u, geom.gain_radius)
    p4 = total_power(u)

    legs = LegFactors(v1=_ratio(p4, p3), v2=_ratio(p1, p0), v3=_ratio(p2, p1), v4=_ratio(p3, p2))
    return u, legs


def round_trip(
    field: ComplexFieldGrid,
    geom: CavityGeometry,
    method: str = "auto",
    start: str = "gain",
) -> ComplexFieldGrid:
    """Apply the full round-trip operator once.

    ``start="gain"`` loops from the gain-medium front surface (transmitter
    focal plane); ``start="receiver"`` loops from the receiver's front focal
    plane.  Both orderings share the same non-zero eigenvalues.
    """
    if start == "gain":
        return round_trip_legs(field, geom, method)[0]
    if start != "receiver":
        raise ValueError(f"start must be 'gain' or 'receiver', got {start!r}")
    sx, sy = geom.offset
    d = geom.distance
    u = ftcr_reflect(field, geom.rx, method)
    u = free_space_leg(u, d, -sx, -sy)
    u = apply_gain_aperture(u, geom.gain_radius)
    u = ftcr_reflect(u, geom.tx, method)
    u = apply_gain_aperture(u, geom.gain_radius)
    return free_space_leg(u, d, sx, sy)
