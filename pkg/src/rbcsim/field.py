"""Sampled scalar fields on uniform square grids and their basic metrics.

A field is stored as a complex envelope ``values`` together with an optional
spatial-frequency ``carrier`` (cycles/m).  The physical field is

    u(x, y) = values(x, y) * exp(2j*pi*(kx*x + ky*y))

so a steeply tilted beam can live on a coarse grid as long as its envelope is
well sampled.  Intensity-based metrics never see the carrier.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from .errors import AliasingRiskError, DegenerateFieldError, InvalidGeometryError, NumericFaultError

__all__ = [
    "GridSpec",
    "ComplexFieldGrid",
    "total_power",
    "normalize",
    "centroid",
    "rms_radius",
    "enclosed_power_radius",
    "gaussian_field",
    "plane_wave",
    "check_finite",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform ``n x n`` sampling of a square window.

    Parameters
    ----------
    n : int
        Samples per axis, a power of two no smaller than 64.
    window : float
        Side length of the window [m].
    center : tuple of float
        Lab coordinates of the window centre [m].  Sample ``j`` sits at
        ``center + (j - n/2) * dx``.
    """

    n: int = 512
    window: float = 56e-3
    center: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        n = int(self.n)
        if n < 64 or n & (n - 1):
            raise InvalidGeometryError(f"grid size n={self.n} must be a power of two >= 64")
        if not (np.isfinite(self.window) and self.window > 0):
            raise InvalidGeometryError(f"grid window must be positive, got {self.window}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @property
    def dx(self) -> float:
        return self.window / self.n

    def axis(self, index: int = 0) -> np.ndarray:
        """1-D lab coordinates along x (``index=0``) or y (``index=1``)."""
        return self.center[index] + (np.arange(self.n) - self.n // 2) * self.dx

    def coords(self) -> Tuple[np.ndarray, np.ndarray]:
        """Broadcastable ``(X, Y)`` with shapes ``(1, n)`` and ``(n, 1)``."""
        return self.axis(0)[None, :], self.axis(1)[:, None]

    def frequencies(self) -> Tuple[np.ndarray, np.ndarray]:
        """Unshifted FFT frequencies (cycles/m), broadcastable like :meth:`coords`."""
        nu = np.fft.fftfreq(self.n, self.dx)
        return nu[None, :], nu[:, None]

    def check_guard_band(self, max_aperture_radius: float) -> None:
        """Window must exceed twice the largest aperture diameter."""
        if self.window <= 4.0 * max_aperture_radius:
            raise InvalidGeometryError(
                f"window {self.window:g} m must exceed 2 x aperture diameter "
                f"{4.0 * max_aperture_radius:g} m"
            )

    def check_lens_sampling(self, wavelength: float, focal_length: float, radius: float) -> None:
        """Raise :class:`AliasingRiskError` if a lens phase would alias at ``radius``."""
        limit = max_lens_pitch(wavelength, focal_length, radius)
        if self.dx > limit * (1 + 1e-12):
            raise AliasingRiskError(
                f"pitch {self.dx:.3e} m exceeds lens sampling bound {limit:.3e} m "
                f"(f={focal_length:g} m, r={radius:g} m)"
            )


def max_lens_pitch(wavelength: float, focal_length: float, radius: float) -> float:
    """Largest pitch keeping the lens phase step below pi at ``radius``."""
    return wavelength * focal_length / (2.0 * radius)


@dataclass(frozen=True, eq=False)
class ComplexFieldGrid:
    """Immutable snapshot of a complex scalar field."""

    spec: GridSpec
    values: np.ndarray
    wavelength: float = 1064e-9
    carrier: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (self.spec.n, self.spec.n):
            raise InvalidGeometryError(
                f"values shape {values.shape} does not match grid n={self.spec.n}"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "carrier", (float(self.carrier[0]), float(self.carrier[1])))

    def with_values(self, values, spec: GridSpec | None = None, carrier=None) -> "ComplexFieldGrid":
        return replace(
            self,
            values=values,
            spec=self.spec if spec is None else spec,
            carrier=self.carrier if carrier is None else carrier,
        )

    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def physical(self) -> np.ndarray:
        """Field samples with the carrier folded back in."""
        if self.carrier == (0.0, 0.0):
            return np.array(self.values)
        x, y = self.spec.coords()
        kx, ky = self.carrier
        return self.values * np.exp(2j * np.pi * (kx * x + ky * y))

    def recarrier(self, carrier: Tuple[float, float]) -> "ComplexFieldGrid":
        """Same physical field expressed against a different carrier."""
        dk = (self.carrier[0] - carrier[0], self.carrier[1] - carrier[1])
        if dk == (0.0, 0.0):
            return self.with_values(self.values, carrier=carrier)
        x, y = self.spec.coords()
        ramp = np.exp(2j * np.pi * (dk[0] * x + dk[1] * y))
        return self.with_values(self.values * ramp, carrier=carrier)


def check_finite(values: np.ndarray, what: str = "field") -> None:
    """Raise :class:`NumericFaultError` naming the first non-finite sample."""
    finite = np.isfinite(values)
    if not finite.all():
        bad = np.argwhere(~finite)[0]
        raise NumericFaultError(f"{what} has a non-finite value at index {tuple(int(i) for i in bad)}")


def total_power(field: ComplexFieldGrid) -> float:
    """Riemann sum of ``|u|^2 dx^2``."""
    check_finite(field.values)
    return float(np.sum(field.intensity()) * field.spec.dx**2)


def normalize(field: ComplexFieldGrid) -> ComplexFieldGrid:
    p = total_power(field)
    if p <= 0.0:
        raise DegenerateFieldError("cannot normalise a zero-power field")
    return field.with_values(field.values / np.sqrt(p))


def _weights(field: ComplexFieldGrid) -> np.ndarray:
    check_finite(field.values)
    w = field.intensity()
    if not np.any(w > 0):
        raise DegenerateFieldError("field has zero power")
    return w


def centroid(field: ComplexFieldGrid) -> Tuple[float, float]:
    """Intensity-weighted first moment ``(x, y)`` in lab coordinates [m]."""
    w = _weights(field)
    x, y = field.spec.coords()
    total = w.sum()
    return float((w * x).sum() / total), float((w * y).sum() / total)


def rms_radius(field: ComplexFieldGrid) -> float:
    """Root-mean-square radius of the intensity about its centroid [m].

    A Gaussian ``exp(-r^2/w0^2)`` gives ``w0/sqrt(2)``.
    """
    w = _weights(field)
    xc, yc = centroid(field)
    x, y = field.spec.coords()
    r2 = (x - xc) ** 2 + (y - yc) ** 2
    return float(np.sqrt((w * r2).sum() / w.sum()))


def enclosed_power_radius(field: ComplexFieldGrid, fraction: float = 1 - np.exp(-2.0)) -> float:
    """Radius about the centroid enclosing ``fraction`` of the power [m].

    The default fraction (86.5 %) makes this the ``1/e^2`` radius of a Gaussian.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    w = _weights(field)
    xc, yc = centroid(field)
    x, y = field.spec.coords()
    r = np.hypot(x - xc, y - yc).ravel()
    order = np.argsort(r, kind="stable")
    cum = np.cumsum(w.ravel()[order])
    cum /= cum[-1]
    return float(np.interp(fraction, cum, r[order]))


def gaussian_field(
    spec: GridSpec,
    waist: float,
    wavelength: float = 1064e-9,
    power: float = 1.0,
    center: Tuple[float, float] = (0.0, 0.0),
    carrier: Tuple[float, float] = (0.0, 0.0),
) -> ComplexFieldGrid:
    """Fundamental Gaussian ``exp(-r^2/waist^2)`` with analytic total ``power``."""
    x, y = spec.coords()
    r2 = (x - center[0]) ** 2 + (y - center[1]) ** 2
    amp = np.sqrt(2.0 * power / (np.pi * waist**2))
    return ComplexFieldGrid(spec, amp * np.exp(-r2 / waist**2), wavelength, carrier)


def plane_wave(
    spec: GridSpec,
    wavelength: float = 1064e-9,
    amplitude: complex = 1.0,
    carrier: Tuple[float, float] = (0.0, 0.0),
) -> ComplexFieldGrid:
    return ComplexFieldGrid(spec, np.full((spec.n, spec.n), amplitude, dtype=complex), wavelength, carrier)
