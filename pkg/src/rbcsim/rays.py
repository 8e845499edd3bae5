"""Paraxial ray optics for cat's-eye retroreflector cavities.

Rays are ``(x, theta)`` column vectors in the meridional plane.  Matrices act
on the left, so a system traversed as ``E1, E2, E3`` has matrix
``M3 @ M2 @ M1``.  Reflections are unfolded: a flat mirror is the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .errors import InvalidDistanceError, InvalidGeometryError, NotSupportedError

__all__ = [
    "RayState",
    "RayMatrix",
    "FtcrGeometry",
    "Element",
    "TraceResult",
    "StabilityVerdict",
    "free_space",
    "thin_lens",
    "flat_mirror",
    "ftcr_focal_length",
    "ftcr_matrix",
    "ftcr_matrix_explicit",
    "ftcr_elements",
    "cavity_path",
    "round_trip_matrix",
    "cavity_is_stable",
    "trace_ray",
    "ray_fan",
    "count_captured",
]


@dataclass(frozen=True)
class RayState:
    x: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.theta)):
            raise ValueError(f"ray components must be finite, got ({self.x}, {self.theta})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.theta])


@dataclass(frozen=True)
class RayMatrix:
    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_array(cls, m) -> "RayMatrix":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> float:
        return self.a + self.d

    def __matmul__(self, other):
        if isinstance(other, RayMatrix):
            return RayMatrix.from_array(self.as_array() @ other.as_array())
        if isinstance(other, RayState):
            return RayState(self.a * other.x + self.b * other.theta, self.c * other.x + self.d * other.theta)
        return NotImplemented


def free_space(distance: float) -> RayMatrix:
    return RayMatrix(1.0, distance, 0.0, 1.0)


def thin_lens(focal_length: float) -> RayMatrix:
    return RayMatrix(1.0, 0.0, -1.0 / focal_length, 1.0)


def flat_mirror() -> RayMatrix:
    return RayMatrix(1.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class FtcrGeometry:
    """Focal telecentric cat's-eye retroreflector.

    ``f`` is the lens focal length, ``l`` the lens-to-mirror interval and
    ``r`` the common radius of lens and mirror apertures, all in metres.
    """

    f: float = 50.4e-3
    l: float = 52.0e-3
    r: float = 7.0e-3

    def __post_init__(self):
        if not self.f > 0:
            raise InvalidGeometryError(f"lens focal length must be positive, got f={self.f}")
        if not self.r > 0:
            raise InvalidGeometryError(f"aperture radius must be positive, got r={self.r}")
        if self.l < self.f:
            raise InvalidGeometryError(
                f"mirror-lens interval l={self.l} is shorter than f={self.f}; "
                "divergent retroreflectors are not modelled"
            )

    @property
    def focusing_power(self) -> float:
        """``1/f_RR`` in 1/m; zero for a conventional cat's eye (``l == f``)."""
        # 2l/f^2 - 2/f, written so that l == f gives exactly zero
        return 2.0 * (self.l - self.f) / self.f**2


def ftcr_focal_length(g: FtcrGeometry) -> float:
    """Effective focal length of the retroreflector, ``math.inf`` when ``l == f``."""
    power = g.focusing_power
    if power <= 0.0:
        return math.inf
    return 1.0 / power


def ftcr_elements(g: FtcrGeometry) -> List["Element"]:
    """The seven elements between the front focal plane and back again."""
    return [
        Element(free_space(g.f), name="focal->lens"),
        Element(thin_lens(g.f), g.r, "lens"),
        Element(free_space(g.l), name="lens->mirror"),
        Element(flat_mirror(), g.r, "mirror"),
        Element(free_space(g.l), name="mirror->lens"),
        Element(thin_lens(g.f), g.r, "lens"),
        Element(free_space(g.f), name="lens->focal"),
    ]


def ftcr_matrix_explicit(g: FtcrGeometry) -> RayMatrix:
    """Ordered product of the seven elementary matrices."""
    m = np.eye(2)
    for el in ftcr_elements(g):
        m = el.matrix.as_array() @ m
    return RayMatrix.from_array(m)


def ftcr_matrix(g: FtcrGeometry) -> RayMatrix:
    """Factored form: a lens of focal length ``f_RR`` times the inversion ``-I``."""
    return RayMatrix(-1.0, 0.0, g.focusing_power, -1.0)


@dataclass(frozen=True)
class Element:
    """One step of a ray path.

    The matrix is applied first, then ``offset`` is added to ``x`` (a change
    of reference axis), then ``|x|`` is checked against ``aperture``.
    """

    matrix: RayMatrix
    aperture: Optional[float] = None
    name: str = ""
    offset: float = 0.0


def cavity_path(
    g_tx: FtcrGeometry,
    g_rx: FtcrGeometry,
    distance: float,
    receiver_offset: float = 0.0,
    gain_radius: Optional[float] = None,
) -> List[Element]:
    """One round trip starting at the transmitter focal plane.

    ``receiver_offset`` displaces the receiver axis laterally; the ray is
    re-expressed in receiver coordinates on arrival and back on return.
    """
    if distance <= 0:
        raise InvalidDistanceError(f"cavity length must be positive, got {distance}")
    path = [Element(free_space(distance), name="tx->rx", offset=-receiver_offset)]
    path += ftcr_elements(g_rx)
    path.append(Element(free_space(distance), name="rx->tx", offset=receiver_offset))
    if gain_radius is not None:
        path.append(Element(flat_mirror(), gain_radius, "gain"))
    path += ftcr_elements(g_tx)
    if gain_radius is not None:
        path.append(Element(flat_mirror(), gain_radius, "gain"))
    return path


def round_trip_matrix(g_tx: FtcrGeometry, g_rx: FtcrGeometry, distance: float) -> RayMatrix:
    return ftcr_matrix(g_tx) @ free_space(distance) @ ftcr_matrix(g_rx) @ free_space(distance)


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: str  # "stable", "marginal" or "unstable"
    margin: float  # 4 f_RR - d [m]

    @property
    def stable(self) -> bool:
        return self.verdict == "stable"


def cavity_is_stable(g_tx: FtcrGeometry, g_rx: FtcrGeometry, distance: float) -> StabilityVerdict:
    """Symmetric-cavity criterion ``d < 4 f_RR``.

    A conventional cat's eye (``l == f``) has no focusing power, so the
    criterion is vacuous and the cavity is reported as marginal.
    """
    if g_tx != g_rx:
        raise NotSupportedError("stability criterion is only defined for symmetric cavities")
    if not distance > 0:
        raise InvalidDistanceError(f"cavity length must be positive, got {distance}")
    f_rr = ftcr_focal_length(g_tx)
    if math.isinf(f_rr):
        return StabilityVerdict("marginal", math.inf)
    margin = 4.0 * f_rr - distance
    return StabilityVerdict("stable" if margin > 0 else "unstable", margin)


@dataclass(frozen=True)
class TraceResult:
    captured: bool
    bounces: int  # completed round trips
    escaped_at: Optional[str] = None  # element name where the ray left
    final: Optional[RayState] = None


def trace_ray(ray: RayState, path: Sequence[Element], max_bounces: int = 500) -> TraceResult:
    """Iterate ``path`` until the ray misses an aperture or ``max_bounces`` pass."""
    if max_bounces < 1:
        raise ValueError("max_bounces must be >= 1")
    x, th = ray.x, ray.theta
    for bounce in range(max_bounces):
        for el in path:
            m = el.matrix
            x, th = m.a * x + m.b * th, m.c * x + m.d * th
            x += el.offset
            if el.aperture is not None and abs(x) > el.aperture:
                return TraceResult(False, bounce, el.name or "aperture", RayState(x, th))
    return TraceResult(True, max_bounces, None, RayState(x, th))


def ray_fan(x_max: float = 2e-3, theta_max: float = 5e-3, n: int = 10) -> List[RayState]:
    """Deterministic ``n x n`` fan of rays spanning ``|x| <= x_max, |theta| <= theta_max``."""
    xs = np.linspace(-x_max, x_max, n)
    ths = np.linspace(-theta_max, theta_max, n)
    return [RayState(float(x), float(t)) for x in xs for t in ths]


def count_captured(rays: Iterable[RayState], path: Sequence[Element], max_bounces: int = 500) -> int:
    return sum(trace_ray(r, path, max_bounces).captured for r in rays)
