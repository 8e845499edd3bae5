import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbcsim.errors import AliasingRiskError, InvalidDistanceError, ShiftOverflowError
from rbcsim.field import (
    ComplexFieldGrid,
    GridSpec,
    centroid,
    gaussian_field,
    normalize,
    plane_wave,
    rms_radius,
    total_power,
)
from rbcsim.rays import FtcrGeometry
from rbcsim.wave import (
    CavityGeometry,
    apply_gain_aperture,
    apply_lens,
    apply_mirror,
    forward_carrier,
    ftcr_reflect,
    lens_phase,
    propagate,
    propagation_kernel,
    round_trip,
    round_trip_legs,
    shift,
)

LAM = 1064e-9
BEAM = GridSpec(256, 12e-3)
CAVITY = GridSpec(64, 30e-3)
REF = FtcrGeometry()


def gaussian_waist(w0, d, lam=LAM):
    """Analytic 1/e^2 radius after free propagation."""
    zr = math.pi * w0**2 / lam
    return w0 * math.sqrt(1 + (d / zr) ** 2)


def rand_field(spec, seed, smooth=True):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((spec.n, spec.n)) + 1j * rng.standard_normal((spec.n, spec.n))
    if smooth:
        # keep the spectrum well inside the propagating band
        f = np.fft.fft2(v)
        nu = np.fft.fftfreq(spec.n)
        f *= (np.abs(nu)[None, :] < 0.2) & (np.abs(nu)[:, None] < 0.2)
        v = np.fft.ifft2(f)
    return normalize(ComplexFieldGrid(spec, v, LAM))


def overlap(a, b):
    return abs(np.vdot(a, b)) / math.sqrt(np.vdot(a, a).real * np.vdot(b, b).real)


# -- propagation ----------------------------------------------------------------


def test_zero_distance_is_identity():
    g = gaussian_field(BEAM, 0.5e-3)
    np.testing.assert_allclose(propagate(g, 0.0).values, g.values, atol=1e-12)


def test_negative_distance_rejected():
    with pytest.raises(InvalidDistanceError):
        propagate(gaussian_field(BEAM, 0.5e-3), -0.1)


def test_plane_wave_picks_up_global_phase():
    out = propagate(plane_wave(GridSpec(64, 1e-2), LAM), 1.0)
    # 1 m / 1064 nm = 939849.62406... cycles
    expected = np.exp(2j * math.pi * 0.6240601503759)
    np.testing.assert_allclose(out.values, expected, atol=1e-9)


def test_gaussian_waist_after_one_metre():
    # Rayleigh range 0.7384 m gives w(1 m) = 0.8417 mm
    assert gaussian_waist(0.5e-3, 1.0) == pytest.approx(0.8417e-3, rel=1e-3)
    out = propagate(gaussian_field(BEAM, 0.5e-3), 1.0)
    assert math.sqrt(2) * rms_radius(out) == pytest.approx(0.8417e-3, rel=0.01)


@pytest.mark.parametrize("d", [0.1, 0.5, 1.0, 1.5, 2.0])
def test_gaussian_follows_waist_law(d):
    out = propagate(gaussian_field(BEAM, 0.5e-3), d)
    assert math.sqrt(2) * rms_radius(out) == pytest.approx(gaussian_waist(0.5e-3, d), rel=0.01)


def test_kernel_unit_modulus_and_evanescent_zeroed():
    spec = GridSpec(64, 20e-6)  # pitch below lambda: part of the spectrum is evanescent
    h = propagation_kernel(spec, LAM, 1e-3)
    nx, ny = spec.frequencies()
    evanescent = LAM**2 * (nx**2 + ny**2) > 1
    assert evanescent.any()
    assert np.all(h[evanescent] == 0)
    np.testing.assert_allclose(np.abs(h[~evanescent]), 1.0, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 3.0))
def test_propagation_conserves_power(seed, d):
    f = rand_field(BEAM, seed)
    assert total_power(propagate(f, d)) == pytest.approx(total_power(f), rel=1e-6)


# Distances on a 2**-12 m lattice so that d1 + d2 is itself exact.
lattice = st.integers(0, 2 * 4096).map(lambda k: k / 4096)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), lattice, lattice)
def test_propagation_composes(seed, d1, d2):
    f = rand_field(BEAM, seed)
    a = propagate(propagate(f, d1), d2).values
    b = propagate(f, d1 + d2).values
    assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(b)


# -- shift ------------------------------------------------------------------------


def test_zero_shift_is_identity():
    g = gaussian_field(BEAM, 0.5e-3)
    np.testing.assert_allclose(shift(g, 0.0, 0.0).values, g.values, atol=1e-12)


def test_shift_moves_centroid():
    g = shift(gaussian_field(BEAM, 0.5e-3), 1e-3, 0.0)
    assert centroid(g)[0] == pytest.approx(1e-3, abs=BEAM.dx)
    assert centroid(g)[1] == pytest.approx(0.0, abs=BEAM.dx)


def test_shift_overflow():
    with pytest.raises(ShiftOverflowError):
        shift(gaussian_field(BEAM, 0.5e-3), BEAM.window / 4, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-2.9e-3, 2.9e-3), st.floats(-2.9e-3, 2.9e-3))
def test_shift_unshift_identity(seed, sx, sy):
    f = rand_field(BEAM, seed, smooth=False)
    back = shift(shift(f, sx, sy), -sx, -sy).values
    assert np.max(np.abs(back - f.values)) <= 1e-10 * np.max(np.abs(f.values))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-2e-3, 2e-3), st.floats(0.0, 2.0))
def test_shift_commutes_with_propagation(seed, s, d):
    f = rand_field(BEAM, seed)
    a = propagate(shift(f, s, 0.0), d).values
    b = shift(propagate(f, d), s, 0.0).values
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))


# -- apertures and lens ----------------------------------------------------------------


def test_aperture_passes_interior_field():
    g = gaussian_field(BEAM, 0.2e-3)
    out = apply_gain_aperture(g, 5e-3)
    assert total_power(out) == pytest.approx(total_power(g), rel=1e-12)


def test_aperture_halves_uniform_field():
    u = plane_wave(BEAM, LAM)
    r = BEAM.window / math.sqrt(2 * math.pi)  # disc area = half the window
    assert total_power(apply_gain_aperture(u, r)) == pytest.approx(0.5 * total_power(u), rel=0.02)


def test_subpixel_aperture_keeps_at_most_centre_sample():
    out = apply_gain_aperture(plane_wave(BEAM, LAM), 0.1 * BEAM.dx)
    assert np.count_nonzero(out.values) <= 1


def test_mirror_blocks_exterior_field():
    g = gaussian_field(BEAM, 0.2e-3, center=(4e-3, 4e-3))
    assert total_power(apply_mirror(g, 1e-3)) < 1e-30


def test_mirror_loss_for_quarter_radius_gaussian():
    r = 2e-3
    g = gaussian_field(BEAM, r / 4)
    loss = 1 - total_power(apply_mirror(g, r)) / total_power(g)
    assert loss < 1e-6


def test_lens_phase_values():
    assert lens_phase(0.0, 0.0, LAM, 50.4e-3) == 0.0
    # -pi * (7 mm)^2 / (1064 nm * 50.4 mm)
    assert lens_phase(7e-3, 0.0, LAM, 50.4e-3) == pytest.approx(-2870.6, abs=0.1)


def test_lens_sampling_guard():
    with pytest.raises(AliasingRiskError):
        apply_lens(plane_wave(GridSpec(), LAM), 50.4e-3, 7e-3)


def test_lens_focuses_plane_wave_on_axis():
    spec = GridSpec(256, 6e-3)
    u = apply_lens(plane_wave(spec, LAM), 50.4e-3, 1e-3)
    i = propagate(u, 50.4e-3).intensity()
    assert np.unravel_index(np.argmax(i), i.shape) == (128, 128)


def test_lens_conjugate_restores_field():
    spec = GridSpec(256, 6e-3)
    f = rand_field(spec, 1)
    lensed = apply_lens(f, 50.4e-3, 1e-3)
    x, y = spec.coords()
    restored = lensed.values * np.exp(-1j * lens_phase(x, y, LAM, 50.4e-3))
    inside = (x**2 + y**2) <= (1e-3) ** 2
    np.testing.assert_allclose(restored[inside], f.values[inside], atol=1e-10)
    np.testing.assert_allclose(np.abs(lensed.values[inside]), np.abs(f.values[inside]), rtol=1e-12)


# -- retroreflector ------------------------------------------------------------------


def test_ftcr_zero_in_zero_out():
    z = ComplexFieldGrid(CAVITY, np.zeros((64, 64)), LAM)
    assert total_power(ftcr_reflect(z, REF)) == 0.0


@pytest.mark.parametrize("seed", range(50))
def test_ftcr_is_passive(seed):
    f = rand_field(CAVITY, seed, smooth=False)
    assert total_power(ftcr_reflect(f, REF)) <= total_power(f) * (1 + 1e-12)


def test_ftcr_keeps_centred_beam_on_axis():
    spec = GridSpec(128, 30e-3)
    out = ftcr_reflect(gaussian_field(spec, 0.5e-3), REF)
    cx, cy = centroid(out)
    assert abs(cx) < spec.dx and abs(cy) < spec.dx


def test_ftcr_inverts_offset_and_tilt():
    spec = GridSpec(128, 30e-3)
    u = gaussian_field(spec, 0.5e-3, center=(1e-3, 0.0), carrier=(0.005 / LAM, 0.0))
    out = ftcr_reflect(u, REF)
    assert centroid(out)[0] == pytest.approx(-1e-3, abs=spec.dx)
    assert out.carrier == (-0.005 / LAM, 0.0)


def test_direct_and_fourier_routes_agree():
    # A geometry the single-grid route can sample: r = 1 mm on a 23 um pitch.
    g = FtcrGeometry(r=1e-3)
    spec = GridSpec(256, 6e-3)
    for u in (
        gaussian_field(spec, 0.3e-3, LAM),
        gaussian_field(spec, 0.3e-3, LAM, center=(0.3e-3, 0.0)),
        gaussian_field(spec, 0.3e-3, LAM, carrier=(0.01 / LAM, 0.0)),
    ):
        a, b = ftcr_reflect(u, g, "direct"), ftcr_reflect(u, g, "fourier")
        assert a.carrier == b.carrier
        assert total_power(a) == pytest.approx(total_power(b), rel=1e-5)
        assert overlap(a.values, b.values) > 0.99999


# -- round trip ----------------------------------------------------------------------


def test_round_trip_zero_field():
    z = ComplexFieldGrid(CAVITY, np.zeros((64, 64)), LAM)
    assert total_power(round_trip(z, CavityGeometry())) == 0.0


def test_round_trip_keeps_on_axis_gaussian_centred():
    spec = GridSpec(128, 30e-3)
    out = round_trip(gaussian_field(spec, 0.84e-3), CavityGeometry())
    cx, cy = centroid(out)
    assert abs(cx) < spec.dx and abs(cy) < spec.dx


@settings(max_examples=20, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.floats(-0.08, 0.08),
    st.floats(-0.08, 0.08),
    st.floats(-1.0, 1.5),
)
def test_round_trip_is_passive(seed, dx, dy, dz):
    geom = CavityGeometry().moved(dx, dy, dz)
    f = rand_field(CAVITY, seed, smooth=False)
    f = f.recarrier(forward_carrier(geom))
    assert total_power(round_trip(f, geom)) <= total_power(f) * (1 + 1e-12)


@pytest.mark.parametrize("disp", [(0, 0, 0), (0.05, 0, 0), (0, 0.1, 0.5)])
def test_leg_factors_multiply_to_round_trip_ratio(disp):
    geom = CavityGeometry().moved(*disp)
    spec = GridSpec(128, 30e-3)
    f = gaussian_field(spec, 1.5e-3, LAM, carrier=forward_carrier(geom))
    out, legs = round_trip_legs(f, geom)
    ratio = total_power(out) / total_power(f)
    assert legs.product == pytest.approx(ratio, rel=1e-6)
    for v in (legs.v1, legs.v2, legs.v3, legs.v4):
        assert 0.0 <= v <= 1.0 + 1e-12


def test_forward_carrier_points_at_receiver():
    geom = CavityGeometry().moved(dx=0.1)
    kx, ky = forward_carrier(geom)
    assert ky == 0.0
    assert kx * LAM == pytest.approx(-0.1 / math.hypot(2.0, 0.1), rel=1e-12)
