import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbcsim.errors import DegenerateFieldError, InvalidGeometryError, NumericFaultError
from rbcsim.field import (
    ComplexFieldGrid,
    GridSpec,
    centroid,
    enclosed_power_radius,
    gaussian_field,
    normalize,
    plane_wave,
    rms_radius,
    total_power,
)

SMALL = GridSpec(64, 1.0)
FINE = GridSpec(256, 8e-3)


def random_field(spec, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((spec.n, spec.n)) + 1j * rng.standard_normal((spec.n, spec.n))
    return ComplexFieldGrid(spec, v)


@pytest.mark.parametrize("n", [63, 100, 32, 0])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(InvalidGeometryError):
        GridSpec(n, 1.0)


def test_grid_axis_is_centred():
    ax = SMALL.axis()
    assert ax[32] == 0.0
    assert np.isclose(ax[1] - ax[0], SMALL.dx)


def test_guard_band_rule():
    GridSpec(512, 56.1e-3).check_guard_band(7e-3)
    with pytest.raises(InvalidGeometryError):
        GridSpec(512, 20e-3).check_guard_band(7e-3)


def test_zero_field_has_zero_power():
    assert total_power(ComplexFieldGrid(SMALL, np.zeros((64, 64)))) == 0.0


def test_unit_plane_wave_power():
    assert total_power(plane_wave(SMALL)) == pytest.approx(1.0, abs=1e-15)


def test_gaussian_power_matches_analytic_normalisation():
    g = gaussian_field(FINE, 0.5e-3)
    assert total_power(g) == pytest.approx(1.0, abs=1e-6)


def test_non_finite_value_is_located():
    v = np.zeros((64, 64), complex)
    v[3, 5] = np.nan
    with pytest.raises(NumericFaultError, match=r"\(3, 5\)"):
        total_power(ComplexFieldGrid(SMALL, v))


def test_normalize_scales_power_four_by_half():
    f = ComplexFieldGrid(SMALL, np.full((64, 64), 2.0 + 0j))
    assert total_power(f) == pytest.approx(4.0)
    np.testing.assert_allclose(normalize(f).values, f.values * 0.5, rtol=1e-15)


def test_normalize_zero_field_fails():
    with pytest.raises(DegenerateFieldError):
        normalize(ComplexFieldGrid(SMALL, np.zeros((64, 64))))


def test_normalize_random_field():
    assert total_power(normalize(random_field(SMALL, 3))) == pytest.approx(1.0, abs=1e-12)


def test_gaussian_moments():
    w0 = 0.5e-3
    g = gaussian_field(FINE, w0)
    cx, cy = centroid(g)
    assert abs(cx) < 1e-12 and abs(cy) < 1e-12
    assert rms_radius(g) == pytest.approx(w0 / np.sqrt(2), rel=1e-3)
    assert enclosed_power_radius(g) == pytest.approx(w0, rel=0.02)


def test_shifted_gaussian_centroid():
    g = gaussian_field(FINE, 0.5e-3, center=(1e-3, 0.0))
    assert centroid(g)[0] == pytest.approx(1e-3, abs=FINE.dx)


def test_single_sample_centroid():
    v = np.zeros((64, 64), complex)
    v[10, 40] = 1.0
    f = ComplexFieldGrid(SMALL, v)
    assert centroid(f) == (SMALL.axis(0)[40], SMALL.axis(1)[10])


def test_moments_of_zero_field_fail():
    z = ComplexFieldGrid(SMALL, np.zeros((64, 64)))
    for fn in (centroid, rms_radius):
        with pytest.raises(DegenerateFieldError):
            fn(z)


def test_carrier_does_not_change_intensity():
    g = gaussian_field(FINE, 0.5e-3)
    tilted = g.recarrier((1000.0, -500.0))
    assert total_power(tilted) == pytest.approx(total_power(g), rel=1e-14)
    np.testing.assert_allclose(tilted.physical(), g.physical(), atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_normalize_idempotent(seed):
    f = normalize(random_field(SMALL, seed))
    np.testing.assert_allclose(normalize(f).values, f.values, rtol=0, atol=1e-12 * np.abs(f.values).max())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * np.pi))
def test_power_invariant_under_global_phase(seed, phi):
    f = random_field(SMALL, seed)
    rotated = f.with_values(f.values * np.exp(1j * phi))
    assert total_power(rotated) == pytest.approx(total_power(f), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-2e-3, 2e-3), st.floats(-2e-3, 2e-3))
def test_centroid_follows_translation(a, b):
    base = gaussian_field(FINE, 0.3e-3)
    moved = gaussian_field(FINE, 0.3e-3, center=(a, b))
    c0, c1 = centroid(base), centroid(moved)
    assert c1[0] - c0[0] == pytest.approx(a, abs=FINE.dx)
    assert c1[1] - c0[1] == pytest.approx(b, abs=FINE.dx)
