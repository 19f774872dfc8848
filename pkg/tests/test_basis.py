import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from conftest import rel_l2
from xwq.basis import (
    XWaveMode,
    coefficients_from_field1d,
    dispersion_energy,
    field_energy,
    field_reconstruct,
    mode_norm,
    orthonormality_gram,
    profile_closed_form,
    spectrum_f,
    synthesize_envelope,
    xwave_profile,
)
from xwq.errors import AccuracyError, AccuracyWarning, DomainError
from xwq.grids import CoefficientFunction, ComplexField2D, Field1D, RadialGrid, uniform_z
from xwq.propagation import free_gaussian
from xwq.units import MediumParams


def small_grid(medium, nz=64, L=20.0, nr=64, offset=False):
    return RadialGrid.legendre(uniform_z(nz, L, offset=offset), 20.0 / medium.beta, nr)


# -- spectrum ---------------------------------------------------------------

def test_mode_validation_and_velocity(medium):
    assert XWaveMode(0, 0.5).velocity(medium) == pytest.approx(2.5)
    with pytest.raises(DomainError):
        XWaveMode(-1)
    with pytest.raises(DomainError):
        XWaveMode(0, 0.0, 0.0)


@pytest.mark.parametrize("q", [0, 1, 3])
def test_spectrum_vanishes_at_zero(q, medium):
    assert spectrum_f(XWaveMode(q), 0.0, medium) == 0.0


def test_spectrum_peak_at_inverse_delta(medium):
    delta = 0.7
    a = np.linspace(0, 10, 200001)
    f = spectrum_f(XWaveMode(0, 0.0, delta), a, medium)
    assert a[np.argmax(f)] == pytest.approx(1 / delta, abs=1e-4)


def test_spectrum_orthogonality_quadrature_oracle(medium):
    f0 = lambda a: spectrum_f(XWaveMode(0), a, medium)
    f1 = lambda a: spectrum_f(XWaveMode(1), a, medium)
    val, _ = integrate.quad(lambda a: f0(a) * f1(a) / a, 0, np.inf, epsabs=1e-14)
    assert abs(val) < 1e-8


def test_spectrum_domain(medium):
    with pytest.raises(DomainError):
        spectrum_f(XWaveMode(0), -0.1, medium)


def test_dispersion_energy(medium):
    assert dispersion_energy(0.0, medium) == medium.omega0
    assert dispersion_energy(1.3, medium) == dispersion_energy(-1.3, medium)
    assert dispersion_energy(1.0, MediumParams.natural(omega0=7.0)) == 7.5


# -- profiles ---------------------------------------------------------------

@pytest.mark.parametrize("p", [-1.0, 0.0, 0.6])
def test_profile_matches_closed_form(p, medium):
    g = small_grid(medium)
    m = XWaveMode(0, p)
    num = xwave_profile(m, g, medium).values
    ref = profile_closed_form(m, g.z, g.r, medium)
    n = math.sqrt(medium.k / (math.pi**2 * medium.omega1))
    zz, rr = g.mesh()
    explicit = n * np.exp(-1j * p * zz) * (1 - 1j * zz) / ((1 - 1j * zz) ** 2 + medium.beta**2 * rr**2) ** 1.5
    assert np.max(np.abs(ref - explicit)) / np.max(np.abs(explicit)) < 1e-13
    assert np.max(np.abs(num - ref)) / np.max(np.abs(ref)) < 1e-8


@pytest.mark.parametrize("q", [1, 2, 4])
def test_higher_families_closed_form(q, medium):
    g = small_grid(medium, nz=32, nr=32)
    m = XWaveMode(q, 0.0)
    num = xwave_profile(m, g, medium).values
    ref = xwave_profile(m, g, medium, method="closed_form").values
    assert np.max(np.abs(num - ref)) / np.max(np.abs(ref)) < 1e-8


def test_profile_conjugation_symmetry(medium):
    g = small_grid(medium, offset=True)
    v = xwave_profile(XWaveMode(2, 0.0), g, medium).values
    assert np.max(np.abs(v[::-1] - np.conj(v))) < 1e-14 * np.max(np.abs(v))


def test_profile_origin_value(medium):
    g = RadialGrid(uniform_z(2, 1.0), np.array([0.0, 1.0]), np.array([1.0, 1.0]), 1.0)
    delta = 0.5
    v = xwave_profile(XWaveMode(0, 0.0, delta), g, medium).values
    n = math.sqrt(medium.k / (math.pi**2 * medium.omega1))
    assert v[1, 0] == pytest.approx(n / delta, rel=1e-12)


def test_profile_convergence_failure_is_reported(medium):
    g = RadialGrid.legendre(uniform_z(64, 200.0), 200.0 / medium.beta, 64)
    with pytest.raises(AccuracyError) as info:
        xwave_profile(XWaveMode(0), g, medium, nodes_per_panel=2)
    assert "relative_change" in info.value.diagnostics


def test_normalized_profile_scale(medium):
    g = small_grid(medium, nz=16, nr=16)
    a = xwave_profile(XWaveMode(0), g, medium, method="closed_form").values
    b = xwave_profile(XWaveMode(0), g, medium, method="closed_form", normalized=True).values
    assert np.allclose(b * math.sqrt(mode_norm(medium)), a)


# -- Gram matrix ------------------------------------------------------------

def test_gram_properties(medium):
    res = orthonormality_gram(8, 1.0, medium)
    g = res.gram
    assert np.array_equal(g, g.T)
    off = g - np.diag(np.diag(g))
    assert np.max(np.abs(off)) < 1e-8 * res.c_norm
    assert np.allclose(np.diag(g) / res.c_norm, 1.0, rtol=1e-12)
    assert res.c_norm == pytest.approx(medium.k / (4 * math.pi**2 * medium.omega1), rel=1e-13)


@pytest.mark.parametrize("q,qp", [(0, 0), (1, 3), (4, 4), (2, 5)])
def test_gram_against_adaptive_quadrature(q, qp, medium):
    delta = 1.3
    g = orthonormality_gram(5, delta, medium).gram
    f = lambda a, j: spectrum_f(XWaveMode(j, 0, delta), a, medium)
    val, _ = integrate.quad(lambda a: f(a, q) * f(a, qp) / a, 0, np.inf, epsabs=1e-15, limit=200)
    assert g[q, qp] == pytest.approx(val, abs=1e-12)


def test_gram_limits(medium):
    with pytest.raises(DomainError):
        orthonormality_gram(9, 1.0, medium)


def test_mode_norm_equals_mass():
    for m in (0.5, 1.0, 3.0):
        med = MediumParams.natural(omega1=2.0, k=3.0, m=m)
        assert mode_norm(med) == pytest.approx(m, rel=1e-12)


# -- synthesis and energy ---------------------------------------------------

def test_zero_coefficients_give_zero_field(medium):
    g = small_grid(medium, nz=16, nr=16)
    cf = CoefficientFunction(0, np.linspace(-1, 1, 65), np.zeros(65))
    assert np.all(synthesize_envelope([cf], 0.7, g, medium).values == 0)


def test_translation_law_of_narrow_packet(medium):
    g = small_grid(medium, nr=32)
    cf = CoefficientFunction.gaussian(0, 0.0, 1e-3, n=64)
    T = 3.0
    a0 = synthesize_envelope([cf], 0.0, g, medium).values
    moved = g.shifted(medium.omega1 * T)
    aT = synthesize_envelope([cf], T, moved, medium).values
    w = g.area_weights[None, :]
    assert rel_l2(aT, a0, w) < 1e-3


def test_sharp_coefficient_reduces_to_single_mode(medium):
    g = small_grid(medium, nz=32, nr=32)
    p0, T = 0.4, 2.0
    cf = CoefficientFunction.gaussian(0, p0, 1e-5, n=64)
    m = XWaveMode(0, p0)
    out = synthesize_envelope([cf], T, g, medium, normalized=False).values
    weight = np.sum(cf.c) * cf.dp
    eps = dispersion_energy(p0, medium) - medium.omega0
    ref = weight * np.exp(-1j * eps * T) * profile_closed_form(m, g.z - m.velocity(medium) * T, g.r, medium)
    assert np.max(np.abs(out - ref)) / np.max(np.abs(ref)) < 1e-6


def test_synthesis_at_t0_equals_direct_p_integral(medium):
    g = small_grid(medium, nz=16, nr=16)
    cf = CoefficientFunction.gaussian(1, 0.2, 0.1, n=33)
    out = synthesize_envelope([cf], 0.0, g, medium, normalized=False).values
    direct = sum(c * cf.dp * profile_closed_form(XWaveMode(1, p), g.z, g.r, medium) for p, c in zip(cf.p, cf.c))
    assert np.max(np.abs(out - direct)) < 1e-12 * np.max(np.abs(direct))


def test_coarse_momentum_grid_is_rejected(medium):
    g = small_grid(medium, nz=16, nr=16)
    cf = CoefficientFunction.gaussian(0, 0.0, 1.0, n=16)
    with pytest.raises(AccuracyError):
        synthesize_envelope([cf], 0.0, g, medium)


def test_parseval_after_calibration(medium):
    g = RadialGrid.bessel(uniform_z(256, 20.0), 40.0 / medium.beta, 256)
    cf = CoefficientFunction.gaussian(0, 0.0, 0.5, n=64)
    env = synthesize_envelope([cf], 0.0, g, medium)
    e = field_energy(env, [cf])
    assert e.ratio == pytest.approx(1.0, abs=1e-3)
    assert field_energy(env * 2.0).three_d == pytest.approx(4 * e.three_d)
    assert field_energy(coeffs=[cf.scaled(2.0)]).coefficient == pytest.approx(4 * e.coefficient)


def test_zero_energy_and_truncation_warning(medium):
    g = small_grid(medium, nz=16, nr=16, L=3.0)
    zero = ComplexField2D(np.zeros(g.shape), g)
    assert field_energy(zero).three_d == 0.0
    cf = CoefficientFunction.gaussian(0, 0.0, 0.5, n=64)
    env = synthesize_envelope([cf], 0.0, g, medium)
    with pytest.warns(AccuracyWarning):
        field_energy(env, [cf])


# -- reconstruction from the particle field ---------------------------------

def reconstruct_grid(medium):
    return RadialGrid.bessel(uniform_z(64, 20.0), 20.0 / medium.beta, 64)


def test_reconstruct_zero(medium):
    s = uniform_z(256, 64.0)
    out = field_reconstruct(Field1D(s, np.zeros(256)), 0.0, reconstruct_grid(medium), medium)
    assert np.all(out.values == 0)


def test_reconstruct_matches_analytic_coefficients(medium):
    """Broad Gaussian phi: the transform is known in closed form, so the synthesis route is independent."""
    w = 4.0
    s = uniform_z(512, 64.0)
    phi = Field1D.gaussian(s, w)
    g = reconstruct_grid(medium)
    out = field_reconstruct(phi, 0.0, g, medium)
    p = np.linspace(-10 / w, 10 / w, 161)
    c = np.sqrt(dispersion_energy(p, medium) / medium.omega0) * w * np.exp(-(p**2) * w**2 / 2)
    c[0] = c[-1] = 0.0
    ref = synthesize_envelope([CoefficientFunction(0, p, c)], 0.0, g, medium)
    assert rel_l2(out.values, ref.values, g.area_weights[None, :]) < 1e-3


def _peak_z(f):
    a = np.abs(f.values[:, 0])
    i = int(np.argmax(a))
    y0, y1, y2 = a[i - 1], a[i], a[i + 1]
    return f.grid.z[i] + 0.5 * f.grid.dz * (y0 - y2) / (y0 - 2 * y1 + y2)


def _energy_centroid(f):
    dens = np.sum(np.abs(f.values) ** 2 * f.grid.area_weights[None, :], axis=1)
    return np.sum(f.grid.z * dens) / np.sum(dens)


def test_reconstruct_peak_moves_at_group_velocity(medium):
    w, T = 10.0, 2.0
    s = uniform_z(1024, 256.0)
    g = RadialGrid.bessel(uniform_z(256, 20.0), 20.0 / medium.beta, 64)
    a0 = field_reconstruct(Field1D.gaussian(s, w), 0.0, g, medium)
    aT = field_reconstruct(free_gaussian(s, w, T, medium), T, g.shifted(medium.omega1 * T), medium)
    assert (_peak_z(aT) - _peak_z(a0)) / T == pytest.approx(medium.omega1, rel=1e-2)


def test_reconstruct_energy_centroid_velocity(medium):
    """Each alpha component travels at omega1 - hbar*alpha/m; the f_0^2/alpha average of alpha is 1/Delta."""
    w, T = 3.0, 2.0
    s = uniform_z(512, 64.0)
    g = reconstruct_grid(medium)
    c0 = _energy_centroid(field_reconstruct(Field1D.gaussian(s, w), 0.0, g, medium))
    cT = _energy_centroid(field_reconstruct(free_gaussian(s, w, T, medium), T, g.shifted(medium.omega1 * T), medium))
    assert (cT - c0) / T == pytest.approx(medium.omega1 - 1.0, rel=1e-3)


def test_reconstruct_warns_outside_validity_band():
    med = MediumParams.natural(omega1=2.0, k=3.0, omega0=1.0)
    s = uniform_z(1024, 32.0)
    with pytest.warns(AccuracyWarning):
        coefficients_from_field1d(Field1D.gaussian(s, 0.5), med)
