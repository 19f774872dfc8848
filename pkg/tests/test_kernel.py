import math

import numpy as np
import pytest

from xwq.errors import AccuracyError, AccuracyWarning, DomainError
from xwq.grids import uniform_z
from xwq.io import read_array
from xwq.kernel import (
    KernelIndex,
    KernelProfile,
    Regime,
    SigmaProfile,
    chi_inverse,
    chi_vertex,
    classify_ratio,
    kappa_overlap,
    reduced_coupling,
    regime_classify,
    regime_lengths,
    sigma_calibration,
    sigma_fwhm,
    sigma_profile,
    transverse_overlap,
)
from xwq.units import MediumParams

CHI_NEG = MediumParams.natural(omega1=2.0, k=3.0, omega0=1e3, chi=-0.01)
Z = np.array([0.0, 0.7, 5.0, 20.0])


def test_index_validation():
    with pytest.raises(DomainError):
        KernelIndex(0, -1, 0, 0)
    assert KernelIndex(0, 1, 2, 3).hermitian_partner().astuple() == (3, 2, 1, 0)


@pytest.mark.parametrize("idx", [(0, 1, 2, 1), (1, 0, 2, 2), (2, 2, 0, 1), (1, 1, 1, 0)])
def test_hermitian_symmetry(idx):
    k = KernelIndex(*idx)
    z = np.linspace(-3.0, 5.0, 9)
    a = kappa_overlap(k, z, 1.0, CHI_NEG).kappa_values
    b = kappa_overlap(k.hermitian_partner(), z, 1.0, CHI_NEG).kappa_values
    assert np.max(np.abs(a - np.conj(b))) <= 1e-14 * np.max(np.abs(a))


def test_exchange_symmetry():
    a = transverse_overlap(KernelIndex(0, 1, 2, 1), Z, 1.0, CHI_NEG)
    b = transverse_overlap(KernelIndex(1, 0, 1, 2), Z, 1.0, CHI_NEG)
    assert np.array_equal(a, b)


def test_kappa_0000_real_negative_even():
    z = np.linspace(-6, 6, 25)
    k = kappa_overlap(KernelIndex(), z, 1.0, CHI_NEG).kappa_values
    assert np.max(np.abs(k.imag)) < 1e-14 * np.max(np.abs(k))
    assert np.all(k.real < 0)
    assert np.max(np.abs(k - k[::-1])) < 1e-12 * np.max(np.abs(k))


def test_kappa_origin_value_closed_form():
    # |psi_0(0, r)|^4 = N^4 / (1 + beta^2 r^2)^6, whose area integral is pi N^4 / (5 beta^2).
    k0 = transverse_overlap(KernelIndex(), [0.0], 1.0, CHI_NEG)[0]
    n = math.sqrt(CHI_NEG.k / (math.pi**2 * CHI_NEG.omega1))
    assert k0.real == pytest.approx(math.pi / (5 * CHI_NEG.beta**2) * n**4, rel=1e-12)


def test_kappa_decay_at_twenty_delta():
    """Measured decay; both profile methods agree on it (see decisions ledger for the 1e-3 claim)."""
    a = transverse_overlap(KernelIndex(), Z, 1.0, CHI_NEG)
    b = transverse_overlap(KernelIndex(), Z, 1.0, CHI_NEG, method="quadrature", reach=64)
    assert np.max(np.abs(a - b) / np.abs(a)) < 1e-6
    assert abs(a[3] / a[0]) == pytest.approx(9.2499e-3, rel=1e-4)


def test_radial_truncation_warns():
    with pytest.warns(AccuracyWarning):
        transverse_overlap(KernelIndex(), [0.0], 1.0, CHI_NEG, r_max=0.5)


def test_unknown_method():
    with pytest.raises(DomainError):
        transverse_overlap(KernelIndex(), [0.0], 1.0, CHI_NEG, method="spline")


# -- vertex -------------------------------------------------------------------

def gaussian_profile(n=256, L=20.0, shift=0.0):
    z = uniform_z(n, L)
    return KernelProfile(z, -np.exp(-((z - shift) ** 2) / 4.0) + 0j)


def test_vertex_dc_value():
    prof = chi_vertex(gaussian_profile())
    i0 = int(np.argmin(np.abs(prof.nu_samples)))
    assert prof.nu_samples[i0] == 0.0
    trap = np.trapezoid(prof.kappa_values, prof.z_samples)
    assert abs(prof.chi_values[i0] - trap) < 1e-10 * abs(trap)


def test_vertex_real_and_even():
    prof = chi_vertex(gaussian_profile())
    chi = prof.chi_values
    assert np.max(np.abs(chi.imag)) < 1e-10 * np.max(np.abs(chi))
    assert np.max(np.abs(chi[1:] - chi[1:][::-1])) < 1e-10 * np.max(np.abs(chi))
    assert np.all(np.diff(prof.nu_samples) > 0)


def test_vertex_matches_analytic_transform():
    prof = chi_vertex(gaussian_profile())
    exact = -math.sqrt(4 * math.pi) * np.exp(-(prof.nu_samples**2))
    assert np.max(np.abs(prof.chi_values - exact)) < 1e-12


def test_vertex_parseval_and_round_trip():
    prof = chi_vertex(gaussian_profile(shift=1.5), pad=4)
    dnu = prof.nu_samples[1] - prof.nu_samples[0]
    lhs = np.sum(np.abs(prof.kappa_values) ** 2) * prof.dz
    rhs = np.sum(np.abs(prof.chi_values) ** 2) * dnu / (2 * math.pi)
    assert rhs == pytest.approx(lhs, rel=1e-10)
    back = chi_inverse(prof)
    assert np.max(np.abs(back - prof.kappa_values)) < 1e-12 * np.max(np.abs(prof.kappa_values))


def test_vertex_rejects_undecayed_kernel():
    z = uniform_z(128, 40.0)
    prof = kappa_overlap(KernelIndex(), z, 1.0, CHI_NEG)
    with pytest.raises(AccuracyError) as info:
        chi_vertex(prof)
    assert info.value.diagnostics["edge_ratio"] > 1e-6
    with pytest.raises(DomainError):
        chi_vertex(gaussian_profile(), pad=0)
    with pytest.raises(DomainError):
        chi_inverse(gaussian_profile())


# -- sigma ------------------------------------------------------------------

@pytest.fixture(scope="module")
def sigma0():
    return sigma_profile(0, uniform_z(256, 20.0), 1.0, CHI_NEG)


def test_sigma_sign_and_bell_shape(sigma0):
    v = sigma0.sigma_values
    assert sigma0.sign == -1
    assert np.all(v[v != 0] < 0)
    assert sigma0.z_samples[sigma0.peak_index()] == 0.0
    assert np.sum(np.abs(v) == np.max(np.abs(v))) == 1
    assert np.max(np.abs(v[1:] - v[1:][::-1])) < 1e-10 * np.max(np.abs(v))


def test_sigma_peak_value_and_linearity(sigma0):
    k0 = math.pi / (5 * CHI_NEG.beta**2) * (CHI_NEG.k / (math.pi**2 * CHI_NEG.omega1)) ** 2
    expected = (2 * math.pi) ** 2 * CHI_NEG.chi * CHI_NEG.omega0 * k0  # mode_norm = 1 here
    assert reduced_coupling(sigma0) == pytest.approx(expected, rel=1e-10)
    doubled = sigma_profile(0, sigma0.z_samples[::16], 1.0, CHI_NEG.with_chi(2 * CHI_NEG.chi))
    assert np.allclose(doubled.sigma_values, 2 * sigma0.sigma_values[::16], rtol=1e-13)


def test_sigma_uncalibrated_factor(sigma0):
    raw = sigma_profile(0, [-1.0, 0.0], 1.0, CHI_NEG, calibrated=False).sigma_values[1]
    assert sigma0.sigma_values[128] == pytest.approx(raw * sigma_calibration(CHI_NEG), rel=1e-13)
    assert sigma_calibration(CHI_NEG) == pytest.approx(1 / (2 * math.pi * CHI_NEG.omega0), rel=1e-12)


def test_sigma_domain():
    with pytest.raises(DomainError):
        sigma_profile(-1, [0.0], 1.0, CHI_NEG)


def test_sigma_export(tmp_path, sigma0):
    path = sigma0.to_csv(tmp_path / "sigma.csv")
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 0], sigma0.z_samples)
    assert np.array_equal(data[:, 1], sigma0.sigma_values)
    paths = sigma0.write_binary(tmp_path / "sigma")
    values, meta = read_array(paths[0])
    assert np.array_equal(values.real, sigma0.sigma_values)
    assert meta["meta"]["dz"] == pytest.approx(sigma0.z_samples[1] - sigma0.z_samples[0])


def test_kappa_export(tmp_path):
    prof = kappa_overlap(KernelIndex(), np.linspace(-2, 2, 5), 1.0, CHI_NEG)
    data = np.loadtxt(prof.to_csv(tmp_path / "k.csv"), delimiter=",", skiprows=1)
    assert np.allclose(data[:, 1] + 1j * data[:, 2], prof.kappa_values, rtol=0, atol=0)


# -- regimes and reduced coupling ---------------------------------------------

@pytest.mark.parametrize("ratio,regime", [(0.01, Regime.CONSTANT_SIGMA_NLSE), (100.0, Regime.SPM), (1.0, Regime.GENERAL)])
def test_regime_examples(ratio, regime):
    assert classify_ratio(ratio) is regime
    fwhm = sigma_fwhm(0, 1.0)
    assert regime_classify(CHI_NEG, 1.0, math.sqrt(ratio) * fwhm) is regime


def test_regime_lengths_and_domain():
    l_disp, l_diff = regime_lengths(CHI_NEG, 1.0, 3.0)
    assert l_disp == pytest.approx(9.0 / CHI_NEG.omega2)
    assert sigma_fwhm(0, 2.0) == pytest.approx(2 * sigma_fwhm(0, 1.0))
    assert sigma_fwhm(0, 1.0) == pytest.approx(1.5416, abs=1e-4)
    with pytest.raises(DomainError):
        regime_classify(CHI_NEG, 1.0, -1.0)
    with pytest.raises(DomainError):
        classify_ratio(0.0)


def test_fwhm_is_half_maximum_of_sigma():
    half = sigma_fwhm(0, 1.0) / 2
    v = transverse_overlap(KernelIndex(), [0.0, half], 1.0, CHI_NEG).real
    assert v[1] / v[0] == pytest.approx(0.5, abs=1e-9)


def test_reduced_coupling_variants(sigma0):
    const = SigmaProfile.constant(np.linspace(-1, 1, 11), -0.3)
    assert reduced_coupling(const) == -0.3
    assert reduced_coupling(const, weighted=True) == pytest.approx(-0.3)
    v = sigma0.sigma_values
    assert reduced_coupling(sigma0) == v[128] == v.min()
    w = reduced_coupling(sigma0, weighted=True)
    assert v.min() < w < v.max()
    with pytest.raises(DomainError):
        reduced_coupling(sigma0, weighted=True, weight=np.zeros_like(v))
