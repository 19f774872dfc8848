"""X-wave spectra, mode profiles, synthesis and energy bookkeeping.

A radially symmetric X-wave of family ``q`` and momentum ``p`` is

    psi_q^(p)(z, r) = integral_0^inf f_q(alpha) J0(beta alpha r) exp(i (alpha - p/hbar) z) d alpha

with ``beta = sqrt(omega2 k / omega1)`` and the Laguerre spectrum

    f_q(alpha) = sqrt(k / (pi^2 omega1 (q+1))) (alpha Delta) L_q^(1)(2 alpha Delta) exp(-alpha Delta).

Each profile translates rigidly at ``omega1 + p/m`` while its phase rotates at
``omega(p) - omega0 = p^2 / (2 hbar m)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, AccuracyWarning, DomainError
from .grids import CoefficientFunction, ComplexField2D, Field1D, RadialGrid
from .special import (
    bessel_j0,
    composite_gauss_legendre,
    gauss_laguerre,
    laguerre_coefficients,
    laguerre_gen,
    legendre_complex,
)
from .units import MediumParams


@dataclass(frozen=True)
class XWaveMode:
    """Basis label (q, p, Delta) of one progressive undistorted wave."""

    q: int = 0
    p: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 0:
            raise DomainError(f"family index q must be a non-negative integer, got {self.q!r}")
        if not self.delta > 0:
            raise DomainError("delta must be positive")

    def velocity(self, medium: MediumParams) -> float:
        return medium.omega1 + self.p / medium.m


def spectrum_norm(q: int, medium: MediumParams) -> float:
    return math.sqrt(medium.k / (math.pi**2 * medium.omega1 * (q + 1)))


def spectrum_f(mode: XWaveMode, alpha, medium: MediumParams):
    """Laguerre spectrum f_q(alpha) of the family ``mode.q`` (independent of p)."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0):
        raise DomainError("spectrum_f is defined for alpha >= 0")
    x = alpha * mode.delta
    out = spectrum_norm(mode.q, medium) * x * laguerre_gen(mode.q, 2.0 * x) * np.exp(-x)
    return out.item() if np.ndim(out) == 0 else out


def dispersion_energy(p, medium: MediumParams):
    """omega(p) = omega0 + p^2 / (2 hbar m); identical for every family."""
    p = np.asarray(p, dtype=float)
    out = medium.omega0 + p**2 / (2.0 * medium.hbar * medium.m)
    return out.item() if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# alpha quadrature


@dataclass(frozen=True, eq=False)
class AlphaRule:
    nodes: np.ndarray
    weights: np.ndarray


def alpha_cutoff(q: int, delta: float) -> float:
    """alpha beyond which every f_q (q <= 8) is below 1e-16 of its peak."""
    return (40.0 + 4.0 * q) / delta


def alpha_rule(delta: float, omega_max: float, q: int = 0, nodes_per_panel: int = 16, tail_nodes: int = 8) -> AlphaRule:
    """Quadrature in alpha for integrands f_q(alpha) * (oscillation of frequency <= omega_max).

    Composite Gauss-Legendre panels cover [0, alpha_cut]; their width keeps
    ``omega_max * width <= 10`` so the phase and the Bessel factor are resolved.
    The remainder [alpha_cut, inf) uses a shifted Gauss-Laguerre rule in the
    natural weight exp(-alpha Delta).
    """
    a_cut = alpha_cutoff(q, delta)
    width = min(1.0 / delta, 10.0 / max(omega_max, 1e-12))
    npanel = max(1, int(math.ceil(a_cut / width)))
    x, w = composite_gauss_legendre(np.linspace(0.0, a_cut, npanel + 1), nodes_per_panel)
    xt, wt = gauss_laguerre(tail_nodes, scale=delta)
    # exp(-alpha Delta) weight of the tail is folded back so every node carries a plain weight.
    wt = wt * np.exp(delta * xt)
    xt = xt + a_cut
    return AlphaRule(np.concatenate([x, xt]), np.concatenate([w, wt]))


# ---------------------------------------------------------------------------
# mode profiles


def _profile_quadrature(mode, z, r, medium, nodes_per_panel, omega_max=None):
    if omega_max is None:
        omega_max = float(np.max(np.abs(z)) + medium.beta * np.max(r))
    rule = alpha_rule(mode.delta, omega_max, mode.q, nodes_per_panel)
    a = rule.nodes
    amp = rule.weights * spectrum_f(mode, a, medium)
    phase = np.exp(1j * np.outer(z, a))
    bes = bessel_j0(medium.beta * np.outer(a, r))
    carrier = np.exp(-1j * mode.p * z / medium.hbar)
    return carrier[:, None] * ((phase * amp) @ bes)


def closed_form_values(q: int, delta: float, z, r, medium: MediumParams, p: float = 0.0):
    """Closed form of psi_q^(p) at broadcast-compatible arrays ``z`` and ``r``.

    Uses integral_0^inf x^n exp(-a x) J0(b x) dx = n! s^-(n+1) P_n(a / s) with
    s = sqrt(a^2 + b^2); a^2 + b^2 never meets the negative real axis for
    Re a > 0, so the principal root is the analytic continuation.
    """
    z = np.asarray(z, float)
    r = np.asarray(r, float)
    a = delta - 1j * z
    s = np.sqrt(a * a + (medium.beta * r) ** 2)
    u = a / s
    out = np.zeros(np.broadcast(z, r).shape, dtype=complex)
    for j, c in enumerate(laguerre_coefficients(q)):
        n = j + 1
        out += c * 2.0**j * delta**n * math.factorial(n) * s ** (-(n + 1)) * legendre_complex(n, u)
    return spectrum_norm(q, medium) * np.exp(-1j * p * z / medium.hbar) * out


def profile_closed_form(mode: XWaveMode, z, r, medium: MediumParams):
    """Closed-form psi_q^(p) on the mesh ``z`` (rows) by ``r`` (columns)."""
    z = np.asarray(z, float)[:, None]
    r = np.asarray(r, float)[None, :]
    return closed_form_values(mode.q, mode.delta, z, r, medium, mode.p)


def xwave_profile(
    mode: XWaveMode,
    grid: RadialGrid,
    medium: MediumParams,
    method: str = "quadrature",
    normalized: bool = False,
    check: bool = True,
    nodes_per_panel: int = 16,
    tol: float = 1e-10,
) -> ComplexField2D:
    """Sample psi_q^(p) on ``grid``.

    Parameters
    ----------
    method : {"quadrature", "closed_form"}
        ``quadrature`` integrates over alpha numerically; ``closed_form`` uses
        the Laplace-Hankel identity and is the fast path for large grids.
    normalized : bool
        Divide by sqrt(mode_norm) so that <psi^(p), psi^(p')> = delta(p - p').
    check : bool
        For the quadrature path, re-evaluate a strided subset of the grid with
        twice the nodes per panel and raise :class:`AccuracyError` if the
        relative sup-norm change exceeds ``tol``.
    """
    if method == "closed_form":
        values = profile_closed_form(mode, grid.z, grid.r, medium)
    elif method == "quadrature":
        values = _profile_quadrature(mode, grid.z, grid.r, medium, nodes_per_panel)
        if check:
            zi = np.unique(np.r_[np.arange(0, grid.nz, max(1, grid.nz // 16)), grid.nz - 1])
            ri = np.unique(np.r_[np.arange(0, grid.nr, max(1, grid.nr // 16)), grid.nr - 1])
            omega = float(np.max(np.abs(grid.z)) + medium.beta * np.max(grid.r))
            fine = _profile_quadrature(mode, grid.z[zi], grid.r[ri], medium, 2 * nodes_per_panel, omega)
            coarse = values[np.ix_(zi, ri)]
            change = np.max(np.abs(fine - coarse)) / np.max(np.abs(fine))
            if change > tol:
                raise AccuracyError(
                    "alpha quadrature did not converge under node doubling",
                    relative_change=float(change),
                    nodes_per_panel=nodes_per_panel,
                )
    else:
        raise DomainError(f"unknown profile method {method!r}")
    if normalized:
        values = values / math.sqrt(mode_norm(medium, delta=mode.delta))
    return ComplexField2D(values, grid, {"q": mode.q, "p": mode.p, "delta": mode.delta, "normalized": normalized})


# ---------------------------------------------------------------------------
# Gram matrix and normalization


@dataclass(frozen=True, eq=False)
class GramResult:
    gram: np.ndarray
    c_norm: float


def orthonormality_gram(q_max: int, delta: float, medium: MediumParams, n_nodes: int = 128) -> GramResult:
    """G_qq' = integral f_q f_q' / alpha d alpha for q, q' <= q_max.

    The integrand is a polynomial times exp(-2 alpha Delta), so Gauss-Laguerre
    in that weight is exact once ``n_nodes > q_max + 1``.  ``c_norm = G_00``.
    """
    if not 0 <= q_max <= 8:
        raise DomainError("q_max must lie in [0, 8]")
    x, w = gauss_laguerre(n_nodes, scale=2.0 * delta)
    rows = []
    for q in range(q_max + 1):
        norm = spectrum_norm(q, medium)
        # f_q(alpha) * exp(alpha Delta) / sqrt(alpha): the e^{-2 alpha Delta} lives in the weight.
        rows.append(norm * x * delta * laguerre_gen(q, 2.0 * x * delta) / np.sqrt(x))
    f = np.array(rows)
    gram = (f * w) @ f.T
    gram = 0.5 * (gram + gram.T)  # BLAS summation order is not symmetric
    if not np.all(np.isfinite(gram)) or gram[0, 0] <= 0:
        raise AccuracyError("Gram quadrature failed", gram=gram)
    return GramResult(gram, float(gram[0, 0]))


def mode_norm(medium: MediumParams, c_norm: float | None = None, delta: float = 1.0) -> float:
    """Delta-normalization constant: <psi_q^(p), psi_q^(p')> = mode_norm * delta(p - p').

    Evaluates 4 pi^2 hbar c_norm / beta^2 with ``c_norm`` from
    :func:`orthonormality_gram`; analytically this equals the mass m.
    """
    if c_norm is None:
        c_norm = orthonormality_gram(0, delta, medium).c_norm
    return 4.0 * math.pi**2 * medium.hbar * c_norm / medium.beta**2


# ---------------------------------------------------------------------------
# synthesis, energy, reconstruction


def synthesize_envelope(
    coeffs,
    t: float,
    grid: RadialGrid,
    medium: MediumParams,
    delta: float = 1.0,
    normalized: bool = True,
    nodes_per_panel: int = 16,
    alias_margin: float = 10.0,
) -> ComplexField2D:
    """Envelope A(z, r, t) = sum_q integral C_q(p) exp(-i (omega(p) - omega0) t) psi_q^(p)[z - v(p) t, r] dp.

    The carrier exp(i k z - i omega0 t) is factored out.  For each alpha node the
    momentum integral collapses to one matrix product, so the cost is
    O(n_alpha * n_p * n_z + n_alpha * n_z * n_r).

    With ``normalized`` the modes are divided by sqrt(mode_norm) so that the
    3D energy equals sum_q integral |C_q|^2 dp.
    """
    if not math.isfinite(t):
        raise DomainError("t must be finite")
    hbar, m = medium.hbar, medium.m
    zeta = grid.z - medium.omega1 * t
    total = np.zeros(grid.shape, dtype=complex)
    scale = 1.0 / math.sqrt(mode_norm(medium, delta=delta)) if normalized else 1.0
    for cf in coeffs:
        if cf.q < 0:
            raise DomainError("family index must be >= 0")
        # Periodic images of the p-sum sit alias_period apart in y = zeta + hbar alpha t / m.
        alias_period = 2.0 * math.pi * hbar / cf.dp
        y_extent = np.max(np.abs(zeta)) + hbar * (alias_margin / delta) * abs(t) / m
        if 2.0 * y_extent >= alias_period:
            raise AccuracyError(
                "momentum grid too coarse for the requested z window",
                alias_period=alias_period,
                required=2.0 * y_extent,
            )
        p = cf.p
        v_shift = np.max(np.abs(zeta)) + np.max(np.abs(p)) * abs(t) / m
        omega_max = float(v_shift + hbar * alpha_cutoff(cf.q, delta) * abs(t) / m + medium.beta * grid.R)
        rule = alpha_rule(delta, omega_max, cf.q, nodes_per_panel)
        a = rule.nodes
        mode = XWaveMode(cf.q, 0.0, delta)
        amp = rule.weights * spectrum_f(mode, a, medium)
        keep = np.abs(amp) > 1e-300
        a, amp = a[keep], amp[keep]
        # exp(i(alpha - p/hbar)(zeta - p t/m)) exp(-i p^2 t / (2 hbar m))
        g = cf.dp * cf.c * np.exp(1j * p**2 * t / (2.0 * hbar * m))
        left = np.exp(-1j * np.outer(a, p) * t / m) * g[None, :]
        right = np.exp(-1j * np.outer(p, zeta) / hbar)
        s = (left @ right) * np.exp(1j * np.outer(a, zeta))
        bes = bessel_j0(medium.beta * np.outer(a, grid.r))
        total += (s.T * amp[None, :]) @ bes
    return ComplexField2D(total * scale, grid, {"t": t, "normalized": normalized})


@dataclass(frozen=True)
class EnergyReport:
    three_d: float | None
    coefficient: float | None

    @property
    def ratio(self) -> float:
        return self.three_d / self.coefficient


def field_energy(field: ComplexField2D | None = None, coeffs=None, medium=None, normalized=True, delta=1.0) -> EnergyReport:
    """Energy as 2 pi integral |A|^2 r dr dz and as sum_q integral |C_q|^2 dp.

    The coefficient form is multiplied by mode_norm when the field was built
    from unnormalized modes.  If both forms are available and the grid holds
    less than 99.9 % of the coefficient-space value an :class:`AccuracyWarning`
    is emitted.
    """
    three_d = field.norm2() if field is not None else None
    coef = None
    if coeffs is not None:
        coef = sum(cf.energy() for cf in coeffs)
        if not normalized:
            if medium is None:
                raise DomainError("medium is required for unnormalized coefficient energy")
            coef *= mode_norm(medium, delta=delta)
    if three_d is not None and coef is not None and coef > 0 and three_d < 0.999 * coef:
        warnings.warn(
            f"grid captures only {three_d / coef:.5f} of the coefficient-space energy",
            AccuracyWarning,
            stacklevel=2,
        )
    return EnergyReport(three_d, coef)


def coefficients_from_field1d(phi: Field1D, medium: MediumParams, q: int = 0, validity: float = 0.1, threshold: float = 1e-15):
    """C(p) = sqrt(omega(p)/omega0) (2 pi hbar)^(-1/2) integral phi(s) exp(-i p s / hbar) ds.

    The unitary transform keeps integral |C|^2 dp = integral |phi|^2 ds up to the
    frequency factor.  Returns a :class:`CoefficientFunction` trimmed to the
    band where |C| exceeds ``threshold`` of its peak.
    """
    hbar = medium.hbar
    n, ds = phi.n, phi.dz
    p = np.fft.fftshift(2.0 * math.pi * hbar * np.fft.fftfreq(n, ds))
    spec = np.fft.fftshift(np.fft.fft(phi.values)) * np.exp(-1j * p * phi.z[0] / hbar) * ds / math.sqrt(2 * math.pi * hbar)
    factor = np.sqrt(dispersion_energy(p, medium) / medium.omega0)
    c = spec * factor
    mag = np.abs(c)
    if mag.max() == 0:
        return CoefficientFunction(q, p[:3], np.zeros(3))
    sig = np.nonzero(mag > threshold * mag.max())[0]
    if np.any(np.abs(factor[sig] - 1.0) > validity):
        warnings.warn("momentum content outside the low-momentum validity band", AccuracyWarning, stacklevel=2)
    lo, hi = sig[0] - 1, sig[-1] + 1
    half = max(n // 2 - lo, hi - n // 2)
    lo, hi = max(0, n // 2 - half), min(n - 1, n // 2 + half)
    c_band = c[lo : hi + 1].copy()
    if hi == n - 1 or lo == 0:
        peak = mag.max()
        if max(abs(c_band[0]), abs(c_band[-1])) > 1e-8 * peak:
            raise AccuracyError("field spectrum is not band-limited on its grid", edge_ratio=float(max(abs(c_band[0]), abs(c_band[-1])) / peak))
    c_band[0] = c_band[-1] = 0.0
    return CoefficientFunction(q, p[lo : hi + 1], c_band)


def field_reconstruct(mean: Field1D, t: float, grid: RadialGrid, medium: MediumParams, q: int = 0, delta: float = 1.0) -> ComplexField2D:
    """3D envelope integral xi(s, z, t, r) phi(s, t) ds for a particle field at time t.

    ``mean`` is the particle field already evolved to ``t``; its dispersive
    phase is undone so the result equals :func:`synthesize_envelope` with
    C(p) the transform of the initial field.  The envelope is photon-number
    normalized: its 3D norm equals integral |phi|^2 ds for low momenta.
    """
    cf = coefficients_from_field1d(mean, medium, q)
    # phi(s, t) carries exp(-i eps(p) t); synthesize_envelope re-applies it.
    eps = dispersion_energy(cf.p, medium) - medium.omega0
    cf0 = CoefficientFunction(q, cf.p, cf.c * np.exp(1j * eps * t / medium.hbar))
    return synthesize_envelope([cf0], t, grid, medium, delta=delta)
