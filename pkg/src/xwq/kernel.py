"""Nonlinear interaction kernels built from transverse overlaps of X-wave profiles.

kappa_lmno(z) = (chi hbar^2 / m^2) * integral conj(psi_l) conj(psi_m) psi_n psi_o dx dy
with every profile taken at p = 0.  Its Fourier transform is the vertex
chi_lmno(nu) under the convention chi(nu) = integral kappa(z) exp(-i nu z) dz.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .basis import XWaveMode, _profile_quadrature, closed_form_values, mode_norm
from .errors import AccuracyError, AccuracyWarning, DomainError
from .grids import check_uniform
from .io import write_array, write_columns
from .special import composite_gauss_legendre
from .units import MediumParams


@dataclass(frozen=True)
class KernelIndex:
    l: int = 0
    m: int = 0
    n: int = 0
    o: int = 0

    def __post_init__(self):
        for name in ("l", "m", "n", "o"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise DomainError(f"kernel index {name} must be a non-negative integer")

    def astuple(self):
        return (self.l, self.m, self.n, self.o)

    def hermitian_partner(self) -> "KernelIndex":
        """(o, n, m, l): kappa of the partner is the conjugate of this kappa."""
        return KernelIndex(self.o, self.n, self.m, self.l)


# ---------------------------------------------------------------------------
# radial integration


def ridge_rule(zabs: float, delta: float, reach: float = 256.0, nodes_per_panel: int = 16, u_max: float | None = None):
    """Nodes/weights in u = beta r, refined geometrically around the ridge u = |z|.

    The q-family profiles peak on the cone u = |z| with width ~Delta; panels
    of size Delta * 2^k on both sides resolve it, out to |z| + reach * Delta.
    """
    offsets = delta * 2.0 ** np.arange(-3, int(math.ceil(math.log2(reach))) + 1)
    edges = np.concatenate([[0.0], zabs - offsets, [zabs], zabs + offsets])
    top = zabs + reach * delta if u_max is None else min(u_max, zabs + reach * delta)
    edges = np.unique(np.clip(edges, 0.0, top))
    return composite_gauss_legendre(edges, nodes_per_panel)


def _product(idx: KernelIndex, delta, z, u, medium, method, r_cap=None):
    r = u / medium.beta
    cache = {}
    for q in set(idx.astuple()):
        if method == "closed_form":
            cache[q] = closed_form_values(q, delta, z, r, medium)
        else:
            cache[q] = _profile_quadrature(XWaveMode(q, 0.0, delta), np.atleast_1d(z), r, medium, 16)[0]
    # Canonically ordered pairs make l<->m and n<->o swaps bit-identical.
    a, b = sorted((idx.l, idx.m))
    c, d = sorted((idx.n, idx.o))
    return np.conj(cache[a] * cache[b]) * (cache[c] * cache[d])


def transverse_overlap(
    idx: KernelIndex,
    z_samples,
    delta: float,
    medium: MediumParams,
    method: str = "closed_form",
    r_max: float | None = None,
    reach: float = 256.0,
    tail_tol: float = 1e-3,
) -> np.ndarray:
    """integral conj(psi_l psi_m) psi_n psi_o dx dy at each z, profiles at p = 0.

    ``method`` selects the profile evaluation (``closed_form`` or
    ``quadrature``).  With ``r_max`` the radial integral stops at that radius;
    an :class:`AccuracyWarning` is raised when the discarded part exceeds
    ``tail_tol`` of the full integral.
    """
    if method not in ("closed_form", "quadrature"):
        raise DomainError(f"unknown profile method {method!r}")
    z = np.atleast_1d(np.asarray(z_samples, dtype=float))
    out = np.empty(z.shape, dtype=complex)
    worst = 0.0
    b2 = medium.beta**2
    for i, zi in enumerate(z):
        u, w = ridge_rule(abs(zi), delta, reach)
        g = _product(idx, delta, zi, u, medium, method) * u * w
        full = 2.0 * math.pi * np.sum(g) / b2
        # Power-law tail beyond the last node (|integrand u| ~ u^-11 for q = 0).
        tail = 2.0 * math.pi * abs(g[-1] / w[-1]) * u[-1] / 10.0 / b2
        if r_max is not None:
            kept = 2.0 * math.pi * np.sum(g[u <= medium.beta * r_max]) / b2
            tail += abs(full - kept)
            full_used = kept
        else:
            full_used = full
        out[i] = full_used
        if abs(full) > 0:
            worst = max(worst, tail / abs(full))
    if worst > tail_tol:
        warnings.warn(f"radial truncation discards {worst:.3g} of the overlap integrand", AccuracyWarning, stacklevel=2)
    return out


@dataclass(frozen=True, eq=False)
class KernelProfile:
    """kappa(z) on a uniform grid and, once computed, chi(nu) on the padded FFT grid."""

    z_samples: np.ndarray
    kappa_values: np.ndarray
    index: KernelIndex = field(default_factory=KernelIndex)
    chi_values: np.ndarray | None = None
    nu_samples: np.ndarray | None = None
    pad: int = 4

    def __post_init__(self):
        z = check_uniform(self.z_samples, "z_samples")
        k = np.asarray(self.kappa_values, dtype=complex)
        if k.shape != z.shape:
            raise DomainError("kappa_values must match z_samples")
        object.__setattr__(self, "z_samples", z)
        object.__setattr__(self, "kappa_values", k)

    @property
    def dz(self) -> float:
        return float(self.z_samples[1] - self.z_samples[0])

    def to_csv(self, path):
        return write_columns(path, ["z", "kappa_re", "kappa_im"], self.z_samples, self.kappa_values.real, self.kappa_values.imag)

    def write_binary(self, path, meta=None):
        return write_array(path, self.kappa_values, {"z0": self.z_samples[0], "dz": self.dz, "index": list(self.index.astuple()), **(meta or {})})


def kappa_overlap(idx: KernelIndex, z_samples, delta: float, medium: MediumParams, **kw) -> KernelProfile:
    """kappa_lmno(z) = (chi hbar^2/m^2) * transverse_overlap; keyword options as there."""
    pref = medium.chi * medium.hbar**2 / medium.m**2
    values = pref * transverse_overlap(idx, z_samples, delta, medium, **kw)
    return KernelProfile(np.asarray(z_samples, float), values, idx)


# ---------------------------------------------------------------------------
# vertex


def _padded_grid(z, pad):
    n = z.size
    dz = z[1] - z[0]
    total = pad * n
    start = z[0] - ((total - n) // 2) * dz
    return start + dz * np.arange(total), (total - n) // 2


def chi_vertex(profile: KernelProfile, pad: int = 4, edge_tol: float = 1e-6) -> KernelProfile:
    """Fourier transform chi(nu) = integral kappa(z) exp(-i nu z) dz.

    ``kappa`` is zero padded to ``pad`` times its length before the FFT, so the
    vertex is sampled with spacing 2 pi / (pad * n * dz).  Returns a copy of
    ``profile`` with ``chi_values`` and ascending ``nu_samples`` filled in.

    Raises :class:`AccuracyError` when |kappa| at the grid edges exceeds
    ``edge_tol`` of its peak: the transform of a truncated slowly decaying
    kernel is then dominated by the truncation.
    """
    if pad < 1 or int(pad) != pad:
        raise DomainError("pad must be a positive integer")
    k = profile.kappa_values
    peak = np.max(np.abs(k))
    edge = max(abs(k[0]), abs(k[-1]))
    if peak > 0 and edge > edge_tol * peak:
        raise AccuracyError(
            "kernel has not decayed at the grid edges",
            edge_ratio=float(edge / peak),
            edge_tol=edge_tol,
        )
    z = profile.z_samples
    dz = profile.dz
    zp, off = _padded_grid(z, pad)
    buf = np.zeros(zp.size, dtype=complex)
    buf[off : off + z.size] = k
    nu = 2.0 * math.pi * np.fft.fftfreq(zp.size, dz)
    chi = dz * np.exp(-1j * nu * zp[0]) * np.fft.fft(buf)
    order = np.argsort(nu, kind="stable")
    return KernelProfile(z, k, profile.index, chi[order], nu[order], int(pad))


def chi_inverse(profile: KernelProfile) -> np.ndarray:
    """Recover kappa on the original z grid from ``profile.chi_values``."""
    if profile.chi_values is None:
        raise DomainError("profile carries no vertex values")
    z = profile.z_samples
    dz = profile.dz
    zp, off = _padded_grid(z, profile.pad)
    nu = profile.nu_samples
    # Undo the sort: fftfreq ordering is recovered by sorting fftfreq itself.
    natural = 2.0 * math.pi * np.fft.fftfreq(zp.size, dz)
    chi = np.empty_like(profile.chi_values)
    chi[np.argsort(natural, kind="stable")] = profile.chi_values
    buf = np.fft.ifft(chi * np.exp(1j * natural * zp[0])) / dz
    if not np.allclose(np.sort(natural), nu):
        raise DomainError("nu grid does not match the padded FFT grid")
    return buf[off : off + z.size]


# ---------------------------------------------------------------------------
# effective 1D nonlinearity


@dataclass(frozen=True, eq=False)
class SigmaProfile:
    """sigma(z) of the reduced 1D model (energy x length in the active units)."""

    z_samples: np.ndarray
    sigma_values: np.ndarray
    sign: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        z = check_uniform(self.z_samples, "z_samples")
        s = np.asarray(self.sigma_values, dtype=float)
        if s.shape != z.shape:
            raise DomainError("sigma_values must match z_samples")
        object.__setattr__(self, "z_samples", z)
        object.__setattr__(self, "sigma_values", s)

    @classmethod
    def constant(cls, z_samples, value: float) -> "SigmaProfile":
        z = np.asarray(z_samples, float)
        return cls(z, np.full(z.shape, float(value)), int(np.sign(value)), {"kind": "constant"})

    def scaled(self, factor: float) -> "SigmaProfile":
        return SigmaProfile(self.z_samples, self.sigma_values * factor, int(np.sign(factor) * self.sign), dict(self.meta))

    def peak_index(self) -> int:
        return int(np.argmax(np.abs(self.sigma_values)))

    def to_csv(self, path):
        return write_columns(path, ["z", "sigma"], self.z_samples, self.sigma_values)

    def write_binary(self, path, meta=None):
        return write_array(path, self.sigma_values.astype(complex), {"z0": self.z_samples[0], "dz": float(self.z_samples[1] - self.z_samples[0]), **self.meta, **(meta or {})})


def sigma_bare_prefactor(medium: MediumParams) -> float:
    """(2 pi hbar)^3 chi omega0^2 hbar^2 / m^2, the bare multiplier of the |psi|^4 integral."""
    h = medium.hbar
    return (2.0 * math.pi * h) ** 3 * medium.chi * medium.omega0**2 * h**2 / medium.m**2


def sigma_calibration(medium: MediumParams, delta: float = 1.0) -> float:
    """Rescale from the bare prefactor to the canonical photon-number normalization.

    With [phi(z), phi^dag(z')] = delta(z - z') and the 3D Kerr rate
    chi hbar omega0 |A|^2 for a photon-number envelope A, the reduced
    nonlinearity is (2 pi hbar)^2 chi hbar^2 omega0 K / N^2, where K is the
    |psi|^4 overlap and N = mode_norm.  Relative to the bare prefactor this
    is the constant m^2 / (2 pi hbar omega0 N^2), which equals
    1 / (2 pi omega0) in natural units.
    """
    n = mode_norm(medium, delta=delta)
    return medium.m**2 / (2.0 * math.pi * medium.hbar * medium.omega0 * n**2)


def sigma_profile(q: int, z_samples, delta: float, medium: MediumParams, calibrated: bool = True, **kw) -> SigmaProfile:
    """sigma(z) for one family, from the |psi_q^(0)|^4 transverse overlap.

    ``calibrated=False`` returns the bare prefactor alone (useful for
    comparison); the default applies :func:`sigma_calibration`.
    """
    if int(q) != q or q < 0:
        raise DomainError("q must be a non-negative integer")
    z = np.asarray(z_samples, float)
    k = transverse_overlap(KernelIndex(q, q, q, q), z, delta, medium, **kw).real
    factor = sigma_bare_prefactor(medium) * (sigma_calibration(medium, delta) if calibrated else 1.0)
    values = factor * k
    return SigmaProfile(z, values, int(np.sign(medium.chi)), {"q": int(q), "delta": delta, "calibrated": calibrated})


# ---------------------------------------------------------------------------
# regimes


class Regime(enum.Enum):
    CONSTANT_SIGMA_NLSE = "constant_sigma_nlse"
    SPM = "spm"
    GENERAL = "general"


def classify_ratio(ratio: float, low: float = 0.1, high: float = 10.0) -> Regime:
    if not ratio > 0:
        raise DomainError("length ratio must be positive")
    if ratio < low:
        return Regime.CONSTANT_SIGMA_NLSE
    if ratio > high:
        return Regime.SPM
    return Regime.GENERAL


@lru_cache(maxsize=64)
def _fwhm_natural(q: int) -> float:
    """FWHM of |sigma_q(z)| in units of Delta (the shape is independent of beta)."""
    med = MediumParams.natural()
    idx = KernelIndex(q, q, q, q)
    peak = abs(transverse_overlap(idx, [0.0], 1.0, med)[0])

    def half(z):
        return abs(transverse_overlap(idx, [z], 1.0, med)[0]) - 0.5 * peak

    hi = 0.5
    while half(hi) > 0:
        hi *= 2.0
    return 2.0 * brentq(half, 0.0, hi, xtol=1e-12)


def sigma_fwhm(q: int, delta: float) -> float:
    return _fwhm_natural(int(q)) * delta


def regime_lengths(medium: MediumParams, delta: float, pulse_extent: float, q: int = 0):
    """(L_disp, L_diff) as times: pulse_extent^2 / omega2 and FWHM(sigma)^2 / omega2."""
    if not (delta > 0 and pulse_extent > 0):
        raise DomainError("delta and pulse_extent must be positive")
    l_disp = pulse_extent**2 / medium.omega2
    l_diff = sigma_fwhm(q, delta) ** 2 / medium.omega2
    return l_disp, l_diff


def regime_classify(medium: MediumParams, delta: float, pulse_extent: float, q: int = 0, low: float = 0.1, high: float = 10.0) -> Regime:
    l_disp, l_diff = regime_lengths(medium, delta, pulse_extent, q)
    return classify_ratio(l_disp / l_diff, low, high)


def reduced_coupling(sigma: SigmaProfile, weighted: bool = False, weight=None) -> float:
    """Constant-sigma surrogate.

    Default: sigma(0), linearly interpolated if z = 0 is not a sample.  With
    ``weighted`` the average of sigma under the weight sigma^2 (or under the
    supplied non-negative ``weight`` array, e.g. |phi|^4 of a pulse).
    """
    s = sigma.sigma_values
    if not weighted:
        return float(np.interp(0.0, sigma.z_samples, s))
    w = s**2 if weight is None else np.asarray(weight, float)
    if w.shape != s.shape or np.any(w < 0) or not np.any(w > 0):
        raise DomainError("weight must be a non-negative array matching sigma")
    return float(np.sum(w * s) / np.sum(w))
