"""Sampling grids and sampled fields on the (z, r) plane."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import special as sp

from .errors import AccuracyError, DomainError
from .special import composite_gauss_legendre


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def uniform_z(nz: int, half_width: float, offset: bool = False) -> np.ndarray:
    """Periodic-style uniform grid on [-half_width, half_width).

    With ``offset=True`` the samples are shifted by half a step so the grid is
    mirror symmetric about z = 0 (and excludes z = 0).
    """
    if not is_power_of_two(nz):
        raise DomainError(f"nz must be a power of two, got {nz}")
    if half_width <= 0:
        raise DomainError("half_width must be positive")
    dz = 2.0 * half_width / nz
    z = -half_width + dz * np.arange(nz)
    return z + 0.5 * dz if offset else z


def check_uniform(x, name="grid", rtol=1e-9):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DomainError(f"{name} must be a 1D array with at least two samples")
    d = np.diff(x)
    if np.any(d <= 0) or np.ptp(d) > rtol * abs(d[0]) * max(1, x.size):
        raise DomainError(f"{name} must be uniform and increasing")
    return x


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform z samples times a radial quadrature on [0, R].

    ``r_weights`` integrate ``g(r) dr``; radial area integrals therefore use
    ``2 * pi * sum(r_weights * r_nodes * g)``.  ``kind`` is ``"legendre"``
    (composite Gauss-Legendre panels) or ``"bessel"`` (nodes at scaled zeros of
    J0, the quasi-discrete Hankel sampling).
    """

    z: np.ndarray
    r: np.ndarray
    r_weights: np.ndarray
    R: float
    kind: str = "legendre"

    def __post_init__(self):
        z = check_uniform(self.z, "z_samples")
        if not is_power_of_two(z.size):
            raise DomainError(f"z grid length must be a power of two, got {z.size}")
        r = np.asarray(self.r, dtype=float)
        w = np.asarray(self.r_weights, dtype=float)
        if r.shape != w.shape or r.ndim != 1:
            raise DomainError("r nodes and weights must be matching 1D arrays")
        if np.any(r < 0) or np.any(np.diff(r) <= 0) or r[-1] > self.R:
            raise DomainError("r nodes must be strictly increasing within [0, R]")
        if np.any(w <= 0):
            raise DomainError("radial quadrature weights must be positive")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "r_weights", w)

    @classmethod
    def legendre(cls, z, R: float, nr: int, nodes_per_panel: int = 8) -> "RadialGrid":
        if nr % nodes_per_panel:
            raise DomainError("nr must be a multiple of nodes_per_panel")
        r, w = composite_gauss_legendre(np.linspace(0.0, R, nr // nodes_per_panel + 1), nodes_per_panel)
        return cls(np.asarray(z, float), r, w, float(R), "legendre")

    @classmethod
    def bessel(cls, z, R: float, nr: int) -> "RadialGrid":
        zeros = sp.jn_zeros(0, nr + 1)
        s = zeros[-1]
        r = zeros[:-1] * R / s
        # Discrete Fourier-Bessel orthogonality doubles as a quadrature rule.
        w = 2.0 * R**2 / (s**2 * sp.j1(zeros[:-1]) ** 2) / r
        return cls(np.asarray(z, float), r, w, float(R), "bessel")

    @property
    def nz(self) -> int:
        return self.z.size

    @property
    def nr(self) -> int:
        return self.r.size

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])

    @property
    def shape(self):
        return (self.nz, self.nr)

    @property
    def area_weights(self) -> np.ndarray:
        """Weights for ``integral g dx dy`` of a radial function."""
        return 2.0 * np.pi * self.r_weights * self.r

    def shifted(self, dz: float) -> "RadialGrid":
        """Same grid with the z samples translated by ``dz``."""
        return RadialGrid(self.z + dz, self.r, self.r_weights, self.R, self.kind)

    def mesh(self):
        return np.meshgrid(self.z, self.r, indexing="ij")

    @cached_property
    def hankel(self):
        """Orthonormal radial transform in the weighted space.

        Returns ``(Q, kappa)``: column ``n`` of ``Q`` samples
        ``sqrt(w r) * J0(kappa_n r)`` normalized on [0, R], with the columns
        made exactly orthonormal by a polar decomposition.
        """
        if self.kind == "bessel":
            zeros = sp.jn_zeros(0, self.nr + 1)
            s = zeros[-1]
            j = zeros[:-1]
            t = 2.0 * sp.j0(np.outer(j, j) / s) / (np.abs(sp.j1(j))[:, None] * np.abs(sp.j1(j))[None, :] * s)
            u, sv, vh = np.linalg.svd(t)
            if np.max(np.abs(sv - 1.0)) > 1e-6:
                raise AccuracyError("discrete Hankel matrix is not orthogonal", singular_spread=float(np.ptp(sv)))
            # Column n = mode n evaluated at the nodes (t is symmetric).
            return u @ vh, j / self.R
        zeros = sp.jn_zeros(0, self.nr)
        kappa = zeros / self.R
        norm = np.sqrt(2.0) / (self.R * np.abs(sp.j1(zeros)))
        b = np.sqrt(self.r_weights * self.r)[:, None] * sp.j0(np.outer(self.r, kappa)) * norm
        gram = b.T @ b
        # Keep the leading modes the panels integrate accurately.
        err = np.array([np.max(np.abs(gram[:k, :k] - np.eye(k))) for k in range(1, self.nr + 1)])
        keep = int(np.nonzero(err < 1e-8)[0].max()) + 1 if np.any(err < 1e-8) else 0
        if keep == 0:
            raise AccuracyError("radial panels resolve no Fourier-Bessel mode")
        u, _, vh = np.linalg.svd(b[:, :keep], full_matrices=False)
        return u @ vh, kappa[:keep]

    def metadata(self) -> dict:
        return {
            "nz": self.nz,
            "z0": float(self.z[0]),
            "dz": self.dz,
            "nr": self.nr,
            "R": self.R,
            "radial_kind": self.kind,
        }


@dataclass(frozen=True, eq=False)
class ComplexField2D:
    """Complex envelope sampled as ``values[z_index, r_index]``."""

    values: np.ndarray
    grid: RadialGrid
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise DomainError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        object.__setattr__(self, "values", v)

    def norm2(self) -> float:
        """2 pi integral |A|^2 r dr dz by the grid quadrature."""
        return float(self.grid.dz * np.sum(np.abs(self.values) ** 2 * self.grid.area_weights[None, :]))

    def inner(self, other: "ComplexField2D") -> complex:
        return complex(self.grid.dz * np.sum(np.conj(self.values) * other.values * self.grid.area_weights[None, :]))

    def __add__(self, other):
        return ComplexField2D(self.values + other.values, self.grid, self.labels)

    def __mul__(self, scalar):
        return ComplexField2D(self.values * scalar, self.grid, self.labels)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class CoefficientFunction:
    """Mode coefficients C_q(p) on a uniform momentum grid."""

    q: int
    p: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        p = check_uniform(self.p, "p_samples")
        c = np.asarray(self.c, dtype=complex)
        if c.shape != p.shape:
            raise DomainError("p_samples and c_values lengths differ")
        if self.q < 0:
            raise DomainError("family index q must be >= 0")
        peak = np.max(np.abs(c))
        if peak > 0 and max(abs(c[0]), abs(c[-1])) > 1e-8 * peak:
            raise DomainError("coefficient function must vanish at the ends of its p grid")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "c", c)

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    def energy(self) -> float:
        """integral |C|^2 dp (trapezoid; the ends vanish)."""
        return float(self.dp * np.sum(np.abs(self.c) ** 2))

    def scaled(self, factor) -> "CoefficientFunction":
        return CoefficientFunction(self.q, self.p, self.c * factor)

    @classmethod
    def gaussian(cls, q: int, p0: float, width: float, n: int = 64, span: float = 8.0, amplitude=1.0):
        """Gaussian exp(-(p-p0)^2 / (2 width^2)) sampled on p0 +- span*width."""
        p = np.linspace(p0 - span * width, p0 + span * width, n)
        c = amplitude * np.exp(-((p - p0) ** 2) / (2 * width**2))
        c[0] = c[-1] = 0.0
        return cls(q, p, c)


@dataclass(frozen=True, eq=False)
class Field1D:
    """Complex field phi(z) on a uniform, power-of-two, periodic z grid."""

    z: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        z = check_uniform(self.z, "z_samples")
        if not is_power_of_two(z.size):
            raise DomainError(f"z grid length must be a power of two, got {z.size}")
        v = np.asarray(self.values, dtype=complex)
        if v.shape != z.shape:
            raise DomainError("values must match the z grid")
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "values", v)

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])

    @property
    def n(self) -> int:
        return self.z.size

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, self.dz)

    def norm(self) -> float:
        """integral |phi|^2 dz."""
        return float(self.dz * np.sum(np.abs(self.values) ** 2))

    def inner(self, other: "Field1D") -> complex:
        return complex(self.dz * np.vdot(self.values, other.values))

    def centroid(self) -> float:
        w = np.abs(self.values) ** 2
        return float(np.sum(self.z * w) / np.sum(w))

    def width(self) -> float:
        """RMS width of |phi|^2."""
        w = np.abs(self.values) ** 2
        c = np.sum(self.z * w) / np.sum(w)
        return float(np.sqrt(np.sum((self.z - c) ** 2 * w) / np.sum(w)))

    def with_values(self, values, **meta) -> "Field1D":
        return Field1D(self.z, values, {**self.meta, **meta})

    def normalized(self) -> "Field1D":
        return self.with_values(self.values / np.sqrt(self.norm()))

    @classmethod
    def gaussian(cls, z, width: float, amplitude=1.0, center=0.0, momentum=0.0, hbar=1.0):
        """amplitude * exp(-(z-center)^2 / (2 width^2) + i momentum z / hbar)."""
        z = np.asarray(z, float)
        return cls(z, amplitude * np.exp(-((z - center) ** 2) / (2 * width**2) + 1j * momentum * z / hbar))
