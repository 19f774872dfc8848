"""Medium parameters and the natural unit system.

All numerical work runs in units where hbar = 1, the effective mass
m = hbar / omega2 = 1 and the transverse extent Delta = 1.  The time unit is
then m * Delta**2 / hbar = Delta**2 / omega2.  Physical SI values only appear
at the I/O boundary (configuration files and exported metadata).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import scipy.constants as const

from .errors import DomainError

#: Dimension exponents (length, time, mass) of every convertible quantity.
DIMENSIONS = {
    "length": (1, 0, 0),
    "time": (0, 1, 0),
    "mass": (0, 0, 1),
    "frequency": (0, -1, 0),
    "wavenumber": (-1, 0, 0),
    "velocity": (1, -1, 0),
    "diffusivity": (2, -1, 0),
    "momentum": (1, -1, 1),
    "energy": (2, -2, 1),
    "action": (2, -1, 1),
    # chi multiplies an energy density to give a rate: m^3 / (J s).
    "kerr": (1, 1, -1),
    "dimensionless": (0, 0, 0),
}

MEDIUM_DIMENSIONS = {
    "omega0": "frequency",
    "n": "dimensionless",
    "k": "wavenumber",
    "omega1": "velocity",
    "omega2": "diffusivity",
    "chi": "kerr",
    "hbar": "action",
}


@dataclass(frozen=True)
class MediumParams:
    """Dispersive Kerr medium.

    Parameters
    ----------
    omega0 : float
        Carrier angular frequency.
    n : float
        Refractive index at the carrier.
    k : float
        Carrier wavenumber, ``n * omega0 / c``.
    omega1 : float
        Group velocity (first-order dispersion).
    omega2 : float
        Modulus of the second-order dispersion, > 0 (normal dispersion).
    chi : float
        Kerr coefficient; negative for a focusing medium.
    hbar : float
        Reduced Planck constant in the unit system of the other fields.
        Defaults to 1 (natural units).
    """

    omega0: float
    n: float
    k: float
    omega1: float
    omega2: float
    chi: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        bad = [
            name
            for name, ok in (
                ("omega0", self.omega0 > 0),
                ("n", self.n >= 1),
                ("k", self.k > 0),
                ("omega1", self.omega1 > 0),
                ("omega2", self.omega2 > 0),
                ("hbar", self.hbar > 0),
            )
            if not ok
        ]
        values = (self.omega0, self.n, self.k, self.omega1, self.omega2, self.chi, self.hbar)
        if not all(math.isfinite(v) for v in values):
            raise DomainError("medium parameters must be finite")
        if bad:
            raise DomainError(f"invalid medium parameters: {', '.join(bad)}")

    @property
    def m(self) -> float:
        """Effective mass hbar / omega2."""
        return self.hbar / self.omega2

    @property
    def beta(self) -> float:
        """Dimensionless Bessel argument scale sqrt(omega2 * k / omega1)."""
        return math.sqrt(self.omega2 * self.k / self.omega1)

    def with_chi(self, chi: float) -> "MediumParams":
        return replace(self, chi=chi)

    @classmethod
    def natural(cls, omega1=1.0, k=1.0, omega0=1.0e3, n=1.0, chi=0.0, m=1.0):
        """Build a medium directly in natural units (hbar = 1)."""
        return cls(omega0=omega0, n=n, k=k, omega1=omega1, omega2=1.0 / m, chi=chi, hbar=1.0)


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between SI and the natural units fixed by (Delta, omega2, hbar)."""

    delta: float
    omega2: float
    hbar: float = const.hbar

    def __post_init__(self):
        if not (self.delta > 0 and self.omega2 > 0 and self.hbar > 0):
            raise DomainError("unit system needs delta, omega2, hbar > 0")

    @property
    def length(self) -> float:
        return self.delta

    @property
    def time(self) -> float:
        return self.delta**2 / self.omega2

    @property
    def mass(self) -> float:
        return self.hbar / self.omega2

    def scale(self, kind: str) -> float:
        a, b, c = DIMENSIONS[kind]
        return self.length**a * self.time**b * self.mass**c

    def to_natural(self, value, kind: str):
        return value / self.scale(kind)

    def to_physical(self, value, kind: str):
        return value * self.scale(kind)

    def medium_to_natural(self, medium: MediumParams) -> MediumParams:
        fields = {name: self.to_natural(getattr(medium, name), kind) for name, kind in MEDIUM_DIMENSIONS.items()}
        return MediumParams(**fields)

    def medium_to_physical(self, medium: MediumParams) -> MediumParams:
        fields = {name: self.to_physical(getattr(medium, name), kind) for name, kind in MEDIUM_DIMENSIONS.items()}
        return MediumParams(**fields)


def physical_medium(omega0, n, omega1, omega2, chi=0.0, k=None) -> MediumParams:
    """SI medium; ``k`` defaults to ``n * omega0 / c``."""
    if k is None:
        k = n * omega0 / const.c
    return MediumParams(omega0=omega0, n=n, k=k, omega1=omega1, omega2=omega2, chi=chi, hbar=const.hbar)
