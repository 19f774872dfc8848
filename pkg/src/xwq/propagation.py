"""Classical solvers: the linear and Kerr (z, r) envelope propagators and the reduced 1D NLSE.

Envelope equation (transverse Laplacian with coefficient omega1 / (2k)):

    i dA/dt = -i omega1 dA/dz + (omega2/2) d^2A/dz^2 - (omega1/(2k)) lap_perp A + chi hbar omega0 |A|^2 A

with A in photon-number normalization (integral |A|^2 d^3x = photon number).
Reduced model for the particle field phi(z, t):

    i hbar dphi/dt = -(hbar^2/2m) d^2phi/dz^2 + sigma(z) |phi|^2 phi
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AliasingError, DomainError, InstabilityError
from .grids import ComplexField2D, Field1D, RadialGrid
from .io import dump_json, write_array, write_csv
from .kernel import SigmaProfile
from .units import MediumParams


@dataclass(frozen=True)
class PropagationConfig:
    """Time stepping controls.

    ``dt`` is an upper bound: the step actually used is T / ceil(T / dt) so the
    run lands on T exactly.  ``save_every`` counts steps between stored
    snapshots (0 keeps only the endpoints).
    """

    dt: float = 1e-3
    T: float = 1.0
    order: str = "strang"
    dealias: bool = False
    tol: float = 1e-10
    save_every: int = 0
    blowup: float = 1e6

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError("dt must be positive")
        if not (self.T >= 0 and math.isfinite(self.T)):
            raise DomainError("T must be non-negative")
        if self.order != "strang":
            raise DomainError("only Strang splitting is implemented")
        if self.save_every < 0:
            raise DomainError("save_every must be >= 0")

    @property
    def steps(self) -> int:
        return 0 if self.T == 0 else max(1, int(math.ceil(self.T / self.dt - 1e-9)))

    @property
    def step(self) -> float:
        return self.T / self.steps if self.steps else 0.0


# ---------------------------------------------------------------------------
# (z, r) propagation


def _edge_content(spec_z, coef_r):
    """Largest relative magnitude in the outer 1/32 of the z band or radial band."""
    peak = max(np.max(np.abs(spec_z)), 1e-300)
    n = spec_z.shape[0]
    band = max(1, n // 32)
    k = np.abs(np.fft.fftshift(spec_z, axes=0))
    z_edge = max(np.max(k[:band]), np.max(k[-band:])) / peak
    c = np.abs(coef_r)
    nr = c.shape[1]
    r_edge = np.max(c[:, -max(1, nr // 32):]) / max(np.max(c), 1e-300)
    return float(z_edge), float(r_edge)


class _ZRStepper:
    """Exact linear flow in the frame moving at omega1, on a Fourier(z) x Hankel(r) basis."""

    def __init__(self, grid: RadialGrid, medium: MediumParams):
        self.grid = grid
        self.medium = medium
        self.Q, self.kappa = grid.hankel
        self.sqrt_w = np.sqrt(grid.r_weights * grid.r)
        self.kz = 2.0 * math.pi * np.fft.fftfreq(grid.nz, grid.dz)
        self.omega = (-0.5 * medium.omega2 * self.kz[:, None] ** 2
                      + medium.omega1 / (2.0 * medium.k) * self.kappa[None, :] ** 2)
        self.full_rank = self.Q.shape[1] == grid.nr

    def to_weighted(self, values):
        return values * self.sqrt_w[None, :]

    def from_weighted(self, y):
        return y / self.sqrt_w[None, :]

    def spectral(self, y):
        return np.fft.fft(y, axis=0) @ self.Q

    def phase(self, t):
        return np.exp(-1j * self.omega * t)

    def apply(self, y, ph):
        yf = np.fft.fft(y, axis=0)
        c = yf @ self.Q
        out = (c * ph) @ self.Q.T
        if not self.full_rank:
            out = out + (yf - c @ self.Q.T)
        return np.fft.ifft(out, axis=0)

    def check_edges(self, y, edge_tol):
        yf = np.fft.fft(y, axis=0)
        c = yf @ self.Q
        z_edge, r_edge = _edge_content(yf, c)
        outside = 0.0
        if not self.full_rank:
            outside = float(np.linalg.norm(yf - c @ self.Q.T) / max(np.linalg.norm(yf), 1e-300))
        worst = max(z_edge, r_edge, outside)
        if worst > edge_tol:
            raise AliasingError(
                "field is not band-limited on the (z, r) grid",
                z_edge=z_edge,
                r_edge=r_edge,
                outside_span=outside,
                edge_tol=edge_tol,
            )


def linear_propagate_zr(field: ComplexField2D, T: float, medium: MediumParams, edge_tol: float = 1e-6, moving_window: bool = True) -> ComplexField2D:
    """Evolve the envelope with chi = 0 for time T by the exact spectral phase.

    The group-velocity term is an exact translation, applied by relabelling the
    z samples (``moving_window=True``, the output grid is shifted by omega1 T)
    or by a spectral shift on the fixed grid.  The remaining flow is diagonal
    in the Fourier(z) x discrete-Hankel(r) basis, with frequency
    -(omega2/2) K_z^2 + (omega1/2k) kappa^2, so the step is unitary on the grid.

    ``edge_tol`` bounds the allowed spectral content at the band edges
    relative to the peak; :class:`AliasingError` is raised above it.  X-wave
    inputs carry slowly decaying conical arms, so their truncation alone leaves
    edge content of a few percent and a relaxed value must be passed explicitly.
    """
    if not math.isfinite(T):
        raise DomainError("T must be finite")
    st = _ZRStepper(field.grid, medium)
    y = st.to_weighted(field.values)
    st.check_edges(y, edge_tol)
    ph = st.phase(T)
    if not moving_window:
        ph = ph * np.exp(-1j * medium.omega1 * st.kz[:, None] * T)
    out = st.from_weighted(st.apply(y, ph))
    grid = field.grid.shifted(medium.omega1 * T) if moving_window else field.grid
    return ComplexField2D(out, grid, {**field.labels, "t": field.labels.get("t", 0.0) + T})


def kerr_propagate_zr(field: ComplexField2D, medium: MediumParams, cfg: PropagationConfig, edge_tol: float = 1e-6) -> ComplexField2D:
    """Strang split-step for the envelope equation with the Kerr term chi hbar omega0 |A|^2.

    Returns the field at ``cfg.T`` on the grid shifted by omega1 T (moving window).
    """
    st = _ZRStepper(field.grid, medium)
    y = st.to_weighted(field.values)
    st.check_edges(y, edge_tol)
    n, dt = cfg.steps, cfg.step
    half = st.phase(0.5 * dt)
    rate = medium.chi * medium.hbar * medium.omega0
    inv_w = 1.0 / st.sqrt_w[None, :] ** 2
    peak0 = np.max(np.abs(y) ** 2 * inv_w)
    for _ in range(n):
        y = st.apply(y, half)
        y = y * np.exp(-1j * rate * np.abs(y) ** 2 * inv_w * dt)
        y = st.apply(y, half)
    if not np.all(np.isfinite(y)) or np.max(np.abs(y) ** 2 * inv_w) > cfg.blowup * max(peak0, 1e-300):
        raise InstabilityError("Kerr propagation blew up", steps=n)
    return ComplexField2D(st.from_weighted(y), field.grid.shifted(medium.omega1 * cfg.T),
                          {**field.labels, "t": field.labels.get("t", 0.0) + cfg.T})


# ---------------------------------------------------------------------------
# reduced 1D model


def _sigma_on(phi: Field1D, sigma) -> np.ndarray:
    if isinstance(sigma, SigmaProfile):
        if sigma.z_samples.shape != phi.z.shape or not np.allclose(sigma.z_samples, phi.z, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(phi.z)))):
            raise DomainError("sigma must be sampled on the field grid")
        return sigma.sigma_values
    s = np.asarray(sigma, dtype=float)
    return np.broadcast_to(s, phi.z.shape).copy()


class StrangStepper:
    """One Strang step: half kinetic, full local nonlinear phase, half kinetic.

    Both sub-flows are integrated exactly, so every step conserves the
    discrete norm up to roundoff.  The fluctuation propagator reuses the
    same kinetic factors and mean-field sequence.
    """

    def __init__(self, z, sigma_values, dt: float, medium: MediumParams):
        n = len(z)
        self.dz = float(z[1] - z[0])
        self.k = 2.0 * math.pi * np.fft.fftfreq(n, self.dz)
        self.hbar = medium.hbar
        self.dt = dt
        self.sigma = np.asarray(sigma_values, float)
        self.kin_half = np.exp(-1j * medium.hbar * self.k**2 / (2.0 * medium.m) * 0.5 * dt)

    def kinetic(self, phi):
        factor = self.kin_half.reshape((-1,) + (1,) * (np.ndim(phi) - 1))
        return np.fft.ifft(factor * np.fft.fft(phi, axis=0), axis=0)

    def nonlinear_phase(self, phi):
        """Phi_j = sigma_j |phi_j|^2 dt / hbar for the full local step."""
        return self.sigma * np.abs(phi) ** 2 * self.dt / self.hbar

    def step(self, phi):
        phi = self.kinetic(phi)
        phi = phi * np.exp(-1j * self.nonlinear_phase(phi))
        return self.kinetic(phi)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Immutable snapshots of a 1D run with conservation monitors."""

    times: np.ndarray
    states: tuple
    norms: np.ndarray
    hamiltonians: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> Field1D:
        return self.states[-1]

    @property
    def centroids(self) -> np.ndarray:
        return np.array([s.centroid() for s in self.states])

    @property
    def widths(self) -> np.ndarray:
        return np.array([s.width() for s in self.states])

    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - self.norms[0])) / self.norms[0]) if self.norms[0] > 0 else 0.0

    def energy_drift(self) -> float:
        h0 = self.hamiltonians[0]
        return float(np.max(np.abs(self.hamiltonians - h0)) / abs(h0)) if h0 != 0 else float(np.max(np.abs(self.hamiltonians)))

    def export(self, directory, stem: str = "trajectory") -> list[Path]:
        """Binary snapshot sequence, a JSON manifest and a summary CSV."""
        directory = Path(directory)
        arr = np.array([s.values for s in self.states])
        z = self.states[0].z
        files = write_array(directory / f"{stem}.bin", arr, {"z0": z[0], "dz": float(z[1] - z[0]), "nz": z.size, "layout": "time outer, z inner"})
        files.append(dump_json(directory / f"{stem}_manifest.json", {
            "times": self.times, "norms": self.norms, "hamiltonians": self.hamiltonians,
            "grid": {"z0": z[0], "dz": float(z[1] - z[0]), "nz": int(z.size)}, **self.meta,
        }))
        files.append(write_csv(directory / f"{stem}_summary.csv", ["t", "norm", "H", "centroid", "width"],
                               zip(self.times, self.norms, self.hamiltonians, self.centroids, self.widths)))
        return files


def classical_hamiltonian(phi: Field1D, sigma, medium: MediumParams) -> float:
    """H = integral (hbar^2/2m)|dphi/dz|^2 + (sigma/2)|phi|^4 dz, spectral derivative."""
    s = _sigma_on(phi, sigma)
    dphi = np.fft.ifft(1j * phi.wavenumbers * np.fft.fft(phi.values))
    dens = medium.hbar**2 / (2.0 * medium.m) * np.abs(dphi) ** 2 + 0.5 * s * np.abs(phi.values) ** 4
    return float(phi.dz * np.sum(dens))


def nlse_split_step(phi0: Field1D, sigma, cfg: PropagationConfig, medium: MediumParams, monitor: bool = True) -> Trajectory:
    """Integrate the reduced NLSE by Strang splitting; returns a :class:`Trajectory`.

    ``sigma`` is a :class:`SigmaProfile` on the same grid or a scalar.
    Raises :class:`InstabilityError` when the peak density exceeds ``cfg.blowup``
    times its initial value or turns non-finite.
    """
    s = _sigma_on(phi0, sigma)
    n, dt = cfg.steps, cfg.step
    stepper = StrangStepper(phi0.z, s, dt, medium)
    phi = phi0.values.copy()
    peak0 = max(float(np.max(np.abs(phi) ** 2)), 1e-300)
    times, states = [0.0], [phi0]
    norms = [phi0.norm()]
    hams = [classical_hamiltonian(phi0, s, medium) if monitor else 0.0]

    def record(j, values):
        f = phi0.with_values(values, t=j * dt)
        times.append(j * dt)
        states.append(f)
        norms.append(f.norm())
        hams.append(classical_hamiltonian(f, s, medium) if monitor else 0.0)

    for j in range(1, n + 1):
        phi = stepper.step(phi)
        if j % 64 == 0 or j == n:
            peak = np.max(np.abs(phi) ** 2)
            if not np.isfinite(peak) or peak > cfg.blowup * peak0:
                raise InstabilityError("density blow-up in split-step integration", step=j, growth=float(peak / peak0))
        if j == n or (cfg.save_every and j % cfg.save_every == 0):
            record(j, phi)
    return Trajectory(np.array(times), tuple(states), np.array(norms), np.array(hams), {"dt": dt, "steps": n})


# ---------------------------------------------------------------------------
# analytic oracles


def soliton_profile(width: float, sigma_const: float, medium: MediumParams, z=None, n: int = 1024, extent: float = 32.0) -> Field1D:
    """Bright soliton A sech(z / w) of the constant-sigma NLSE.

    A^2 = hbar^2 / (m |sigma| w^2); the phase rotates at mu / hbar with
    mu = -hbar^2 / (2 m w^2), recorded in ``meta["mu"]``.  Default grid:
    ``n`` points on [-extent w, extent w).
    """
    if not sigma_const < 0:
        raise DomainError("a bright soliton requires sigma_const < 0")
    if not width > 0:
        raise DomainError("width must be positive")
    if z is None:
        from .grids import uniform_z

        z = uniform_z(n, extent * width)
    amp = medium.hbar / (width * math.sqrt(medium.m * abs(sigma_const)))
    mu = -medium.hbar**2 / (2.0 * medium.m * width**2)
    return Field1D(np.asarray(z, float), amp / np.cosh(np.asarray(z, float) / width),
                   {"amplitude": amp, "mu": mu, "width": width, "sigma": sigma_const, "period": 2.0 * math.pi * medium.hbar / abs(mu)})


def stationary_residual(phi: Field1D, sigma, mu: float, medium: MediumParams) -> float:
    """max |-(hbar^2/2m) phi'' + sigma |phi|^2 phi - mu phi| / max |phi| with spectral phi''."""
    s = _sigma_on(phi, sigma)
    d2 = np.fft.ifft(-(phi.wavenumbers**2) * np.fft.fft(phi.values))
    res = -medium.hbar**2 / (2.0 * medium.m) * d2 + s * np.abs(phi.values) ** 2 * phi.values - mu * phi.values
    return float(np.max(np.abs(res)) / np.max(np.abs(phi.values)))


def spm_exact(phi0: Field1D, sigma, t: float, hbar: float = 1.0) -> Field1D:
    """Dispersionless solution phi0 exp(-i sigma |phi0|^2 t / hbar)."""
    s = _sigma_on(phi0, sigma)
    return phi0.with_values(phi0.values * np.exp(-1j * s * np.abs(phi0.values) ** 2 * t / hbar), t=t)


def free_gaussian(z, w0: float, t: float, medium: MediumParams, amplitude=1.0) -> Field1D:
    """Free evolution of amplitude * exp(-z^2/(2 w0^2)) under -(hbar^2/2m) d^2/dz^2."""
    tau = medium.hbar * t / medium.m
    z = np.asarray(z, float)
    c = 1.0 + 1j * tau / w0**2
    return Field1D(z, amplitude / np.sqrt(c) * np.exp(-(z**2) / (2.0 * (w0**2 + 1j * tau))))


def free_gaussian_width(w0: float, t: float, medium: MediumParams) -> float:
    """1/e half-width w(t) with w^2 = w0^2 (1 + (hbar t / (m w0^2))^2)."""
    return w0 * math.sqrt(1.0 + (medium.hbar * t / (medium.m * w0**2)) ** 2)


def gaussian_kinetic_energy(w0: float, medium: MediumParams, amplitude=1.0) -> float:
    """(hbar^2/2m) integral |d/dz amplitude exp(-z^2/(2 w0^2))|^2 dz = (hbar^2/2m) |a|^2 sqrt(pi) / (2 w0)."""
    return medium.hbar**2 / (2.0 * medium.m) * abs(amplitude) ** 2 * math.sqrt(math.pi) / (2.0 * w0)
