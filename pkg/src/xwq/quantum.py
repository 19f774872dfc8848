"""Linearized (Gaussian) quantum fluctuations around the classical NLSE mean field.

Fluctuation operators live on the z grid as b_j = sqrt(dz) * dphi_j, so
[b_i, b_j^dag] = delta_ij exactly.  A state carries the Bogoliubov pair (U, V)
with b(t) = U b(0) + V b(0)^dag; the columns of U and V index every input mode
that can feed the port, so after a beam splitter the matrices are N x 2N.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, IntegratorAccuracyError
from .grids import Field1D
from .io import dump_json, write_array, write_csv
from .propagation import PropagationConfig, StrangStepper, _sigma_on
from .units import MediumParams


def symplectic_errors(U, V) -> tuple[float, float]:
    """(||U U^dag - V V^dag - I||_2, ||U V^T - (U V^T)^T||_2)."""
    if not (np.all(np.isfinite(U)) and np.all(np.isfinite(V))):
        return math.inf, math.inf
    n = U.shape[0]
    a = U @ U.conj().T - V @ V.conj().T - np.eye(n)
    s = U @ V.T
    return float(np.linalg.norm(a, 2)), float(np.linalg.norm(s - s.T, 2))


@dataclass(frozen=True, eq=False)
class FluctuationState:
    """Classical mean plus the Green pair acting on the grid modes."""

    mean: Field1D
    green_u: np.ndarray
    green_v: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        u = np.asarray(self.green_u, dtype=complex)
        v = np.asarray(self.green_v, dtype=complex)
        if u.shape != v.shape or u.ndim != 2 or u.shape[0] != self.mean.n:
            raise DomainError("green_u and green_v must be matching (N x M) matrices with N grid points")
        object.__setattr__(self, "green_u", u)
        object.__setattr__(self, "green_v", v)

    @property
    def n(self) -> int:
        return self.mean.n

    def symplectic_errors(self):
        return symplectic_errors(self.green_u, self.green_v)

    def write_green(self, directory, stem="green"):
        directory = Path(directory)
        meta = {"z0": self.mean.z[0], "dz": self.mean.dz, "shape": list(self.green_u.shape)}
        return write_array(directory / f"{stem}_u.bin", self.green_u, meta) + write_array(directory / f"{stem}_v.bin", self.green_v, meta)


def vacuum_state(z_or_mean, mean=None) -> FluctuationState:
    """U = I, V = 0 around ``mean`` (a Field1D) or around zero on grid ``z``."""
    if isinstance(z_or_mean, Field1D):
        base = z_or_mean
    else:
        z = np.asarray(z_or_mean, float)
        base = Field1D(z, np.zeros(z.shape, complex)) if mean is None else Field1D(z, mean)
    n = base.n
    return FluctuationState(base, np.eye(n, dtype=complex), np.zeros((n, n), complex))


def kerr_bogoliubov(phi, sigma_values, t: float, hbar: float = 1.0):
    """Exact linearization (u, v) of the local flow phi -> phi exp(-i sigma |phi|^2 t / hbar).

    db(t) = u db(0) + v db(0)^dag with u = e^{-i Phi}(1 - i Phi),
    v = -i (sigma t / hbar) phi^2 e^{-i Phi}, Phi = sigma |phi|^2 t / hbar.
    |u|^2 - |v|^2 = 1 identically.
    """
    big_phi = sigma_values * np.abs(phi) ** 2 * t / hbar
    rot = np.exp(-1j * big_phi)
    return rot * (1.0 - 1j * big_phi), -1j * (sigma_values * t / hbar) * phi**2 * rot


def propagate_fluctuations(
    state: FluctuationState,
    sigma,
    cfg: PropagationConfig,
    medium: MediumParams,
    kinetic: bool = True,
    tol: float = 1e-6,
    check_every: int = 100,
) -> FluctuationState:
    """Advance mean and Green pair by the Strang splitting of the classical solver.

    The kinetic half-steps act on the columns of U and V with the same
    spectral factor as on the mean; the local step applies the exact 2x2
    Bogoliubov map of :func:`kerr_bogoliubov` at every grid point.  The mean
    sequence is identical to :func:`~xwq.propagation.nlse_split_step`.

    ``kinetic=False`` drops the dispersion, leaving independent single-mode
    Kerr evolutions per grid point.  :class:`IntegratorAccuracyError` is raised
    if the symplectic identity drifts beyond ``tol``.
    """
    s = _sigma_on(state.mean, sigma)
    n, dt = cfg.steps, cfg.step
    stepper = StrangStepper(state.mean.z, s, dt, medium)
    phi = state.mean.values.copy()
    U = state.green_u.copy()
    V = state.green_v.copy()
    kin = stepper.kinetic if kinetic else (lambda x: x)
    worst = 0.0
    for j in range(1, n + 1):
        phi, U, V = kin(phi), kin(U), kin(V)
        u, v = kerr_bogoliubov(phi, s, dt, medium.hbar)
        phi = phi * np.exp(-1j * stepper.nonlinear_phase(phi))
        U, V = u[:, None] * U + v[:, None] * V.conj(), u[:, None] * V + v[:, None] * U.conj()
        phi, U, V = kin(phi), kin(U), kin(V)
        if j % check_every == 0 or j == n:
            err = max(symplectic_errors(U, V))
            worst = max(worst, err)
            if err > tol:
                raise IntegratorAccuracyError("symplectic identity drifted", step=j, error=err, tol=tol)
    mean = state.mean.with_values(phi, t=state.mean.meta.get("t", 0.0) + cfg.T)
    peak_phase = float(np.max(np.abs(s) * np.abs(state.mean.values) ** 2) * cfg.T / medium.hbar)
    return FluctuationState(mean, U, V, {**state.meta, "symplectic_error": worst, "peak_nonlinear_phase": peak_phase})


# ---------------------------------------------------------------------------
# detection


@dataclass(frozen=True, eq=False)
class SqueezingResult:
    theta_samples: np.ndarray
    ratio: np.ndarray
    min_ratio: float
    theta_opt: float
    max_ratio: float
    meta: dict = field(default_factory=dict)

    def to_csv(self, path):
        return write_csv(path, ["theta", "ratio"], zip(self.theta_samples, self.ratio))

    def summary(self) -> dict:
        return {"min_ratio": self.min_ratio, "max_ratio": self.max_ratio, "theta_opt": self.theta_opt, **self.meta}

    def write_summary(self, path):
        return dump_json(path, self.summary())


def _lo_vector(state: FluctuationState, lo: Field1D, tol=1e-8):
    if lo.z.shape != state.mean.z.shape or not np.allclose(lo.z, state.mean.z):
        raise DomainError("local oscillator must share the state's grid")
    if abs(lo.norm() - 1.0) > tol:
        raise DomainError(f"local oscillator must be normalized, integral |LO|^2 = {lo.norm():.6g}")
    return lo.values * math.sqrt(lo.dz)


def homodyne_coefficients(state: FluctuationState, lo: Field1D):
    """(Nq, Mq): ratio(theta) = Nq + 2 Re(exp(-2 i theta) Mq)."""
    ell = _lo_vector(state, lo)
    a = ell.conj() @ state.green_u
    c = ell @ state.green_v.conj()
    return float(np.sum(np.abs(a) ** 2 + np.abs(c) ** 2)), complex(np.sum(a * c.conj()))


def homodyne_variance(state: FluctuationState, lo: Field1D, theta_samples=None, n_theta: int = 64) -> SqueezingResult:
    """Quadrature variance of X_theta relative to shot noise, from the Green pair.

    X_theta = (e^{-i theta} LO^dag b + h.c.) / sqrt(2); the vacuum value is 1.
    The minimum and its phase are computed in closed form, not from the samples:
    min = Nq - 2|Mq| at theta_opt = (arg Mq - pi)/2 mod pi.
    """
    if theta_samples is None:
        theta_samples = np.pi * np.arange(n_theta) / n_theta
    theta = np.asarray(theta_samples, float)
    nq, mq = homodyne_coefficients(state, lo)
    ratio = nq + 2.0 * np.real(np.exp(-2j * theta) * mq)
    theta_opt = float(((np.angle(mq) - np.pi) / 2.0) % np.pi)
    return SqueezingResult(theta, ratio, nq - 2.0 * abs(mq), theta_opt, nq + 2.0 * abs(mq))


def single_mode_min_variance(big_phi):
    """1 + 2 Phi^2 - 2 |Phi| sqrt(1 + Phi^2), the Kerr-squeezed minimum."""
    p = np.asarray(big_phi, float)
    return 1.0 + 2.0 * p**2 - 2.0 * np.abs(p) * np.sqrt(1.0 + p**2)


# ---------------------------------------------------------------------------
# two-port devices


@dataclass(frozen=True, eq=False)
class TwoPortState:
    """Two ports on one grid with joint Green pair (rows: port a then port b)."""

    mean_a: Field1D
    mean_b: Field1D
    green_u: np.ndarray
    green_v: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mean_a.z.shape != self.mean_b.z.shape or not np.allclose(self.mean_a.z, self.mean_b.z):
            raise DomainError("both ports must share one grid")
        n = self.mean_a.n
        u = np.asarray(self.green_u, complex)
        v = np.asarray(self.green_v, complex)
        if u.shape != v.shape or u.shape[0] != 2 * n:
            raise DomainError("two-port Green matrices must have 2N rows")
        object.__setattr__(self, "green_u", u)
        object.__setattr__(self, "green_v", v)

    @classmethod
    def from_inputs(cls, a: Field1D, b: Field1D | None = None) -> "TwoPortState":
        """Independent vacuum fluctuations around means ``a`` and ``b`` (default 0)."""
        if b is None:
            b = a.with_values(np.zeros(a.n, complex))
        n = a.n
        return cls(a, b, np.eye(2 * n, dtype=complex), np.zeros((2 * n, 2 * n), complex))

    @property
    def n(self) -> int:
        return self.mean_a.n

    def port(self, i: int) -> FluctuationState:
        n = self.n
        rows = slice(0, n) if i == 0 else slice(n, 2 * n)
        mean = self.mean_a if i == 0 else self.mean_b
        return FluctuationState(mean, self.green_u[rows], self.green_v[rows])

    def correlation_blocks(self):
        """(U_ab, V_ab): port-a rows restricted to port-b input columns."""
        n = self.n
        return self.green_u[:n, n:], self.green_v[:n, n:]

    def symplectic_errors(self):
        return symplectic_errors(self.green_u, self.green_v)

    def total_norm(self) -> float:
        return self.mean_a.norm() + self.mean_b.norm()


class BSConvention(enum.Enum):
    """SYMMETRIC: ((a + i b), (i a + b)) / sqrt 2.  REAL: ((a + b), (a - b)) / sqrt 2."""

    SYMMETRIC = "symmetric"
    REAL = "real"


def _bs_matrix(convention: BSConvention):
    if convention is BSConvention.SYMMETRIC:
        return np.array([[1.0, 1j], [1j, 1.0]]) / math.sqrt(2.0)
    return np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


def beam_splitter(two_port: TwoPortState, convention: BSConvention = BSConvention.SYMMETRIC) -> TwoPortState:
    """Apply the 50/50 unitary to the means and to the Green rows of both ports."""
    b = _bs_matrix(BSConvention(convention))
    n = two_port.n
    a_vals, b_vals = two_port.mean_a.values, two_port.mean_b.values
    out_a = b[0, 0] * a_vals + b[0, 1] * b_vals
    out_b = b[1, 0] * a_vals + b[1, 1] * b_vals
    big = np.kron(b, np.eye(n))
    return TwoPortState(two_port.mean_a.with_values(out_a), two_port.mean_b.with_values(out_b),
                        big @ two_port.green_u, big @ two_port.green_v, dict(two_port.meta))


def mz_squeezing_experiment(
    input_field: Field1D,
    sigma,
    cfg: PropagationConfig,
    medium: MediumParams,
    sigma_b=None,
    n_theta: int = 64,
    lo: Field1D | None = None,
    convention: BSConvention = BSConvention.SYMMETRIC,
):
    """Nonlinear Mach-Zehnder: split, Kerr-propagate both arms, recombine, detect.

    With the symmetric convention and identical arms the first output port is
    dark (its mean is exactly cancelled) and carries squeezed vacuum, the
    second is bright.  The local oscillator defaults to the normalized
    classical bright-port output and is used for both ports.  ``sigma_b`` sets
    a different nonlinearity in arm b; the resulting dark-port leakage is
    reported in ``meta`` instead of raising.

    Returns ``(bright, dark, output_state)``.
    """
    state = beam_splitter(TwoPortState.from_inputs(input_field), convention)
    arm_sigma = (sigma, sigma if sigma_b is None else sigma_b)
    arms = [propagate_fluctuations(state.port(i), arm_sigma[i], cfg, medium) for i in range(2)]
    mid = TwoPortState(arms[0].mean, arms[1].mean,
                       np.vstack([arms[0].green_u, arms[1].green_u]),
                       np.vstack([arms[0].green_v, arms[1].green_v]))
    out = beam_splitter(mid, convention)
    norms = [out.mean_a.norm(), out.mean_b.norm()]
    bright_i = int(np.argmax(norms))
    dark_i = 1 - bright_i
    bright_port = out.port(bright_i)
    if lo is None:
        if norms[bright_i] == 0:
            lo = input_field.normalized() if input_field.norm() > 0 else None
        else:
            lo = bright_port.mean.normalized()
        if lo is None:
            raise DomainError("input field is zero; supply a local oscillator")
    in_norm = input_field.norm()
    meta = {
        "dark_port": dark_i,
        "dark_leakage": norms[dark_i] / in_norm if in_norm > 0 else 0.0,
        "norm_error": abs(sum(norms) - in_norm) / in_norm if in_norm > 0 else 0.0,
        "arm_mismatch": sigma_b is not None,
        "symplectic_error": max(out.symplectic_errors()),
        "peak_nonlinear_phase": arms[0].meta["peak_nonlinear_phase"],
    }
    bright = homodyne_variance(bright_port, lo, n_theta=n_theta)
    dark = homodyne_variance(out.port(dark_i), lo, n_theta=n_theta)
    bright = SqueezingResult(bright.theta_samples, bright.ratio, bright.min_ratio, bright.theta_opt, bright.max_ratio, {**meta, "port": "bright"})
    dark = SqueezingResult(dark.theta_samples, dark.ratio, dark.min_ratio, dark.theta_opt, dark.max_ratio, {**meta, "port": "dark"})
    return bright, dark, TwoPortState(out.mean_a, out.mean_b, out.green_u, out.green_v, meta)
