"""Quantum X-wave simulation library.

Modules
-------
basis        X-wave spectra, mode profiles, synthesis and energy (``xwave_basis``)
kernel       interaction kernels, vertex, effective sigma(z), regimes (``nonlinear_kernel``)
propagation  linear/Kerr (z, r) propagators and the reduced 1D NLSE solver
quantum      Gaussian fluctuation engine, homodyne detection, beam splitters, MZ device
cli          the ``xwq`` command
"""
__version__ = "0.1.0"

from .errors import AccuracyError, AccuracyWarning, DomainError, XWQError  # noqa: E402,F401
from .units import MediumParams, UnitSystem, physical_medium  # noqa: E402,F401
