"""Numerical toolkit for ultrastrong-coupling cavity QED.

Submodules: :mod:`qops` (operators and model Hamiltonians), :mod:`numkern`
(dense kernels), :mod:`spectra` (closed-system spectra), :mod:`opensys`
(master equations, input-output, correlations), :mod:`floquet` (periodic
drives), :mod:`gauge` (dipole/Coulomb gauge checks) and :mod:`cli`.
"""

__version__ = "0.1.0"
