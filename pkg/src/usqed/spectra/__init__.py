"""Closed-system spectral methods for the Rabi, spin-boson and Hopfield models."""
from .braak import (BraakSeries, BraakSpectrum, SeriesConvergenceError, bargmann_residual,
                    braak_coefficients, braak_g, braak_series, braak_spectrum)
from .exact import (ConvergedSpectrum, ConvergenceError, diagonalize, exact_spectrum,
                    opposite_parity_crossings)
from .perturbative import (AnalyticSpectrum, bloch_siegert_spectrum, bs_effective_hamiltonian,
                           grwa_closed_form, grwa_spectrum, grwa_transformed_hamiltonian,
                           jc_numeric, jc_spectrum, spectrum_error)
from .variational import (PolaronAnsatz, VariationalResult, multipolaron_spin_boson_ground,
                          variational_polaron_ground)

__all__ = [name for name in dir() if not name.startswith("_")]
