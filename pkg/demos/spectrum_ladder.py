"""Compare approximate Rabi spectra against exact diagonalisation at resonance."""
import warnings

import numpy as np

from usqed.qops import RabiParams
from usqed.spectra import (bloch_siegert_spectrum, braak_spectrum, exact_spectrum, grwa_spectrum, jc_spectrum,
                           spectrum_error)

warnings.simplefilter("ignore")

print(f"{'g':>5} {'JC':>10} {'BS':>10} {'GRWA':>10}")
for g in [0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0]:
    p = RabiParams(1.0, 1.0, g)
    ex = exact_spectrum(p, n_levels=4).levels
    errs = [spectrum_error(jc_spectrum(p).levels, ex, 4),
            spectrum_error(bloch_siegert_spectrum(p).levels, ex, 4),
            spectrum_error(grwa_spectrum(p, n_levels=4).levels, ex, 4)]
    print(f"{g:5.2f} " + " ".join(f"{e:10.2e}" for e in errs))

# the G-function zeros give the same levels with parity labels attached
p = RabiParams(1.0, 0.4, 0.7)
bs = braak_spectrum(p, 2.6)
for E, s in zip(bs.levels, bs.parity):
    print(f"E = {E: .9f}  parity {s:+d}")
