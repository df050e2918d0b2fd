"""Coulomb-gauge Rabi model: exact form vs truncated expansions of the coupling."""
import numpy as np

from usqed.gauge import gauge_spectrum_deviation

rows = gauge_spectrum_deviation(1.0, 1.0, [0.1, 0.2, 0.3, 0.5], orders=(2, 4, 6, 8), n_levels=6, cutoff=30,
                                cutoff_max=200)
for r in rows:
    label = r.variant if r.order is None else f"{r.variant}[{r.order}]"
    dev = "not converged" if not r.converged else f"{r.deviation:.3e}"
    print(f"g={r.g:.1f}  {label:20s} {dev:>14}  cutoff {r.cutoff}  excluded {r.n_excluded}")
