"""Ground-state photons: dressed vs phenomenological master equation.

The dressed master equation relaxes to the true ground state, whose virtual
photons cannot leave the cavity.  Jumps built from the bare a and sigma_-
instead pump the system and leave an excess of photons that grows with g.
"""
import warnings

import numpy as np

from usqed.numkern import eig_hermitian
from usqed.opensys import BathSpec, build_lindbladian, photon_flux, steady_state, xplus_operator
from usqed.qops import HilbertSpec, RabiParams, build_algebra, build_hamiltonian

warnings.simplefilter("ignore")
rate = 1 / 60

for g in [0.2, 0.5, 0.8, 1.0]:
    space = HilbertSpec(16)
    alg = build_algebra(space)
    H = build_hamiltonian(RabiParams(1.0, 1.0, g), space)
    es = eig_hermitian(H)
    X = alg.x().matrix
    Ld = build_lindbladian("dressed", es, [BathSpec(X, gamma0=rate), BathSpec(alg.sx[0].matrix, gamma0=rate)],
                           n_levels=10)
    rd = steady_state(Ld)
    n_dressed = np.real(np.trace(Ld.to_working(alg.num().matrix) @ rd))
    flux = photon_flux(rd, xplus_operator(es.truncate(10), X, "dressed"))

    rp = steady_state(build_lindbladian("phenomenological", H, kappa=rate, gamma=rate))
    n_bare = np.real(np.trace(alg.num().matrix @ rp))
    print(f"g={g:.1f}  <a+a> dressed {n_dressed:.5f}  phenomenological {n_bare:.5f}  "
          f"excess {n_bare - n_dressed:.5f}  output flux {flux:.1e}")
