import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from usqed.numkern import eig_hermitian
from usqed.opensys import BathSpec, build_lindbladian, xplus_operator
from usqed.qops import HilbertSpec, RabiParams, build_algebra, build_hamiltonian

settings.register_profile("usqed", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("usqed")


class DrivenRabi:
    """Dressed Rabi master equation truncated to a few levels, driven through a + a^+."""

    def __init__(self, g=0.6, n_levels=6, gamma0=0.01, cutoff=30):
        self.params = RabiParams(1.0, 1.0, g)
        self.space = HilbertSpec(cutoff)
        self.H = build_hamiltonian(self.params, self.space)
        self.alg = build_algebra(self.space)
        self.X = (self.alg.a[0] + self.alg.adag[0]).matrix
        self.eigen = eig_hermitian(self.H).truncate(n_levels)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            self.L0 = build_lindbladian("dressed", self.eigen, [BathSpec(self.X, gamma0=gamma0)],
                                        n_levels=n_levels)
        self.Oplus = xplus_operator(self.eigen, self.X, "dressed")
        self.gap = float(self.eigen.values[1] - self.eigen.values[0])


@pytest.fixture(scope="session")
def driven_rabi():
    return DrivenRabi()


def random_density(d, rng):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = A @ A.conj().T
    return rho / np.trace(rho)
