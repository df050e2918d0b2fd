"""Polaron-type variational ground states.

Spin states ``|+>``, ``|->`` are the sigma_x eigenstates.  The single-mode
trial state is

    |psi(beta, lam)> ~ |+> D(-beta) S(lam)|0> - |-> D(beta) S(lam)|0>

and the multi-polaron state for the spin-boson model is

    |Psi> = sum_n C_n (|+, f_n> - |-, -f_n>)

with ``|f_n>`` a product of real coherent states.  For fixed displacements
the optimal ``C_n`` solve a small generalized eigenproblem, so only the
displacements are searched by the simplex minimiser.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ..numkern import minimize
from ..qops import HilbertSpec, RabiParams, SpinBosonParams, build_hamiltonian, coherent_amplitudes, destroy
from ..qops import expi_hermitian

_SQ2 = np.sqrt(0.5)
PLUS = np.array([_SQ2, _SQ2], dtype=complex)   # (up, down) components
MINUS = np.array([_SQ2, -_SQ2], dtype=complex)


@dataclass
class VariationalResult:
    energy: float
    state: np.ndarray
    beta: float
    lam: float
    converged: bool


@dataclass
class PolaronAnsatz:
    n_pol: int
    displacements: np.ndarray  # (n_pol, K), real
    weights: np.ndarray        # C_n, normalised state
    squeezing: float | None = None
    spin_mixing: float | None = None


def _squeezed_vacuum(lam: float, N: int) -> np.ndarray:
    a = destroy(N)
    return expi_hermitian(1j * lam * (a.T @ a.T - a @ a))[:, 0]


def _displace(v: np.ndarray, alpha: float) -> np.ndarray:
    N = len(v)
    a = destroy(N)
    return expi_hermitian(1j * alpha * (a.T - a)) @ v


def _trial_state(beta: float, lam: float, N: int) -> np.ndarray:
    base = _squeezed_vacuum(lam, N) if lam != 0 else np.eye(N, dtype=complex)[:, 0]
    psi = np.kron(PLUS, _displace(base, -beta)) - np.kron(MINUS, _displace(base, beta))
    return psi / np.linalg.norm(psi)


def variational_polaron_ground(params: RabiParams, with_squeezing: bool = False,
                               cutoff: int | None = None) -> VariationalResult:
    """Minimise the Rabi energy over the (squeezed) polaron family.

    The energy is evaluated with the dense Hamiltonian in a truncated Fock
    space, so the result bounds the ground energy of that truncated model
    from above.  ``lam`` is constrained to ``lam >= 0``.
    """
    w, g = params.omega, params.g
    if cutoff is None:
        cutoff = int(max(40, 6 * (g / w) ** 2 + 40))
    space = HilbertSpec(cutoff)
    H = build_hamiltonian(params, space).matrix

    def energy(p):
        beta = p[0]
        lam = p[1] if with_squeezing else 0.0
        psi = _trial_state(beta, lam, cutoff)
        return float(np.real(psi.conj() @ H @ psi))

    if with_squeezing:
        # squeezing is seeded from the squeeze-free optimum
        base = variational_polaron_ground(params, False, cutoff)
        starts = [(base.beta, 0.0), (base.beta, 0.1), (0.5 * base.beta, 0.2)]
        best = None
        for x0 in starts:
            r = minimize(energy, x0, bounds=[(None, None), (0.0, 2.0)])
            if best is None or r.fun < best.fun:
                best = r
        if best.fun > base.energy:
            best.x, best.fun = np.array([base.beta, 0.0]), base.energy
        beta, lam = float(best.x[0]), float(best.x[1])
    else:
        starts = [g / w, 0.5 * g / w, 0.0]
        best = None
        for x0 in starts:
            r = minimize(energy, [x0])
            if best is None or r.fun < best.fun:
                best = r
        beta, lam = float(best.x[0]), 0.0
    state = _trial_state(beta, lam, cutoff)
    return VariationalResult(best.fun, state, beta, lam, best.converged)


# ---------------------------------------------------------------------------
# multi-polaron spin-boson ansatz

def _mode_tables(f: np.ndarray, freqs, cutoff):
    """Per-mode overlap, number and quadrature matrices between polarons.

    ``f`` has shape (n, K); entries ``[k, m, n]``.  Analytic for infinite
    Fock space; exact truncated-space values when ``cutoff`` is given.
    """
    n, K = f.shape
    if cutoff is None:
        fm = f.T[:, :, None]
        fn = f.T[:, None, :]
        S = np.exp(-0.5 * (fm - fn) ** 2)
        return S, fm * fn * S, (fm + fn) * S
    a = destroy(cutoff)
    x = a + a.T
    num = np.diag(np.arange(cutoff, dtype=float))
    vecs = np.array([[np.real(coherent_amplitudes(f[i, k], cutoff)) for i in range(n)] for k in range(K)])
    S = np.einsum("kmi,kni->kmn", vecs, vecs)
    N = np.einsum("kmi,ij,knj->kmn", vecs, num, vecs)
    X = np.einsum("kmi,ij,knj->kmn", vecs, x, vecs)
    return S, N, X


def _polaron_matrices(f: np.ndarray, params: SpinBosonParams, cutoff):
    """Overlap and Hamiltonian matrices in the (non-orthogonal) polaron basis."""
    w, c = params.frequencies, params.couplings
    Sp, Np, Xp = _mode_tables(f, w, cutoff)
    Sm, Nm, Xm = _mode_tables(-f, w, cutoff)
    # cross overlaps <f_m| -f_n> for the sigma_z term
    Sx, _, _ = _mode_tables(np.concatenate([f, -f]), w, cutoff)
    n = f.shape[0]
    Sx = Sx[:, :n, n:]

    def prod_except(S, k):
        return np.prod(np.delete(S, k, axis=0), axis=0)

    S_tot = np.prod(Sp, axis=0) + np.prod(Sm, axis=0)
    H = np.zeros_like(S_tot)
    for k in range(len(w)):
        # |+>: sigma_x = +1 on f ; |->: sigma_x = -1 on -f
        H += (w[k] * Np[k] + c[k] * Xp[k]) * prod_except(Sp, k)
        H += (w[k] * Nm[k] - c[k] * Xm[k]) * prod_except(Sm, k)
    T = np.prod(Sx, axis=0)
    # sigma_z swaps |+> and |->; the relative minus sign of the ansatz flips it
    H += -0.5 * params.Omega * (T + T.T)
    return 0.5 * (S_tot + S_tot.T), 0.5 * (H + H.T)


def _lowest(S, H, rcond=1e-10):
    ws, vs = np.linalg.eigh(S)
    keep = ws > rcond * ws.max()
    B = vs[:, keep] / np.sqrt(ws[keep])
    e, u = np.linalg.eigh(B.T @ H @ B)
    return float(e[0]), B @ u[:, 0]


def polaron_energy(f: np.ndarray, params: SpinBosonParams, cutoff=None) -> tuple[float, np.ndarray]:
    S, H = _polaron_matrices(np.atleast_2d(f), params, cutoff)
    return _lowest(S, H)


def multipolaron_spin_boson_ground(params: SpinBosonParams, n_pol: int, cutoff: int | None = None,
                                   seed: int = 0, _previous: PolaronAnsatz | None = None
                                   ) -> tuple[float, PolaronAnsatz]:
    """Variational ground energy with ``n_pol`` polarons.

    Built incrementally: the ``n_pol - 1`` optimum is re-used and one new
    polaron is added, so the energy is non-increasing in ``n_pol``.  With
    ``cutoff`` every coherent state is truncated to that many Fock levels
    per mode and the energy bounds the truncated model's ground energy.
    """
    K = len(params.modes)
    if K * n_pol > 200:
        raise ValueError("too many variational parameters (K * n_pol > 200)")
    if n_pol < 1:
        raise ValueError("n_pol must be >= 1")
    w, c = params.frequencies, params.couplings
    rng = np.random.default_rng(seed)

    def objective(flat, n):
        return polaron_energy(flat.reshape(n, K), params, cutoff)[0]

    if n_pol == 1:
        x0 = (c / w)[None, :]
        prev_E = np.inf
    else:
        prev = _previous or multipolaron_spin_boson_ground(params, n_pol - 1, cutoff, seed)[1]
        prev_E = polaron_energy(prev.displacements, params, cutoff)[0]
        new = (0.5 * c / w) * (1 + 0.1 * rng.standard_normal(K))
        x0 = np.vstack([prev.displacements, new])
    n = x0.shape[0]
    res = minimize(lambda p: objective(p, n), x0.ravel(), xatol=1e-9, fatol=1e-14)
    best_x, best_E = res.x, res.fun
    if n_pol > 1 and best_E > prev_E:
        best_x, best_E = x0.ravel(), objective(x0.ravel(), n)
    f = best_x.reshape(n, K)
    E, C = polaron_energy(f, params, cutoff)
    S, _ = _polaron_matrices(f, params, cutoff)
    C = C / np.sqrt(C @ S @ C)
    return E, PolaronAnsatz(n_pol, f, C)


def polaron_state(ansatz: PolaronAnsatz, space: HilbertSpec) -> np.ndarray:
    """Dense state vector of a multi-polaron ansatz on a truncated space."""
    N = space.fock_cutoff
    psi = np.zeros(space.dim, dtype=complex)
    for Cn, fn in zip(ansatz.weights, ansatz.displacements):
        plus = np.array([1.0 + 0j])
        minus = np.array([1.0 + 0j])
        for alpha in fn:
            plus = np.kron(plus, coherent_amplitudes(alpha, N))
            minus = np.kron(minus, coherent_amplitudes(-alpha, N))
        psi += Cn * (np.kron(PLUS, plus) - np.kron(MINUS, minus))
    return psi / np.linalg.norm(psi)


def spin_boson_exact_ground(params: SpinBosonParams, cutoff: int) -> float:
    space = HilbertSpec(cutoff, n_modes=len(params.modes), n_spins=1)
    H = build_hamiltonian(params, space).matrix
    return float(sla.eigh(H, eigvals_only=True, subset_by_index=[0, 0])[0])
