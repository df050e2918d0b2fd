"""Jaynes-Cummings, Bloch-Siegert and generalized-RWA spectra of the Rabi model."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre

from ..numkern import eig_hermitian
from ..qops import (DOWN, UP, HilbertSpec, JCParams, RabiParams, build_algebra, build_hamiltonian,
                    check_displacement_truncation, expi_hermitian, fock_state)


@dataclass
class AnalyticSpectrum:
    """Levels with manifold labels ``(n, branch)`` and optional lab-frame states.

    ``branch`` is 0 for the isolated ground level, -1/+1 for the lower/upper
    member of each 2x2 manifold.  ``states`` columns follow ``levels``.
    """

    levels: np.ndarray
    labels: list
    states: np.ndarray | None = None


def _sorted(levels, labels, states=None):
    order = np.argsort(levels, kind="stable")
    levels = np.asarray(levels)[order]
    labels = [labels[i] for i in order]
    if states is not None:
        states = states[:, order]
    return AnalyticSpectrum(levels, labels, states)


def _two_level(h11, h22, h12):
    mean = 0.5 * (h11 + h22)
    rad = np.sqrt(0.25 * (h11 - h22) ** 2 + abs(h12) ** 2)
    return mean - rad, mean + rad


def _manifold_states(h11, h22, h12):
    w, v = np.linalg.eigh(np.array([[h11, h12], [np.conj(h12), h22]]))
    return w, v


def jc_spectrum(params: RabiParams, n_max: int = 20, space: HilbertSpec | None = None) -> AnalyticSpectrum:
    """Closed-form Jaynes-Cummings levels for manifolds ``n <= n_max``.

    Manifold ``n >= 1`` is spanned by ``|up, n-1>`` and ``|down, n>``.  When a
    one-spin/one-mode ``space`` is given the dressed states are returned too.
    """
    w, W, g = params.omega, params.Omega, params.g
    levels, labels, cols = [-0.5 * W], [(0, 0)], []
    if space is not None:
        cols.append(fock_state(space, [DOWN], [0]))
    for n in range(1, n_max + 1):
        h11 = w * (n - 1) + 0.5 * W
        h22 = w * n - 0.5 * W
        ev, vec = _manifold_states(h11, h22, g * np.sqrt(n))
        for k, branch in enumerate((-1, 1)):
            levels.append(ev[k])
            labels.append((n, branch))
            if space is not None:
                if n >= space.fock_cutoff:
                    raise ValueError("space too small for requested manifolds")
                cols.append(vec[0, k] * fock_state(space, [UP], [n - 1])
                            + vec[1, k] * fock_state(space, [DOWN], [n]))
    states = np.array(cols).T if space is not None else None
    return _sorted(levels, labels, states)


def _bs_generators(params: RabiParams, space: HilbertSpec):
    alg = build_algebra(space)
    a, ad = alg.a[0].matrix, alg.adag[0].matrix
    sp, sm, sz = alg.sp[0].matrix, alg.sm[0].matrix, alg.sz[0].matrix
    w, W, g = params.omega, params.Omega, params.g
    G1 = g / (w + W) * (a @ sm - ad @ sp)
    G2 = g ** 2 / (2 * w * (w + W)) * sz @ (a @ a - ad @ ad)
    return G1, G2


def bloch_siegert_spectrum(params: RabiParams, n_max: int = 20,
                           space: HilbertSpec | None = None) -> AnalyticSpectrum:
    """Levels of the Bloch-Siegert effective Hamiltonian.

    ``H_BS = H_JC + chi [sigma_z (a^+a + 1/2) - 1/2]`` with
    ``chi = g^2/(omega + Omega)`` stays block diagonal in the excitation
    number.  With ``space`` the returned states are rotated back to the lab
    frame as ``U1 U2 |psi_BS>``.
    """
    w, W, g = params.omega, params.Omega, params.g
    if g > 0.3 * min(w, w + W):
        warnings.warn("Bloch-Siegert expansion used outside the perturbative regime", stacklevel=2)
    chi = g ** 2 / (w + W)
    levels, labels, cols = [-0.5 * W - chi], [(0, 0)], []
    if space is not None:
        cols.append(fock_state(space, [DOWN], [0]))
    for n in range(1, n_max + 1):
        # |up, n-1>: sigma_z=+1, a^+a=n-1 ; |down, n>: sigma_z=-1, a^+a=n
        h11 = w * (n - 1) + 0.5 * W + chi * (n - 1)
        h22 = w * n - 0.5 * W - chi * (n + 1)
        ev, vec = _manifold_states(h11, h22, g * np.sqrt(n))
        for k, branch in enumerate((-1, 1)):
            levels.append(ev[k])
            labels.append((n, branch))
            if space is not None:
                cols.append(vec[0, k] * fock_state(space, [UP], [n - 1])
                            + vec[1, k] * fock_state(space, [DOWN], [n]))
    states = None
    if space is not None:
        G1, G2 = _bs_generators(params, space)
        U1 = expi_hermitian(1j * G1)
        U2 = expi_hermitian(1j * G2)
        states = U1 @ U2 @ np.array(cols).T
    return _sorted(levels, labels, states)


def bs_effective_hamiltonian(params: RabiParams, space: HilbertSpec) -> np.ndarray:
    alg = build_algebra(space)
    chi = params.g ** 2 / (params.omega + params.Omega)
    H_jc = build_hamiltonian(JCParams(params.omega, params.Omega, params.g), space).matrix
    sz = alg.sz[0].matrix
    return H_jc + chi * (sz @ (alg.num().matrix + 0.5 * alg.identity.matrix) - 0.5 * alg.identity.matrix)


def grwa_transformed_hamiltonian(params: RabiParams, cutoff: int) -> tuple[HilbertSpec, np.ndarray]:
    """``U^+ H U`` with ``U = exp[(g/omega) sigma_x (a - a^+)]`` on a truncated space."""
    space = HilbertSpec(cutoff)
    kappa = params.g / params.omega
    check_displacement_truncation(2 * kappa, cutoff)
    alg = build_algebra(space)
    gen = kappa * alg.sx[0].matrix @ (alg.a[0].matrix - alg.adag[0].matrix)
    U = expi_hermitian(1j * gen)
    H = build_hamiltonian(params, space).matrix
    return space, U.conj().T @ H @ U


def grwa_spectrum(params: RabiParams, cutoff: int | None = None, n_levels: int | None = None) -> AnalyticSpectrum:
    """Generalized-RWA levels from the numerically transformed Hamiltonian.

    Only the 1x1 ground block ``{|down,0>}`` and the 2x2 blocks
    ``{|down,N>, |up,N-1>}`` of the polaron-frame Hamiltonian are kept.
    Blocks within a margin of the cutoff are dropped.
    """
    kappa = params.g / params.omega
    if cutoff is None:
        cutoff = int(max(40, 4 * (2 * kappa) ** 2 + 40))
    space, Ht = grwa_transformed_hamiltonian(params, cutoff)
    n_max = cutoff - 1 - max(10, int(4 * kappa ** 2) + 10)
    if n_levels is not None:
        n_max = min(n_max, n_levels)
    idx = lambda s, n: s * cutoff + n  # noqa: E731
    levels, labels = [np.real(Ht[idx(DOWN, 0), idx(DOWN, 0)])], [(0, 0)]
    for n in range(1, n_max + 1):
        i, j = idx(DOWN, n), idx(UP, n - 1)
        e1, e2 = _two_level(np.real(Ht[i, i]), np.real(Ht[j, j]), Ht[i, j])
        levels += [e1, e2]
        labels += [(n, -1), (n, 1)]
    out = _sorted(levels, labels)
    if n_levels is not None:
        out = AnalyticSpectrum(out.levels[:n_levels], out.labels[:n_levels])
    return out


def grwa_closed_form(params: RabiParams, n_max: int = 20) -> AnalyticSpectrum:
    """GRWA levels from Laguerre-polynomial overlaps of displaced Fock states.

    Cross-check for :func:`grwa_spectrum`; the diagonal renormalisation is
    ``exp(-2k^2) L_n(4k^2)`` and the block coupling
    ``(2k/sqrt n) exp(-2k^2) L^1_{n-1}(4k^2)`` with ``k = g/omega``.
    """
    w, W, g = params.omega, params.Omega, params.g
    k = g / w
    shift = -g * g / w

    def c(n):
        return np.exp(-2 * k * k) * eval_genlaguerre(n, 0, 4 * k * k)

    levels, labels = [shift - 0.5 * W * c(0)], [(0, 0)]
    for n in range(1, n_max + 1):
        h_down = w * n - 0.5 * W * c(n) + shift
        h_up = w * (n - 1) + 0.5 * W * c(n - 1) + shift
        s = 2 * k / np.sqrt(n) * np.exp(-2 * k * k) * eval_genlaguerre(n - 1, 1, 4 * k * k)
        e1, e2 = _two_level(h_down, h_up, 0.5 * W * s)
        levels += [e1, e2]
        labels += [(n, -1), (n, 1)]
    return _sorted(levels, labels)


def spectrum_error(approx: np.ndarray, exact: np.ndarray, n: int) -> float:
    return float(np.max(np.abs(np.asarray(approx)[:n] - np.asarray(exact)[:n])))


def jc_numeric(params: RabiParams, cutoff: int):
    """Diagonalise the Jaynes-Cummings Hamiltonian directly (oracle route)."""
    space = HilbertSpec(cutoff)
    return eig_hermitian(build_hamiltonian(JCParams(params.omega, params.Omega, params.g), space))
