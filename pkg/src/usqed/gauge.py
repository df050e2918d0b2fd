"""Dipole- and Coulomb-gauge Rabi Hamiltonians.

``H_D = w a^+a + (W/2) s_z + i g s_x (a^+ - a) + g^2/w``
``H_C = w a^+a + (W/2) [s_z cos(theta) + s_y sin(theta)]``,
``theta = (2g/w)(a + a^+)``.

The constant ``g^2/w`` in ``H_D`` is the dipole self-energy (``s_x^2 = 1``);
with it the two Hamiltonians are unitarily equivalent, without it their
spectra differ by that constant.  Taylor variants replace ``cos`` and
``sin`` by their series through a given total order in ``theta``; these are
unbounded below, so only levels that stay away from the Fock cutoff and do
not move when it is raised are compared.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numkern import eig_hermitian
from .qops import (HilbertSpec, Operator, RabiParams, TruncationError, build_algebra, coherent_amplitudes,
                   func_hermitian, parity_operator)

VARIANTS = ("dipole", "coulomb_full", "coulomb_taylor")


@dataclass(frozen=True)
class GaugeFamily:
    params: RabiParams
    variant: str = "dipole"
    cutoff: int = 60
    order: int | None = None
    self_energy: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.variant == "coulomb_taylor" and (self.order is None or self.order < 0):
            raise ValueError("coulomb_taylor needs order >= 0")


def _taylor(theta: np.ndarray, order: int):
    """Truncated cos/sin series with all terms up to ``theta^order``."""
    d = theta.shape[0]
    c = np.zeros((d, d), dtype=complex)
    s = np.zeros((d, d), dtype=complex)
    power = np.eye(d, dtype=complex)
    for k in range(order + 1):
        term = power / math.factorial(k)
        if k % 2 == 0:
            c += (-1) ** (k // 2) * term
        else:
            s += (-1) ** (k // 2) * term
        power = power @ theta
    return c, s


def coulomb_argument_defect(params: RabiParams, cutoff: int) -> float:
    """Norm loss of ``exp(i theta)|0>`` at the cutoff.

    ``exp(i (2g/w)(a + a^+))|0>`` is a coherent state of amplitude
    ``2ig/w``; the tail beyond the cutoff measures how faithfully the
    implied gauge transformation is represented.
    """
    amp = coherent_amplitudes(2j * params.g / params.omega, cutoff)
    return float(abs(1 - np.linalg.norm(amp)))


def build_gauge_hamiltonian(family: GaugeFamily, check: bool = True, tol: float = 1e-6) -> Operator:
    p = family.params
    space = HilbertSpec(family.cutoff)
    alg = build_algebra(space)
    sz, sx = alg.sz[0].matrix, alg.sx[0].matrix
    a, ad = alg.a[0].matrix, alg.adag[0].matrix
    H0 = p.omega * alg.num().matrix
    if family.variant == "dipole":
        H = H0 + 0.5 * p.Omega * sz + 1j * p.g * sx @ (ad - a)
        if family.self_energy:
            H = H + (p.g ** 2 / p.omega) * np.eye(space.dim)
    else:
        if check and p.g > 0:
            defect = coulomb_argument_defect(p, family.cutoff)
            if defect > tol:
                raise TruncationError(
                    f"cutoff {family.cutoff} too small for g/omega={p.g / p.omega}: defect {defect:.2e}"
                )
        x = np.diag(np.sqrt(np.arange(1, family.cutoff)), 1)
        theta = (2 * p.g / p.omega) * (x + x.T)
        if family.variant == "coulomb_full":
            c = func_hermitian(theta, np.cos)
            s = func_hermitian(theta, np.sin)
        else:
            c, s = _taylor(theta.astype(complex), family.order)
        H = H0 + 0.5 * p.Omega * (np.kron(_SZ, c) + np.kron(_SY, s))
    H = 0.5 * (H + H.conj().T)
    return Operator(space, H, True)


_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)


# ---------------------------------------------------------------------------
# converged physical levels

@dataclass
class GaugeLevels:
    levels: np.ndarray
    parity: np.ndarray
    cutoff: int
    n_excluded: int = 0
    converged: bool = True
    flags: list = field(default_factory=list)


def _edge_weight(vecs: np.ndarray, cutoff: int, frac: float) -> np.ndarray:
    n0 = int(cutoff * (1 - frac))
    w = np.abs(vecs.reshape(2, cutoff, -1)) ** 2
    return w[:, n0:, :].sum(axis=(0, 1))


def gauge_levels(family: GaugeFamily, n_levels: int = 6, tol: float = 1e-8, step: int = 20,
                 cutoff_max: int = 400, edge_frac: float = 0.25, edge_tol: float = 1e-8) -> GaugeLevels:
    """Lowest ``n_levels`` physical levels, converged in the cutoff.

    A level is physical when its eigenvector has less than ``edge_tol``
    weight in the top ``edge_frac`` of the Fock ladder.  Cutoff-bound states
    (present in Taylor variants, which are unbounded below) are excluded and
    counted.  The cutoff grows by ``step`` until the kept levels move less
    than ``tol``.
    """
    N = family.cutoff
    prev = None
    flags = []
    while N <= cutoff_max:
        fam = GaugeFamily(family.params, family.variant, N, family.order, family.self_energy)
        H = build_gauge_hamiltonian(fam, check=False)
        es = eig_hermitian(H, parity=parity_operator(H.space))
        keep = _edge_weight(es.vectors, N, edge_frac) < edge_tol
        vals = es.values[keep][:n_levels]
        par = np.rint(es.parity[keep][:n_levels]).astype(int)
        n_excl = int(np.sum(~keep[: np.searchsorted(es.values, vals[-1], side="right")])) if len(vals) else 0
        if len(vals) == n_levels and prev is not None and len(prev) == n_levels:
            if np.max(np.abs(vals - prev)) < tol:
                return GaugeLevels(vals, par, N, n_excl, True, flags)
        prev = vals
        N += step
    flags.append(f"not converged below cutoff {cutoff_max}")
    return GaugeLevels(prev if prev is not None else np.array([]), np.array([], int), N - step, 0, False, flags)


def paired_deviation(a: GaugeLevels, b: GaugeLevels) -> float:
    """Max level difference, pairing levels by sorted order within each parity sector."""
    dev = 0.0
    for s in (-1, 1):
        x = np.sort(a.levels[a.parity == s])
        y = np.sort(b.levels[b.parity == s])
        n = min(len(x), len(y))
        if n:
            dev = max(dev, float(np.max(np.abs(x[:n] - y[:n]))))
    return dev


@dataclass
class DeviationRow:
    g: float
    variant: str
    order: int | None
    deviation: float
    converged: bool
    cutoff: int
    n_excluded: int


def gauge_spectrum_deviation(omega: float, Omega: float, g_grid, orders=(2, 4, 6), n_levels: int = 6,
                             cutoff: int = 60, include_full: bool = True, tol: float = 1e-8,
                             cutoff_max: int = 400) -> list[DeviationRow]:
    """Deviation of each Coulomb variant from the dipole gauge along ``g_grid``.

    Rows whose spectra do not converge are kept with ``converged=False`` and
    ``deviation=nan``.
    """
    rows = []
    for g in g_grid:
        p = RabiParams(omega, Omega, float(g))
        ref = gauge_levels(GaugeFamily(p, "dipole", cutoff), n_levels, tol, cutoff_max=cutoff_max)
        variants = ([("coulomb_full", None)] if include_full else []) + [("coulomb_taylor", k) for k in orders]
        for var, k in variants:
            lv = gauge_levels(GaugeFamily(p, var, cutoff, k), n_levels, tol, cutoff_max=cutoff_max)
            ok = ref.converged and lv.converged
            dev = paired_deviation(lv, ref) if ok else float("nan")
            rows.append(DeviationRow(float(g), var, k, dev, ok, lv.cutoff, lv.n_excluded))
    return rows
