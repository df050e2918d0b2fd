"""Exact diagonalisation with cutoff convergence."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..numkern import EigenSystem, eig_hermitian
from ..qops import (JCParams, RabiParams, SpinBosonParams, build_hamiltonian,
                    default_space, parity_operator, sector_parity)


class ConvergenceError(RuntimeError):
    pass


@dataclass
class ConvergedSpectrum:
    eigen: EigenSystem
    cutoff_used: int
    cutoff_history: list = field(default_factory=list)
    n_converged: int = 0

    @property
    def levels(self) -> np.ndarray:
        return self.eigen.values[: self.n_converged]

    @property
    def parity(self) -> np.ndarray | None:
        if self.eigen.parity is None:
            return None
        return np.rint(self.eigen.parity[: self.n_converged]).astype(int)


def _parity_for(model, space):
    if isinstance(model, (RabiParams, JCParams)):
        return parity_operator(space)
    if isinstance(model, SpinBosonParams):
        return sector_parity(space)
    return None


def diagonalize(model, fock_cutoff: int, cap: int | None = None) -> EigenSystem:
    """Single dense diagonalisation at a fixed cutoff."""
    space = default_space(model, fock_cutoff, cap)
    H = build_hamiltonian(model, space)
    return eig_hermitian(H, parity=_parity_for(model, space))


def exact_spectrum(model, tol: float = 1e-10, N_start: int = 20, n_levels: int = 8,
                   N_step: int | None = None, N_max: int = 400,
                   cap: int | None = None) -> ConvergedSpectrum:
    """Raise the Fock cutoff until the lowest ``n_levels`` move less than ``tol``.

    The cutoff grows by ``N_step`` (default: ``N_start // 2``, at least 2)
    per round.  Raises :class:`ConvergenceError` if ``N_max`` or the
    dimension cap is reached first.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    step = N_step or max(2, N_start // 2)
    N = N_start
    prev = None
    history = []
    while True:
        try:
            es = diagonalize(model, N, cap)
        except ValueError as exc:  # dimension cap
            raise ConvergenceError(f"cutoff cap reached at N={N}: {exc}") from exc
        vals = es.values[:n_levels]
        if len(vals) < n_levels:
            raise ConvergenceError(f"space at N={N} holds fewer than {n_levels} levels")
        if prev is not None:
            shift = float(np.max(np.abs(vals - prev)))
            history.append((N, shift))
            if shift < tol:
                if isinstance(model, (RabiParams, JCParams, SpinBosonParams)):
                    par = es.parity[:n_levels]
                    if np.max(np.abs(np.abs(par) - 1)) > 1e-8:
                        raise ConvergenceError("converged levels lack definite parity")
                return ConvergedSpectrum(es, N, history, n_levels)
        prev = vals
        N += step
        if N > N_max:
            raise ConvergenceError(
                f"levels not converged to {tol:g} below N_max={N_max}; history {history[-3:]}"
            )


def opposite_parity_crossings(omega: float, Omega: float, g_grid, n_levels: int = 6,
                              cutoff: int = 60) -> list[tuple[float, int]]:
    """Locate level crossings between opposite-parity Rabi levels along ``g_grid``.

    Returns ``(g, k)`` pairs where levels ``k`` and ``k+1`` (ascending) swap
    parity between consecutive grid points; the first such point is the
    usual first-crossing marker.  No validity statement is attached.
    """
    out = []
    prev = None
    for g in g_grid:
        es = diagonalize(RabiParams(omega, Omega, float(g)), cutoff)
        par = np.rint(es.parity[:n_levels]).astype(int)
        if prev is not None:
            for k in range(n_levels - 1):
                if prev[k] != par[k] and prev[k + 1] != par[k + 1] and prev[k] == par[k + 1]:
                    out.append((float(g), k))
        prev = par
    return out
