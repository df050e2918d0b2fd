"""Exact Rabi spectrum from the zeros of the parity-resolved G-functions.

With ``omega = 1`` and ``Delta = Omega/2``, writing the Bargmann components
as ``phi_1 = exp(-g z) psi_1`` and ``phi_2 = exp(-g z) psi_2`` turns the
coupled first-order equations into

    (z + g) psi_1' - x psi_1 + Delta psi_2 = 0
    (z - g) psi_2' - (2 g z + x - 2 g^2) psi_2 + Delta psi_1 = 0

with ``x = E + g^2``.  Expanding around the regular singular point ``z = -g`` in powers
of ``y = z + g``, ``psi_2 = sum K_n y^n`` and ``psi_1 = sum Delta K_n /
(x - n) y^n`` give

    K_0 = 1,  K_1 = f_0,  (n + 1) K_{n+1} = f_n K_n - K_{n-1},
    f_n(x) = 2 g + (n - x + Delta^2 / (x - n)) / (2 g).

The series converges for ``|y| < 2g``; evaluating at ``z = 0`` (``y = g``)
and imposing the parity relation between the two components gives

    G_pm(x) = sum_n K_n g^n (1 -+ Delta / (x - n)).

``G_+`` vanishes on the levels with ``sigma_z exp(i pi a^+ a) = +1`` and
``G_-`` on those with parity -1.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..numkern import find_roots
from ..qops import RabiParams


class SeriesConvergenceError(RuntimeError):
    pass


@dataclass
class BraakSeries:
    params: RabiParams
    x: float
    coeffs: np.ndarray  # K_n in omega = 1 units
    order: int
    pole_set: np.ndarray = field(default_factory=lambda: np.array([]))


def _scaled(params: RabiParams):
    return params.g / params.omega, 0.5 * params.Omega / params.omega


def braak_coefficients(x: float, g: float, delta: float, order: int) -> np.ndarray:
    """``K_0 .. K_order`` of the series solution (``omega = 1`` units)."""
    if g <= 0:
        raise ValueError("series needs g > 0")
    K = np.empty(order + 1)
    K[0] = 1.0
    if order == 0:
        return K

    def f(n):
        return 2 * g + (n - x + delta * delta / (x - n)) / (2 * g)

    K[1] = f(0) * K[0]
    for n in range(1, order):
        K[n + 1] = (f(n) * K[n] - K[n - 1]) / (n + 1)
    return K


def braak_series(x: float, params: RabiParams, tol: float = 1e-12, max_order: int = 4000,
                 min_order: int = 20) -> BraakSeries:
    """Series with adaptive order: stop once the tail term is below ``tol`` of the partial sum.

    The partial-sum scale is the sum of term magnitudes so zeros of G are
    not penalised.  ``x`` is in physical units (``x = E + g^2/omega``).
    """
    g, delta = _scaled(params)
    xs = x / params.omega
    order = 2 * min_order
    while order <= max_order:
        K = braak_coefficients(xs, g, delta, order)
        terms = np.abs(K * g ** np.arange(order + 1))
        scale = np.sum(terms)
        tail = terms[-3:]
        if np.all(tail < tol * scale) and np.all(np.isfinite(terms)):
            n_poles = int(max(0, np.ceil(xs))) + 1
            return BraakSeries(params, x, K, order, params.omega * np.arange(n_poles))
        order *= 2
    raise SeriesConvergenceError(f"G-series not converged at x={x} below order {max_order}")


def braak_g(x: float, params: RabiParams) -> tuple[float, float]:
    """``(G_+(x), G_-(x))`` with ``x = E + g^2/omega``; poles at ``x = n omega``."""
    s = braak_series(x, params)
    g, delta = _scaled(params)
    xs = x / params.omega
    n = np.arange(s.order + 1)
    t = s.coeffs * g ** n
    r = delta / (xs - n)
    return float(np.sum(t * (1 - r))), float(np.sum(t * (1 + r)))


def bargmann_residual(x: float, params: RabiParams, z: complex, order: int = 120) -> float:
    """Residual of the original two-component Bargmann equations at ``z``.

    Uses the truncated series ``phi_1 = e^{-gz} sum Delta K_n/(x-n) y^n``,
    ``phi_2 = e^{-gz} sum K_n y^n`` with analytic derivatives (``omega=1``
    units).  Valid for ``|z + g| < 2g``.
    """
    g, delta = _scaled(params)
    xs = x / params.omega
    E = xs - g * g
    K = braak_coefficients(xs, g, delta, order)
    n = np.arange(order + 1)
    a = delta * K / (xs - n)
    y = z + g
    yp = y ** n
    dyp = np.concatenate([[0.0], n[1:] * y ** (n[1:] - 1)])
    psi1, dpsi1 = np.sum(a * yp), np.sum(a * dyp)
    psi2, dpsi2 = np.sum(K * yp), np.sum(K * dyp)
    e = np.exp(-g * z)
    phi1, dphi1 = e * psi1, e * (dpsi1 - g * psi1)
    phi2, dphi2 = e * psi2, e * (dpsi2 - g * psi2)
    r1 = (z + g) * dphi1 + (g * z - E) * phi1 + delta * phi2
    r2 = (z - g) * dphi2 - (g * z + E) * phi2 + delta * phi1
    return float(max(abs(r1), abs(r2)))


@dataclass
class BraakSpectrum:
    levels: np.ndarray
    parity: np.ndarray
    x_roots: np.ndarray
    merged: list = field(default_factory=list)


def _scan_intervals(lo: float, hi: float, guard: float):
    """Pole-free subintervals of ``(lo, hi)`` in ``omega = 1`` units."""
    cuts = [n for n in range(int(np.floor(lo)) + 1, int(np.ceil(hi)) + 1) if lo < n < hi]
    edges = [lo] + cuts + [hi]
    for a, b in zip(edges[:-1], edges[1:]):
        a2 = a + guard if a in cuts else a
        b2 = b - guard if b in cuts else b
        if b2 > a2:
            yield a2, b2


def braak_spectrum(params: RabiParams, E_max: float, E_min: float | None = None,
                   points_per_unit: int = 400, guard: float = 1e-4) -> BraakSpectrum:
    """All levels with ``E_min < E < E_max`` from sign changes of ``G_pm``.

    The ``x`` axis is split at every pole ``x = n omega`` (guard band
    ``guard * omega``) so no bracket straddles a pole.  Returned levels are
    ascending with parity ``+1`` (zero of ``G_+``) or ``-1`` (``G_-``).
    """
    g, delta = _scaled(params)
    w = params.omega
    if g == 0:
        raise ValueError("braak_spectrum needs g > 0; the g = 0 spectrum is trivial")
    if E_min is None:
        E_min = -(g * g) * w - params.Omega / 2 - 0.5 * w
    lo, hi = E_min / w + g * g, E_max / w + g * g
    found = []
    for sign, col in ((1, 0), (-1, 1)):
        def G(xs, col=col):
            return braak_g(xs * w, params)[col]

        for a, b in _scan_intervals(lo, hi, guard):
            npts = max(20, int((b - a) * points_per_unit))
            grid = np.linspace(a, b, npts)
            scale = max(1.0, max(abs(G(a)), abs(G(b))))
            for r in find_roots(G, grid, scale=scale):
                found.append((r, sign))
    found.sort()
    xs = np.array([f[0] for f in found])
    par = np.array([f[1] for f in found], dtype=int)
    merged = []
    if len(xs) > 1:
        close = np.where(np.diff(xs) < 1e-8)[0]
        for i in close:
            merged.append((float(xs[i]), int(par[i]), int(par[i + 1])))
        if len(close):
            warnings.warn("G-function zeros closer than 1e-8 merged (possible exceptional degeneracy)",
                          stacklevel=2)
            keep = np.ones(len(xs), bool)
            keep[close + 1] = False
            xs, par = xs[keep], par[keep]
    levels = (xs - g * g) * w
    return BraakSpectrum(levels, par, xs * w, merged)
