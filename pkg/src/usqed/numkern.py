"""Dense numerical kernels shared by the solvers.

Thin contracts over numpy/scipy: eigensolvers with reproducible bases,
bracketed root finding, Nelder-Mead minimisation and adaptive ODE
propagation.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy import optimize
from scipy.integrate import solve_ivp

DEGENERACY_GAP = 1e-9


class NonHermitianError(ValueError):
    pass


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class NoSignChangeError(ValueError):
    pass


@dataclass
class EigenSystem:
    """Eigenvalues and eigenvectors.

    Hermitian case: ``values`` real ascending, ``vectors`` orthonormal
    columns, ``left`` is None.  General case: complex ``values``, right
    eigenvectors in ``vectors`` and left eigenvectors in ``left`` such that
    ``left.conj().T @ vectors = I`` (biorthonormal).
    """

    values: np.ndarray
    vectors: np.ndarray
    residual: float
    left: np.ndarray | None = None
    parity: np.ndarray | None = None
    defective: bool = False

    def __len__(self):
        return len(self.values)

    @property
    def hermitian(self) -> bool:
        return self.left is None

    def truncate(self, n: int) -> "EigenSystem":
        """Keep the lowest ``n`` levels (Hermitian case)."""
        par = None if self.parity is None else self.parity[:n]
        return EigenSystem(self.values[:n], self.vectors[:, :n], self.residual, None, par)

    def to_eigenbasis(self, op) -> np.ndarray:
        m = np.asarray(op)
        return self.vectors.conj().T @ m @ self.vectors

    def to_lab(self, m: np.ndarray) -> np.ndarray:
        return self.vectors @ m @ self.vectors.conj().T


def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    # first max-modulus entry real positive
    idx = np.argmax(np.abs(vectors) > (1 - 1e-9) * np.max(np.abs(vectors), axis=0), axis=0)
    ph = vectors[idx, np.arange(vectors.shape[1])]
    ph = np.where(np.abs(ph) > 0, ph / np.abs(ph), 1.0)
    return vectors / ph


def _clusters(values: np.ndarray, gap: float):
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > gap:
            yield start, i
            start = i


def eig_hermitian(A, parity=None, check: bool = True) -> EigenSystem:
    """Hermitian eigendecomposition with reproducible degenerate bases.

    Inside clusters of (near) degenerate eigenvalues the vectors are rotated
    to diagonalise ``parity`` when given; afterwards every vector has its
    first max-modulus entry made real positive.
    """
    M = np.asarray(A, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if check and M.size and np.max(np.abs(M - M.conj().T)) > 1e-12 * scale:
        raise NonHermitianError("eig_hermitian needs a Hermitian matrix")
    M = 0.5 * (M + M.conj().T)
    w, v = np.linalg.eigh(M)
    P = None if parity is None else np.asarray(parity, dtype=complex)
    if P is not None:
        for lo, hi in _clusters(w, DEGENERACY_GAP * scale):
            if hi - lo > 1:
                sub = v[:, lo:hi]
                pw, pv = np.linalg.eigh(sub.conj().T @ P @ sub)
                v[:, lo:hi] = sub @ pv
    v = _fix_phase(v)
    resid = float(np.max(np.abs(M @ v - v * w))) if M.size else 0.0
    par = None
    if P is not None:
        par = np.real(np.einsum("ij,ik,kj->j", v.conj(), P, v))
    return EigenSystem(w, v, resid, None, par)


def eig_general(A, biortho_tol: float = 1e-8) -> EigenSystem:
    """Right/left eigenvectors of a general square matrix, biorthonormalised.

    Left vectors come from ``inv(R)^H``; if the right eigenvector matrix is
    numerically singular the result is flagged ``defective``.
    """
    M = np.asarray(A, dtype=complex)
    w, R = sla.eig(M)
    order = np.lexsort((np.imag(w), -np.real(w)))
    w, R = w[order], R[:, order]
    R = R / np.linalg.norm(R, axis=0)
    defective = False
    try:
        Linv = np.linalg.inv(R)
        Lvec = Linv.conj().T
        err = float(np.max(np.abs(Lvec.conj().T @ R - np.eye(len(w))))) if len(w) else 0.0
        cond = np.linalg.cond(R)
        if err > biortho_tol or cond > 1e12:
            defective = True
    except np.linalg.LinAlgError:
        Lvec = np.full_like(R, np.nan)
        defective = True
    if defective:
        warnings.warn("eig_general: spectrum is (nearly) defective; biorthogonality not guaranteed",
                      stacklevel=2)
    resid = float(np.max(np.abs(M @ R - R * w))) if len(w) else 0.0
    return EigenSystem(w, R, resid, Lvec, None, defective)


def solve_linear(A, b, constraints=None) -> np.ndarray:
    """Solve ``A x = b``.

    ``constraints`` is an optional ``(C, d)`` pair appended as extra rows
    ``C x = d``; the augmented system is then solved in least squares and
    must be consistent.
    """
    A = np.asarray(A)
    b = np.asarray(b)
    if constraints is None:
        if np.linalg.cond(A) > 1e14:
            raise SingularMatrixError("matrix is singular to working precision")
        return np.linalg.solve(A, b)
    C, d = constraints
    Aa = np.vstack([A, np.atleast_2d(C)])
    ba = np.concatenate([b, np.atleast_1d(d)])
    x, _, rank, _ = np.linalg.lstsq(Aa, ba, rcond=None)
    if rank < A.shape[1]:
        raise SingularMatrixError("constrained system is rank deficient")
    return x


def find_roots(f, grid, scale: float = 1.0, xtol: float = 1e-14, dedupe: float = 1e-8,
               check: bool = True, require: bool = False) -> np.ndarray:
    """Bracket sign changes of ``f`` on ``grid`` and refine with Brent's method.

    Brackets whose refined point does not satisfy ``|f| < 1e-10 * scale``
    (a sign change through a pole) are discarded when ``check`` is set.
    """
    grid = np.asarray(grid, dtype=float)
    fv = np.array([f(x) for x in grid])
    roots = []
    for i in range(len(grid) - 1):
        a, b, fa, fb = grid[i], grid[i + 1], fv[i], fv[i + 1]
        if not (np.isfinite(fa) and np.isfinite(fb)):
            continue
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0:
            r = optimize.brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
            if check and abs(f(r)) >= 1e-10 * scale:
                continue
            roots.append(r)
    if len(fv) and fv[-1] == 0.0:
        roots.append(grid[-1])
    if not roots and require:
        raise NoSignChangeError("no sign change on grid")
    roots = np.sort(np.array(roots))
    if len(roots) > 1:
        keep = np.concatenate([[True], np.diff(roots) > dedupe])
        roots = roots[keep]
    return roots


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    converged: bool
    nfev: int
    message: str = ""


def minimize(f, x0, bounds=None, xatol: float = 1e-8, fatol: float = 1e-12,
             maxiter: int | None = None, initial_simplex=None) -> MinimizeResult:
    """Derivative-free Nelder-Mead minimisation.

    Stagnation is reported through ``converged=False`` with the best point.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    opts = {"xatol": xatol, "fatol": fatol, "maxiter": maxiter or 2000 * len(x0),
            "maxfev": 4000 * len(x0), "adaptive": len(x0) > 2}
    if initial_simplex is not None:
        opts["initial_simplex"] = initial_simplex
    res = optimize.minimize(f, x0, method="Nelder-Mead", bounds=bounds, options=opts)
    return MinimizeResult(np.atleast_1d(res.x), float(res.fun), bool(res.success), int(res.nfev),
                          str(res.message))


def propagate_ode(rhs, y0, t, rtol: float = 1e-8, atol: float | None = None,
                  method: str = "DOP853") -> np.ndarray:
    """Integrate ``dy/dt = rhs(t, y)`` and return ``y`` at each time in ``t``.

    Complex state vectors are supported.  Output shape ``(len(t),) + y0.shape``.
    """
    y0 = np.asarray(y0)
    shape = y0.shape
    t = np.asarray(t, dtype=float)
    if atol is None:
        atol = rtol * 1e-3
    flat0 = y0.reshape(-1).astype(complex)

    def f(tt, yy):
        return np.asarray(rhs(tt, yy.reshape(shape))).reshape(-1)

    if len(t) == 1 or np.all(t == t[0]):
        return np.repeat(y0[None].astype(complex), len(t), axis=0)
    sol = solve_ivp(f, (t[0], t[-1]), flat0, method=method, t_eval=t, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"ODE propagation failed: {sol.message}")
    return sol.y.T.reshape((len(t),) + shape)
