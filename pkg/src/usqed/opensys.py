"""Dissipation and measurement in the dressed basis.

Conventions
-----------
* Zero temperature throughout.
* A jump ``L`` with rate ``r`` contributes ``r (L rho L^+ - {L^+ L, rho}/2)``,
  so ``r`` is the population decay rate it induces.
* Superoperators act on column-stacked density matrices:
  ``vec(A rho B) = (B^T kron A) vec(rho)``.
* A generator works in one fixed basis: the lab basis of its Hilbert space
  (phenomenological equations) or the truncated dressed basis of an
  :class:`~usqed.numkern.EigenSystem` (microscopic equations).  Density
  matrices passed to it must be expressed in that basis.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .numkern import EigenSystem, eig_general, eig_hermitian
from .qops import HilbertSpec, HopfieldParams, Operator, build_algebra


class DegenerateSteadyStateError(RuntimeError):
    """The Liouvillian has more than one (near) zero mode."""

    def __init__(self, msg, modes=None, singular_values=None):
        super().__init__(msg)
        self.modes = modes
        self.singular_values = singular_values


class DarkStateError(RuntimeError):
    """The steady-state photon flux vanishes, so normalised correlations are undefined."""


class InstabilityError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# baths and jumps

_KINDS = ("flat", "sqrt", "ohmic")


@dataclass(frozen=True)
class BathSpec:
    """Zero-temperature reservoir coupled through ``coupling_op``.

    ``gamma(w)`` is ``gamma0``, ``gamma0 sqrt(w/omega_ref)`` or
    ``gamma0 w/omega_ref`` for positive ``w`` and zero otherwise.
    """

    coupling_op: Operator | np.ndarray
    density_kind: str = "flat"
    gamma0: float = 0.01
    omega_ref: float = 1.0
    lamb_shift: Callable[[float], float] | None = None
    cluster_tol: float = 0.0

    def __post_init__(self):
        if self.density_kind not in _KINDS:
            raise ValueError(f"density_kind must be one of {_KINDS}")
        if self.gamma0 < 0 or self.cluster_tol < 0 or self.omega_ref <= 0:
            raise ValueError("gamma0, cluster_tol must be >= 0 and omega_ref > 0")

    def gamma(self, w: float) -> float:
        if w <= 0:
            return 0.0
        if self.density_kind == "flat":
            return self.gamma0
        if self.density_kind == "sqrt":
            return self.gamma0 * np.sqrt(w / self.omega_ref)
        return self.gamma0 * w / self.omega_ref

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.coupling_op, dtype=complex)


@dataclass
class JumpSet:
    """Frequency-resolved decomposition of a coupling operator.

    ``jumps`` holds ``(w_bar, A_tilde)`` with ``A_tilde`` in the dressed
    basis; ``zero_block`` is the ``w = 0`` part.  ``ties`` lists transition
    frequencies that fell exactly on a class boundary.
    """

    jumps: list
    zero_block: np.ndarray
    energies: np.ndarray
    ties: list = field(default_factory=list)
    widths: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.jumps)

    def __len__(self):
        return len(self.jumps)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([w for w, _ in self.jumps])

    def reconstruct(self) -> np.ndarray:
        out = self.zero_block.copy()
        for _, A in self.jumps:
            out += A + A.conj().T
        return out


def _energy_scale(E):
    return max(1.0, float(np.max(np.abs(E)))) if len(E) else 1.0


def _cluster(freqs: np.ndarray, tol: float, exact_tol: float):
    """Greedy partition of sorted frequencies into classes of width ``<= tol``."""
    order = np.argsort(freqs, kind="stable")
    classes, ties = [], []
    width = max(tol, exact_tol)
    i = 0
    while i < len(order):
        start = freqs[order[i]]
        members = [order[i]]
        j = i + 1
        while j < len(order) and freqs[order[j]] - start <= width:
            if tol > 0 and abs(freqs[order[j]] - start - tol) <= 1e-12 * max(1.0, start):
                ties.append(float(freqs[order[j]]))
            members.append(order[j])
            j += 1
        classes.append(members)
        i = j
    return classes, ties


def dressed_jump_operators(eigen: EigenSystem, A, bath: BathSpec | None = None,
                           cluster_tol: float | None = None) -> JumpSet:
    """Split ``A`` into transitions between dressed levels, grouped by frequency.

    Element ``(i, k)`` with ``w_ki = E_k - E_i > 0`` lowers the system and
    is assigned to the class of ``w_ki``.  Transitions within one class are
    summed into a single jump operator whose frequency is the class mean.
    Classes are built greedily from the lowest frequency; a member exactly
    at distance ``cluster_tol`` from the class start stays in the lower class
    and is recorded in ``ties``.
    """
    tol = cluster_tol if cluster_tol is not None else (bath.cluster_tol if bath else 0.0)
    E = np.asarray(eigen.values, dtype=float)
    Ad = eigen.to_eigenbasis(np.asarray(A, dtype=complex))
    exact_tol = 1e-9 * _energy_scale(E)
    dE = E[None, :] - E[:, None]  # dE[i, k] = E_k - E_i
    pos = dE > exact_tol
    idx = np.argwhere(pos)
    freqs = dE[pos]
    zero = np.where(np.abs(dE) <= exact_tol, Ad, 0.0)
    classes, ties = _cluster(freqs, tol, exact_tol)
    if ties:
        warnings.warn(f"{len(ties)} transition(s) tied with a class boundary; assigned to the lower class",
                      stacklevel=2)
    jumps, widths = [], []
    for members in classes:
        op = np.zeros_like(Ad)
        for m in members:
            i, k = idx[m]
            op[i, k] = Ad[i, k]
        f = freqs[members]
        jumps.append((float(np.mean(f)), op))
        widths.append(float(f.max() - f.min()))
    return JumpSet(jumps, zero, E, ties, widths)


# ---------------------------------------------------------------------------
# generators

def lindblad_superoperator(H: np.ndarray, jumps: Sequence[tuple[float, np.ndarray]]) -> np.ndarray:
    """Dense matrix of ``rho -> -i[H, rho] + sum r D[L] rho`` (column stacking)."""
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    I = np.eye(d)
    L = -1j * (np.kron(I, H) - np.kron(H.T, I))
    for r, J in jumps:
        J = np.asarray(J, dtype=complex)
        JdJ = J.conj().T @ J
        L += r * (np.kron(J.conj(), J) - 0.5 * np.kron(I, JdJ) - 0.5 * np.kron(JdJ.T, I))
    return L


@dataclass
class Jump:
    rate: float
    op: np.ndarray
    freq: float | None = None
    label: str = ""


@dataclass
class LindbladGenerator:
    """Effective Hamiltonian plus rated jumps, with the induced superoperator.

    ``basis`` is ``None`` for lab-frame generators, otherwise the matrix of
    dressed eigenvectors (columns) spanning the working basis.
    """

    H_eff: np.ndarray
    jumps: list
    basis: np.ndarray | None = None
    energies: np.ndarray | None = None
    space: HilbertSpec | None = None
    kind: str = "custom"
    _super: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.H_eff.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        out = -1j * (self.H_eff @ rho - rho @ self.H_eff)
        for j in self.jumps:
            L = j.op
            LdL = L.conj().T @ L
            out += j.rate * (L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL))
        return out

    @property
    def matrix(self) -> np.ndarray:
        if self._super is None:
            self._super = lindblad_superoperator(self.H_eff, [(j.rate, j.op) for j in self.jumps])
        return self._super

    def to_working(self, op) -> np.ndarray:
        m = np.asarray(op, dtype=complex)
        if self.basis is None:
            return m
        return self.basis.conj().T @ m @ self.basis

    def to_lab(self, m: np.ndarray) -> np.ndarray:
        if self.basis is None:
            return m
        return self.basis @ m @ self.basis.conj().T

    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix)


@dataclass
class DensityMatrix:
    matrix: np.ndarray
    trace_tol: float = 1e-10
    psd_tol: float = 1e-8

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        if abs(np.trace(m).real - 1) > self.trace_tol:
            raise ValueError(f"density matrix trace {np.trace(m).real} != 1")
        if np.linalg.eigvalsh(m)[0] < -self.psd_tol:
            raise ValueError("density matrix is not positive semidefinite")
        self.matrix = m

    def expect(self, op) -> complex:
        return complex(np.trace(np.asarray(op) @ self.matrix))

    def fidelity_pure(self, psi: np.ndarray) -> float:
        return float(np.real(psi.conj() @ self.matrix @ psi))


def build_lindbladian(kind: str, system, baths: Sequence[BathSpec] = (), *, n_levels: int | None = None,
                      kappa: float = 0.0, gamma: float = 0.0, secular_check: bool = True) -> LindbladGenerator:
    """Assemble a master-equation generator.

    ``kind="dressed"``: ``system`` is an :class:`EigenSystem` (or a Hermitian
    Operator, diagonalised here).  The lowest ``n_levels`` dressed states form
    the working basis; every bath contributes one jump per frequency class
    with rate ``gamma(w_bar)``.  Zero-frequency blocks are left out.

    ``kind="phenomenological"``: ``system`` is the lab Hamiltonian of a
    one-spin, one-mode space; jumps are ``a`` with rate ``kappa`` and
    ``sigma_-`` with rate ``gamma``.  Extra ``baths`` add their bare
    coupling operator as a jump with rate ``gamma0``.
    """
    if kind == "dressed":
        eigen = system if isinstance(system, EigenSystem) else eig_hermitian(system)
        space = system.space if isinstance(system, Operator) else None
        if n_levels is not None:
            eigen = eigen.truncate(n_levels)
        E = np.asarray(eigen.values, dtype=float)
        H = np.diag(E - E[0]).astype(complex)
        jumps = []
        gaps = np.diff(E)
        gaps = gaps[gaps > 1e-9 * _energy_scale(E)]
        for b in baths:
            if len(gaps) and b.gamma0 > 0.1 * gaps.min():
                warnings.warn("gamma0 exceeds 10% of the smallest retained gap", stacklevel=2)
            js = dressed_jump_operators(eigen, b.coupling_op, b)
            for w, A in js:
                r = b.gamma(w)
                if r > 0 and np.max(np.abs(A)) > 0:
                    jumps.append(Jump(r, A, w))
                if b.lamb_shift is not None:
                    H = H + b.lamb_shift(w) * (A.conj().T @ A)
        if secular_check and len(jumps) > 1:
            f = np.unique(np.round([j.freq for j in jumps], 12))
            rmax = max(j.rate for j in jumps)
            if len(f) > 1 and np.min(np.diff(f)) < 10 * rmax:
                warnings.warn("jump frequencies closer than 10x the largest rate: secular approximation "
                              "is questionable; consider cluster_tol", stacklevel=2)
        return LindbladGenerator(H, jumps, eigen.vectors, E, space, "dressed")
    if kind == "phenomenological":
        H = np.asarray(system, dtype=complex)
        space = system.space if isinstance(system, Operator) else None
        jumps = []
        if kappa or gamma:
            if space is None:
                raise ValueError("phenomenological kappa/gamma need an Operator carrying its space")
            alg = build_algebra(space)
            if kappa:
                jumps.append(Jump(kappa, alg.a[0].matrix, None, "cavity"))
            if gamma:
                jumps.append(Jump(gamma, alg.sm[0].matrix, None, "atom"))
        for b in baths:
            jumps.append(Jump(b.gamma0, b.matrix))
        return LindbladGenerator(H, jumps, None, None, space, "phenomenological")
    raise ValueError(f"unknown master-equation kind {kind!r}")


# ---------------------------------------------------------------------------
# steady state and propagation

def steady_state(L: LindbladGenerator | np.ndarray, tol: float = 1e-10, svd_max: int = 1600) -> np.ndarray:
    """Unique zero mode of the Liouvillian, normalised to unit trace.

    Up to ``svd_max`` Liouville dimensions the null space is read off the
    singular value decomposition; if a second singular value is also below
    ``tol`` (relative to the largest), :class:`DegenerateSteadyStateError`
    carries the near-null basis.  Larger problems replace one row by the
    trace condition and use an LU solve, which fails loudly when singular.
    """
    M = L.matrix if isinstance(L, LindbladGenerator) else np.asarray(L)
    n = M.shape[0]
    d = int(round(np.sqrt(n)))
    if n > svd_max:
        A = M.astype(complex, copy=True)
        A[0] = np.eye(d).reshape(-1, order="F")
        b = np.zeros(n, dtype=complex)
        b[0] = 1.0
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            try:
                v = sla.solve(A, b)
            except (sla.LinAlgWarning, np.linalg.LinAlgError) as exc:
                raise DegenerateSteadyStateError(f"trace-constrained solve is singular: {exc}") from exc
        rho = v.reshape(d, d, order="F")
    else:
        _, s, Vh = np.linalg.svd(M)
        scale = max(1.0, s[0])
        if n > 1 and s[-2] < tol * scale:
            k = int(np.sum(s < tol * scale))
            modes = [Vh[-i - 1].conj().reshape(d, d, order="F") for i in range(k)]
            raise DegenerateSteadyStateError(f"{k} near-zero Liouvillian modes", modes, s[-k:])
        rho = Vh[-1].conj().reshape(d, d, order="F")
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    return rho


def liouvillian_residual(L: LindbladGenerator, rho: np.ndarray) -> float:
    return float(np.max(np.abs(L.matrix @ rho.reshape(-1, order="F"))))


def propagate(L: LindbladGenerator | np.ndarray, rho0: np.ndarray, t_grid) -> np.ndarray:
    """``exp(L t) rho0`` on a time grid (shape ``(len(t), d, d)``).

    Steps between grid points use dense matrix exponentials, cached per
    step length.
    """
    M = L.matrix if isinstance(L, LindbladGenerator) else np.asarray(L)
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    t = np.asarray(t_grid, dtype=float)
    out = np.empty((len(t), d, d), dtype=complex)
    v = rho0.reshape(-1, order="F")
    cache = {}
    prev = 0.0
    for i, ti in enumerate(t):
        dt = ti - prev
        if dt != 0:
            key = round(dt, 14)
            if key not in cache:
                cache[key] = sla.expm(M * dt)
            v = cache[key] @ v
        out[i] = v.reshape(d, d, order="F")
        prev = ti
    return out


# ---------------------------------------------------------------------------
# input-output and photodetection

def _dressed(eigen: EigenSystem, X):
    return eigen.to_eigenbasis(np.asarray(X, dtype=complex))


def _upper_mask(E, gap=None):
    E = np.asarray(E, dtype=float)
    gap = 1e-9 * _energy_scale(E) if gap is None else gap
    return (E[None, :] - E[:, None]) > gap  # E_i < E_j


def xplus_operator(eigen: EigenSystem, X, basis: str = "lab") -> np.ndarray:
    """Positive-frequency part ``X^+ = sum_{E_i < E_j} X_ij |i><j|``.

    ``basis="dressed"`` returns the matrix in the eigenbasis; ``"lab"``
    maps it back with the eigenvectors.
    """
    Xd = _dressed(eigen, X)
    Xp = np.where(_upper_mask(eigen.values), Xd, 0.0)
    if basis == "dressed":
        return Xp
    if basis == "lab":
        return eigen.to_lab(Xp)
    raise ValueError("basis must be 'lab' or 'dressed'")


def detector_operator(eigen: EigenSystem, X, g_of_w: Callable[[float], float] | float,
                      basis: str = "lab") -> np.ndarray:
    """Detector-filtered field ``sqrt(2 pi) g(w_ji) X_ij`` on each lowering element."""
    Xd = _dressed(eigen, X)
    E = np.asarray(eigen.values, dtype=float)
    dE = E[None, :] - E[:, None]
    mask = _upper_mask(E)
    if callable(g_of_w):
        gw = np.vectorize(lambda w: g_of_w(w) if w > 0 else 0.0)(dE)
    else:
        gw = np.full(dE.shape, float(g_of_w))
    O = np.where(mask, np.sqrt(2 * np.pi) * gw * Xd, 0.0)
    return O if basis == "dressed" else eigen.to_lab(O)


def photon_flux(rho: np.ndarray, Oplus: np.ndarray) -> float:
    """Detection rate ``<O^- O^+>``."""
    return float(np.real(np.trace(Oplus.conj().T @ Oplus @ rho)))


def _mixing_eigen(M: np.ndarray, tol: float = 1e-9):
    es = eig_general(M)
    zero = np.abs(es.values) < tol * max(1.0, np.max(np.abs(es.values)))
    if np.sum(zero) != 1:
        raise RuntimeError(f"Liouvillian is not mixing: {int(np.sum(zero))} zero modes")
    return es, zero


def correlation_g2(L: LindbladGenerator | np.ndarray, rho_ss: np.ndarray, Oplus: np.ndarray,
                   tau_grid, dark_tol: float = 1e-14) -> np.ndarray:
    """Normalised intensity correlation via quantum regression.

    ``g2(tau) = tr[O^- O^+ e^{L tau}(O^+ rho O^-)] / <O^- O^+>^2``.
    """
    O = np.asarray(Oplus, dtype=complex)
    Od = O.conj().T
    n = photon_flux(rho_ss, O)
    if n < dark_tol:
        raise DarkStateError(f"steady-state flux {n:.3e} is below {dark_tol:g}")
    sigma = O @ rho_ss @ Od
    traj = propagate(L, sigma, tau_grid)
    N = Od @ O
    return np.real(np.einsum("ij,tji->t", N, traj)) / n ** 2


def g2_zero(rho: np.ndarray, Oplus: np.ndarray) -> float:
    O = np.asarray(Oplus, dtype=complex)
    Od = O.conj().T
    n = photon_flux(rho, O)
    if n <= 0:
        raise DarkStateError("zero flux")
    return float(np.real(np.trace(Od @ Od @ O @ O @ rho))) / n ** 2


@dataclass
class EmissionSpectrum:
    omega: np.ndarray
    S: np.ndarray
    elastic: float  # weight |<O^+>|^2 of the coherent delta peak


def emission_spectrum(L: LindbladGenerator | np.ndarray, rho_ss: np.ndarray, Oplus: np.ndarray,
                      omega_grid, dark_tol: float = 1e-14) -> EmissionSpectrum:
    """Incoherent emission spectrum from the Liouvillian eigen-expansion.

    ``S(w) = Re int_0^inf dtau e^{i w tau} <O^-(0) O^+(tau)>``, evaluated as
    ``-Re sum_a c_a / (i w + lambda_a)`` over the non-zero Liouvillian modes.
    The zero mode gives the elastic line, returned separately as its weight.
    """
    M = L.matrix if isinstance(L, LindbladGenerator) else np.asarray(L)
    O = np.asarray(Oplus, dtype=complex)
    Od = O.conj().T
    if photon_flux(rho_ss, O) < dark_tol:
        raise DarkStateError("steady-state flux vanishes")
    d = rho_ss.shape[0]
    es, zero = _mixing_eigen(M)
    v0 = (rho_ss @ Od).reshape(-1, order="F")
    c = es.left.conj().T @ v0
    # tr[O^+ R_a] for each right eigenvector
    trO = np.einsum("ij,jia->a", O, es.vectors.reshape(d, d, -1, order="F"))
    amp = c * trO
    w = np.asarray(omega_grid, dtype=float)
    lam = es.values[~zero]
    S = -np.real(np.sum(amp[~zero][None, :] / (1j * w[:, None] + lam[None, :]), axis=1))
    elastic = float(np.real(np.sum(amp[zero])))
    return EmissionSpectrum(w, S, elastic)


# ---------------------------------------------------------------------------
# Hopfield linear response

@dataclass
class LangevinResponse:
    omega: np.ndarray
    U: np.ndarray               # (n_w, 6, 6) over (c_L, c_R, x, c_L^+, c_R^+, x^+) ports
    transmission: np.ndarray    # |U[c_R, c_L]|^2
    reflection: np.ndarray      # |U[c_L, c_L]|^2
    normal_modes: np.ndarray
    ports: tuple = ("cav_left", "cav_right", "matter")


def hopfield_dynamical_matrix(p: HopfieldParams) -> np.ndarray:
    """Closed Heisenberg equations ``dv/dt = A v`` for ``v = (a, b, a^+, b^+)``."""
    wc, wx, g, D = p.omega_c, p.omega_X, p.g, p.D_dia
    return np.array([
        [-1j * (wc + 2 * D), -g, -2j * D, g],
        [g, -1j * wx, g, 0],
        [2j * D, g, 1j * (wc + 2 * D), -g],
        [g, 0, g, 1j * wx],
    ], dtype=complex)


def hopfield_normal_modes(p: HopfieldParams, tol: float = 1e-9) -> np.ndarray:
    """Positive normal-mode frequencies of the closed quadratic model."""
    ev = np.linalg.eigvals(hopfield_dynamical_matrix(p))
    scale = max(p.omega_c, p.omega_X)
    if np.max(np.abs(ev.real)) > tol * scale:
        raise InstabilityError(
            f"imaginary normal mode for omega_c={p.omega_c}, omega_X={p.omega_X}, g={p.g}, "
            f"D_dia={p.D_dia}: eigenvalues {np.round(ev, 6)}"
        )
    w = np.sort(np.abs(ev.imag))
    return w[1::2]


def hopfield_langevin_response(p: HopfieldParams, kappa_c: float, kappa_x: float, omega_grid,
                               kernel: Callable[[float], tuple[float, float]] | None = None
                               ) -> LangevinResponse:
    """Input-output scattering matrix of the Hopfield model.

    The cavity leaks through two mirrors (``kappa_c/2`` each) and the
    matter field through one channel (``kappa_x``); kernels are Markovian
    unless ``kernel(w) -> (kappa_c, kappa_x)`` is supplied.  For each
    frequency ``v(w) = (-i w - A + K/2)^{-1} B v_in`` and
    ``v_out = v_in - B^T v(w)``.
    """
    modes = hopfield_normal_modes(p)
    A = hopfield_dynamical_matrix(p)
    w = np.asarray(omega_grid, dtype=float)
    Us = np.empty((len(w), 6, 6), dtype=complex)
    for i, wi in enumerate(w):
        kc, kx = kernel(wi) if kernel is not None else (kappa_c, kappa_x)
        rates = np.array([kc, kx, kc, kx])
        B = np.zeros((4, 6))
        B[0, 0] = B[0, 1] = np.sqrt(kc / 2)
        B[1, 2] = np.sqrt(kx)
        B[2, 3] = B[2, 4] = np.sqrt(kc / 2)
        B[3, 5] = np.sqrt(kx)
        Mw = -1j * wi * np.eye(4) - A + np.diag(rates / 2)
        Us[i] = np.eye(6) - B.T @ np.linalg.solve(Mw, B)
    T = np.abs(Us[:, 1, 0]) ** 2
    R = np.abs(Us[:, 0, 0]) ** 2
    return LangevinResponse(w, Us, T, R, modes)


def flux_unitarity_defect(U: np.ndarray) -> float:
    """``max_j | sum_normal |U_jk|^2 - sum_anomalous |U_jk|^2 - 1 |`` over normal output ports."""
    if U.ndim == 2:
        U = U[None]
    P = np.abs(U[:, :3, :]) ** 2
    return float(np.max(np.abs(P[:, :, :3].sum(-1) - P[:, :, 3:].sum(-1) - 1)))
