"""Periodically driven open systems.

Two routes are provided:

* Floquet-Liouville: the undriven generator ``L0`` plus a drive
  ``F cos(w_d t + phi) X`` in the Hamiltonian only.  Writing
  ``rho(t) = sum_n rho^(n)(t) e^{-i n w_d t}`` gives a time-independent
  block generator ``L~[n, m] = L^(n-m) + i n w_d delta_nm`` with
  ``L^(0) = L0`` and ``L^(+-1) = -i (F/2) e^{-+i phi} [X, .]``.
* Floquet-Markov: Floquet states of ``H0 + F cos(w_d t + phi) X`` from the
  one-period propagator, and a secular rate equation built from the
  Fourier components of the bath operators in that basis.

A weak-drive rotating-frame generator (one drive photon per dressed
transition) and brute-force time integration oracles are included.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .numkern import eig_general, propagate_ode
from .opensys import Jump, LindbladGenerator


class FloquetConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class DriveSpec:
    F: float
    omega_d: float
    phi: float = 0.0
    drive_op: np.ndarray | None = None

    def __post_init__(self):
        if self.omega_d <= 0:
            raise ValueError("omega_d must be positive")

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega_d


def _drive_matrix(L0: LindbladGenerator, drive: DriveSpec) -> np.ndarray:
    if drive.drive_op is None:
        raise ValueError("drive.drive_op is required")
    X = np.asarray(drive.drive_op, dtype=complex)
    if X.shape[0] != L0.dim:
        X = L0.to_working(X)
    return X


def _commutator_super(X: np.ndarray) -> np.ndarray:
    I = np.eye(X.shape[0])
    return np.kron(I, X) - np.kron(X.T, I)


def fold_zone(values, omega_d: float) -> np.ndarray:
    """Shift imaginary parts (or real quasienergies) into ``(-w_d/2, w_d/2]``."""
    v = np.asarray(values)
    im = v.imag if np.iscomplexobj(v) else v
    k = np.ceil((im - omega_d / 2) / omega_d - 1e-12)
    shift = k * omega_d
    return v - 1j * shift if np.iscomplexobj(v) else v - shift


# ---------------------------------------------------------------------------
# Floquet-Liouville

@dataclass
class FloquetModes:
    values: np.ndarray   # zone representatives Omega_a
    right: np.ndarray    # (n_modes, 2N_F+1, d*d) Fourier blocks of R_a
    left: np.ndarray     # same layout for L_a
    defective: bool = False


@dataclass
class FloquetLiouvillian:
    N_F: int
    omega_d: float
    d: int
    blocks: dict
    matrix: np.ndarray
    _modes: FloquetModes | None = field(default=None, repr=False)
    _full: object = field(default=None, repr=False)

    @property
    def n_blocks(self) -> int:
        return 2 * self.N_F + 1

    @property
    def harmonics(self) -> np.ndarray:
        return np.arange(-self.N_F, self.N_F + 1)

    def full_eigen(self):
        if self._full is None:
            self._full = eig_general(self.matrix)
        return self._full

    @property
    def modes(self) -> FloquetModes:
        if self._modes is None:
            self._modes = _zone_modes(self)
        return self._modes


def build_floquet_liouvillian(L0: LindbladGenerator, drive: DriveSpec, N_F: int) -> FloquetLiouvillian:
    """Block matrix over Fourier indices ``-N_F .. N_F``."""
    if N_F < 0:
        raise ValueError("N_F must be >= 0")
    X = _drive_matrix(L0, drive)
    d = L0.dim
    D = d * d
    C = _commutator_super(X)
    blocks = {
        0: L0.matrix,
        1: -0.5j * drive.F * np.exp(-1j * drive.phi) * C,
        -1: -0.5j * drive.F * np.exp(1j * drive.phi) * C,
    }
    nb = 2 * N_F + 1
    M = np.zeros((nb * D, nb * D), dtype=complex)
    ns = np.arange(-N_F, N_F + 1)
    for i, n in enumerate(ns):
        for j, m in enumerate(ns):
            k = n - m
            if k in blocks:
                M[i * D:(i + 1) * D, j * D:(j + 1) * D] = blocks[k]
        M[i * D:(i + 1) * D, i * D:(i + 1) * D] += 1j * n * drive.omega_d * np.eye(D)
    return FloquetLiouvillian(N_F, drive.omega_d, d, blocks, M)


def _zone_modes(FL: FloquetLiouvillian) -> FloquetModes:
    es = FL.full_eigen()
    D = FL.d * FL.d
    nb = FL.n_blocks
    w = FL.omega_d
    im = es.values.imag
    in_zone = (im > -w / 2 + 1e-12 * w) & (im <= w / 2 + 1e-12 * w)
    R = es.vectors.T.reshape(-1, nb, D)
    Lv = es.left.T.reshape(-1, nb, D)
    edge = np.sum(np.abs(R[:, [0, -1], :]) ** 2, axis=(1, 2)) / np.sum(np.abs(R) ** 2, axis=(1, 2))
    idx = np.where(in_zone)[0]
    if len(idx) != D:
        # truncation artefacts near the outer blocks: keep the best-localised modes
        cand = idx[np.argsort(edge[idx])]
        if len(cand) < D:
            raise FloquetConvergenceError(f"only {len(cand)} zone representatives for {D} modes; raise N_F")
        idx = np.sort(cand[:D])
    return FloquetModes(es.values[idx], R[idx], Lv[idx], es.defective)


def floquet_eigen_shift(FL: FloquetLiouvillian, k: int = 1) -> FloquetModes:
    """Zone copies shifted by ``k`` harmonics: ``Omega + i k w_d``, ``R'^(n) = R^(n-k)``."""
    m = FL.modes

    def shift(A):
        out = np.zeros_like(A)
        if k >= 0:
            out[:, k:] = A[:, :A.shape[1] - k]
        else:
            out[:, :k] = A[:, -k:]
        return out

    return FloquetModes(m.values + 1j * k * FL.omega_d, shift(m.right), shift(m.left), m.defective)


def converge_floquet_liouvillian(L0: LindbladGenerator, drive: DriveSpec, N_F: int = 2, tol: float = 1e-8,
                                 N_F_max: int = 30) -> FloquetLiouvillian:
    """Raise ``N_F`` by 2 until the zone eigenvalues move less than ``tol``.

    Truncations too small to hold one zone copy of every mode are skipped.
    """
    prev = None
    while N_F <= N_F_max:
        nxt = build_floquet_liouvillian(L0, drive, N_F)
        try:
            b = nxt.modes.values
        except FloquetConvergenceError:
            prev, N_F = None, N_F + 2
            continue
        if prev is not None:
            a = prev.modes.values
            if np.max(np.min(np.abs(a[:, None] - b[None, :]), axis=1)) < tol:
                return nxt
        prev, N_F = nxt, N_F + 2
    raise FloquetConvergenceError(f"zone eigenvalues not converged to {tol:g} below N_F={N_F_max}")


def _reconstruct(modes: FloquetModes, ns, omega_d, d, rho0, t):
    v0 = np.asarray(rho0, dtype=complex).reshape(-1, order="F")
    c = np.einsum("anD,D->a", modes.left.conj(), v0)
    t = np.asarray(t, dtype=float)
    phases = np.exp(-1j * np.outer(t, ns) * omega_d)           # (T, nb)
    growth = np.exp(np.outer(t, modes.values))                  # (T, a)
    Rt = np.einsum("tn,anD->taD", phases, modes.right)          # R_a(t)
    vec = np.einsum("a,ta,taD->tD", c, growth, Rt)
    return vec.reshape(len(t), d, d).transpose(0, 2, 1)


def floquet_dynamics(FL: FloquetLiouvillian, rho0: np.ndarray, t_grid, shift: int = 0) -> np.ndarray:
    """``rho(t) = sum_a c_a e^{Omega_a t} R_a(t)`` with ``c_a = sum_n <<L_a^(n)|rho0>>``.

    ``shift`` selects another zone copy of every mode; the result does not
    depend on it beyond truncation effects.  Falls back to direct time
    integration if the block spectrum is defective.
    """
    modes = FL.modes if shift == 0 else floquet_eigen_shift(FL, shift)
    if modes.defective:
        warnings.warn("defective Floquet-Liouville spectrum; integrating in the time domain", stacklevel=2)
        return _integrate_blocks(FL, rho0, t_grid)
    return _reconstruct(modes, FL.harmonics, FL.omega_d, FL.d, rho0, t_grid)


def _integrate_blocks(FL, rho0, t_grid):
    D = FL.d * FL.d
    nb = FL.n_blocks
    v0 = np.zeros(nb * D, dtype=complex)
    v0[FL.N_F * D:(FL.N_F + 1) * D] = np.asarray(rho0, dtype=complex).reshape(-1, order="F")
    out = []
    M = FL.matrix
    for t in np.asarray(t_grid, dtype=float):
        v = sla.expm(M * t) @ v0
        blocks = v.reshape(nb, D)
        vec = np.einsum("n,nD->D", np.exp(-1j * FL.harmonics * FL.omega_d * t), blocks)
        out.append(vec.reshape(FL.d, FL.d, order="F"))
    return np.array(out)


@dataclass
class PeriodicState:
    """Periodic steady state ``rho(t) = sum_n rho^(n) e^{-i n w_d t}``."""

    fourier: np.ndarray  # (2N_F+1, d, d)
    omega_d: float
    eigenvalue: complex

    @property
    def harmonics(self) -> np.ndarray:
        n = (self.fourier.shape[0] - 1) // 2
        return np.arange(-n, n + 1)

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        ph = np.exp(-1j * np.outer(t, self.harmonics) * self.omega_d)
        out = np.einsum("tn,nij->tij", ph, self.fourier)
        return 0.5 * (out + out.conj().transpose(0, 2, 1))

    @property
    def average(self) -> np.ndarray:
        return self.fourier[(self.fourier.shape[0] - 1) // 2]


def floquet_steady_state(FL: FloquetLiouvillian, tol: float = 1e-9) -> PeriodicState:
    """The zone mode with ``|Omega| < tol``, normalised so ``tr rho^(0) = 1``."""
    m = FL.modes
    zero = np.where(np.abs(m.values) < tol * max(1.0, FL.omega_d))[0]
    if len(zero) != 1:
        raise FloquetConvergenceError(f"{len(zero)} zero modes in the Floquet-Liouville spectrum")
    a = zero[0]
    d = FL.d
    R = np.array([blk.reshape(d, d, order="F") for blk in m.right[a]])
    R = R / np.trace(R[FL.N_F])
    return PeriodicState(R, FL.omega_d, m.values[a])


# ---------------------------------------------------------------------------
# time-domain oracles

def driven_generator(L0: LindbladGenerator, drive: DriveSpec):
    """``t -> L(t)`` superoperator of the driven master equation."""
    X = _drive_matrix(L0, drive)
    C = -1j * _commutator_super(X)
    M0 = L0.matrix

    def L(t):
        return M0 + drive.F * np.cos(drive.omega_d * t + drive.phi) * C

    return L


def integrate_driven(L0: LindbladGenerator, drive: DriveSpec, rho0, t_grid, rtol: float = 1e-10) -> np.ndarray:
    """Direct integration of the driven master equation."""
    Lt = driven_generator(L0, drive)
    d = L0.dim
    v0 = np.asarray(rho0, dtype=complex).reshape(-1, order="F")
    ys = propagate_ode(lambda t, v: Lt(t) @ v, v0, t_grid, rtol=rtol, atol=rtol * 1e-3)
    return np.array([y.reshape(d, d, order="F") for y in ys])


def monodromy(L0: LindbladGenerator, drive: DriveSpec, n_samples: int = 0, rtol: float = 1e-11):
    """One-period propagator of the driven master equation (and optional samples)."""
    Lt = driven_generator(L0, drive)
    D = L0.dim ** 2
    T = drive.period
    t = np.linspace(0, T, max(n_samples, 2) if n_samples else 2)
    Ys = propagate_ode(lambda tt, Y: Lt(tt) @ Y, np.eye(D, dtype=complex), t, rtol=rtol, atol=rtol * 1e-3)
    return t, Ys


def periodic_state_bruteforce(L0: LindbladGenerator, drive: DriveSpec, n_samples: int = 200,
                              rtol: float = 1e-11):
    """Fixed point of the one-period map and the state on a period grid.

    Returns ``(t, rho_t)`` with ``n_samples`` points on ``[0, T)``.
    """
    d = L0.dim
    t, Ys = monodromy(L0, drive, n_samples + 1, rtol)
    U = Ys[-1]
    _, s, Vh = np.linalg.svd(U - np.eye(d * d))
    v = Vh[-1].conj()
    rho0 = v.reshape(d, d, order="F")
    rho0 = rho0 / np.trace(rho0)
    v = rho0.reshape(-1, order="F")
    rhos = np.array([(Y @ v).reshape(d, d, order="F") for Y in Ys[:-1]])
    return t[:-1], rhos


# ---------------------------------------------------------------------------
# weak-drive rotating frame

@dataclass
class RotatingFrame:
    generator: LindbladGenerator
    photon_index: np.ndarray  # m_j: drive quanta attached to dressed level j
    omega_d: float

    def secular(self, op: np.ndarray) -> np.ndarray:
        """Period average of a working-basis operator: keep entries with ``m_i = m_j``."""
        m = self.photon_index
        return np.where(m[:, None] == m[None, :], op, 0.0)


def drive_photon_index(X: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Fewest drive quanta needed to reach each level from level 0.

    Breadth-first search over the graph of non-zero ``X_ij``; unreachable
    levels get ``-1``.  Under a weak drive level ``j`` is first populated at
    order ``F^{m_j}``, which makes this the natural photon bookkeeping.
    """
    n = X.shape[0]
    adj = np.abs(X) > tol * max(1.0, float(np.max(np.abs(X))))
    m = np.full(n, -1)
    m[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for j in np.nonzero(adj[i])[0]:
                if m[j] < 0:
                    m[j] = m[i] + 1
                    nxt.append(j)
        frontier = nxt
    return m


def weak_drive_generator(L0: LindbladGenerator, drive: DriveSpec) -> RotatingFrame:
    """Time-independent generator for a weak drive on a dressed master equation.

    Level ``j`` carries ``m_j`` drive quanta (:func:`drive_photon_index`).
    In the frame rotating at ``m_j w_d`` the drive keeps only elements with
    ``m_j = m_i + 1`` (plus conjugates); detunings are
    ``E_j - E_0 - m_j w_d``.  Jumps are split by their change in ``m`` so that
    no oscillating cross terms survive; the dissipator is otherwise unchanged.
    Levels the drive cannot reach keep ``m = round((E_j - E_0)/w_d)``.
    """
    if L0.energies is None:
        raise ValueError("weak-drive frame needs a dressed generator")
    E = np.real(np.diag(L0.H_eff))
    w = drive.omega_d
    X = _drive_matrix(L0, drive)
    m = drive_photon_index(X)
    m = np.where(m < 0, np.rint(E / w).astype(int), m)
    H = np.diag(E - m * w).astype(complex)
    up = (m[None, :] == m[:, None] + 1)  # (i, j) with m_j = m_i + 1
    V = np.where(up, 0.5 * drive.F * np.exp(1j * drive.phi) * X, 0.0)
    H = H + V + V.conj().T
    jumps = []
    dm = m[None, :] - m[:, None]
    for j in L0.jumps:
        for k in np.unique(dm[np.abs(j.op) > 0]):
            part = np.where(dm == k, j.op, 0.0)
            jumps.append(Jump(j.rate, part, j.freq, j.label))
    gen = LindbladGenerator(H, jumps, L0.basis, L0.energies, L0.space, "rotating")
    return RotatingFrame(gen, m, w)


# ---------------------------------------------------------------------------
# Floquet-Markov

@dataclass
class FloquetStates:
    quasienergies: np.ndarray     # zone (-w_d/2, w_d/2]
    u0: np.ndarray                # columns |u_a(0)>
    times: np.ndarray             # period grid, endpoint excluded
    u_t: np.ndarray               # (M, d, n) periodic states on the grid
    omega_d: float
    degenerate: bool = False

    def fourier(self, A: np.ndarray, k_max: int | None = None) -> dict:
        """``A^(k)_ab = (1/T) int <u_a(t)|A|u_b(t)> e^{i k w_d t} dt`` for ``|k| <= k_max``."""
        f = np.einsum("tia,ij,tjb->tab", self.u_t.conj(), A, self.u_t)
        c = np.fft.ifft(f, axis=0)
        M = len(self.times)
        k_max = M // 2 - 1 if k_max is None else k_max
        return {k: c[k % M] for k in range(-k_max, k_max + 1)}


def _hamiltonian_monodromy(H0, X, drive: DriveSpec, M: int, rtol: float):
    T = drive.period
    t = np.linspace(0, T, M + 1)

    def rhs(tt, U):
        return -1j * (H0 + drive.F * np.cos(drive.omega_d * tt + drive.phi) * X) @ U

    Us = propagate_ode(rhs, np.eye(H0.shape[0], dtype=complex), t, rtol=rtol, atol=rtol * 1e-2)
    return t, Us


def floquet_states(H0, drive: DriveSpec, n_samples: int = 256, rtol: float = 1e-11,
                   degeneracy_tol: float = 1e-9) -> FloquetStates:
    """Quasienergies and periodic states from the one-period propagator."""
    H0 = np.asarray(H0, dtype=complex)
    X = np.asarray(drive.drive_op, dtype=complex)
    T = drive.period
    t, Us = _hamiltonian_monodromy(H0, X, drive, n_samples, rtol)
    Tm, Z = sla.schur(Us[-1], output="complex")
    lam = np.diag(Tm)
    eps = fold_zone(-np.angle(lam) / T, drive.omega_d)
    order = np.argsort(eps)
    eps, Z = eps[order], Z[:, order]
    gaps = np.abs(fold_zone(eps[:, None] - eps[None, :], drive.omega_d))
    np.fill_diagonal(gaps, np.inf)
    degenerate = bool(np.min(gaps) < degeneracy_tol) if len(eps) > 1 else False
    if degenerate:
        warnings.warn("quasienergy degeneracy: secular Floquet-Markov rates are unreliable", stacklevel=2)
    ph = np.exp(1j * np.outer(t[:-1], eps))            # (M, n)
    u_t = np.einsum("tij,jn,tn->tin", Us[:-1], Z, ph)
    return FloquetStates(eps, Z, t[:-1], u_t, drive.omega_d, degenerate)


@dataclass
class FloquetMarkovGenerator:
    generator: LindbladGenerator
    states: FloquetStates
    rates: np.ndarray      # rates[a, b]: transition b -> a
    n_samples: int

    def steady_populations(self) -> np.ndarray:
        R = self.rates.copy()
        np.fill_diagonal(R, 0.0)
        W = R - np.diag(R.sum(axis=0))
        _, _, Vh = np.linalg.svd(W)
        p = np.abs(Vh[-1])
        return p / p.sum()

    def period_average(self, O: np.ndarray, populations: np.ndarray | None = None) -> float:
        """``sum_a p_a O^(0)_aa`` with the period-averaged diagonal of ``O``."""
        p = self.steady_populations() if populations is None else populations
        O0 = self.states.fourier(np.asarray(O, dtype=complex), 0)[0]
        return float(np.real(np.sum(p * np.diag(O0))))


def floquet_markov_me(H0, baths, drive: DriveSpec, n_samples: int = 256, tol: float = 1e-8,
                      max_samples: int = 8192, rtol: float = 1e-11) -> FloquetMarkovGenerator:
    """Secular master equation in the Floquet basis.

    For each pair ``(a, b)`` and harmonic ``k`` with
    ``W_ab(k) = e_b - e_a + k w_d > 0`` the jump ``|u_a(0)><u_b(0)|`` gets the
    rate ``gamma(W_ab(k)) |A^(k)_ab|^2``; contributions of all ``k`` are
    summed.  Fourier components are refined by doubling the period sampling
    until they change less than ``tol``.
    """
    H0 = np.asarray(H0, dtype=complex)
    M = n_samples
    while True:
        st = floquet_states(H0, drive, M, rtol)
        comps = [st.fourier(b.matrix) for b in baths]
        half = FloquetStates(st.quasienergies, st.u0, st.times[::2], st.u_t[::2], st.omega_d)
        coarse = [half.fourier(b.matrix) for b in baths]
        change = max(np.max(np.abs(c[k] - cc[k])) for c, cc in zip(comps, coarse) for k in cc)
        if change < tol or 2 * M > max_samples:
            if change >= tol:
                warnings.warn(f"Fourier components changed by {change:.2e} at {M} samples", stacklevel=2)
            break
        M *= 2
    n = len(st.quasienergies)
    eps = st.quasienergies
    rates = np.zeros((n, n))
    for b, comp in zip(baths, comps):
        for k, Ak in comp.items():
            W = eps[None, :] - eps[:, None] + k * drive.omega_d
            gam = np.vectorize(b.gamma)(W)
            rates += gam * np.abs(Ak) ** 2
    jumps = []
    for a in range(n):
        for bb in range(n):
            if rates[a, bb] > 0:
                P = np.zeros((n, n), dtype=complex)
                P[a, bb] = 1.0
                jumps.append(Jump(float(rates[a, bb]), P, None, f"{bb}->{a}"))
    gen = LindbladGenerator(np.diag(eps).astype(complex), jumps, st.u0, None, None, "floquet-markov")
    return FloquetMarkovGenerator(gen, st, rates, M)


def floquet_liouville_average(FL: FloquetLiouvillian, O: np.ndarray) -> float:
    """Period-averaged expectation ``tr[O rho^(0)]`` in the periodic steady state."""
    ss = floquet_steady_state(FL)
    return float(np.real(np.trace(np.asarray(O) @ ss.average)))


def bruteforce_average(L0: LindbladGenerator, drive: DriveSpec, O: np.ndarray, n_samples: int = 200) -> float:
    t, rhos = periodic_state_bruteforce(L0, drive, n_samples)
    return float(np.real(np.mean(np.einsum("ij,tji->t", np.asarray(O), rhos))))


def floquet_g2_zero(FL: FloquetLiouvillian, Oplus: np.ndarray, dark_tol: float = 1e-14) -> float:
    """Period-averaged ``<O^- O^- O^+ O^+> / <O^- O^+>^2`` in the periodic steady state."""
    from .opensys import DarkStateError

    O = np.asarray(Oplus, dtype=complex)
    Od = O.conj().T
    rho = floquet_steady_state(FL).average
    n1 = float(np.real(np.trace(Od @ O @ rho)))
    if n1 < dark_tol:
        raise DarkStateError(f"period-averaged flux {n1:.3e} is below {dark_tol:g}")
    n2 = float(np.real(np.trace(Od @ Od @ O @ O @ rho)))
    return n2 / n1 ** 2


# ---------------------------------------------------------------------------
# two-time averages in the periodic steady state
#
# Starting the extended dynamics at t0 with sigma in block 0 gives
#   Phi(t0 + tau, t0) sigma = sum_a e^{Omega_a tau} R_a(t0 + tau) <<L_a(t0)|sigma>>,
# with R_a(t) = sum_n R_a^(n) e^{-i n w_d t} and likewise for L_a.  Averages
# over t0 are exact on a grid finer than the highest harmonic involved.

def _t0_grid(FL: FloquetLiouvillian, n_t0: int | None):
    M = n_t0 or (6 * FL.N_F + 4)
    return np.arange(M) * (2 * np.pi / FL.omega_d) / M


def _mode_coeffs(FL, sigma_vecs, t0):
    """``c[t, a] = <<L_a(t0_t)|sigma_t>>``."""
    m = FL.modes
    ph = np.exp(1j * np.outer(t0, FL.harmonics) * FL.omega_d)  # conj of e^{-i n w t}
    return np.einsum("tn,anD,tD->ta", ph, m.left.conj(), sigma_vecs)


def _trace_blocks(FL, A):
    """``tr[A R_a^(n)]`` for every zone mode and harmonic."""
    At = np.asarray(A, dtype=complex).T.reshape(-1, order="F")  # tr(A R) = vec(A^T) . vec(R)
    return np.einsum("D,anD->an", At, FL.modes.right)


def floquet_g2(FL: FloquetLiouvillian, Oplus: np.ndarray, tau_grid, n_t0: int | None = None,
               dark_tol: float = 1e-14) -> np.ndarray:
    """Period-averaged ``g2(tau)`` of a driven steady state.

    ``G2(tau) = avg_t0 tr[O^- O^+ Phi(t0+tau, t0)(O^+ rho(t0) O^-)]``
    divided by ``(avg_t0 <O^- O^+>)^2``.
    """
    from .opensys import DarkStateError

    O = np.asarray(Oplus, dtype=complex)
    Od = O.conj().T
    N = Od @ O
    ss = floquet_steady_state(FL)
    t0 = _t0_grid(FL, n_t0)
    rho = ss(t0)
    n1 = float(np.mean(np.real(np.einsum("ij,tji->t", N, rho))))
    if n1 < dark_tol:
        raise DarkStateError(f"period-averaged flux {n1:.3e} is below {dark_tol:g}")
    sig = np.einsum("ij,tjk,kl->til", O, rho, Od)
    sv = sig.transpose(0, 2, 1).reshape(len(t0), -1)
    c = _mode_coeffs(FL, sv, t0)
    trN = _trace_blocks(FL, N)
    tau = np.asarray(tau_grid, dtype=float)
    vals = FL.modes.values
    out = np.empty(len(tau))
    for i, ti in enumerate(tau):
        ph = np.exp(-1j * np.outer(t0 + ti, FL.harmonics) * FL.omega_d)   # (t, n)
        Rt = np.einsum("tn,an->ta", ph, trN)
        out[i] = np.real(np.mean(np.sum(c * np.exp(vals * ti)[None, :] * Rt, axis=1)))
    return out / n1 ** 2


def floquet_emission_spectrum(FL: FloquetLiouvillian, Oplus: np.ndarray, omega_grid, n_t0: int | None = None,
                              tol: float = 1e-9):
    """Incoherent emission spectrum of a periodic steady state.

    ``S(w) = Re int_0^inf dtau e^{i w tau} avg_t0 <O^-(t0) O^+(t0 + tau)>``.
    The zero mode produces elastic lines at multiples of ``w_d``; their
    weights are returned separately, keyed by harmonic.
    """
    from .opensys import EmissionSpectrum

    O = np.asarray(Oplus, dtype=complex)
    Od = O.conj().T
    ss = floquet_steady_state(FL)
    t0 = _t0_grid(FL, n_t0)
    rho = ss(t0)
    sig = np.einsum("tij,jk->tik", rho, Od)
    sv = sig.transpose(0, 2, 1).reshape(len(t0), -1)
    c = _mode_coeffs(FL, sv, t0)
    trO = _trace_blocks(FL, O)
    ph = np.exp(-1j * np.outer(t0, FL.harmonics) * FL.omega_d)
    amp = np.mean(c[:, :, None] * ph[:, None, :], axis=0) * trO     # (a, n)
    poles = FL.modes.values[:, None] - 1j * FL.harmonics[None, :] * FL.omega_d
    zero = np.abs(FL.modes.values) < tol * max(1.0, FL.omega_d)
    w = np.asarray(omega_grid, dtype=float)
    keep = ~zero
    S = -np.real(np.einsum("an,wan->w", amp[keep],
                           1.0 / (1j * w[:, None, None] + poles[keep][None, :, :])))
    elastic = {int(n): float(np.real(amp[zero][0, i])) for i, n in enumerate(FL.harmonics)} if zero.any() else {}
    out = EmissionSpectrum(w, S, float(sum(elastic.values())))
    out.lines = elastic
    return out


def g2_bruteforce(L0: LindbladGenerator, drive: DriveSpec, Oplus: np.ndarray, tau_grid, n_t0: int = 24,
                  rtol: float = 1e-11) -> np.ndarray:
    """Time-domain oracle for :func:`floquet_g2`: integrate from each start phase."""
    O = np.asarray(Oplus, dtype=complex)
    Od = O.conj().T
    N = Od @ O
    ts, rhos = periodic_state_bruteforce(L0, drive, n_t0, rtol)
    n1 = float(np.mean(np.real(np.einsum("ij,tji->t", N, rhos))))
    tau = np.asarray(tau_grid, dtype=float)
    acc = np.zeros(len(tau))
    for t0, rho in zip(ts, rhos):
        sig = O @ rho @ Od
        grid = t0 + tau
        if tau[0] != 0:
            grid = np.concatenate([[t0], grid])
        traj = integrate_driven(L0, drive, sig, grid, rtol) if len(grid) > 1 else sig[None]
        if tau[0] != 0:
            traj = traj[1:]
        acc += np.real(np.einsum("ij,tji->t", N, traj))
    return acc / len(ts) / n1 ** 2


__all__ = [
    "DriveSpec", "FloquetLiouvillian", "FloquetModes", "FloquetStates", "FloquetMarkovGenerator",
    "PeriodicState", "RotatingFrame", "FloquetConvergenceError", "build_floquet_liouvillian",
    "converge_floquet_liouvillian", "floquet_dynamics", "floquet_steady_state", "floquet_eigen_shift",
    "floquet_markov_me", "floquet_states", "weak_drive_generator", "drive_photon_index", "integrate_driven",
    "periodic_state_bruteforce", "driven_generator", "fold_zone", "floquet_liouville_average",
    "bruteforce_average", "floquet_g2_zero", "floquet_g2", "floquet_emission_spectrum", "g2_bruteforce",
]
