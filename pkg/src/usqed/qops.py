"""Truncated Fock-space operators and model Hamiltonians.

Tensor order is fixed: all spins first, then all bosonic modes, composed
row-major (``np.kron(spin_0, spin_1, ..., mode_0, mode_1, ...)``).  Spin
basis is ``(|up>, |down>)`` so that ``sigma_z = diag(1, -1)`` and
``sigma_+ = |up><down|``.
"""
from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln

DEFAULT_DIM_CAP = 20000
UP, DOWN = 0, 1  # spin basis indices


class DimensionError(ValueError):
    """Raised when a Hilbert space exceeds the configured dimension cap."""


class IncompatibleSpaceError(ValueError):
    """Raised when a model is built on a space of the wrong shape."""


class TruncationError(RuntimeError):
    """Raised when a unitary is not faithfully represented at the cutoff."""


def dim_cap() -> int:
    env = os.environ.get("USQED_DIM_CAP")
    return int(env) if env else DEFAULT_DIM_CAP


@dataclass(frozen=True)
class HilbertSpec:
    fock_cutoff: int
    n_modes: int = 1
    n_spins: int = 1
    cap: int | None = None

    def __post_init__(self):
        if self.fock_cutoff < 1 or self.n_modes < 1 or self.n_spins < 0:
            raise ValueError(f"invalid Hilbert space {self!r}")
        cap = self.cap if self.cap is not None else dim_cap()
        if self.dim > cap:
            raise DimensionError(
                f"total dimension {self.dim} exceeds cap {cap}; "
                "raise it with cap= or USQED_DIM_CAP"
            )

    @property
    def dim(self) -> int:
        return 2 ** self.n_spins * self.fock_cutoff ** self.n_modes

    @property
    def factor_dims(self) -> tuple[int, ...]:
        return (2,) * self.n_spins + (self.fock_cutoff,) * self.n_modes


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense matrix tagged with the space it acts on."""

    space: HilbertSpec
    matrix: np.ndarray
    hermitian_hint: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.space.dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dim {d}")
        if self.hermitian_hint:
            err = np.max(np.abs(m - m.conj().T)) if d else 0.0
            if err >= 1e-12 * max(1.0, np.max(np.abs(m))):
                raise ValueError(f"operator flagged Hermitian but |M - M^+| = {err:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T, self.hermitian_hint)

    def _other(self, other):
        if isinstance(other, Operator):
            if other.space.factor_dims != self.space.factor_dims:
                raise IncompatibleSpaceError("operators live on different spaces")
            return other.matrix, other.hermitian_hint
        return None, False

    def __add__(self, other):
        m, h = self._other(other)
        if m is None:
            return NotImplemented
        return Operator(self.space, self.matrix + m, self.hermitian_hint and h)

    def __sub__(self, other):
        m, h = self._other(other)
        if m is None:
            return NotImplemented
        return Operator(self.space, self.matrix - m, self.hermitian_hint and h)

    def __neg__(self):
        return Operator(self.space, -self.matrix, self.hermitian_hint)

    def __mul__(self, c):
        if isinstance(c, Operator):
            return NotImplemented
        herm = self.hermitian_hint and np.isreal(c)
        return Operator(self.space, c * self.matrix, bool(herm))

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._other(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return self.matrix @ other


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


# ---------------------------------------------------------------------------
# elementary algebra

def _embed(space: HilbertSpec, factor: int, local: np.ndarray) -> np.ndarray:
    mats = [np.eye(d) for d in space.factor_dims]
    mats[factor] = local
    return reduce(np.kron, mats)


def destroy(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)


_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_SP = np.array([[0, 1], [0, 0]], dtype=complex)


@dataclass(frozen=True)
class Algebra:
    """Elementary operators on a :class:`HilbertSpec`.

    ``a[m]`` / ``adag[m]`` per mode, ``sx[s]`` ... ``sm[s]`` per spin.
    """

    space: HilbertSpec
    a: tuple = field(default_factory=tuple)
    adag: tuple = field(default_factory=tuple)
    sx: tuple = field(default_factory=tuple)
    sy: tuple = field(default_factory=tuple)
    sz: tuple = field(default_factory=tuple)
    sp: tuple = field(default_factory=tuple)
    sm: tuple = field(default_factory=tuple)
    identity: Operator | None = None

    def num(self, mode: int = 0) -> Operator:
        return Operator(self.space, self.adag[mode].matrix @ self.a[mode].matrix, True)

    def x(self, mode: int = 0) -> Operator:
        """Field quadrature ``a + a^dagger`` (no 1/sqrt2)."""
        return Operator(self.space, self.a[mode].matrix + self.adag[mode].matrix, True)


def build_algebra(space: HilbertSpec) -> Algebra:
    ns = space.n_spins
    N = space.fock_cutoff
    loc_a = destroy(N)
    a = tuple(Operator(space, _embed(space, ns + m, loc_a)) for m in range(space.n_modes))
    adag = tuple(op.dag for op in a)

    def spin(local, herm):
        return tuple(Operator(space, _embed(space, s, local), herm) for s in range(ns))

    return Algebra(
        space=space,
        a=a,
        adag=adag,
        sx=spin(_SX, True),
        sy=spin(_SY, True),
        sz=spin(_SZ, True),
        sp=spin(_SP, False),
        sm=spin(_SP.T.copy(), False),
        identity=Operator(space, np.eye(space.dim), True),
    )


# ---------------------------------------------------------------------------
# unitaries from Hermitian generators

def expi_hermitian(h: np.ndarray, t: complex = 1.0) -> np.ndarray:
    """``exp(-1j * t * h)`` for Hermitian ``h`` via its eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def func_hermitian(h: np.ndarray, f) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix spectrally."""
    w, v = np.linalg.eigh(h)
    return (v * f(w)) @ v.conj().T


def coherent_amplitudes(alpha: complex, n: int) -> np.ndarray:
    """Exact Fock amplitudes ``<k|alpha>`` for ``k < n``."""
    out = np.zeros(n, dtype=complex)
    if alpha == 0:
        out[0] = 1.0
        return out
    k = np.arange(n)
    logmag = -0.5 * abs(alpha) ** 2 + k * np.log(abs(alpha)) - 0.5 * gammaln(k + 1)
    return np.exp(logmag + 1j * k * np.angle(alpha))


def check_displacement_truncation(alpha: complex, n: int, tol: float = 1e-8) -> float:
    """Compare the truncated ``D(alpha)|0>`` with exact coherent amplitudes.

    Returns the max deviation and raises :class:`TruncationError` above ``tol``.
    """
    a = destroy(n)
    gen = alpha * a.T - np.conj(alpha) * a  # anti-Hermitian
    d0 = expi_hermitian(1j * gen)[:, 0]
    err = float(np.max(np.abs(d0 - coherent_amplitudes(alpha, n))))
    if err > tol:
        raise TruncationError(
            f"displacement |alpha|={abs(alpha):.3g} is not unitary within the "
            f"cutoff N={n} (defect {err:.2e}); increase fock_cutoff"
        )
    return err


def displacement(space: HilbertSpec, alpha: complex, mode: int = 0, tol: float = 1e-8) -> Operator:
    """``D(alpha) = exp(alpha a^+ - alpha^* a)`` on ``mode``."""
    N = space.fock_cutoff
    if abs(alpha) ** 2 > N / 4:
        warnings.warn(f"|alpha|^2={abs(alpha)**2:.3g} is large for cutoff {N}", stacklevel=2)
    check_displacement_truncation(alpha, N, tol)
    a = destroy(N)
    gen = alpha * a.T - np.conj(alpha) * a
    local = expi_hermitian(1j * gen)
    return Operator(space, _embed(space, space.n_spins + mode, local))


def squeeze(space: HilbertSpec, lam: float, mode: int = 0, tol: float = 1e-8) -> Operator:
    """``S(lam) = exp(lam (a^+^2 - a^2))`` on ``mode``."""
    N = space.fock_cutoff
    a = destroy(N)
    gen = lam * (a.T @ a.T - a @ a)
    local = expi_hermitian(1j * gen)
    # squeezed vacuum tail must stay inside the cutoff
    tail = np.max(np.abs(local[N - 2:, 0])) if N >= 2 else 0.0
    if tail > tol:
        raise TruncationError(
            f"squeezing lam={lam:.3g} leaks {tail:.2e} to the cutoff N={N}; increase fock_cutoff"
        )
    return Operator(space, _embed(space, space.n_spins + mode, local))


# ---------------------------------------------------------------------------
# models

@dataclass(frozen=True)
class RabiParams:
    omega: float
    Omega: float
    g: float

    def __post_init__(self):
        if self.omega <= 0 or self.Omega < 0 or self.g < 0:
            raise ValueError(f"invalid Rabi parameters {self!r}")


@dataclass(frozen=True)
class JCParams(RabiParams):
    """Same parameters as the Rabi model; built without counter-rotating terms."""


@dataclass(frozen=True)
class HopfieldParams:
    omega_c: float
    omega_X: float
    g: float
    D_dia: float = 0.0

    def __post_init__(self):
        if self.omega_c <= 0 or self.omega_X <= 0 or self.D_dia < 0:
            raise ValueError(f"invalid Hopfield parameters {self!r}")


@dataclass(frozen=True)
class SpinBosonParams:
    Omega: float
    modes: tuple  # ((omega_k, g_k), ...)

    def __post_init__(self):
        modes = tuple((float(w), float(c)) for w, c in self.modes)
        object.__setattr__(self, "modes", modes)
        if not modes:
            raise ValueError("spin-boson model needs at least one mode")
        w = np.array([m[0] for m in modes])
        if np.any(w <= 0) or np.any(np.diff(w) <= 0) or any(c < 0 for _, c in modes):
            raise ValueError("mode frequencies must be positive and strictly increasing, couplings >= 0")

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m[0] for m in self.modes])

    @property
    def couplings(self) -> np.ndarray:
        return np.array([m[1] for m in self.modes])


Model = Union[RabiParams, JCParams, HopfieldParams, SpinBosonParams]


def _require(space: HilbertSpec, n_spins: int, n_modes: int, name: str):
    if space.n_spins != n_spins or space.n_modes != n_modes:
        raise IncompatibleSpaceError(
            f"{name} needs {n_spins} spin(s) and {n_modes} mode(s), got {space}"
        )


def build_hamiltonian(model: Model, space: HilbertSpec) -> Operator:
    alg = build_algebra(space)
    if isinstance(model, JCParams):
        _require(space, 1, 1, "Jaynes-Cummings")
        p = model
        H = (p.omega * alg.num().matrix + 0.5 * p.Omega * alg.sz[0].matrix
             + p.g * (alg.sp[0].matrix @ alg.a[0].matrix + alg.sm[0].matrix @ alg.adag[0].matrix))
    elif isinstance(model, RabiParams):
        _require(space, 1, 1, "Rabi")
        p = model
        H = (p.omega * alg.num().matrix + 0.5 * p.Omega * alg.sz[0].matrix
             + p.g * alg.sx[0].matrix @ alg.x().matrix)
    elif isinstance(model, HopfieldParams):
        _require(space, 0, 2, "Hopfield")
        p = model
        a, ad = alg.a[0].matrix, alg.adag[0].matrix
        b, bd = alg.a[1].matrix, alg.adag[1].matrix
        xa = a + ad
        H = (p.omega_c * ad @ a + p.omega_X * bd @ b
             + 1j * p.g * xa @ (bd - b) + p.D_dia * xa @ xa)
    elif isinstance(model, SpinBosonParams):
        _require(space, 1, len(model.modes), "spin-boson")
        H = 0.5 * model.Omega * alg.sz[0].matrix
        for k, (wk, gk) in enumerate(model.modes):
            H = H + wk * alg.num(k).matrix + gk * alg.sx[0].matrix @ alg.x(k).matrix
    else:
        raise TypeError(f"unknown model {type(model).__name__}")
    H = 0.5 * (H + H.conj().T)
    return Operator(space, H, True)


def default_space(model: Model, fock_cutoff: int, cap: int | None = None) -> HilbertSpec:
    """Natural Hilbert space for a model at a given per-mode cutoff."""
    if isinstance(model, HopfieldParams):
        return HilbertSpec(fock_cutoff, n_modes=2, n_spins=0, cap=cap)
    if isinstance(model, SpinBosonParams):
        return HilbertSpec(fock_cutoff, n_modes=len(model.modes), n_spins=1, cap=cap)
    return HilbertSpec(fock_cutoff, n_modes=1, n_spins=1, cap=cap)


def parity_operator(space: HilbertSpec) -> Operator:
    """``P = sigma_z exp(i pi a^+ a)`` for a one-spin, one-mode space."""
    _require(space, 1, 1, "parity")
    phase = (-1.0) ** np.arange(space.fock_cutoff)
    return Operator(space, np.kron(_SZ, np.diag(phase)), True)


def sector_parity(space: HilbertSpec) -> Operator:
    """Excitation parity for one spin and any number of modes."""
    if space.n_spins != 1:
        raise IncompatibleSpaceError("parity needs exactly one spin")
    phase = (-1.0) ** np.arange(space.fock_cutoff)
    diag = reduce(np.kron, [np.diag(phase)] * space.n_modes)
    return Operator(space, np.kron(_SZ, diag), True)


def fock_state(space: HilbertSpec, spin: Sequence[int] | None = None, photons: Sequence[int] = (0,)) -> np.ndarray:
    """Basis vector; ``spin`` entries are 0 for up, 1 for down."""
    spin = tuple(spin) if spin is not None else ()
    idx = 0
    for d, i in zip(space.factor_dims, spin + tuple(photons)):
        idx = idx * d + i
    v = np.zeros(space.dim, dtype=complex)
    v[idx] = 1.0
    return v
