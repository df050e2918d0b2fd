import warnings

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from conftest import random_density
from usqed.numkern import eig_hermitian
from usqed.opensys import (BathSpec, DarkStateError, DegenerateSteadyStateError, DensityMatrix, InstabilityError,
                           Jump, LindbladGenerator, build_lindbladian, correlation_g2, detector_operator,
                           dressed_jump_operators, emission_spectrum, flux_unitarity_defect, g2_zero,
                           hopfield_langevin_response, hopfield_normal_modes, liouvillian_residual, photon_flux,
                           propagate, steady_state, xplus_operator)
from usqed.qops import DOWN, UP, HilbertSpec, HopfieldParams, RabiParams, build_algebra, build_hamiltonian, fock_state

SZ = np.diag([1.0, -1.0]).astype(complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SM = np.array([[0, 0], [1, 0]], dtype=complex)  # |down><up|


def rabi(g, N=30, W=1.0):
    space = HilbertSpec(N)
    H = build_hamiltonian(RabiParams(1.0, W, g), space)
    return space, H, build_algebra(space)


def dressed(g, n_levels=8, N=30, gamma0=0.01, **kw):
    space, H, alg = rabi(g, N)
    es = eig_hermitian(H)
    X = (alg.a[0] + alg.adag[0]).matrix
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        L = build_lindbladian("dressed", es, [BathSpec(X, gamma0=gamma0, **kw)], n_levels=n_levels)
    return L, es, X, alg


# --- jump operators -------------------------------------------------------

def test_free_tls_single_jump():
    es = eig_hermitian(0.5 * 1.3 * SZ)
    js = dressed_jump_operators(es, SX)
    assert len(js) == 1
    w, A = js.jumps[0]
    assert abs(w - 1.3) < 1e-14
    # energy basis is (down, up); sigma_- lowers up -> down
    np.testing.assert_allclose(es.to_lab(A), SM, atol=1e-14)


@pytest.mark.parametrize("g", [0.0, 0.3, 0.8])
def test_jump_completeness(g):
    _, H, alg = rabi(g, N=20)
    es = eig_hermitian(H)
    X = (alg.a[0] + alg.adag[0]).matrix
    js = dressed_jump_operators(es, X)
    np.testing.assert_allclose(js.reconstruct(), es.to_eigenbasis(X), atol=1e-12)


def test_gap_census_rabi():
    _, H, alg = rabi(0.6)
    es = eig_hermitian(H).truncate(6)
    X = (alg.a[0] + alg.adag[0]).matrix
    js = dressed_jump_operators(es, X)
    E = es.values
    gaps = {round(E[k] - E[i], 9) for i in range(6) for k in range(6) if E[k] - E[i] > 1e-9}
    assert len(js) == len(gaps)


def test_generalised_secular_classes():
    E = np.array([0.0, 1.0, 1.02, 2.5])
    es = eig_hermitian(np.diag(E))
    A = np.ones((4, 4)) - np.eye(4)
    strict = dressed_jump_operators(es, A)
    merged = dressed_jump_operators(es, A, cluster_tol=0.05)
    assert len(merged) < len(strict)
    assert max(merged.widths) <= 0.05
    np.testing.assert_allclose(merged.reconstruct(), A, atol=1e-14)


def test_class_tie_assigned_low_and_flagged():
    E = np.array([0.0, 1.0, 1.5])
    es = eig_hermitian(np.diag(E))
    A = np.ones((3, 3)) - np.eye(3)
    with pytest.warns(UserWarning):
        js = dressed_jump_operators(es, A, cluster_tol=0.5)
    assert js.ties
    # 0.5 starts the first class; 1.0 lies exactly at the boundary and joins it
    assert len(js) == 2


def test_clustering_continuity():
    L0, *_ = dressed(0.6, n_levels=6)
    L1, *_ = dressed(0.6, n_levels=6, cluster_tol=1e-12)
    np.testing.assert_allclose(L1.matrix, L0.matrix, atol=1e-12)


# --- generators -----------------------------------------------------------

def test_empty_cavity_spectrum():
    N, gam = 6, 0.1
    space = HilbertSpec(N, n_spins=0)
    alg = build_algebra(space)
    H = alg.num()
    es = eig_hermitian(H)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        L = build_lindbladian("dressed", es, [BathSpec(alg.x().matrix, gamma0=gam)])
    ev = L.spectrum()
    assert np.min(np.abs(ev)) < 1e-12
    assert np.min(np.abs(ev - (-gam / 2 - 1j))) < 1e-12
    assert np.min(np.abs(ev - (-gam / 2 + 1j))) < 1e-12


def test_dressed_ground_is_stationary():
    L, es, X, alg = dressed(0.8)
    rho = np.zeros((8, 8), complex)
    rho[0, 0] = 1
    assert np.max(np.abs(L.apply(rho))) < 1e-12
    assert liouvillian_residual(L, rho) < 1e-12


def test_superoperator_matches_apply():
    L, *_ = dressed(0.5, n_levels=5)
    rho = random_density(5, np.random.default_rng(0))
    np.testing.assert_allclose(L.matrix @ rho.reshape(-1, order="F"), L.apply(rho).reshape(-1, order="F"),
                               atol=1e-14)


@given(st.integers(0, 10 ** 6))
def test_trace_and_hermiticity_preserved(seed):
    L, *_ = dressed(0.7, n_levels=6)
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    rho = A + A.conj().T
    out = L.apply(rho)
    assert abs(np.trace(out)) < 1e-12
    assert np.max(np.abs(out - out.conj().T)) < 1e-12


@pytest.mark.parametrize("g", [0.2, 0.8])
def test_liouvillian_spectral_structure(g):
    L, *_ = dressed(g, n_levels=6)
    ev = L.spectrum()
    assert np.max(ev.real) < 1e-10
    assert np.sum(np.abs(ev) < 1e-10) == 1


def test_complete_positivity_witness():
    L, *_ = dressed(0.8, n_levels=5, gamma0=0.05)
    d = 5
    for t in (0.3, 5.0):
        P = sla.expm(L.matrix * t)
        choi = np.zeros((d * d, d * d), complex)
        for i in range(d):
            for j in range(d):
                E = np.zeros((d, d))
                E[i, j] = 1
                out = (P @ E.reshape(-1, order="F")).reshape(d, d, order="F")
                choi += np.kron(E, out)
        assert np.min(np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))) > -1e-8


def test_phenomenological_relaxes_to_bare_vacuum():
    space, H, alg = rabi(0.8, N=16)
    L = build_lindbladian("phenomenological", H, kappa=1 / 60, gamma=1 / 60)
    rho = steady_state(L)
    # the bare vacuum is not stationary once counter-rotating terms are present
    v = fock_state(space, [DOWN], [0])
    gs = eig_hermitian(H).vectors[:, 0]
    assert np.real(v.conj() @ rho @ v) < 1 - 1e-3
    assert np.real(gs.conj() @ rho @ gs) < 0.7
    # at g = 0 it is exactly |down, 0>
    space0, H0, _ = rabi(0.0, N=8)
    rho0 = steady_state(build_lindbladian("phenomenological", H0, kappa=0.1, gamma=0.1))
    v0 = fock_state(space0, [DOWN], [0])
    assert abs(np.real(v0.conj() @ rho0 @ v0) - 1) < 1e-10


def test_phenomenological_jump_labels():
    space, H, alg = rabi(0.1, N=4)
    L = build_lindbladian("phenomenological", H, kappa=0.2, gamma=0.05)
    by = {j.label: j for j in L.jumps}
    np.testing.assert_array_equal(by["cavity"].op, alg.a[0].matrix)
    np.testing.assert_array_equal(by["atom"].op, alg.sm[0].matrix)
    assert by["cavity"].rate == 0.2 and by["atom"].rate == 0.05


def test_unknown_kind():
    with pytest.raises(ValueError):
        build_lindbladian("thermal", np.eye(2))


def test_weak_bath_advisory():
    _, H, alg = rabi(0.3)
    es = eig_hermitian(H)
    with pytest.warns(UserWarning, match="10%"):
        build_lindbladian("dressed", es, [BathSpec(alg.x().matrix, gamma0=0.5)], n_levels=4)


def test_bath_densities():
    A = np.eye(2)
    assert BathSpec(A, "flat", 0.1).gamma(4.0) == 0.1
    assert abs(BathSpec(A, "sqrt", 0.1, 1.0).gamma(4.0) - 0.2) < 1e-15
    assert abs(BathSpec(A, "ohmic", 0.1, 2.0).gamma(4.0) - 0.2) < 1e-15
    assert BathSpec(A, "ohmic", 0.1).gamma(-1.0) == 0
    with pytest.raises(ValueError):
        BathSpec(A, "lorentz")


def test_lamb_shift_hook():
    L0, es, X, _ = dressed(0.3, n_levels=4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        L1 = build_lindbladian("dressed", es, [BathSpec(X, gamma0=0.01, lamb_shift=lambda w: 0.001 * w)],
                               n_levels=4)
    dH = L1.H_eff - L0.H_eff
    assert np.max(np.abs(dH - dH.conj().T)) < 1e-14
    assert np.max(np.abs(dH)) > 0


# --- steady states and propagation -----------------------------------------

@pytest.mark.parametrize("g", [0.3, 0.8, 1.2])
def test_dressed_steady_state_is_ground(g):
    L, es, X, _ = dressed(g)
    rho = steady_state(L)
    assert abs(np.real(rho[0, 0]) - 1) < 1e-10
    assert liouvillian_residual(L, rho) < 1e-10
    DensityMatrix(rho)


def test_steady_state_lu_route_agrees():
    space, H, alg = rabi(0.5, N=10)
    L = build_lindbladian("phenomenological", H, kappa=0.05, gamma=0.02)
    a = steady_state(L)
    b = steady_state(L, svd_max=10)
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_degenerate_steady_manifold():
    H = np.diag([0.0, 1.0, 2.0]).astype(complex)
    L = LindbladGenerator(H, [Jump(0.1, np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]], complex))])
    with pytest.raises(DegenerateSteadyStateError) as exc:
        steady_state(L)
    assert len(exc.value.modes) >= 2


def test_propagate_trace_and_decay():
    L, es, X, alg = dressed(0.8, gamma0=0.05)
    rho0 = np.zeros((8, 8), complex)
    rho0[3, 3] = 0.6
    rho0[5, 5] = 0.4
    rho0[3, 5] = rho0[5, 3] = 0.2
    t = np.linspace(0, 200, 41)
    traj = propagate(L, rho0, t)
    assert np.max(np.abs(np.einsum("tii->t", traj) - 1)) < 1e-10
    assert np.real(traj[-1, 0, 0]) > np.real(traj[0, 0, 0])
    np.testing.assert_allclose(traj[5], sla.expm(L.matrix * t[5]).dot(rho0.reshape(-1, order="F")).reshape(
        8, 8, order="F"), atol=1e-10)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([0.7, 0.7]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]))
    dm = DensityMatrix(np.diag([0.25, 0.75]).astype(complex))
    assert abs(dm.expect(SZ) + 0.5) < 1e-15


# --- photodetection -------------------------------------------------------

def test_xplus_at_zero_coupling_is_a():
    space = HilbertSpec(8, n_spins=0)
    alg = build_algebra(space)
    es = eig_hermitian(alg.num())
    np.testing.assert_allclose(xplus_operator(es, alg.x().matrix), alg.a[0].matrix, atol=1e-14)


@pytest.mark.parametrize("g", [0.1, 0.5, 1.0])
def test_xplus_structure_and_dark_ground(g):
    _, H, alg = rabi(g)
    es = eig_hermitian(H)
    X = (alg.a[0] + alg.adag[0]).matrix
    Xp = xplus_operator(es, X, "dressed")
    assert np.all(np.tril(Xp) == 0)
    diag = np.diag(np.diag(es.to_eigenbasis(X)))
    np.testing.assert_allclose(Xp + Xp.conj().T + diag, es.to_eigenbasis(X), atol=1e-12)
    gs = es.vectors[:, 0]
    rho = np.outer(gs, gs.conj())
    assert photon_flux(rho, xplus_operator(es, X)) < 1e-12
    assert np.real(gs.conj() @ alg.num().matrix @ gs) > 1e-4


def test_detector_flat_response():
    _, H, alg = rabi(0.4, N=20)
    es = eig_hermitian(H)
    X = alg.x().matrix
    np.testing.assert_allclose(detector_operator(es, X, 0.3), np.sqrt(2 * np.pi) * 0.3 * xplus_operator(es, X),
                               atol=1e-14)
    O = detector_operator(es, X, lambda w: 0.0 if w > 1.5 else 1.0, "dressed")
    dE = es.values[None, :] - es.values[:, None]
    assert np.all(O[dE > 1.5 + 1e-9] == 0)


def test_dark_state_errors():
    L, es, X, _ = dressed(0.5)
    rho = steady_state(L)
    Op = xplus_operator(es.truncate(8), X, "dressed")
    with pytest.raises(DarkStateError):
        correlation_g2(L, rho, Op, [0.0, 1.0])
    with pytest.raises(DarkStateError):
        emission_spectrum(L, rho, Op, [1.0])
    with pytest.raises(DarkStateError):
        g2_zero(rho, Op)


def coherent_cavity(N=15, kappa=0.1, F=0.05, detuning=0.0):
    """Driven cavity in the drive frame: H = det a^+a + (F/2)(a + a^+)."""
    alg = build_algebra(HilbertSpec(N, n_spins=0))
    a = alg.a[0].matrix
    H = detuning * alg.num().matrix + 0.5 * F * (a + a.conj().T)
    return LindbladGenerator(H, [Jump(kappa, a)]), a


def test_linear_cavity_coherent_statistics():
    L, a = coherent_cavity()
    rho = steady_state(L)
    alpha = -1j * 0.5 * 0.05 / (0.1 / 2)
    assert abs(np.trace(a @ rho) - alpha) < 1e-8
    g2 = correlation_g2(L, rho, a, np.linspace(0, 50, 11))
    assert np.max(np.abs(g2 - 1)) < 1e-6


def test_g2_zero_consistent_with_regression():
    L, a = coherent_cavity(N=10, F=0.3)
    Lk = LindbladGenerator(L.H_eff + 0.2 * (a.conj().T @ a.conj().T @ a @ a), L.jumps)
    rho = steady_state(Lk)
    assert abs(correlation_g2(Lk, rho, a, [0.0])[0] - g2_zero(rho, a)) < 1e-12
    assert g2_zero(rho, a) < 1
    assert abs(correlation_g2(Lk, rho, a, [400.0])[0] - 1) < 1e-6


def test_emission_spectrum_sum_rule():
    # resonance fluorescence of a driven two-level system (rotating frame)
    gam, F = 1.0, 8.0
    H = 0.5 * F * SX
    L = LindbladGenerator(H, [Jump(gam, SM)])
    rho = steady_state(L)
    w = np.linspace(-400, 400, 400001)
    sp = emission_spectrum(L, rho, SM, w)
    assert np.min(sp.S) > -1e-10
    n = photon_flux(rho, SM)
    total = np.trapezoid(sp.S, w) / np.pi
    assert abs(total - (n - sp.elastic)) < 2e-3
    assert abs(sp.elastic - abs(np.trace(SM @ rho)) ** 2) < 1e-12
    # Mollow sidebands at +-F
    side = sp.S[np.argmin(np.abs(w - F))]
    mid = sp.S[np.argmin(np.abs(w - 0.6 * F))]
    assert side > mid


def test_emission_peak_at_positive_frequency():
    # free decaying TLS started in a weakly driven steady state: line centre at +w0
    w0 = 3.0
    H = 0.5 * w0 * SZ
    L = LindbladGenerator(H, [Jump(0.05, SM), Jump(0.01, SM.T)])
    rho = steady_state(L)
    w = np.linspace(-5, 5, 2001)
    sp = emission_spectrum(L, rho, SM, w)
    assert abs(w[np.argmax(sp.S)] - w0) < 0.01


# --- Hopfield response ----------------------------------------------------

def test_hopfield_empty_cavity_lorentzian():
    kc = 0.05
    w = np.array([1.0, 1.0 + kc / 2, 1.0 - kc / 2, 1.3])
    r = hopfield_langevin_response(HopfieldParams(1.0, 1.4, 0.0), kc, 0.02, w)
    np.testing.assert_allclose(r.transmission[:3], [1.0, 0.5, 0.5], atol=1e-12)
    lor = (kc / 2) ** 2 / ((w - 1) ** 2 + (kc / 2) ** 2)
    np.testing.assert_allclose(r.transmission, lor, atol=1e-12)


def test_hopfield_peaks_at_normal_modes():
    p = HopfieldParams(1.0, 1.0, 0.1)
    kc = 0.01
    modes = hopfield_normal_modes(p)
    w = np.linspace(0.7, 1.3, 60001)
    r = hopfield_langevin_response(p, kc, 0.0, w)
    T = r.transmission
    peaks = w[1:-1][(T[1:-1] > T[:-2]) & (T[1:-1] > T[2:])]
    assert len(peaks) == 2
    np.testing.assert_allclose(np.sort(peaks), modes, atol=kc / 2)


def test_hopfield_flux_unitarity():
    p = HopfieldParams(1.0, 1.1, 0.3, 0.09)
    r = hopfield_langevin_response(p, 0.05, 0.03, np.linspace(0.2, 2.0, 37))
    assert flux_unitarity_defect(r.U) < 1e-8


def test_hopfield_diamagnetic_asymmetry():
    g = 0.2
    modes = hopfield_normal_modes(HopfieldParams(1.0, 1.0, g, g * g))
    # with D = g^2/omega_X at resonance: omega_pm = sqrt(omega^2 + g^2) +- g
    np.testing.assert_allclose(modes, [np.sqrt(1 + g * g) - g, np.sqrt(1 + g * g) + g], atol=1e-12)
    upper, lower = modes[1] - 1.0, 1.0 - modes[0]
    assert upper - lower > 0.03


def test_hopfield_instability():
    with pytest.raises(InstabilityError, match="g=0.6"):
        hopfield_normal_modes(HopfieldParams(1.0, 1.0, 0.6, 0.0))
    # the diamagnetic term restores stability
    assert len(hopfield_normal_modes(HopfieldParams(1.0, 1.0, 0.6, 0.36))) == 2
