import warnings

import numpy as np
import pytest

from usqed.qops import HilbertSpec, JCParams, RabiParams, build_hamiltonian, parity_operator
from usqed.spectra import (ConvergenceError, SeriesConvergenceError, bargmann_residual, bloch_siegert_spectrum,
                           braak_coefficients, braak_g, braak_series, braak_spectrum, bs_effective_hamiltonian,
                           exact_spectrum, grwa_closed_form, grwa_spectrum, jc_numeric, jc_spectrum,
                           opposite_parity_crossings, spectrum_error)

# lowest eight levels at omega=1, Omega=0.4, g=0.7 from cutoff-converged diagonalisation
REF_LEVELS = np.array([-0.583597993009, -0.436136450622, 0.440570707632, 0.586849064560,
                       1.433820316591, 1.581021799173, 2.482771837231, 2.534494607201])
REF_PARITY = np.array([-1, 1, -1, 1, 1, -1, -1, 1])


def free_levels(w, W, n):
    lv = sorted([k * w + s * W / 2 for k in range(n) for s in (-1, 1)])
    return np.array(lv[:n])


def test_exact_decoupled():
    cs = exact_spectrum(RabiParams(1.0, 1.0, 0.0), n_levels=8)
    np.testing.assert_allclose(cs.levels, free_levels(1.0, 1.0, 8), atol=1e-10)


def test_exact_displaced_oscillator():
    cs = exact_spectrum(RabiParams(1.0, 0.0, 0.5), n_levels=8)
    expect = np.repeat(np.arange(4) - 0.25, 2)
    np.testing.assert_allclose(cs.levels, expect, atol=1e-10)


def test_exact_reference_levels():
    cs = exact_spectrum(RabiParams(1.0, 0.4, 0.7), tol=1e-10, n_levels=8)
    np.testing.assert_allclose(cs.levels, REF_LEVELS, atol=1e-10)
    np.testing.assert_array_equal(cs.parity, REF_PARITY)
    assert cs.cutoff_history[-1][1] < 1e-10


def test_exact_reports_cap():
    with pytest.raises(ConvergenceError):
        exact_spectrum(RabiParams(1.0, 1.0, 3.0), tol=1e-12, N_start=10, N_max=20)


@pytest.mark.parametrize("g", [0.2, 0.9, 1.6])
def test_eigenvectors_have_definite_parity(g):
    cs = exact_spectrum(RabiParams(1.0, 0.7, g), n_levels=8)
    assert np.max(np.abs(np.abs(cs.eigen.parity[:8]) - 1)) < 1e-8


def test_jc_closed_form():
    p = RabiParams(1.0, 0.8, 0.3)
    ana = jc_spectrum(p, n_max=20).levels[:20]
    num = jc_numeric(p, 40).values[:20]
    np.testing.assert_allclose(ana, num, atol=1e-10)


def test_jc_resonant_doublet_and_free_limit():
    sp = jc_spectrum(RabiParams(1.0, 1.0, 0.13))
    assert abs(sp.levels[2] - sp.levels[1] - 0.26) < 1e-14
    np.testing.assert_allclose(jc_spectrum(RabiParams(1.0, 1.0, 0.0)).levels[:7], free_levels(1, 1, 7))


def test_jc_states_diagonalise_jc_hamiltonian():
    p = RabiParams(1.0, 0.8, 0.3)
    space = HilbertSpec(20)
    sp = jc_spectrum(p, n_max=10, space=space)
    H = build_hamiltonian(JCParams(1.0, 0.8, 0.3), space).matrix
    for E, v in zip(sp.levels, sp.states.T):
        assert np.max(np.abs(H @ v - E * v)) < 1e-12


def test_bloch_siegert_limits():
    p0 = RabiParams(1.0, 0.9, 0.0)
    np.testing.assert_allclose(bloch_siegert_spectrum(p0).levels, jc_spectrum(p0).levels)
    p = RabiParams(1.0, 0.9, 0.2)
    assert abs(bloch_siegert_spectrum(p).levels[0] - (-0.45 - 0.04 / 1.9)) < 1e-14


def test_bloch_siegert_block_structure():
    p = RabiParams(1.0, 1.0, 0.1)
    space = HilbertSpec(12)
    H = bs_effective_hamiltonian(p, space)
    sp = bloch_siegert_spectrum(p, n_max=8)
    np.testing.assert_allclose(np.linalg.eigvalsh(H)[:10], sp.levels[:10], atol=1e-12)


def test_bloch_siegert_beats_jc():
    p = RabiParams(1.0, 1.0, 0.1)
    ex = exact_spectrum(p, n_levels=6).levels
    bs = spectrum_error(bloch_siegert_spectrum(p).levels, ex, 6)
    jc = spectrum_error(jc_spectrum(p).levels, ex, 6)
    assert bs < jc


def test_bloch_siegert_lab_states_improve_overlap():
    p = RabiParams(1.0, 1.0, 0.1)
    space = HilbertSpec(30)
    es = exact_spectrum(p, n_levels=4).eigen
    N = es.vectors.shape[0] // 2
    ref = es.vectors[:, 0].reshape(2, N)[:, :30].reshape(-1)
    sp_bs = bloch_siegert_spectrum(p, n_max=10, space=space)
    sp_jc = jc_spectrum(p, n_max=10, space=space)
    assert abs(np.vdot(ref, sp_bs.states[:, 0])) > abs(np.vdot(ref, sp_jc.states[:, 0]))


def test_bloch_siegert_warns_outside_regime():
    with pytest.warns(UserWarning):
        bloch_siegert_spectrum(RabiParams(1.0, 1.0, 0.5))


def test_grwa_exact_at_zero_splitting():
    g = 0.6
    lv = grwa_spectrum(RabiParams(1.0, 0.0, g), n_levels=10).levels
    np.testing.assert_allclose(lv, np.repeat(np.arange(5) - g * g, 2), atol=1e-10)


def test_grwa_free_limit():
    lv = grwa_spectrum(RabiParams(1.0, 1.0, 0.0), n_levels=9).levels
    np.testing.assert_allclose(lv, free_levels(1, 1, 9), atol=1e-12)


@pytest.mark.parametrize("g", [0.1, 0.4, 0.8, 1.2])
def test_grwa_closed_form_matches_numeric(g):
    p = RabiParams(1.0, 0.7, g)
    num = grwa_spectrum(p, n_levels=12).levels
    ana = grwa_closed_form(p, n_max=12).levels[:12]
    np.testing.assert_allclose(num, ana, atol=1e-10)


def test_grwa_beats_jc_at_strong_coupling():
    p = RabiParams(1.0, 1.0, 0.8)
    ex = exact_spectrum(p, n_levels=4).levels
    assert spectrum_error(grwa_spectrum(p, n_levels=4).levels, ex, 4) < spectrum_error(jc_spectrum(p).levels, ex, 4)


# --- Braak G-functions ----------------------------------------------------

def test_recursion_satisfies_bargmann_equations():
    p = RabiParams(1.0, 0.4, 0.7)
    for x in (0.3, 1.7, 2.45):
        for z in (0.0, 0.3, -0.9, 0.5j):
            assert bargmann_residual(x, p, z) < 1e-10


def test_recursion_against_direct_substitution():
    # (n+1) K_{n+1} = f_n K_n - K_{n-1} checked on the first coefficients by hand
    g, delta, x = 0.7, 0.2, 1.3
    K = braak_coefficients(x, g, delta, 3)

    def f(n):
        return 2 * g + (n - x + delta ** 2 / (x - n)) / (2 * g)

    assert K[0] == 1
    assert abs(K[1] - f(0)) < 1e-15
    assert abs(K[2] - (f(1) * K[1] - 1) / 2) < 1e-15
    assert abs(K[3] - (f(2) * K[2] - K[1]) / 3) < 1e-15


def test_series_tail_is_small():
    s = braak_series(1.3, RabiParams(1.0, 0.4, 0.7))
    terms = np.abs(s.coeffs * 0.7 ** np.arange(s.order + 1))
    assert terms[-1] < 1e-12 * terms.sum()


def test_series_cap():
    with pytest.raises(SeriesConvergenceError):
        braak_series(0.3, RabiParams(1.0, 0.4, 0.7), max_order=4)


def test_poles_at_integers():
    p = RabiParams(1.0, 0.4, 0.7)
    near = [abs(braak_g(n + 1e-7, p)[0]) for n in (1, 2)]
    far = [abs(braak_g(n + 0.5, p)[0]) for n in (1, 2)]
    assert all(a > 1e4 * b for a, b in zip(near, far))


def test_braak_reproduces_reference():
    bs = braak_spectrum(RabiParams(1.0, 0.4, 0.7), REF_LEVELS[-1] + 0.05)
    np.testing.assert_allclose(bs.levels[:8], REF_LEVELS, atol=1e-6)
    np.testing.assert_array_equal(bs.parity[:8], REF_PARITY)


@pytest.mark.parametrize("g", [0.3, 0.7, 1.2])
@pytest.mark.parametrize("W", [0.4, 1.0])
def test_braak_equals_exact(g, W):
    p = RabiParams(1.0, W, g)
    ex = exact_spectrum(p, n_levels=6)
    bs = braak_spectrum(p, ex.levels[-1] + 0.02)
    assert len(bs.levels) == 6
    np.testing.assert_allclose(bs.levels, ex.levels, atol=1e-6)
    np.testing.assert_array_equal(bs.parity, ex.parity)


def test_braak_zero_count_matches_exact():
    p = RabiParams(1.0, 1.0, 0.5)
    E_max = 3.3
    bs = braak_spectrum(p, E_max)
    ex = exact_spectrum(p, n_levels=14).levels
    assert len(bs.levels) == int(np.sum(ex < E_max))


def test_braak_rejects_zero_coupling():
    with pytest.raises(ValueError):
        braak_spectrum(RabiParams(1.0, 1.0, 0.0), 2.0)


def test_parity_crossing_detection():
    out = opposite_parity_crossings(1.0, 1.0, np.linspace(0.2, 1.2, 21), n_levels=4, cutoff=50)
    assert out
    g0, k = out[0]
    assert 0.2 < g0 <= 1.2


def test_method_ladder_small_coupling():
    for g in (0.02, 0.05, 0.1):
        p = RabiParams(1.0, 1.0, g)
        ex = exact_spectrum(p, n_levels=4).levels
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            bs = spectrum_error(bloch_siegert_spectrum(p).levels, ex, 4)
        assert bs <= spectrum_error(jc_spectrum(p).levels, ex, 4)


def test_parity_operator_matches_labels():
    p = RabiParams(1.0, 0.4, 0.7)
    space = HilbertSpec(60)
    es = exact_spectrum(p, n_levels=4).eigen
    N = es.vectors.shape[0] // 2
    P = parity_operator(HilbertSpec(N)).matrix
    for k in range(4):
        v = es.vectors[:, k]
        assert abs(np.real(v.conj() @ P @ v) - REF_PARITY[k]) < 1e-8
    assert space.dim == 120
