import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from perpetua import constant as C
from perpetua import diagnostics, laws
from perpetua.errors import BoundaryWarning, ConditioningError, DegeneracyError, InvalidInput

JORDAN = np.array([[1.0, 1.0], [0.0, 1.0]])


def rot(th):
    return np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])


def direct_power(M, t):
    P = np.eye(M.shape[0])
    for _ in range(t):
        P = P @ M
    return P


# minimal polynomial


def test_minpoly_identity():
    mp = C.minimal_polynomial(np.eye(2))
    assert mp.degree == 1
    assert np.allclose(mp.coefficients, [1, -1])


def test_minpoly_diagonal():
    mp = C.minimal_polynomial(np.diag([2.0, 3.0]))
    assert mp.multiplicities == (1, 1)
    assert np.allclose(mp.roots, [3, 2])
    assert np.allclose(mp.coefficients, [1, -5, 6])


def test_minpoly_jordan_block():
    mp = C.minimal_polynomial(JORDAN)
    assert mp.multiplicities == (2,)
    assert np.allclose(mp.coefficients, [1, -2, 1])
    # (M - I)^2 = 0 exactly
    N = JORDAN - np.eye(2)
    assert np.array_equal(N @ N, np.zeros((2, 2)))


def test_minpoly_repeated_semisimple():
    # eigenvalue 2 with algebraic multiplicity 2, but diagonalizable
    mp = C.minimal_polynomial(np.diag([2.0, 2.0, 5.0]))
    assert mp.degree == 2
    assert sorted(mp.multiplicities) == [1, 1]


def test_minpoly_nilpotent():
    N = np.diag([1.0, 1.0], k=1)
    mp = C.minimal_polynomial(N)
    assert mp.multiplicities == (3,) and abs(mp.roots[0]) < 1e-12


def test_minpoly_ambiguous_raises():
    # a rotated 3x3 Jordan block: computed eigenvalues scatter by ~eps^(1/3)
    Q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))
    M = Q @ (np.eye(3) + np.diag([1.0, 1.0], k=1)) @ Q.T
    with pytest.raises(DegeneracyError) as exc:
        C.minimal_polynomial(M)
    assert len(exc.value.candidates) == 2


def test_minpoly_rejects_large_dimension():
    with pytest.raises(InvalidInput):
        C.minimal_polynomial(np.eye(33))


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_minpoly_residual(d, seed):
    M = np.random.default_rng(seed).uniform(-1, 1, size=(d, d))
    mp = C.minimal_polynomial(M)
    assert mp.degree <= d
    P = np.eye(d, dtype=complex)
    for c in mp.coefficients[1:]:
        P = P @ M + c * np.eye(d)
    assert np.linalg.norm(P, 2) < 1e-8 * max(1.0, np.linalg.norm(M, 2)) ** mp.degree


# components


def test_components_diagonal():
    dec = C.spectral_components(np.diag([2.0, 3.0]))
    assert np.allclose(dec.eigenvalues, [3, 2])
    assert np.allclose(dec.components[0][0], np.diag([0.0, 1.0]), atol=1e-12)
    assert np.allclose(dec.components[1][0], np.diag([1.0, 0.0]), atol=1e-12)


def test_components_identity():
    dec = C.spectral_components(np.eye(3))
    assert dec.multiplicities == (1,)
    assert np.allclose(dec.components[0][0], np.eye(3))


def test_components_jordan():
    dec = C.spectral_components(JORDAN)
    assert dec.multiplicities == (2,)
    Z0, Z1 = dec.components[0]
    assert np.allclose(Z0, np.eye(2), atol=1e-12)
    assert np.allclose(Z1, [[0, 1], [0, 0]], atol=1e-12)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_component_invariants(d, seed):
    M = np.random.default_rng(seed).uniform(-1, 1, size=(d, d))
    dec = C.spectral_components(M)
    assert dec.degree <= d
    assert dec.identity_residual < 1e-8
    assert dec.matrix_residual < 1e-8
    assert np.isfinite(dec.gram_condition) and dec.gram_condition < 1e12
    mods = np.abs(dec.eigenvalues)
    assert np.all(np.diff(mods) <= 1e-12)


def test_conditioning_error():
    # distinct but nearly colliding eigenvalues make the interpolation system singular
    M = np.diag([1.0, 1.0 + 2e-5, 1.0 + 4e-5, 1.0 + 6e-5])
    with pytest.raises((ConditioningError, DegeneracyError)):
        C.spectral_components(M)


# powers


def test_power_zero_is_identity(rng):
    dec = C.spectral_components(rng.normal(size=(4, 4)))
    assert np.allclose(C.power_via_spectral(dec, 0), np.eye(4), atol=1e-8)


def test_power_diagonal():
    dec = C.spectral_components(np.diag([2.0, 3.0]))
    assert np.allclose(C.power_via_spectral(dec, 5), np.diag([32.0, 243.0]), rtol=1e-12)


def test_power_rotation_complex_path():
    M = 0.9 * rot(math.pi / 4)
    dec = C.spectral_components(M)
    assert np.iscomplexobj(dec.eigenvalues) and abs(dec.eigenvalues[0].imag) > 0.5
    assert np.allclose(C.power_via_spectral(dec, 8), 0.9**8 * np.eye(2), atol=1e-12)


def test_power_jordan():
    dec = C.spectral_components(JORDAN)
    for t in range(10):
        assert np.allclose(C.power_via_spectral(dec, t), [[1, t], [0, 1]], atol=1e-10)


def test_power_rejects_negative():
    dec = C.spectral_components(np.eye(2))
    with pytest.raises(InvalidInput):
        C.power_via_spectral(dec, -1)


def test_reconstruction_hundred_random():
    g = np.random.default_rng(17)
    for _ in range(100):
        d = int(g.integers(1, 7))
        M = g.uniform(-1, 1, size=(d, d))
        dec = C.spectral_components(M)
        for t in range(21):
            ref = direct_power(M, t)
            got = C.power_via_spectral(dec, t)
            assert np.linalg.norm(got - ref, 2) <= 1e-7 * max(np.linalg.norm(ref, 2), 1e-300) + 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_reconstruction_to_fifty(seed):
    g = np.random.default_rng(100 + seed)
    M = g.uniform(-1, 1, size=(4, 4))
    dec = C.spectral_components(M)
    for t in (30, 40, 50):
        ref = direct_power(M, t)
        assert np.linalg.norm(C.power_via_spectral(dec, t) - ref, 2) <= 1e-8 * np.linalg.norm(ref, 2)


def test_power_lower_bound(rng):
    for _ in range(20):
        M = rng.uniform(-1, 1, size=(3, 3))
        rho = C.spectral_radius(M)
        for t in range(1, 30):
            assert np.linalg.norm(direct_power(M, t), 2) >= rho**t * (1 - 1e-10)


# C0


def test_c0_contracting():
    holds, radius = C.c0_exact(np.diag([0.5, 0.25]))
    assert holds and radius == 0.5


def test_c0_unit_eigenvalue_warns():
    with pytest.warns(BoundaryWarning):
        dec = C.c0_exact(np.diag([0.5, 1.0]))
    assert not dec and dec.radius == 1.0 and dec.boundary


def test_c0_expanding():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        holds, radius = C.c0_exact(np.diag([0.5, 2.0]))
    assert not holds and radius == 2.0


@pytest.mark.parametrize("seed", range(6))
def test_c0_sign_matches_lyapunov(seed):
    g = np.random.default_rng(seed)
    M = g.uniform(-1, 1, size=(3, 3))
    M *= (0.6 if seed % 2 else 1.4) / C.spectral_radius(M)
    holds, radius = C.c0_exact(M)
    est = diagnostics.estimate_lyapunov(laws.law_constant(M, np.ones(3)), 1000, 2, 0)
    assert (est.lambda_hat + 3 * est.stderr < 0) == holds
    assert np.sign(est.lambda_hat) == np.sign(math.log(radius))
