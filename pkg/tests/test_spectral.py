import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlparity import spectral
from dlparity.errors import CapacityError, ConvergenceError, DomainError, VerificationError
from dlparity.zp_core import GroupSpec, primes_between

PRIMES_101 = primes_between(3, 101)


def test_phi_small_cases_by_hand():
    # phi(x, y) = (-1)^x (-1)^(yx mod 3): x=1 -> [(-1)(-1), (-1)(+1)], x=2 -> [(+1)(+1), (+1)(-1)]
    np.testing.assert_array_equal(spectral.build_phi(3), [[1, -1], [1, -1]])
    np.testing.assert_array_equal(spectral.build_phi_prime(3), [[-1, 1], [1, -1]])
    np.testing.assert_array_equal(spectral.build_phi_prime(5)[0], [-1, 1, -1, 1])


@pytest.mark.parametrize("p", primes_between(3, 97))
def test_phi_rows_sum_to_zero_and_columns_match_enumeration(p):
    phi = spectral.build_phi(p)
    assert np.all(phi.sum(axis=1) == 0)
    xs = np.arange(1, p)
    for y in range(1, p):
        col = sum((-1) ** int(x) * (-1) ** int(y * x % p) for x in xs)
        assert phi[:, y - 1].sum() == col


def test_column_sums_are_not_identically_zero():
    assert spectral.build_phi(3)[:, 0].sum() == 2


@pytest.mark.parametrize("p", primes_between(3, 503)[::7])
def test_phi_prime_symmetric_and_hadamard(p):
    pp = spectral.build_phi_prime(p)
    assert np.array_equal(pp, pp.T)
    assert set(np.unique(pp)) == {-1.0, 1.0}
    xi = spectral.row_signs(p)
    assert np.array_equal(spectral.build_phi(p), xi[:, None] * pp)


def test_dense_limit_enforced():
    with pytest.raises(CapacityError):
        spectral.build_phi(101, dense_limit=97)
    assert isinstance(spectral.sign_operator(101, "phi", dense_limit=97), spectral.SignOperator)


def test_power_iteration_examples():
    assert spectral.spectral_norm_power(spectral.build_phi_prime(3)) == pytest.approx(2.0, rel=1e-12)
    assert spectral.spectral_norm_power(np.ones((7, 7))) == pytest.approx(7.0, rel=1e-12)
    with pytest.raises(DomainError):
        spectral.spectral_norm_power(np.zeros((3, 3)))
    with pytest.raises(DomainError):
        spectral.spectral_norm_power(np.eye(2), tol=0)


def test_power_iteration_reports_non_convergence():
    m = np.diag([1.0, 0.999999])
    with pytest.raises(ConvergenceError) as info:
        spectral.spectral_norm_power(m, max_iters=3)
    assert info.value.last_iterate.shape == (2,)
    assert info.value.residual >= 0


@given(st.integers(2, 12), st.integers(2, 12), st.integers(0, 2**32 - 1))
@settings(max_examples=60)
def test_jacobi_matches_numpy_svd(r, c, seed):
    m = np.random.default_rng(seed).standard_normal((r, c))
    ours = spectral.jacobi_singular_values(m)
    ref = np.linalg.svd(m, compute_uv=False)
    k = min(r, c)
    np.testing.assert_allclose(ours[:k], ref, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("p", PRIMES_101)
def test_power_iteration_against_jacobi_oracle(p):
    for build in (spectral.build_phi, spectral.build_phi_prime):
        m = build(p)
        top = spectral.jacobi_singular_values(m)[0]
        assert abs(spectral.spectral_norm_power(m) - top) / top <= 1e-8


@pytest.mark.parametrize("p", [3, 11, 29, 53, 101])
def test_spectra_of_phi_and_phi_prime_agree(p):
    a = spectral.jacobi_singular_values(spectral.build_phi(p))
    b = spectral.jacobi_singular_values(spectral.build_phi_prime(p))
    np.testing.assert_allclose(a, b, atol=1e-8)


@pytest.mark.parametrize("p", [5003, 5011])
def test_matrix_free_operator_matches_dense(p):
    g = GroupSpec(p)
    rng = np.random.default_rng(p)
    v = rng.standard_normal(p - 1)
    for kind, build in (("phi", spectral.build_phi), ("phi_prime", spectral.build_phi_prime)):
        op = spectral.SignOperator(g, kind)
        dense = build(g, dense_limit=10**4)
        np.testing.assert_allclose(op.matvec(v), dense @ v, atol=1e-9)
        np.testing.assert_allclose(op.rmatvec(v), dense.T @ v, atol=1e-9)


def direct_fourier(p, ell):
    w = cmath.exp(2j * math.pi / p)
    return sum(w ** (-x * ell) * (-1) ** x for x in range(p)) / math.sqrt(p)


@pytest.mark.parametrize("p", PRIMES_101)
def test_fourier_coefficient_against_direct_sum(p):
    assert spectral.fourier_coefficient(p, 0) == pytest.approx(1 / math.sqrt(p), abs=1e-15)
    for ell in range(p):
        assert abs(spectral.fourier_coefficient(p, ell) - direct_fourier(p, ell)) <= 1e-12


@pytest.mark.parametrize("p", PRIMES_101)
def test_decomposition_and_reconstruction(p):
    assert spectral.decomposition_residual(p) <= 1e-10
    rebuilt = spectral.reconstruct_phi_prime(p)
    assert np.max(np.abs(rebuilt.imag)) <= 1e-9
    assert np.max(np.abs(rebuilt.real - spectral.build_phi_prime(p))) <= 1e-9


def test_reconstruction_raises_on_impossible_tolerance():
    with pytest.raises(VerificationError) as info:
        spectral.reconstruct_phi_prime(101, tol=1e-30)
    assert info.value.max_deviation > 0


@pytest.mark.parametrize("p", [5, 31, 101, 211])
def test_omega_submatrix_norms(p):
    for ell in range(1, p, max(1, p // 10)):
        om = spectral.omega_submatrix(p, ell)
        assert spectral.spectral_norm_power(om) <= math.sqrt(p) * (1 + 1e-9)
        # gram identity pI - 11^T behind the norm
        gram = om.conj().T @ om
        np.testing.assert_allclose(gram, p * np.eye(p - 1) - 1, atol=1e-8)
    # the trivial character is the exception: all-ones block
    assert spectral.spectral_norm_power(spectral.omega_submatrix(p, 0)) == pytest.approx(p - 1)


def test_harmonic_sum_closed_forms():
    assert spectral.harmonic_sum(3) == pytest.approx(5 / 3, abs=1e-14)
    for p in (7, 101, 997):
        closed = sum(2 / p / abs(2 * math.cos(math.pi * l / p)) for l in range(p))
        assert spectral.harmonic_sum(p) == pytest.approx(closed, rel=1e-12)


def test_harmonic_ratio_bounded_to_5000():
    ratios = [spectral.harmonic_sum(p) / math.log(p) for p in primes_between(3, 5000)]
    assert max(ratios) == ratios[0] and max(ratios[-50:]) < 0.8


def test_spectral_record_keys():
    rec = spectral.spectral_record(11)
    assert set(rec) == {"p", "sigma1_phi", "sigma1_phi_prime", "sigma_ratio",
                        "harmonic_sum", "harmonic_ratio"}
    assert rec["sigma1_phi"] == pytest.approx(rec["sigma1_phi_prime"], rel=1e-10)


@given(st.integers(2, 10), st.integers(1, 3), st.integers(0, 2**32 - 1))
@settings(max_examples=40)
def test_jacobi_on_rank_deficient_square(n, rank, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, rank)) @ rng.standard_normal((rank, n))
    np.testing.assert_allclose(
        spectral.jacobi_singular_values(m), np.linalg.svd(m, compute_uv=False), atol=1e-9
    )


def test_block_iteration_resolves_clustered_values():
    # sigma_1 and sigma_3 differ by 1.5e-5 relative here; a single vector stalls
    m = spectral.build_phi_prime(1907)
    ref = np.linalg.svd(m, compute_uv=False)[0]
    assert abs(spectral.spectral_norm_power(m, block=8) - ref) / ref <= 1e-10
    with pytest.raises(ConvergenceError):
        spectral.spectral_norm_power(m, max_iters=2000)


@given(st.integers(2, 9), st.integers(1, 4), st.integers(0, 2**32 - 1))
@settings(max_examples=40)
def test_block_and_single_vector_agree(n, block, seed):
    m = np.random.default_rng(seed).standard_normal((n, n))
    ref = np.linalg.svd(m, compute_uv=False)[0]
    assert spectral.spectral_norm_power(m, block=block, max_iters=10**6) == pytest.approx(ref, rel=1e-8)


def test_matrix_free_block_products():
    op = spectral.SignOperator(211, "phi")
    v = np.random.default_rng(0).standard_normal((210, 3))
    dense = spectral.build_phi(211)
    np.testing.assert_allclose(op.matvec(v), dense @ v, atol=1e-10)
    np.testing.assert_allclose(op.rmatvec(v), dense.T @ v, atol=1e-10)
