"""Frame potentials, Welch tests, twirls, TPE distances and the no-go residual."""

import math
from functools import lru_cache

import numpy as np
import pytest
from scipy.integrate import quad

from quditdesigns.errors import ResourceLimitError
from quditdesigns.groups import clifford_group, cyclic_group, pauli_group, sl2f5_group
from quditdesigns.linalg import (
    RandomSource,
    conjugation_superop,
    haar_unitaries,
    kron_power,
    vec,
)
from quditdesigns.metrics import (
    MomentOperator,
    WeightedStateEnsemble,
    WeightedUnitaryEnsemble,
    best_weighting_residual,
    cardinality_bounds,
    ensemble_moment_operator,
    frame_potential,
    frame_potential_pairwise,
    haar_reference_fractional,
    haar_reference_integer,
    haar_trace_moment_mc,
    haar_twirl,
    irrep_space_dimension,
    ks_critical_value,
    permutation_operator,
    spacing_cdf,
    spacing_density,
    spacing_density_test,
    symmetric_projector,
    tpe_eta,
    welch_lhs,
    welch_rhs,
)


@lru_cache(maxsize=None)
def _clifford(d):
    return clifford_group(d)


# ---------------------------------------------------------------------------
# Welch test


def test_welch_lhs_single_repeated_state():
    psi = np.array([1.0, 0.0], dtype=complex)
    ens = WeightedStateEnsemble(2, np.array([psi, psi]), np.array([0.5, 0.5]))
    assert abs(welch_lhs(ens, 2) - 1.0) < 1e-14


def test_welch_lhs_orthonormal_basis_t1():
    for d in (2, 5):
        ens = WeightedStateEnsemble.uniform(np.eye(d, dtype=complex))
        assert abs(welch_lhs(ens, 1) - 1.0 / d) < 1e-14


def test_welch_rhs_integer_values():
    assert abs(welch_rhs(2, 2) - 1.0 / 3.0) < 1e-14
    assert abs(welch_rhs(3, 3) - 1.0 / 10.0) < 1e-14
    assert abs(welch_rhs(6, 2) - 1.0 / 21.0) < 1e-14


def test_welch_rhs_fractional_beta_oracle():
    # Gamma form vs direct quadrature of t*B(t, d)
    d, t = 4, 1.5
    beta, _ = quad(lambda r: r ** (t - 1) * (1 - r) ** (d - 1), 0, 1)
    assert abs(welch_rhs(d, t) - t * beta) < 1e-12


def test_welch_requires_positive_t():
    ens = WeightedStateEnsemble.uniform(np.eye(2, dtype=complex))
    with pytest.raises(ValueError):
        welch_lhs(ens, 0.0)
    with pytest.raises(ValueError):
        welch_rhs(2, -1.0)


# ---------------------------------------------------------------------------
# frame potentials and Haar references


def test_frame_potential_identity_ensemble():
    ens = WeightedUnitaryEnsemble.uniform(np.eye(3, dtype=complex)[None])
    for t in (1, 2, 3):
        assert abs(frame_potential(ens, t) - 3.0 ** (2 * t)) < 1e-9


def test_qubit_clifford_frame_potentials():
    g = _clifford(2)
    assert abs(frame_potential(g, 1) - 1.0) < 1e-9
    assert abs(frame_potential(g, 2) - 2.0) < 1e-9
    # exact sum over the enumerated group: the Haar value at t=3, d=2 is the
    # Catalan number C_3 = 5 (the group is a 3-design; t! applies only for t <= d)
    assert abs(frame_potential(g, 3) - 5.0) < 1e-9


def test_group_and_pairwise_forms_agree():
    g = _clifford(2)
    ens = WeightedUnitaryEnsemble.from_group(g)
    assert abs(frame_potential(g, 2) - frame_potential_pairwise(ens.unitaries, ens.weights, 2)) < 1e-9


def test_cyclic_frame_potential_closed_form():
    for d in (2, 3, 5):
        g = cyclic_group(d)
        for t in (0.5, 1.0, 1.7, 2.0, 3.0):
            assert abs(frame_potential(g, t) - float(d) ** (2 * t - 1)) < 1e-9 * d ** (2 * t - 1)


def test_haar_reference_integer_catalan():
    assert [haar_reference_integer(2, t) for t in range(1, 7)] == [1, 2, 5, 14, 42, 132]


def test_haar_reference_integer_d3_t4():
    assert haar_reference_integer(3, 4) == 23


def test_haar_reference_integer_factorial_regime():
    for d in (3, 5, 8):
        for t in range(1, min(d, 6) + 1):
            assert haar_reference_integer(d, t) == math.factorial(t)


def test_haar_reference_integer_resource_bound():
    with pytest.raises(ResourceLimitError):
        haar_reference_integer(2, 9)


def test_haar_reference_fractional_d2():
    val, exact = haar_reference_fractional(2, 2.0)
    assert exact and abs(val - 2.0) < 1e-9
    val, exact = haar_reference_fractional(2, 3.0)
    assert exact and abs(val - 5.0) < 1e-9
    # Catalan consistency across integer orders
    for t in range(1, 7):
        assert abs(haar_reference_fractional(2, float(t))[0] - haar_reference_integer(2, t)) < 1e-8


def test_haar_reference_fractional_large_d():
    val, exact = haar_reference_fractional(5, 1.0)
    assert not exact and abs(val - 1.0) < 1e-12


def test_sl2f5_is_5_design():
    g = sl2f5_group()
    for t in range(1, 6):
        assert abs(frame_potential(g, t) - haar_reference_integer(2, t)) < 1e-8
    assert frame_potential(g, 6) > 132.0 + 1e-6


def test_frame_potential_lower_bound():
    for g in (_clifford(2), _clifford(3), pauli_group(2), cyclic_group(3), sl2f5_group()):
        for t in range(1, 5):
            assert frame_potential(g, t) >= haar_reference_integer(g.dim, t) - 1e-9


def test_haar_trace_moment_mc_d2():
    est, err = haar_trace_moment_mc(2, 1.0, 200_000, RandomSource(31))
    assert abs(est - 1.0) <= 3 * err


def test_haar_random_states_near_welch_design():
    # 4096 Haar states at d=6, t=2: finite-N bias puts R_w - 1 at ~1/N << 0.1
    d, n, t = 6, 4096, 2
    states = haar_unitaries(d, n, RandomSource(23))[:, :, 0]
    total = 0.0
    for start in range(0, n, 512):
        block = states[start : start + 512]
        total += float(((np.abs(block @ states.conj().T) ** 2) ** t).sum())
    ratio = (total / n**2) / welch_rhs(d, t)
    assert 0.0 < ratio - 1.0 <= 0.1


# ---------------------------------------------------------------------------
# spacing density


def test_spacing_density_normalized():
    val, _ = quad(spacing_density, 0, 2 * np.pi)
    assert abs(val - 1.0) < 1e-12
    assert abs(spacing_cdf(2 * np.pi) - 1.0) < 1e-12


def test_spacing_density_vanishes_at_zero():
    assert spacing_density(0.0) == 0.0


def test_spacing_cdf_is_antiderivative():
    xs = np.linspace(0.1, 6.0, 25)
    h = 1e-6
    deriv = (spacing_cdf(xs + h) - spacing_cdf(xs - h)) / (2 * h)
    assert np.max(np.abs(deriv - spacing_density(xs))) < 1e-7


def test_spacing_ks_statistic():
    ks = spacing_density_test(20_000, RandomSource(3))
    assert ks <= ks_critical_value(20_000, 0.01)


def test_d2_moment_from_spacing_density():
    # |Tr U|^(2t) = |1 + e^(i Delta)|^(2t) integrated against the gap density
    # reproduces the d = 2 closed form (ties the two derivations together)
    for t in (0.5, 1.0, 2.5, 4.0):
        val, _ = quad(
            lambda x, t=t: (2 + 2 * np.cos(x)) ** t * spacing_density(x), 0, 2 * np.pi
        )
        ref, exact = haar_reference_fractional(2, t)
        assert exact
        assert abs(val - ref) < 1e-9


# ---------------------------------------------------------------------------
# symmetric projector and exact twirl


def test_symmetric_projector_t1():
    assert np.allclose(symmetric_projector(3, 1), np.eye(3))


def test_symmetric_projector_trace():
    assert abs(np.trace(symmetric_projector(4, 3)).real - math.comb(6, 3)) < 1e-10


def test_symmetric_projector_idempotent():
    p = symmetric_projector(3, 2)
    assert np.max(np.abs(p @ p - p)) < 1e-10


def test_permutation_operator_gram_formula():
    # Tr(W_a^dag W_b) = d^(cycles) for the composed permutation
    import itertools

    from quditdesigns.metrics import _cycle_count, _perm_compose, _perm_inverse

    d = 2
    for a in itertools.permutations(range(3)):
        for b in itertools.permutations(range(3)):
            num = np.trace(permutation_operator(d, a).conj().T @ permutation_operator(d, b)).real
            form = float(d) ** _cycle_count(_perm_compose(b, _perm_inverse(a)))
            assert abs(num - form) < 1e-12


def test_haar_twirl_t1_action():
    mo = haar_twirl(3, 1)
    rng = np.random.default_rng(1)
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.max(np.abs(mo.apply(x) - np.trace(x) * np.eye(3) / 3)) < 1e-12


def test_haar_twirl_t2_symmetric_state():
    mo = haar_twirl(2, 2)
    e00 = np.zeros((4, 4), dtype=complex)
    e00[0, 0] = 1.0
    assert np.max(np.abs(mo.apply(e00) - symmetric_projector(2, 2) / 3)) < 1e-12


def test_haar_twirl_idempotent():
    for d, t in ((2, 2), (2, 3), (3, 2)):
        omega = haar_twirl(d, t).twirl_matrix
        assert np.max(np.abs(omega @ omega - omega)) < 1e-9


def test_haar_twirl_rank_deficient_case():
    # t = 3 > d = 2: permutation operators are linearly dependent
    mo = haar_twirl(2, 3)
    assert np.max(np.abs(mo.twirl_matrix @ mo.twirl_matrix - mo.twirl_matrix)) < 1e-9


def test_haar_delta_t1_is_swap():
    mo = haar_twirl(2, 1)
    swap = permutation_operator(2, (1, 0))
    assert np.max(np.abs(mo.delta - swap / 2)) < 1e-12


def test_haar_twirl_matches_monte_carlo():
    # exact twirl vs 1e5-sample Monte Carlo, entrywise within 3 standard errors
    d, n = 2, 100_000
    us = haar_unitaries(d, n, RandomSource(20))
    op_rng = np.random.default_rng(8)
    for t in (1, 2):
        mo = haar_twirl(d, t)
        if t == 1:
            ut = us
        else:
            ut = np.einsum("nij,nkl->nikjl", us, us).reshape(n, 4, 4)
        for _ in range(10):
            dim = d**t
            x = op_rng.standard_normal((dim, dim)) + 1j * op_rng.standard_normal((dim, dim))
            samples = np.einsum("nji,jk,nkl->nil", ut.conj(), x, ut)
            mean = samples.mean(axis=0)
            spread = np.sqrt(samples.var(axis=0).real + 1e-24)
            exact = mo.apply(x)
            assert np.all(np.abs(mean - exact) <= 3 * spread / math.sqrt(n) + 1e-9)


def test_ensemble_moment_operator_single_unitary():
    u = haar_unitaries(3, 1, RandomSource(5))[0]
    mo = ensemble_moment_operator(WeightedUnitaryEnsemble.uniform(u[None]), 1)
    assert np.max(np.abs(mo.delta - np.kron(u.conj().T, u))) < 1e-12


def test_twirl_cap():
    with pytest.raises(ResourceLimitError):
        haar_twirl(9, 2)


# ---------------------------------------------------------------------------
# TPE distances


def test_tpe_qubit_clifford_t2_zero():
    assert tpe_eta(_clifford(2), 2) < 1e-9


def test_tpe_pauli_t2_positive():
    eta = tpe_eta(pauli_group(2), 2)
    assert eta > 0.01  # Pauli group is only a 1-design


def test_tpe_identity_t1():
    ens = WeightedUnitaryEnsemble.uniform(np.eye(2, dtype=complex)[None])
    eta = tpe_eta(ens, 1)
    assert abs(eta - 1.5) < 1e-10  # ||I - SWAP/2||_inf: eigenvalues {0.5, 1.5}


# ---------------------------------------------------------------------------
# weighted no-go residual, with the dense least-squares oracle


def _dense_residual(group, t):
    """Direct construction of the T_g matrices and affine least squares."""
    mats = [conjugation_superop(kron_power(np.asarray(g).conj().T, t)) for g in group.elements]
    target = haar_twirl(group.dim, t).twirl_matrix
    n = len(mats)
    a = np.stack([m.reshape(-1) for m in mats], axis=1)
    b = target.reshape(-1)
    basis = np.zeros((n, n - 1))
    for k in range(n - 1):
        basis[k, k] = 1.0
        basis[k + 1, k] = -1.0
    w0 = np.zeros(n)
    w0[0] = 1.0
    m = a @ basis
    rhs = b - a @ w0
    stacked = np.concatenate([m.real, m.imag])
    z, *_ = np.linalg.lstsq(stacked, np.concatenate([rhs.real, rhs.imag]), rcond=None)
    resid = a @ (w0 + basis @ z) - b
    return float(np.linalg.norm(resid))


def test_residual_qubit_clifford_design():
    assert best_weighting_residual(_clifford(2), 2) <= 1e-8


def test_residual_cyclic_c3():
    r = best_weighting_residual(cyclic_group(3), 2)
    assert r > 0.01
    assert abs(r - 5.0) < 1e-6  # sqrt(27 - 2)


def test_residual_matches_dense_oracle():
    for group in (_clifford(2), cyclic_group(3)):
        gram_route = best_weighting_residual(group, 2)
        dense_route = _dense_residual(group, 2)
        assert abs(gram_route - dense_route) < 1e-6


# ---------------------------------------------------------------------------
# cardinality bounds


def test_cardinality_d_1_1():
    for d in (2, 3, 4, 5):
        assert irrep_space_dimension(d, 1, 1) == 1 + (d * d - 1) ** 2


def test_cardinality_d_1_0():
    for d in (2, 3, 4, 5):
        assert irrep_space_dimension(d, 1, 0) == d * d


def test_cardinality_bounds_t2():
    lower, upper = cardinality_bounds(2, 2)
    assert lower == 10
    # mu in {(0,0), (1,-1), (2,-2)} with d_mu = 1, 3, 5: 1 + 9 + 25
    assert upper == 35
    assert upper == irrep_space_dimension(2, 2, 2)


def test_moment_operator_fields():
    mo = haar_twirl(2, 2)
    assert isinstance(mo, MomentOperator)
    assert mo.delta.shape == (16, 16)
    assert mo.twirl_matrix.shape == (16, 16)


def test_welch_bound_direction():
    # LHS >= RHS for any nonnegative-weight ensemble
    rng = np.random.default_rng(17)
    for _ in range(20):
        n, d = 6, 3
        raw = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
        states = raw / np.linalg.norm(raw, axis=1)[:, None]
        w = rng.uniform(0.5, 1.5, n)
        w /= w.sum()
        ens = WeightedStateEnsemble(d, states, w)
        for t in (1, 2, 3):
            assert welch_lhs(ens, t) >= welch_rhs(d, t) - 1e-10
