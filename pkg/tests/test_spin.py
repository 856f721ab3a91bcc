"""SNAP/displacement gates, spin-coherent states, random-circuit experiments."""

import numpy as np
import pytest

from quditdesigns.groups import su2_spin_ops
from quditdesigns.linalg import RandomSource, is_unitary
from quditdesigns.metrics import frame_potential_pairwise, welch_rhs
from quditdesigns.spin import (
    CircuitSpec,
    adjacent_rotation_generator,
    displacement,
    group_commutator_error,
    linear_snap,
    loglog_slope,
    mub_alternation_unitary,
    random_snap_disp_state,
    scs_identity_resolution_error,
    scs_overlap_sq,
    scs_welch_t2,
    snap_gate,
    spin_coherent,
    welch_ratio_experiment,
)


def test_snap_zero_angles_identity():
    assert np.allclose(snap_gate(np.zeros(5)), np.eye(5))


def test_snap_composition():
    rng = np.random.default_rng(0)
    a, b = rng.uniform(0, 2 * np.pi, (2, 4))
    assert np.allclose(snap_gate(a) @ snap_gate(b), snap_gate(a + b))


def test_linear_snap_matches_pattern():
    phi = 0.7
    assert np.allclose(linear_snap(4, phi), snap_gate(phi * np.arange(4)))


def test_displacement_zero_identity():
    assert np.allclose(displacement(1.5, 0.0, 0.3), np.eye(4))


def test_displacement_theta_axis():
    # D(theta, 0) = exp(-i theta S_y) to 1e-12
    s = 2.0
    ops = su2_spin_ops(s)
    from quditdesigns.linalg import hermitian_exp

    theta = 0.9
    assert np.max(np.abs(displacement(s, theta) - hermitian_exp(ops.sy, -theta))) < 1e-12


@pytest.mark.parametrize("s", [1.0, 1.5, 2.0])
def test_displacement_snap_conjugation_identity(s):
    d = round(2 * s) + 1
    rng = np.random.default_rng(5)
    for _ in range(100):
        theta, phi = rng.uniform(0, np.pi), rng.uniform(-np.pi, np.pi)
        lhs = displacement(s, theta, phi)
        sphi = linear_snap(d, phi)
        rhs = sphi @ displacement(s, theta, 0.0) @ sphi.conj().T
        assert np.max(np.abs(lhs - rhs)) < 1e-10
        assert is_unitary(lhs, 1e-10)


def test_spin_coherent_north_pole():
    v = spin_coherent(1.5, 0.0, 0.0)
    assert np.allclose(v, [1, 0, 0, 0])


def test_scs_overlap_law():
    s = 1.5
    rng = np.random.default_rng(7)
    for _ in range(10):
        t1, p1, t2, p2 = rng.uniform(0, np.pi), *rng.uniform(-np.pi, np.pi, 2), rng.uniform(0, np.pi)
        t2, p2 = p2 % np.pi, p1  # keep angles in range; direction pairs arbitrary
        n1 = np.array([np.sin(t1) * np.cos(p1), np.sin(t1) * np.sin(p1), np.cos(t1)])
        n2 = np.array([np.sin(t2) * np.cos(p2), np.sin(t2) * np.sin(p2), np.cos(t2)])
        law = ((1 + n1 @ n2) / 2) ** (2 * s)
        assert abs(scs_overlap_sq(s, (t1, p1), (t2, p2)) - law) < 1e-10


def test_scs_identity_resolution_converges():
    errs = [scs_identity_resolution_error(2.0, k, k) for k in (3, 6, 12)]
    assert errs[-1] < 1e-10
    assert errs[0] > errs[-1]


def test_scs_welch_t2_values():
    # analytic oracle: integral of u^(4S) du = 1/(4S+1)
    for s in (0.5, 1.0, 1.5, 2.0):
        assert abs(scs_welch_t2(s) - 1.0 / (4 * s + 1)) < 1e-8
    # qubit SCS cover all pure states: matches the Haar RHS at d=2
    assert abs(scs_welch_t2(0.5) - 2.0 / (2 * 3)) < 1e-10
    # never a 2-design for S >= 1
    for s, d in ((1.0, 3), (2.0, 5)):
        assert abs(scs_welch_t2(s) - 2.0 / (d * (d + 1))) > 1e-3


def test_commutator_generator_support():
    s = 1.5
    for n in range(3):
        j = adjacent_rotation_generator(s, n)
        mask = np.zeros((4, 4), dtype=bool)
        mask[n, n + 1] = mask[n + 1, n] = True
        assert np.max(np.abs(j[~mask])) < 1e-12
        assert np.abs(j[n, n + 1]) > 1e-3


def test_commutator_third_order_scaling():
    e1 = group_commutator_error(2.0, 1, 1e-2)
    e2 = group_commutator_error(2.0, 1, 5e-3)
    assert 7.0 <= e1 / e2 <= 9.0


def test_commutator_small_eps_limit():
    assert group_commutator_error(2.0, 1, 1e-5) <= 1e-13


def test_commutator_rejects_bad_level():
    with pytest.raises(ValueError):
        group_commutator_error(1.0, 2, 0.1)


def test_circuit_depth_zero():
    psi = random_snap_disp_state(CircuitSpec(dim=6, depth=0, seed=RandomSource(0)))
    assert np.array_equal(psi, np.eye(6, dtype=complex)[0])


def test_circuit_identity_layer():
    # theta = 0 and all SNAP angles 0: the layer is the identity
    from quditdesigns.spin import circuit_layer

    psi = np.zeros(6, dtype=complex)
    psi[0] = 1.0
    out = circuit_layer(psi, 0.0, np.zeros(6))
    assert np.max(np.abs(out - psi)) < 1e-12


def test_circuit_deterministic():
    a = random_snap_disp_state(CircuitSpec(dim=5, depth=7, seed=RandomSource(42)))
    b = random_snap_disp_state(CircuitSpec(dim=5, depth=7, seed=RandomSource(42)))
    assert np.array_equal(a, b)


def test_circuit_preserves_norm():
    psi = random_snap_disp_state(CircuitSpec(dim=7, depth=12, seed=RandomSource(3)))
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-12


def test_welch_experiment_depth0_control():
    pts = welch_ratio_experiment(6, 2, 0, 16, RandomSource(1))
    for _, ratio in pts:
        assert abs(ratio - 21.0) < 1e-9  # binom(7, 2)


def test_welch_experiment_depth0_t3():
    pts = welch_ratio_experiment(6, 3, 0, 8, RandomSource(1))
    for _, ratio in pts:
        assert abs(ratio - 56.0) < 1e-9  # binom(8, 3)


def test_welch_experiment_prefix_schedule():
    pts = welch_ratio_experiment(3, 2, 2, 64, RandomSource(2))
    assert [n for n, _ in pts] == [2, 4, 8, 16, 32, 64]


def test_welch_experiment_t1_converges():
    pts = welch_ratio_experiment(6, 1, 2, 4096, RandomSource(5))
    assert abs(pts[-1][1] - 1.0) <= 0.05


def test_welch_experiment_slope():
    pts = welch_ratio_experiment(6, 2, 8, 4096, RandomSource(7))
    slope = loglog_slope(pts, 32, 4096)
    assert -1.2 <= slope <= -0.8


def test_mub_alternation_base_case():
    u = mub_alternation_unitary(5, 0, RandomSource(3))
    # ell = 0: a single diagonal unitary
    off = u - np.diag(np.diag(u))
    assert np.max(np.abs(off)) < 1e-12
    assert is_unitary(u, 1e-10)


def test_mub_alternation_unitary_output():
    for ell in (1, 3):
        assert is_unitary(mub_alternation_unitary(4, ell, RandomSource(ell)), 1e-10)


def test_mub_alternation_frame_potential():
    n = 2000
    rng = RandomSource(11)
    us = np.stack([mub_alternation_unitary(4, 4, rng.child(i)) for i in range(n)])
    f2 = frame_potential_pairwise(us, np.full(n, 1.0 / n), 2)
    assert abs(f2 - 2.0) <= 0.2  # within 10% of the Haar value 2


def test_welch_rhs_used_by_experiment():
    # guard: the experiment's fixed point really is the Welch RHS
    assert abs(welch_rhs(6, 2) - 1.0 / 21.0) < 1e-15
