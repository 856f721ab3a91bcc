"""Explicit design constructions and the projection machinery."""

import numpy as np
import pytest

from quditdesigns.constructions import (
    ProjectionSpec,
    ensemble_from_json,
    ensemble_to_json,
    mub_bases,
    mub_ensemble,
    phase_grid_ensemble,
    phase_state_ensemble,
    povm_from_design,
    projected_stabilizer_ensemble,
    project_ensemble,
    quadratic_phase_states,
    reconstruct_symmetric_projector,
    sic_qubit,
    wootters_fields,
)
from quditdesigns.groups import clifford_group, pauli_group, stabilizer_states
from quditdesigns.metrics import (
    WeightedStateEnsemble,
    welch_lhs,
    welch_ratio,
    welch_rhs,
)


def test_wootters_fields_counts_and_design():
    ens = wootters_fields(3)
    assert ens.size == 12
    assert abs(welch_lhs(ens, 2) - 1.0 / 6.0) < 1e-12


def test_wootters_fields_rejects_bad_p():
    with pytest.raises(ValueError):
        wootters_fields(4)
    with pytest.raises(ValueError):
        wootters_fields(2)


def test_quadratic_bases_orthonormal():
    p = 5
    states = quadratic_phase_states(p)
    for q2 in range(p):
        block = states[q2 * p : (q2 + 1) * p]
        assert np.max(np.abs(block @ block.conj().T - np.eye(p))) < 1e-12


def test_cross_basis_overlaps_unbiased():
    p = 5
    states = quadratic_phase_states(p)
    s1 = states[:p]  # q2 = 0
    s2 = states[p : 2 * p]  # q2 = 1
    overlaps = np.abs(s1 @ s2.conj().T) ** 2
    assert np.max(np.abs(overlaps - 1.0 / p)) < 1e-12


def test_mub_ensemble_counts():
    ens = mub_ensemble(5)
    assert ens.size == 30
    assert len(mub_bases(5)) == 6


def test_mub_ensemble_is_2_design():
    assert abs(welch_ratio(mub_ensemble(3), 2) - 1.0) < 1e-12


def test_mub_cross_basis_unbiased_including_computational():
    p = 3
    bases = mub_bases(p)
    for i in range(len(bases)):
        for j in range(i + 1, len(bases)):
            ov = np.abs(bases[i] @ bases[j].conj().T) ** 2
            assert np.max(np.abs(ov - 1.0 / p)) < 1e-12


@pytest.mark.parametrize("d,p", [(2, 3), (3, 3), (4, 5), (5, 5), (6, 7)])
def test_phase_state_ensemble_is_2_design(d, p):
    ens = phase_state_ensemble(d, p)
    assert ens.size == d + p * p
    assert abs(ens.weights.sum() - 1.0) < 1e-15
    assert abs(welch_ratio(ens, 2) - 1.0) < 1e-10


def test_phase_state_weights():
    d, p = 6, 7
    ens = phase_state_ensemble(d, p)
    assert abs(ens.weights[0] - 1 / (d * (d + 1))) < 1e-15
    assert abs(ens.weights[-1] - d / (p * p * (d + 1))) < 1e-15


def test_phase_state_equals_wootters_fields_at_p_equal_d():
    p = 5
    ens = phase_state_ensemble(p, p)
    assert np.max(np.abs(ens.weights - 1.0 / (p * (p + 1)))) < 1e-15
    wf = wootters_fields(p)
    # same states modulo ordering: compare Gram spectra of the two ensembles
    g1 = np.sort(np.abs(ens.states @ ens.states.conj().T).reshape(-1))
    g2 = np.sort(np.abs(wf.states @ wf.states.conj().T).reshape(-1))
    assert np.max(np.abs(g1 - g2)) < 1e-10


def test_phase_state_rejects_small_p():
    with pytest.raises(ValueError):
        phase_state_ensemble(6, 5)


def test_phase_grid_quadrature_reconstruction():
    d = 4
    ens = phase_grid_ensemble(d, 2 * d - 1, 2 * d * d - 1)
    _, dist = reconstruct_symmetric_projector(ens, 2)
    assert dist < 1e-9


def test_reconstruct_wootters_fields():
    _, dist = reconstruct_symmetric_projector(wootters_fields(5), 2)
    assert dist < 1e-10


def test_reconstruct_single_state_fails_design():
    psi = np.zeros(3, dtype=complex)
    psi[0] = 1.0
    ens = WeightedStateEnsemble(3, psi[None], np.array([1.0]))
    _, dist = reconstruct_symmetric_projector(ens, 2)
    assert dist > 0.1


def test_sic_qubit_equiangular():
    ens = sic_qubit()
    g = np.abs(ens.states @ ens.states.conj().T) ** 2
    off = g[~np.eye(4, dtype=bool)]
    assert np.max(np.abs(off - 1.0 / 3.0)) < 1e-12


def test_sic_qubit_welch():
    ens = sic_qubit()
    assert abs(welch_lhs(ens, 2) - 1.0 / 3.0) < 1e-12
    # not a 3-design: direct double sum gives 4*(1/16) + 12*(1/16)*(1/27) = 5/18
    lhs3 = welch_lhs(ens, 3)
    assert abs(lhs3 - 5.0 / 18.0) < 1e-12
    assert lhs3 - welch_rhs(2, 3) > 0.01


def test_projection_identity_projector():
    ens = wootters_fields(3)
    out = project_ensemble(ens, ProjectionSpec.onto_first(3, 3), 2)
    assert out.size == ens.size
    assert np.max(np.abs(out.weights - ens.weights)) < 1e-12


def test_projection_t1_reconstructs_maximally_mixed():
    # 1-design in, rank-2 projector: averaged projector equals P/2 in range coords
    ens = WeightedStateEnsemble.uniform(np.eye(4, dtype=complex))
    out = project_ensemble(ens, ProjectionSpec.onto_first(4, 2), 1)
    avg = sum(w * np.outer(s, s.conj()) for w, s in zip(out.weights, out.states))
    assert np.max(np.abs(avg - np.eye(2) / 2)) < 1e-12


@pytest.mark.parametrize("n,d,expect", [(2, 3, 1.0 / 10.0)])
def test_projected_stabilizer_welch(n, d, expect):
    ens = projected_stabilizer_ensemble(n, d, 3)
    assert abs(welch_lhs(ens, 3) - expect) < 1e-10


def test_projection_weight_normalization():
    stab = stabilizer_states(2)
    ens = WeightedStateEnsemble.uniform(stab.states)
    spec = ProjectionSpec.onto_first(4, 3)
    out = project_ensemble(ens, spec, 3)
    assert abs(out.weights.sum() - 1.0) < 1e-12
    norms = np.linalg.norm(ens.states @ spec.basis.conj(), axis=1)
    keep = norms > 1e-12
    nu = 1.0 / np.sum(ens.weights[keep] * norms[keep] ** 6)
    assert abs(nu * np.sum(ens.weights[keep] * norms[keep] ** 6) - 1.0) < 1e-12


def test_projection_arbitrary_rank_projector():
    # rotate the coordinate projector by a fixed unitary; design survives
    from quditdesigns.linalg import haar_unitary, RandomSource

    u = haar_unitary(4, RandomSource(9))
    p = u[:, :3] @ u[:, :3].conj().T
    spec = ProjectionSpec.from_projector(p)
    assert spec.target_dim == 3
    stab = stabilizer_states(2)
    ens = WeightedStateEnsemble.uniform(stab.states)
    out = project_ensemble(ens, spec, 2)
    assert abs(welch_ratio(out, 2) - 1.0) < 1e-9


def test_projection_rejects_annihilating_projector():
    ens = WeightedStateEnsemble.uniform(np.eye(3, dtype=complex)[:1])
    spec = ProjectionSpec.onto_first(3, 1)
    shifted = WeightedStateEnsemble(3, np.roll(ens.states, 1, axis=1), ens.weights)
    with pytest.raises(ValueError):
        project_ensemble(shifted, spec, 2)


def test_all_constructions_are_1_designs():
    for ens in (
        wootters_fields(3),
        phase_state_ensemble(4, 5),
        sic_qubit(),
        mub_ensemble(3),
        projected_stabilizer_ensemble(2, 3, 3),
    ):
        assert abs(welch_ratio(ens, 1) - 1.0) < 1e-10


def test_povm_identity_seed():
    p = povm_from_design(clifford_group(2), np.eye(2, dtype=complex))
    for m in p.elements:
        assert np.max(np.abs(m - m[0, 0] * np.eye(2))) < 1e-12


def test_povm_pauli_projective():
    p = povm_from_design(pauli_group(3), np.diag([1.0, 0.0, 0.0]).astype(complex))
    assert p.size == 9
    uniq = {np.round(m * 3.0, 6).tobytes() for m in p.elements}
    assert len(uniq) == 3  # three orthogonal projectors, each three times


def test_povm_clifford_completeness():
    p = povm_from_design(clifford_group(2), np.diag([1.0, 0.0]).astype(complex))
    assert p.size == 24
    assert np.max(np.abs(p.elements.sum(axis=0) - np.eye(2))) < 1e-10
    for m in p.elements:
        assert np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)) >= -1e-10


def test_povm_rejects_traceless_seed():
    with pytest.raises(ValueError):
        povm_from_design(clifford_group(2), np.zeros((2, 2), dtype=complex))


def test_povm_rejects_non_1_design_source():
    # two commuting diagonal unitaries cannot average |0><0| to I/d
    us = np.stack([np.eye(2, dtype=complex), np.diag([1.0, -1.0]).astype(complex)])
    with pytest.raises(ValueError):
        povm_from_design(us, np.diag([1.0, 0.0]).astype(complex))


def test_ensemble_json_roundtrip():
    ens = sic_qubit()
    back = ensemble_from_json(ensemble_to_json(ens))
    assert back.dim == 2 and back.size == 4
    assert abs(welch_lhs(back, 2) - 1.0 / 3.0) < 1e-12
