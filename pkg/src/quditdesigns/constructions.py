"""Explicit state-design constructions: quadratic-phase (Wootters-Fields)
MUBs, phase-state weighted 2-designs in any dimension, projections of
uniform designs into subspaces, the qubit SIC, and POVMs from design orbits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimitError
from .groups import FiniteUnitaryGroup, _is_prime, stabilizer_states
from .metrics import TWIRL_DIM_CAP, WeightedStateEnsemble, symmetric_projector


def _require_odd_prime(p: int) -> None:
    if p < 3 or not _is_prime(p):
        raise ValueError(f"p must be an odd prime, got {p}")


# ---------------------------------------------------------------------------
# quadratic-phase constructions


def quadratic_phase_states(p: int) -> np.ndarray:
    """The p^2 states |q1, q2> = (1/sqrt p) sum_n omega^(q1 n + q2 n^2) |n>,
    omega = exp(2 pi i / p), stacked with q1 fast."""
    n = np.arange(p)
    omega = np.exp(2j * np.pi / p)
    states = np.empty((p * p, p), dtype=complex)
    k = 0
    for q2 in range(p):
        for q1 in range(p):
            states[k] = omega ** ((q1 * n + q2 * n * n) % p) / np.sqrt(p)
            k += 1
    return states


def wootters_fields(p: int) -> WeightedStateEnsemble:
    """The p(p+1)-state exact 2-design in prime dimension p >= 3: all p^2
    quadratic-phase states plus the computational basis, uniformly weighted."""
    _require_odd_prime(p)
    states = np.vstack([np.eye(p, dtype=complex), quadratic_phase_states(p)])
    return WeightedStateEnsemble.uniform(states, name=f"wf:{p}")


def mub_bases(p: int) -> list[np.ndarray]:
    """p + 1 mutually unbiased bases for dimension p (computational first),
    each as an array of shape (p, p) of rows."""
    _require_odd_prime(p)
    phases = quadratic_phase_states(p)
    bases = [np.eye(p, dtype=complex)]
    for q2 in range(p):
        bases.append(phases[q2 * p : (q2 + 1) * p])
    return bases


def mub_ensemble(p: int) -> WeightedStateEnsemble:
    """All p(p+1) MUB states with uniform weights (a state 2-design)."""
    states = np.vstack(mub_bases(p))
    return WeightedStateEnsemble.uniform(states, name=f"mub:{p}")


def phase_state_ensemble(d: int, p: int) -> WeightedStateEnsemble:
    """Weighted 2-design in any dimension d from truncated phase states.

    The d Fock states carry weight 1/(d(d+1)) each; the p^2 states
    |~theta,phi> = (1/sqrt d) sum_{n<d} exp[(2 pi i/p)(theta n + phi n^2)]|n>
    with theta, phi in {0..p-1} carry weight d/(p^2 (d+1)) each. Requires an
    odd prime p >= d.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    _require_odd_prime(p)
    if p < d:
        raise ValueError(f"need p >= d, got p={p} < d={d}")
    n = np.arange(d)
    omega = np.exp(2j * np.pi / p)
    states = [np.eye(d, dtype=complex)[i] for i in range(d)]
    for theta in range(p):
        for phi in range(p):
            states.append(omega ** ((theta * n + phi * n * n) % p) / np.sqrt(d))
    w_fock = 1.0 / (d * (d + 1))
    w_phase = d / (p * p * (d + 1))
    weights = np.concatenate([np.full(d, w_fock), np.full(p * p, w_phase)])
    return WeightedStateEnsemble(
        dim=d, states=np.array(states), weights=weights, name=f"phase:{d}:{p}"
    )


def phase_grid_ensemble(d: int, m_theta: int, m_phi: int) -> WeightedStateEnsemble:
    """Finite-grid realization of the continuous phase-state 2-design:
    uniform theta/phi grids over [-pi, pi) with the d^2/2-weighted
    quadrature. The trapezoid rule is exact once m_theta >= 2d-1 and
    m_phi >= 2d^2-1 (grid size beyond the trigonometric bandwidth)."""
    n = np.arange(d)
    states = [np.eye(d, dtype=complex)[i] for i in range(d)]
    thetas = -np.pi + 2 * np.pi * np.arange(m_theta) / m_theta
    phis = -np.pi + 2 * np.pi * np.arange(m_phi) / m_phi
    for theta in thetas:
        for phi in phis:
            states.append(np.exp(1j * (theta * n + phi * n * n)) / np.sqrt(d))
    w_fock = 1.0 / (d * (d + 1))
    w_phase = d / (m_theta * m_phi * (d + 1))
    weights = np.concatenate([np.full(d, w_fock), np.full(m_theta * m_phi, w_phase)])
    return WeightedStateEnsemble(
        dim=d, states=np.array(states), weights=weights, name=f"phasegrid:{d}"
    )


def sic_qubit() -> WeightedStateEnsemble:
    """The qubit SIC: four tetrahedron states with uniform weights."""
    a = 1.0 / np.sqrt(3)
    b = np.sqrt(2.0 / 3.0)
    states = np.array(
        [
            [1.0, 0.0],
            [a, b],
            [a, b * np.exp(2j * np.pi / 3)],
            [a, b * np.exp(4j * np.pi / 3)],
        ],
        dtype=complex,
    )
    return WeightedStateEnsemble.uniform(states, name="sic2")


# ---------------------------------------------------------------------------
# projection of designs into subspaces


@dataclass
class ProjectionSpec:
    """Rank-d orthogonal projector from a q-dimensional ambient space.

    ``basis`` holds an orthonormal basis of the range (columns), used to
    express projected states in d-dimensional coordinates. The default spec
    projects onto the first d computational basis states.
    """

    ambient_dim: int
    target_dim: int
    projector: np.ndarray
    basis: np.ndarray

    @classmethod
    def onto_first(cls, ambient_dim: int, target_dim: int) -> "ProjectionSpec":
        if not 1 <= target_dim <= ambient_dim:
            raise ValueError("need 1 <= target_dim <= ambient_dim")
        basis = np.eye(ambient_dim, target_dim, dtype=complex)
        return cls(
            ambient_dim=ambient_dim,
            target_dim=target_dim,
            projector=basis @ basis.conj().T,
            basis=basis,
        )

    @classmethod
    def from_projector(cls, p: np.ndarray) -> "ProjectionSpec":
        p = np.asarray(p, dtype=complex)
        q = p.shape[0]
        if np.max(np.abs(p @ p - p)) > 1e-10 or np.max(np.abs(p - p.conj().T)) > 1e-10:
            raise ValueError("projector must satisfy P^2 = P = P^dag to 1e-10")
        d = round(np.trace(p).real)
        if d < 1 or abs(np.trace(p).real - d) > 1e-9:
            raise ValueError("projector must have integer trace >= 1")
        w, v = np.linalg.eigh(p)
        basis = v[:, w > 0.5]
        return cls(ambient_dim=q, target_dim=d, projector=p, basis=basis)


def project_ensemble(
    ens: WeightedStateEnsemble, spec: ProjectionSpec, t: int
) -> WeightedStateEnsemble:
    """Project a t-design to a weighted t-design on the projector's range.

    Surviving states are P|psi>/||P|psi>|| with weights proportional to
    w_j ||P|psi_j>||^(2t); states annihilated below 1e-12 are dropped.
    Output states are written in the range's orthonormal coordinates.
    """
    if spec.ambient_dim != ens.dim:
        raise ValueError("projector ambient dimension must match the ensemble")
    coords = ens.states @ spec.basis.conj()  # row j = basis^dag P |psi_j|
    norms = np.linalg.norm(coords, axis=1)
    keep = norms > 1e-12
    if not np.any(keep):
        raise ValueError("projector annihilates every state in the ensemble")
    coords = coords[keep]
    norms = norms[keep]
    raw = ens.weights[keep] * norms ** (2 * t)
    nu = 1.0 / raw.sum()
    states = coords / norms[:, None]
    return WeightedStateEnsemble(
        dim=spec.target_dim,
        states=states,
        weights=nu * raw,
        name=f"project:{ens.name}:{spec.target_dim}",
    )


def projected_stabilizer_ensemble(n: int, d: int, t: int = 3) -> WeightedStateEnsemble:
    """Weighted t-design in dimension d <= 2^n projected from the n-qubit
    stabilizer states (a uniform 3-design)."""
    stab = stabilizer_states(n)
    ens = WeightedStateEnsemble.uniform(stab.states, name=f"stab:{n}")
    return project_ensemble(ens, ProjectionSpec.onto_first(2**n, d), t)


def reconstruct_symmetric_projector(
    ens: WeightedStateEnsemble, t: int
) -> tuple[np.ndarray, float]:
    """sum_j w_j (|psi_j><psi_j|)^(x t) and its max-norm distance to
    Pi_sym / binom(d+t-1, t)."""
    d = ens.dim
    if d**t > TWIRL_DIM_CAP:
        raise ResourceLimitError(f"d^t = {d**t} exceeds the dense cap {TWIRL_DIM_CAP}")
    acc = np.zeros((d**t, d**t), dtype=complex)
    for w, psi in zip(ens.weights, ens.states):
        x = psi
        for _ in range(t - 1):
            x = np.kron(x, psi)
        acc += w * np.outer(x, x.conj())
    target = symmetric_projector(d, t) / math.comb(d + t - 1, t)
    return acc, float(np.max(np.abs(acc - target)))


# ---------------------------------------------------------------------------
# POVMs from design orbits


@dataclass
class PovmSet:
    """Positive semidefinite elements summing to the identity."""

    elements: np.ndarray  # (N, d, d)

    def __post_init__(self) -> None:
        self.elements = np.asarray(self.elements, dtype=complex)
        total = self.elements.sum(axis=0)
        d = total.shape[0]
        if np.max(np.abs(total - np.eye(d))) > 1e-9:
            raise ValueError("POVM elements must sum to the identity to 1e-9")
        for m in self.elements:
            if np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)) < -1e-10:
                raise ValueError("POVM elements must be PSD to -1e-10")

    @property
    def size(self) -> int:
        return self.elements.shape[0]


def povm_from_design(
    source: FiniteUnitaryGroup | np.ndarray, m: np.ndarray
) -> PovmSet:
    """Renormalized orbit {d/(N Tr M) * U M U^dag} of a PSD seed under a
    (at least) 1-design; raises if the orbit average misses I/d by more than
    1e-6, which flags a non-1-design source."""
    unitaries = np.stack(source.elements) if isinstance(source, FiniteUnitaryGroup) else np.asarray(source)
    m = np.asarray(m, dtype=complex)
    d = m.shape[0]
    trace = np.trace(m).real
    if trace <= 1e-12:
        raise ValueError("seed operator must have positive trace")
    if np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)) < -1e-10:
        raise ValueError("seed operator must be PSD")
    n = unitaries.shape[0]
    orbit = np.einsum("nij,jk,nlk->nil", unitaries, m, unitaries.conj())
    elements = orbit * (d / (n * trace))
    residual = np.max(np.abs(elements.sum(axis=0) - np.eye(d)))
    if residual > 1e-6:
        raise ValueError(f"orbit completeness residual {residual:.2e}: source is not a 1-design")
    return PovmSet(elements=elements)


# ---------------------------------------------------------------------------
# JSON round trip


def ensemble_to_json(ens: WeightedStateEnsemble) -> str:
    states = []
    for psi in ens.states:
        row = []
        for z in psi:
            row.append(float(z.real))
            row.append(float(z.imag))
        states.append(row)
    return json.dumps({"dim": ens.dim, "states": states, "weights": list(map(float, ens.weights))})


def ensemble_from_json(text: str) -> WeightedStateEnsemble:
    doc = json.loads(text)
    states = []
    for row in doc["states"]:
        states.append(np.array(row[0::2]) + 1j * np.array(row[1::2]))
    return WeightedStateEnsemble(
        dim=int(doc["dim"]), states=np.array(states), weights=np.array(doc["weights"])
    )
