"""Spin-coherent states, SNAP and displacement gates, their universality
identities, and random-circuit experiments that converge to approximate
state designs.

Basis ordering is m = S, S-1, ..., -S module-wide (index 0 holds |S,S>);
the sign conventions of S_+/- and the displacement generator depend on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .groups import fourier_gate, su2_spin_ops
from .linalg import RandomSource, hermitian_exp
from .metrics import welch_rhs


def snap_gate(angles: np.ndarray) -> np.ndarray:
    """Diagonal unitary diag(e^{i theta_m}) with one phase per level."""
    angles = np.asarray(angles, dtype=float)
    return np.diag(np.exp(1j * angles))


def linear_snap(d: int, phi: float) -> np.ndarray:
    """S(phi) with the linear phase pattern theta_k = k*phi."""
    return snap_gate(phi * np.arange(d))


def displacement(s: float, theta: float, phi: float = 0.0) -> np.ndarray:
    """D(theta, phi) = exp[(theta/2)(e^{i phi} S_- - e^{-i phi} S_+)].

    D(theta, 0) = exp(-i theta S_y), and the linear-SNAP conjugation
    identity D(theta, phi) = S(phi) D(theta, 0) S(phi)^dag holds.
    """
    ops = su2_spin_ops(s)
    gen = 0.5 * theta * (np.exp(1j * phi) * ops.sm - np.exp(-1j * phi) * ops.sp)
    return hermitian_exp(-1j * gen, 1.0)


def spin_coherent(s: float, theta: float, phi: float) -> np.ndarray:
    """|n> = D(theta, phi) |S, S> for the Bloch direction (theta, phi)."""
    d = round(2 * s) + 1
    start = np.zeros(d, dtype=complex)
    start[0] = 1.0
    return displacement(s, theta, phi) @ start


def scs_overlap_sq(s: float, n1: tuple[float, float], n2: tuple[float, float]) -> float:
    """|<n1|n2>|^2 computed from the states (the law [(1+n1.n2)/2]^(2S) is
    the analytic oracle)."""
    v1 = spin_coherent(s, *n1)
    v2 = spin_coherent(s, *n2)
    return float(np.abs(np.vdot(v1, v2)) ** 2)


def scs_identity_resolution_error(s: float, n_theta: int, n_phi: int) -> float:
    """Max-norm error of the quadrature of (1/4pi) int |n><n| dn against
    I/(2S+1), with Gauss-Legendre nodes in cos(theta) and a uniform phi grid."""
    d = round(2 * s) + 1
    nodes, weights = leggauss(n_theta)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    acc = np.zeros((d, d), dtype=complex)
    for u, w in zip(nodes, weights):
        theta = float(np.arccos(u))
        for phi in phis:
            v = spin_coherent(s, theta, phi)
            acc += (w / (2 * n_phi)) * np.outer(v, v.conj())
    return float(np.max(np.abs(acc - np.eye(d) / d)))


def scs_welch_t2(s: float) -> float:
    """E |<n1|n2>|^4 over independent uniform Bloch directions.

    By rotational symmetry this is a single integral over the polar angle,
    evaluated by Gauss-Legendre quadrature of the actual state overlaps
    (exact for polynomial integrands of this degree). Equals 1/(4S+1), which
    differs from the Haar value 2/(d(d+1)) for every S >= 1.
    """
    nodes, weights = leggauss(64)
    ref = spin_coherent(s, 0.0, 0.0)
    total = 0.0
    for u, w in zip(nodes, weights):
        theta = float(np.arccos(u))
        v = spin_coherent(s, theta, 0.0)
        total += 0.5 * w * float(np.abs(np.vdot(ref, v)) ** 4)
    return total


def level_projector(d: int, n: int) -> np.ndarray:
    """Q_n: projector onto basis indices 0..n."""
    q = np.zeros((d, d), dtype=complex)
    q[: n + 1, : n + 1] = np.eye(n + 1)
    return q


def adjacent_rotation_generator(s: float, n: int) -> np.ndarray:
    """J_n = -i [S_y, Q_n], supported on |n><n+1| + |n+1><n|."""
    ops = su2_spin_ops(s)
    q = level_projector(round(2 * s) + 1, n)
    return -1j * (ops.sy @ q - q @ ops.sy)


def group_commutator_error(s: float, n: int, eps: float) -> float:
    """Spectral-norm error of D(eps) R_n(eps) D(-eps) R_n(-eps) against
    exp(i J_n eps^2); third order in eps.

    R_n(eps) is the SNAP gate acting as e^{i eps} on levels <= n and as 1
    above them.
    """
    d = round(2 * s) + 1
    if not 0 <= n < d - 1:
        raise ValueError("need 0 <= n < 2S")
    angles = np.zeros(d)
    angles[: n + 1] = eps
    r_plus = snap_gate(angles)
    r_minus = snap_gate(-angles)
    d_plus = displacement(s, eps)
    d_minus = displacement(s, -eps)
    lhs = d_plus @ r_plus @ d_minus @ r_minus
    rhs = hermitian_exp(adjacent_rotation_generator(s, n), eps * eps)
    return float(np.linalg.norm(lhs - rhs, 2))


# ---------------------------------------------------------------------------
# random SNAP/displacement circuits


@dataclass
class CircuitSpec:
    """Random SNAP/displacement circuit: per layer one real displacement
    D(theta, 0) with theta drawn from density (1/2) sin(theta) on [0, pi],
    followed by one SNAP gate with i.i.d. uniform angles in [0, 2pi)."""

    dim: int
    depth: int
    seed: RandomSource

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")


@lru_cache(maxsize=None)
def _sy_eig(d: int) -> tuple[np.ndarray, np.ndarray]:
    ops = su2_spin_ops((d - 1) / 2)
    w, v = np.linalg.eigh(ops.sy)
    return w, v


def circuit_layer(psi: np.ndarray, theta: float, snap_angles: np.ndarray) -> np.ndarray:
    """One circuit layer: the real displacement D(theta, 0), then the SNAP
    gate with the given phases."""
    d = len(psi)
    w, v = _sy_eig(d)
    psi = v @ (np.exp(-1j * theta * w) * (v.conj().T @ psi))
    return np.exp(1j * np.asarray(snap_angles, dtype=float)) * psi


def random_snap_disp_state(spec: CircuitSpec, initial: np.ndarray | None = None) -> np.ndarray:
    """Apply ``depth`` random displacement+SNAP layers to the initial state
    (default |S,S>). Bit-identical output for a fixed seed."""
    d = spec.dim
    if initial is None:
        psi = np.zeros(d, dtype=complex)
        psi[0] = 1.0
    else:
        psi = np.asarray(initial, dtype=complex)
        if psi.shape != (d,):
            raise ValueError("initial state dimension mismatch")
    gen = spec.seed.generator()
    for _ in range(spec.depth):
        theta = np.arccos(gen.uniform(-1.0, 1.0))  # cos(theta) uniform <=> density sin(theta)/2
        psi = circuit_layer(psi, theta, gen.uniform(0.0, 2 * np.pi, size=d))
    return psi


def welch_ratio_experiment(
    d: int, t: int, depth: int, n: int, rng: RandomSource
) -> list[tuple[int, float]]:
    """Sample n random-circuit states and report the Welch ratio
    R_w = LHS/RHS on prefixes of size 2, 4, 8, ..., n.

    States use per-sample child streams, so the result is independent of
    evaluation order; the prefix reduction itself is sequential and
    deterministic.
    """
    if t not in (1, 2, 3):
        raise ValueError("t must be 1, 2 or 3")
    if n < 2:
        raise ValueError("need at least 2 states")
    rhs = welch_rhs(d, t)
    states = np.empty((n, d), dtype=complex)
    for k in range(n):
        states[k] = random_snap_disp_state(CircuitSpec(dim=d, depth=depth, seed=rng.child(k)))
    prefixes = []
    m = 2
    while m <= n:
        prefixes.append(m)
        m *= 2
    out = []
    cross = 0.0
    boundary = iter(prefixes)
    next_boundary = next(boundary)
    for k in range(1, n + 1):
        if k > 1:
            overlaps_sq = np.abs(states[: k - 1].conj() @ states[k - 1]) ** 2
            cross += float((overlaps_sq**t).sum())
        if k == next_boundary:
            lhs = (k + 2.0 * cross) / (k * k)
            out.append((k, lhs / rhs))
            next_boundary = next(boundary, None)
            if next_boundary is None:
                break
    return out


def loglog_slope(points: list[tuple[int, float]], lo: int, hi: int) -> float:
    """Least-squares slope of log(R_w - 1) against log(N) for lo <= N <= hi."""
    xs, ys = [], []
    for n, ratio in points:
        if lo <= n <= hi and ratio > 1.0:
            xs.append(np.log(float(n)))
            ys.append(np.log(ratio - 1.0))
    if len(xs) < 2:
        raise ValueError("not enough points above the design floor to fit a slope")
    coeffs = np.polyfit(np.array(xs), np.array(ys), 1)
    return float(coeffs[0])


def mub_alternation_unitary(d: int, ell: int, rng: RandomSource | np.random.Generator) -> np.ndarray:
    """D[ell] = D_ell^E (F D_ell^E' F^dag) ... D_1^E (F D_1^E' F^dag) D_0^E:
    alternating random diagonal unitaries in the computational basis and its
    Fourier conjugate, 2*ell + 1 independent diagonals in total."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if ell < 0:
        raise ValueError("ell must be >= 0")
    gen = rng.generator() if isinstance(rng, RandomSource) else rng
    f = fourier_gate(d)

    def rand_diag() -> np.ndarray:
        return np.exp(1j * gen.uniform(0.0, 2 * np.pi, size=d))

    u = np.diag(rand_diag())
    for _ in range(ell):
        u = np.diag(rand_diag()) @ (f @ np.diag(rand_diag()) @ f.conj().T) @ u
    return u
