"""Character randomized benchmarking: irrep block decompositions of the
conjugation representation (qudit Clifford in any dimension, SU(2) on spin
qudits), Schur-scalar twirl eigenvalues, protocol simulation with an exact
character-weighted average over the initial gate, and exponential-decay
fitting.

Superoperators act on column-major vec(X); the conjugation map of a gate g
is kron(conj(g), g). Every Clifford block W_r is the span of the Paulis
X^a Z^b with gcd(a, b, d) = r, one block per divisor of d, each of
multiplicity one, so twirled channels act on each block by a scalar and RB
signals decay as single exponentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError
from .groups import FiniteUnitaryGroup, pauli_orbits, pauli_stack, su2_spin_ops
from .linalg import RandomSource, conjugation_superop, vec

# ---------------------------------------------------------------------------
# irrep blocks


@dataclass
class IrrepBlock:
    """One irreducible block of the conjugation representation.

    ``projector`` is the d^2 x d^2 orthogonal projector onto the block in
    vectorized operator coordinates; ``character`` maps a group element (a
    d x d unitary) to the block's character value Tr(P Ad_g).
    """

    label: str
    dim: int
    system_dim: int
    projector: np.ndarray
    character: Callable[[np.ndarray], complex]


def _ad_diagonal(gates: np.ndarray, paulis: np.ndarray) -> np.ndarray:
    """diag of Ad_g in the normalized Pauli basis: out[m, k] =
    Tr(P_k^dag g P_k g^dag)/d for a batch of gates."""
    d = gates.shape[-1]
    gp = np.einsum("mij,kjl->mkil", gates, paulis)
    gpg = np.einsum("mkil,mjl->mkij", gp, gates.conj())
    return np.einsum("kij,mkij->mk", paulis.conj(), gpg) / d


def clifford_blocks(d: int) -> list[IrrepBlock]:
    """One block per divisor r of d: the span of {X^a Z^b : gcd(a,b,d) = r},
    with its projector in Pauli coordinates and the character
    chi_r(g) = Tr(P_r Ad_g)."""
    if not 2 <= d <= 8:
        raise ValueError("clifford blocks support 2 <= d <= 8")
    paulis = pauli_stack(d)
    basis = np.stack([vec(p) for p in paulis]) / math.sqrt(d)  # orthonormal rows
    orbits = pauli_orbits(d)
    blocks = []
    for r in sorted(orbits):
        labels = sorted(orbits[r])
        idx = [a * d + b for a, b in labels]
        rows = basis[idx]
        projector = rows.T @ rows.conj()

        def character(g: np.ndarray, idx=tuple(idx)) -> complex:
            diag = _ad_diagonal(np.asarray(g, dtype=complex)[None], paulis)[0]
            return complex(diag[list(idx)].sum())

        blocks.append(
            IrrepBlock(
                label=f"r={r}",
                dim=len(labels),
                system_dim=d,
                projector=projector,
                character=character,
            )
        )
    return blocks


def clifford_character_table(d: int, gates: np.ndarray, chunk: int = 512) -> np.ndarray:
    """chi_r(g) for every gate, shape (#divisors, len(gates)); divisor order
    matches :func:`clifford_blocks`."""
    paulis = pauli_stack(d)
    orbits = pauli_orbits(d)
    divisors = sorted(orbits)
    idx_sets = [[a * d + b for a, b in sorted(orbits[r])] for r in divisors]
    out = np.empty((len(divisors), len(gates)), dtype=complex)
    for start in range(0, len(gates), chunk):
        batch = np.asarray(gates[start : start + chunk], dtype=complex)
        diag = _ad_diagonal(batch, paulis)
        for bi, idx in enumerate(idx_sets):
            out[bi, start : start + len(batch)] = diag[:, idx].sum(axis=1)
    return out


def l_gate_block_order(d: int, r: int, block: IrrepBlock | None = None) -> int:
    """Smallest k >= 1 with Ad_L^k acting as the identity on the block W_r.

    The parity rule is d/r for odd d; for even d it is d/r when r is even
    and 2d/r when r is odd.
    """
    if d % r != 0:
        raise ValueError("r must divide d")
    from .groups import quadratic_phase_gate

    if block is None:
        block = next(b for b in clifford_blocks(d) if b.label == f"r={r}")
    ad_l = conjugation_superop(quadratic_phase_gate(d))
    w, v = np.linalg.eigh(block.projector)
    basis = v[:, w > 0.5]  # orthonormal basis of W_r
    restricted = basis.conj().T @ ad_l @ basis
    power = np.eye(restricted.shape[0], dtype=complex)
    for k in range(1, 4 * d + 1):
        power = restricted @ power
        if np.max(np.abs(power - np.eye(power.shape[0]))) < 1e-9:
            return k
    raise RuntimeError(f"Ad_L order exceeded {4 * d} on block r={r}")


def expected_l_gate_order(d: int, r: int) -> int:
    """Parity rule for the order of Ad_L on W_r."""
    if d % 2 == 1:
        return d // r
    return d // r if r % 2 == 0 else 2 * d // r


# ---------------------------------------------------------------------------
# SU(2) blocks on a spin qudit


def su2_blocks(s: float) -> list[IrrepBlock]:
    """Blocks J = 0..2S of the SU(2) conjugation action on L(H_S), obtained
    by diagonalizing the Casimir of the adjoint action; block J has
    dimension 2J + 1."""
    two_s = round(2 * s)
    if two_s > 8:
        raise ValueError("su2 blocks support S <= 4")
    d = two_s + 1
    ops = su2_spin_ops(s)
    eye = np.eye(d)
    casimir = np.zeros((d * d, d * d), dtype=complex)
    for a in (ops.sx, ops.sy, ops.sz):
        ad = np.kron(eye, a) - np.kron(a.T, eye)  # vec(A X - X A)
        casimir += ad @ ad
    w, v = np.linalg.eigh(casimir)
    blocks = []
    for j in range(two_s + 1):
        target = j * (j + 1)
        cols = v[:, np.abs(w - target) < 0.5]
        if cols.shape[1] != 2 * j + 1:
            raise RuntimeError(f"Casimir eigenspace J={j} has dimension {cols.shape[1]}")
        projector = cols @ cols.conj().T

        def character(g: np.ndarray, p=projector) -> complex:
            return complex(np.trace(p @ conjugation_superop(np.asarray(g, dtype=complex))))

        blocks.append(
            IrrepBlock(label=f"J={j}", dim=2 * j + 1, system_dim=d, projector=projector, character=character)
        )
    return blocks


@lru_cache(maxsize=None)
def _sy_eig(d: int) -> tuple[np.ndarray, np.ndarray]:
    ops = su2_spin_ops((d - 1) / 2)
    w, v = np.linalg.eigh(ops.sy)
    return w, v


def su2_rotation(s: float, alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Euler rotation e^(-i alpha Sz) e^(-i beta Sy) e^(-i gamma Sz) in the
    spin-S representation."""
    d = round(2 * s) + 1
    m = s - np.arange(d)
    w, v = _sy_eig(d)
    ry = (v * np.exp(-1j * beta * w)) @ v.conj().T
    return (np.exp(-1j * alpha * m)[:, None] * ry) * np.exp(-1j * gamma * m)[None, :]


def rotation_angle(alpha: float, beta: float, gamma: float) -> float:
    """Overall rotation angle theta in [0, 2pi]: cos(theta/2) =
    cos(beta/2) cos((alpha+gamma)/2)."""
    c = math.cos(beta / 2) * math.cos((alpha + gamma) / 2)
    return 2 * math.acos(min(1.0, max(-1.0, c)))


def su2_char(j: float, theta: np.ndarray) -> np.ndarray:
    """Character of the spin-j irrep at rotation angle theta, evaluated as
    the cosine sum over weights (no 0/0 at theta = 0)."""
    m = j - np.arange(round(2 * j) + 1)
    return np.cos(np.outer(np.atleast_1d(theta), m)).sum(axis=1)


def haar_su2_angles(gen: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Euler angles of Haar-SU(2) rotations: alpha, gamma uniform on
    [0, 2pi) and cos(beta) uniform on [-1, 1] (the sin(beta) density).

    gamma covers [0, 2pi) rather than [0, 4pi); this identifies +/-U, which
    leaves every quantity used here (Ad_U, |chi|^(2t), integer-J characters)
    unchanged.
    """
    alpha = gen.uniform(0.0, 2 * np.pi, size=n)
    beta = np.arccos(gen.uniform(-1.0, 1.0, size=n))
    gamma = gen.uniform(0.0, 2 * np.pi, size=n)
    return alpha, beta, gamma


def su2_frame_potential_mc(
    s: float, t: float, samples: int, rng: RandomSource
) -> tuple[float, float]:
    """Monte Carlo estimate (value, stderr) of the spin-S frame potential
    E |chi_S(g)|^(2t) over Haar-SU(2)."""
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    gen = rng.generator()
    alpha, beta, gamma = haar_su2_angles(gen, samples)
    half = np.cos(beta / 2) * np.cos((alpha + gamma) / 2)
    theta = 2 * np.arccos(np.clip(half, -1.0, 1.0))
    x = np.abs(su2_char(s, theta)) ** (2 * t)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(samples))


# ---------------------------------------------------------------------------
# noise models


@dataclass
class NoiseModel:
    """CPTP channel given by a Kraus list; Kraus completeness is validated."""

    kind: str
    params: dict
    kraus: list[np.ndarray]

    def __post_init__(self) -> None:
        d = self.kraus[0].shape[0]
        acc = sum(k.conj().T @ k for k in self.kraus)
        if np.max(np.abs(acc - np.eye(d))) > 1e-10:
            raise ValueError("Kraus operators must satisfy sum K^dag K = I to 1e-10")

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    def superop(self) -> np.ndarray:
        return sum(conjugation_superop(k) for k in self.kraus)


def no_noise(d: int) -> NoiseModel:
    return NoiseModel(kind="none", params={}, kraus=[np.eye(d, dtype=complex)])


def depolarizing_noise(d: int, p: float) -> NoiseModel:
    """Lambda(rho) = (1-p) rho + p Tr(rho) I/d via the Pauli Kraus form."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarizing strength must be in [0, 1]")
    paulis = pauli_stack(d)
    kraus = [math.sqrt(1 - p * (d * d - 1) / (d * d)) * np.eye(d, dtype=complex)]
    for k in range(1, d * d):
        kraus.append(math.sqrt(p) / d * paulis[k])
    return NoiseModel(kind="depolarizing", params={"p": p}, kraus=kraus)


def overrotation_noise(d: int, delta: float, generator: np.ndarray | None = None) -> NoiseModel:
    """Fixed unitary error exp(-i delta H); H defaults to the number operator
    diag(0..d-1)."""
    h = np.diag(np.arange(d, dtype=float)) if generator is None else np.asarray(generator)
    from .linalg import hermitian_exp

    return NoiseModel(
        kind="overrotation", params={"delta": delta}, kraus=[hermitian_exp(h, -delta)]
    )


def damping_noise(d: int, gamma: float) -> NoiseModel:
    """Amplitude-style damping toward |0>: K_0 = |0><0| + sqrt(1-gamma) sum_{j>0} |j><j|,
    K_j = sqrt(gamma) |0><j|."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("damping strength must be in [0, 1]")
    k0 = np.diag(np.concatenate([[1.0], np.full(d - 1, math.sqrt(1 - gamma))])).astype(complex)
    kraus = [k0]
    for j in range(1, d):
        k = np.zeros((d, d), dtype=complex)
        k[0, j] = math.sqrt(gamma)
        kraus.append(k)
    return NoiseModel(kind="damping", params={"gamma": gamma}, kraus=kraus)


def parse_noise(spec: str, d: int) -> NoiseModel:
    """Parse 'none', 'depol:p', 'overrot:delta' or 'damp:gamma'."""
    parts = spec.split(":")
    if parts[0] == "none":
        return no_noise(d)
    if parts[0] == "depol":
        return depolarizing_noise(d, float(parts[1]))
    if parts[0] == "overrot":
        return overrotation_noise(d, float(parts[1]))
    if parts[0] == "damp":
        return damping_noise(d, float(parts[1]))
    raise ValueError(f"unknown noise spec {spec!r}")


def twirl_eigenvalue(noise: NoiseModel, block: IrrepBlock) -> float:
    """Schur scalar Tr(P_block Lambda^hat)/dim(block) by which the twirled
    channel acts on a multiplicity-free block."""
    val = np.trace(block.projector @ noise.superop()) / block.dim
    return float(val.real)


# ---------------------------------------------------------------------------
# RB protocol simulation


@dataclass
class RBConfig:
    """Sequence lengths (strictly increasing), sequences per length, shot
    count (None = exact probabilities), state/measurement (defaults
    |0><0| for both), and the seed."""

    lengths: list[int]
    sequences: int = 200
    shots: int | None = None
    rho: np.ndarray | None = None
    meas: np.ndarray | None = None
    seed: RandomSource = field(default_factory=lambda: RandomSource(0))

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.lengths, self.lengths[1:])):
            raise ValueError("lengths must be strictly increasing")
        if any(n < 1 for n in self.lengths):
            raise ValueError("lengths must be >= 1")


@dataclass
class RBData:
    """Character-weighted survival signals, one row per block."""

    block_labels: list[str]
    lengths: list[int]
    signals: np.ndarray  # (n_blocks, n_lengths)
    sequences: int
    shots: int | None


def rb_simulate(
    group: FiniteUnitaryGroup,
    blocks: list[IrrepBlock],
    cfg: RBConfig,
    noise: NoiseModel,
    char_table: np.ndarray | None = None,
) -> RBData:
    """Character RB on a finite group.

    For every sequence U_1..U_N the gates U_1 U_0, U_2, ..., U_N and the
    compiled inverse (U_N ... U_1)^dag are applied with the noise channel
    after every gate, inversion included. The average over the initial gate
    U_0 is the exact sum over the whole group with weights
    (dim_r/|G|) conj(chi_r(U_0)); sequences are sampled. In shot mode each
    per-U_0 probability is binomial-sampled before the weighted sum.
    """
    d = group.dim
    rho = np.diag([1.0] + [0.0] * (d - 1)).astype(complex) if cfg.rho is None else np.asarray(cfg.rho, complex)
    meas = np.diag([1.0] + [0.0] * (d - 1)).astype(complex) if cfg.meas is None else np.asarray(cfg.meas, complex)

    gates = np.stack(group.elements)
    # vec(U0 rho U0^dag) for the whole group, and the character table
    w_states = np.einsum("nij,jk,nlk->iln", gates, rho, gates.conj()).reshape(d * d, -1, order="F")
    if char_table is None:
        char_table = np.stack([np.array([b.character(g) for g in group.elements]) for b in blocks])
    if char_table.shape != (len(blocks), group.size):
        raise ValueError("character table shape must be (n_blocks, |G|)")
    _check_block_overlap(blocks, rho, meas)

    lam = noise.superop()
    meas_vec = vec(meas).conj()
    dims = np.array([b.dim for b in blocks], dtype=float)
    gen = cfg.seed.generator()

    signals = np.zeros((len(blocks), len(cfg.lengths)))
    for li, length in enumerate(cfg.lengths):
        acc = np.zeros(len(blocks))
        for _ in range(cfg.sequences):
            ids = gen.integers(0, group.size, size=length)
            total = lam @ conjugation_superop(group.elements[ids[0]])
            product = group.elements[ids[0]]
            for k in ids[1:]:
                total = lam @ conjugation_superop(group.elements[k]) @ total
                product = group.elements[k] @ product
            inv = group.find(product.conj().T)
            if inv is None:
                raise RuntimeError("inversion gate not found in the group index")
            total = lam @ conjugation_superop(group.elements[inv]) @ total
            probs = np.real(meas_vec @ total @ w_states)
            if cfg.shots is not None:
                probs = gen.binomial(cfg.shots, np.clip(probs, 0.0, 1.0)) / cfg.shots
            acc += (dims / group.size) * np.real(char_table.conj() @ probs)
        signals[:, li] = acc / cfg.sequences
    return RBData(
        block_labels=[b.label for b in blocks],
        lengths=list(cfg.lengths),
        signals=signals,
        sequences=cfg.sequences,
        shots=cfg.shots,
    )


def _check_block_overlap(blocks: list[IrrepBlock], rho: np.ndarray, meas: np.ndarray) -> None:
    for b in blocks:
        amp = np.vdot(vec(meas), b.projector @ vec(rho))
        if abs(amp) < 1e-12:
            raise ValueError(f"state/measurement pair has no overlap with block {b.label}")


@dataclass
class _Su2Quadrature:
    matrices: np.ndarray  # (n_nodes, d, d)
    weights: np.ndarray  # (n_nodes,) Haar quadrature weights summing to 1
    thetas: np.ndarray  # rotation angles per node


@lru_cache(maxsize=None)
def _su2_u0_quadrature(two_s: int, order: int = 16) -> _Su2Quadrature:
    """Euler-angle product quadrature (uniform alpha/gamma, Gauss-Legendre in
    cos beta) exact for the U_0 character average at S <= 3."""
    from numpy.polynomial.legendre import leggauss

    s = two_s / 2
    nodes, glw = leggauss(order)
    alphas = 2 * np.pi * np.arange(order) / order
    gammas = 2 * np.pi * np.arange(order) / order
    mats, weights, thetas = [], [], []
    for u, w in zip(nodes, glw):
        beta = float(np.arccos(u))
        for alpha in alphas:
            for gamma in gammas:
                mats.append(su2_rotation(s, alpha, beta, gamma))
                weights.append(w / 2 / order / order)
                thetas.append(rotation_angle(alpha, beta, gamma))
    return _Su2Quadrature(
        matrices=np.array(mats), weights=np.array(weights), thetas=np.array(thetas)
    )


def su2_rb_simulate(s: float, noise: NoiseModel, cfg: RBConfig) -> RBData:
    """Character RB for Haar-SU(2) gates on a spin-S qudit.

    The protocol state and measurement both default to the highest-weight
    projector rho = M = |S,S><S,S|, whose overlap with block J is the
    squared Clebsch-Gordan factor (2J+1)(2S)!^2/((2S+J+1)!(2S-J)!) > 0.
    (Adding the lowest-weight projector to M would zero out every odd-J
    amplitude: the weight-0 operator of J = 1 is S_z, and Tr(M S_z) = 0 for
    that symmetric M.) The U_0 average uses the fixed 16^3 Euler-angle
    quadrature; the inversion gate is the exact adjoint of the accumulated
    product.
    """
    two_s = round(2 * s)
    if two_s > 6:
        raise ValueError("su2 RB supports S <= 3")
    d = two_s + 1
    if cfg.rho is None:
        rho = np.zeros((d, d), dtype=complex)
        rho[0, 0] = 1.0
    else:
        rho = np.asarray(cfg.rho, dtype=complex)
    meas = rho.copy() if cfg.meas is None else np.asarray(cfg.meas, dtype=complex)

    quad = _su2_u0_quadrature(two_s)
    w_states = np.einsum(
        "nij,jk,nlk->iln", quad.matrices, rho, quad.matrices.conj()
    ).reshape(d * d, -1, order="F")
    j_values = list(range(two_s + 1))
    char_table = np.stack([su2_char(j, quad.thetas) for j in j_values])
    blocks = su2_blocks(s)
    _check_block_overlap(blocks, rho, meas)

    lam = noise.superop()
    meas_vec = vec(meas).conj()
    dims = np.array([2 * j + 1 for j in j_values], dtype=float)
    gen = cfg.seed.generator()

    signals = np.zeros((len(j_values), len(cfg.lengths)))
    for li, length in enumerate(cfg.lengths):
        acc = np.zeros(len(j_values))
        for _ in range(cfg.sequences):
            alpha, beta, gamma = haar_su2_angles(gen, length)
            total = None
            product = None
            for k in range(length):
                g = su2_rotation(s, alpha[k], beta[k], gamma[k])
                step = lam @ conjugation_superop(g)
                total = step if total is None else step @ total
                product = g if product is None else g @ product
            total = lam @ conjugation_superop(product.conj().T) @ total
            probs = np.real(meas_vec @ total @ w_states)
            if cfg.shots is not None:
                probs = gen.binomial(cfg.shots, np.clip(probs, 0.0, 1.0)) / cfg.shots
            acc += dims * np.real((char_table.conj() * quad.weights) @ probs)
        signals[:, li] = acc / cfg.sequences
    return RBData(
        block_labels=[f"J={j}" for j in j_values],
        lengths=list(cfg.lengths),
        signals=signals,
        sequences=cfg.sequences,
        shots=cfg.shots,
    )


# ---------------------------------------------------------------------------
# decay fitting


@dataclass
class DecayFit:
    """A f^N least-squares fit: amplitude, rate, fit residual and the 2x2
    parameter covariance."""

    amplitude: float
    rate: float
    residual: float
    covariance: np.ndarray


def fit_decay(lengths: np.ndarray, signals: np.ndarray) -> DecayFit:
    """Fit A * f^N: log-linear initialization where signals allow it,
    nonlinear refinement always."""
    lengths = np.asarray(lengths, dtype=float)
    signals = np.asarray(signals, dtype=float)
    if len(lengths) < 3:
        raise ValueError("need at least 3 distinct lengths")
    if np.all(signals > 0):
        slope, intercept = np.polyfit(lengths, np.log(signals), 1)
        a0, f0 = math.exp(intercept), math.exp(slope)
    else:
        # fit-domain fallback: nonlinear-only from a neutral start
        a0, f0 = float(signals[0]) if signals[0] != 0 else 1.0, 0.9

    def resid(params):
        a, f = params
        return a * np.sign(f) * np.abs(f) ** lengths - signals

    sol = least_squares(resid, x0=[a0, f0], method="lm", xtol=1e-15, ftol=1e-15)
    if not sol.success:
        raise FitError(f"decay fit failed: {sol.message}")
    a, f = sol.x
    dof = max(len(lengths) - 2, 1)
    rss = float(np.sum(sol.fun**2))
    jtj = sol.jac.T @ sol.jac
    try:
        cov = np.linalg.inv(jtj) * (rss / dof)
    except np.linalg.LinAlgError:
        cov = np.full((2, 2), np.nan)
    return DecayFit(amplitude=float(a), rate=float(f), residual=math.sqrt(rss), covariance=cov)
