"""Design metrics: frame potentials (integer and fractional order), Welch
tests, exact and Monte Carlo Haar references, moment operators, tensor
product expander distances, the weighted no-go residual, and cardinality
bounds for weighted unitary designs.

Conventions: the t-th frame potential of an ensemble {w_j, U_j} is
sum_{jk} w_j w_k |Tr(U_j^dag U_k)|^(2t); for a group it reduces to the
single character sum (1/|G|) sum_g |Tr g|^(2t), which is phase-safe because
traces enter only through their absolute value. The Welch test compares
sum_{jk} w_j w_k |<psi_j|psi_k>|^(2t) against Gamma(t+1)Gamma(d)/Gamma(t+d),
which at integer t is 1/binom(d+t-1, t).
"""

from __future__ import annotations

import itertools
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import ResourceLimitError
from .groups import FiniteUnitaryGroup
from .linalg import RandomSource, conjugation_superop, haar_unitaries, kron_power, unvec, vec

#: dense twirl machinery is capped at d^(2t) <= 4096 (1296^2 moment operator at d=6, t=2)
TWIRL_DIM_CAP = 4096


# ---------------------------------------------------------------------------
# ensembles


@dataclass
class WeightedStateEnsemble:
    """Unit vectors with nonnegative weights summing to one."""

    dim: int
    states: np.ndarray  # (N, dim)
    weights: np.ndarray  # (N,)
    name: str = ""

    def __post_init__(self) -> None:
        self.states = np.asarray(self.states, dtype=complex)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.states.ndim != 2 or self.states.shape[1] != self.dim:
            raise ValueError("states must have shape (N, dim)")
        if self.weights.shape != (self.states.shape[0],):
            raise ValueError("weights length must match states")
        norms = np.linalg.norm(self.states, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise ValueError("states must be unit vectors to 1e-12")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 to 1e-12")

    @property
    def size(self) -> int:
        return self.states.shape[0]

    @classmethod
    def uniform(cls, states: np.ndarray, name: str = "") -> "WeightedStateEnsemble":
        states = np.asarray(states, dtype=complex)
        n = states.shape[0]
        return cls(dim=states.shape[1], states=states, weights=np.full(n, 1.0 / n), name=name)


@dataclass
class WeightedUnitaryEnsemble:
    """Unitaries with real weights summing to one."""

    dim: int
    unitaries: np.ndarray  # (N, dim, dim)
    weights: np.ndarray  # (N,)
    name: str = ""

    def __post_init__(self) -> None:
        self.unitaries = np.asarray(self.unitaries, dtype=complex)
        self.weights = np.asarray(self.weights, dtype=float)
        if abs(self.weights.sum() - 1.0) > 1e-10:
            raise ValueError("weights must sum to 1")
        eye = np.eye(self.dim)
        for u in self.unitaries:
            if np.max(np.abs(u.conj().T @ u - eye)) > 1e-10:
                raise ValueError("every matrix must be unitary to 1e-10")

    @property
    def size(self) -> int:
        return self.unitaries.shape[0]

    @classmethod
    def uniform(cls, unitaries, name: str = "") -> "WeightedUnitaryEnsemble":
        unitaries = np.asarray(unitaries, dtype=complex)
        n = unitaries.shape[0]
        return cls(dim=unitaries.shape[1], unitaries=unitaries, weights=np.full(n, 1.0 / n), name=name)

    @classmethod
    def from_group(cls, group: FiniteUnitaryGroup) -> "WeightedUnitaryEnsemble":
        return cls.uniform(np.stack(group.elements), name=group.name)


# ---------------------------------------------------------------------------
# Welch test


def welch_lhs(ens: WeightedStateEnsemble, t: float) -> float:
    """sum_{jk} w_j w_k |<psi_j|psi_k>|^(2t) by direct double sum."""
    if t <= 0:
        raise ValueError("t must be positive")
    gram = ens.states @ ens.states.conj().T
    overlap_sq = np.abs(gram) ** 2
    return float(ens.weights @ (overlap_sq**t) @ ens.weights)


def welch_rhs(d: int, t: float) -> float:
    """Gamma(t+1)Gamma(d)/Gamma(t+d); equals 1/binom(d+t-1, t) at integer t."""
    if t <= 0:
        raise ValueError("t must be positive")
    return float(np.exp(gammaln(t + 1) + gammaln(d) - gammaln(t + d)))


def welch_ratio(ens: WeightedStateEnsemble, t: float) -> float:
    return welch_lhs(ens, t) / welch_rhs(ens.dim, t)


# ---------------------------------------------------------------------------
# frame potentials


def frame_potential(ens: FiniteUnitaryGroup | WeightedUnitaryEnsemble, t: float) -> float:
    """Frame potential at (possibly fractional) order t.

    Groups use the single sum (1/|G|) sum_g |Tr g|^(2t); general weighted
    ensembles use the pairwise double sum.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if isinstance(ens, FiniteUnitaryGroup):
        tr = np.abs(ens.traces())
        return float(np.mean((tr * tr) ** t))
    return frame_potential_pairwise(ens.unitaries, ens.weights, t)


def frame_potential_pairwise(unitaries: np.ndarray, weights: np.ndarray, t: float) -> float:
    """Double-sum frame potential sum_{jk} w_j w_k |Tr(U_j^dag U_k)|^(2t)."""
    unitaries = np.asarray(unitaries, dtype=complex)
    n, d, _ = unitaries.shape
    flat = unitaries.reshape(n, d * d)
    gram = flat.conj() @ flat.T  # gram[j, k] = Tr(U_j^dag U_k)
    mod_sq = np.abs(gram) ** 2
    w = np.asarray(weights, dtype=float)
    return float(w @ (mod_sq**t) @ w)


@lru_cache(maxsize=None)
def haar_reference_integer(d: int, t: int) -> int:
    """Exact Haar frame potential at integer t: the number of permutations of
    {1..t} with no increasing subsequence longer than d, counted by brute
    force. Equals t! for t <= d."""
    if not 1 <= t <= 8:
        raise ResourceLimitError("integer Haar reference enumerates t! permutations; need 1 <= t <= 8")
    count = 0
    for perm in itertools.permutations(range(t)):
        if _longest_increasing(perm) <= d:
            count += 1
    return count


def _longest_increasing(seq: tuple[int, ...]) -> int:
    tails: list[int] = []
    for x in seq:
        i = bisect_left(tails, x)
        if i == len(tails):
            tails.append(x)
        else:
            tails[i] = x
    return len(tails)


def haar_reference_fractional(d: int, t: float) -> tuple[float, bool]:
    """Haar frame potential reference for real t > 0.

    d = 2 has the exact closed form Gamma(2t+1)/(Gamma(t+1)Gamma(t+2)); for
    d > 2 the Gaussian-limit surrogate Gamma(t+1) is returned with
    ``exact=False`` (a good approximation only in the regime t <= d).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if d == 2:
        return float(np.exp(gammaln(2 * t + 1) - gammaln(t + 1) - gammaln(t + 2))), True
    return float(np.exp(gammaln(t + 1))), False


def haar_trace_moment_mc(
    d: int,
    t: float | np.ndarray,
    samples: int,
    rng: RandomSource,
    chunk: int = 100_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo estimate of int |Tr U|^(2t) dU with standard errors.

    Accepts a scalar t or a grid; the same unitary samples are reused across
    the grid. Returns (estimate, stderr) arrays of the grid's shape.
    Accumulation is chunked with a fixed reduction order for reproducibility.
    """
    if samples < 1000:
        raise ValueError("need at least 1e3 samples")
    t_grid = np.atleast_1d(np.asarray(t, dtype=float))
    gen = rng.generator()
    sums = np.zeros(len(t_grid))
    sq_sums = np.zeros(len(t_grid))
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        u = haar_unitaries(d, n, gen)
        mod_sq = np.abs(np.einsum("nii->n", u)) ** 2
        for i, ti in enumerate(t_grid):
            x = mod_sq**ti
            sums[i] += x.sum()
            sq_sums[i] += (x * x).sum()
        done += n
    mean = sums / samples
    var = np.maximum(sq_sums / samples - mean**2, 0.0)
    stderr = np.sqrt(var / samples)
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return mean[0], stderr[0]
    return mean, stderr


# ---------------------------------------------------------------------------
# eigenangle spacing (d = 2)


def spacing_density(delta: np.ndarray) -> np.ndarray:
    """p(Delta) = (1/pi) (1 - Delta/2pi)(1 - cos Delta) on [0, 2pi)."""
    delta = np.asarray(delta, dtype=float)
    return (1.0 - delta / (2 * np.pi)) * (1.0 - np.cos(delta)) / np.pi


def spacing_cdf(delta: np.ndarray) -> np.ndarray:
    """Closed-form CDF of the d = 2 Haar eigenangle gap density."""
    x = np.asarray(delta, dtype=float)
    first = x - np.sin(x)
    second = x * x / 2 - x * np.sin(x) - np.cos(x) + 1.0
    return (first - second / (2 * np.pi)) / np.pi


def spacing_density_test(samples: int, rng: RandomSource, chunk: int = 100_000) -> float:
    """Kolmogorov-Smirnov statistic of sampled U(2) eigenangle gaps against
    the analytic CDF."""
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    gen = rng.generator()
    gaps = []
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        u = haar_unitaries(2, n, gen)
        phases = np.angle(np.linalg.eigvals(u)) % (2 * np.pi)
        gaps.append(np.abs(phases[:, 1] - phases[:, 0]))
        done += n
    delta = np.sort(np.concatenate(gaps))
    cdf = spacing_cdf(delta)
    n = len(delta)
    grid = np.arange(n)
    return float(max(np.max(cdf - grid / n), np.max((grid + 1) / n - cdf)))


def ks_critical_value(samples: int, alpha: float = 0.01) -> float:
    """Asymptotic KS critical value c(alpha)/sqrt(n); c(0.01) = 1.63."""
    coeffs = {0.1: 1.22, 0.05: 1.36, 0.01: 1.63}
    if alpha not in coeffs:
        raise ValueError(f"no tabulated coefficient for alpha={alpha}")
    return coeffs[alpha] / math.sqrt(samples)


# ---------------------------------------------------------------------------
# permutation operators, symmetric projector, exact twirl


def permutation_operator(d: int, perm: tuple[int, ...]) -> np.ndarray:
    """W_perm on (C^d)^(x t): slot k of the output holds input slot perm(k)."""
    t = len(perm)
    dt = d**t
    idx = np.arange(dt)
    digits = np.empty((t, dt), dtype=np.int64)
    rem = idx
    for k in range(t - 1, -1, -1):
        digits[k] = rem % d
        rem = rem // d
    out = np.zeros(dt, dtype=np.int64)
    for k in range(t):
        out = out * d + digits[perm[k]]
    w = np.zeros((dt, dt), dtype=complex)
    w[out, idx] = 1.0
    return w


def symmetric_projector(d: int, t: int) -> np.ndarray:
    """Projector onto the symmetric subspace, (1/t!) sum_pi W_pi."""
    if d**t > TWIRL_DIM_CAP:
        raise ResourceLimitError(f"d^t = {d**t} exceeds the dense cap {TWIRL_DIM_CAP}")
    acc = np.zeros((d**t, d**t), dtype=complex)
    count = 0
    for perm in itertools.permutations(range(t)):
        acc += permutation_operator(d, perm)
        count += 1
    return acc / count


def _perm_compose(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    """(a o b)(k) = a(b(k)), matching W_a W_b = W_{b o a}."""
    return tuple(a[b[k]] for k in range(len(a)))


def _perm_inverse(a: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(a)
    for i, x in enumerate(a):
        inv[x] = i
    return tuple(inv)


def _cycle_count(a: tuple[int, ...]) -> int:
    seen = [False] * len(a)
    cycles = 0
    for i in range(len(a)):
        if seen[i]:
            continue
        cycles += 1
        j = i
        while not seen[j]:
            seen[j] = True
            j = a[j]
    return cycles


@dataclass
class MomentOperator:
    """t-fold twirl data: the operator Delta_{E,t} = sum_j p_j U_j^(dag x t) (x) U_j^(x t)
    and the matrix of the twirl channel X -> sum_j p_j U_j^(dag x t) X U_j^(x t)
    on column-major vec(X)."""

    t: int
    dim: int
    delta: np.ndarray
    twirl_matrix: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        dt = self.dim**self.t
        return unvec(self.twirl_matrix @ vec(np.asarray(x, dtype=complex)), dt)


def haar_twirl(d: int, t: int) -> MomentOperator:
    """The exact Haar t-fold twirl: the orthogonal projection onto
    span{W_pi} computed from the Gram matrix Tr(W_pi^dag W_sigma) =
    d^(#cycles), with a pseudo-inverse so the rank-deficient t > d case is
    handled."""
    if d ** (2 * t) > TWIRL_DIM_CAP:
        raise ResourceLimitError(f"d^(2t) = {d**(2*t)} exceeds the dense cap {TWIRL_DIM_CAP}")
    perms = list(itertools.permutations(range(t)))
    gram = np.empty((len(perms), len(perms)))
    for i, a in enumerate(perms):
        inv_a = _perm_inverse(a)
        for j, b in enumerate(perms):
            gram[i, j] = float(d) ** _cycle_count(_perm_compose(b, inv_a))
    gram_pinv = np.linalg.pinv(gram, rcond=1e-10)
    vw = np.stack([vec(permutation_operator(d, p)) for p in perms], axis=1)
    omega = (vw @ gram_pinv @ vw.conj().T).astype(complex)
    delta = _partial_transpose_first(omega, d**t)
    return MomentOperator(t=t, dim=d, delta=delta, twirl_matrix=omega)


def _partial_transpose_first(omega: np.ndarray, dt: int) -> np.ndarray:
    """Delta = E[(U^dag)^(xt) (x) U^(xt)] from the twirl projection matrix
    Omega = E[conj(U)^(xt) (x) U^(xt)]; a transpose on the first tensor factor."""
    o4 = omega.reshape(dt, dt, dt, dt)
    return np.ascontiguousarray(o4.transpose(2, 1, 0, 3)).reshape(dt * dt, dt * dt)


def ensemble_moment_operator(ens: WeightedUnitaryEnsemble, t: int) -> MomentOperator:
    """Delta_{E,t} and the twirl matrix of a finite weighted ensemble."""
    d = ens.dim
    if d ** (2 * t) > TWIRL_DIM_CAP:
        raise ResourceLimitError(f"d^(2t) = {d**(2*t)} exceeds the dense cap {TWIRL_DIM_CAP}")
    dt = d**t
    delta = np.zeros((dt * dt, dt * dt), dtype=complex)
    twirl = np.zeros_like(delta)
    for w, u in zip(ens.weights, ens.unitaries):
        ut = kron_power(u, t)
        udt = ut.conj().T
        delta += w * np.kron(udt, ut)
        twirl += w * conjugation_superop(udt)
    return MomentOperator(t=t, dim=d, delta=delta, twirl_matrix=twirl)


def tpe_eta(ens: WeightedUnitaryEnsemble | FiniteUnitaryGroup, t: int) -> float:
    """Tensor-product-expander distance: the spectral norm of
    Delta_{E,t} - Delta_{Haar,t} (diamond-norm distances are out of scope;
    reported values are operator-norm)."""
    if isinstance(ens, FiniteUnitaryGroup):
        ens = WeightedUnitaryEnsemble.from_group(ens)
    mo = ensemble_moment_operator(ens, t)
    haar = haar_twirl(ens.dim, t)
    return float(np.linalg.norm(mo.delta - haar.delta, 2))


# ---------------------------------------------------------------------------
# weighted no-go residual


def best_weighting_residual(group: FiniteUnitaryGroup, t: int) -> float:
    """Minimal Frobenius residual || sum_g w_g T_g - T_Haar ||_F over real
    weights with sum w = 1, where T_g is the vectorized t-fold conjugation
    map of g.

    Weights may be signed (the affine constraint alone), and by convexity
    the optimum is attained on conjugation-invariant weightings, so the
    problem reduces to one variable per conjugacy class. The Gram identities
    <T_g, T_h> = |Tr(g^dag h)|^(2t) and <T_g, T_Haar> = <T_Haar, T_Haar> =
    M_t (the exact Haar moment) turn the objective into
    w^T G w - M_t without forming any d^(4t) matrices.
    """
    d = group.dim
    n = group.size
    if n * d ** (2 * t) > 10**8:
        raise ResourceLimitError("group too large for the weighted-residual optimization")
    classes = group.conjugacy_classes()
    flat = np.stack([u.reshape(-1) for u in group.elements])
    k_hat = np.empty((len(classes), len(classes)))
    for i, ci in enumerate(classes):
        rep = flat[ci[0]]
        phi = np.abs(flat @ rep.conj()) ** (2 * t)  # phi[h] = |Tr(rep^dag h)|^(2t)
        for j, cj in enumerate(classes):
            k_hat[i, j] = phi[cj].mean()
    k_hat = (k_hat + k_hat.T) / 2
    m = len(classes)
    kkt = np.zeros((m + 1, m + 1))
    kkt[:m, :m] = 2 * k_hat
    kkt[:m, m] = 1.0
    kkt[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    w = sol[:m]
    value = float(w @ k_hat @ w) - haar_reference_integer(d, t)
    return math.sqrt(max(value, 0.0))


# ---------------------------------------------------------------------------
# cardinality bounds for weighted unitary designs


def cardinality_bounds(d: int, t: int) -> tuple[int, int]:
    """(lower, upper) = (D(d, ceil(t/2), floor(t/2)), D(d, t, t)) cardinality
    bounds for weighted unitary t-designs."""
    if d > 6 or t > 4:
        raise ResourceLimitError("cardinality bounds implemented for d <= 6, t <= 4")
    lower = irrep_space_dimension(d, math.ceil(t / 2), math.floor(t / 2))
    upper = irrep_space_dimension(d, t, t)
    return lower, upper


def irrep_space_dimension(d: int, r: int, s: int) -> int:
    """D(d, r, s) = sum over weakly decreasing length-d integer tuples mu with
    |mu| = r - s and positive-part sum <= r of d_mu^2, where d_mu is the Weyl
    product formula."""
    total = 0
    for mu in _signed_partitions(d, r, s):
        total += schur_dimension(mu) ** 2
    return total


def schur_dimension(mu: tuple[int, ...]) -> int:
    """d_mu = prod_{i<j} (mu_i - mu_j + j - i)/(j - i), exact."""
    d = len(mu)
    val = Fraction(1)
    for i in range(d):
        for j in range(i + 1, d):
            val *= Fraction(mu[i] - mu[j] + j - i, j - i)
    if val.denominator != 1:
        raise ValueError(f"non-integer Weyl dimension for {mu}")
    return int(val)


def _signed_partitions(d: int, r: int, s: int):
    """Weakly decreasing integer d-tuples with sum r - s and positive sum <= r."""
    for pos_total in range(max(0, r - s), r + 1):
        neg_total = pos_total - (r - s)
        for pos in _partitions_at_most(pos_total, d):
            for neg in _partitions_at_most(neg_total, d - len(pos)):
                mu = list(pos) + [0] * (d - len(pos) - len(neg)) + [-x for x in reversed(neg)]
                yield tuple(mu)


def _partitions_at_most(n: int, max_parts: int, max_val: int | None = None):
    """Partitions of n into at most max_parts positive parts, weakly decreasing."""
    if n == 0:
        yield ()
        return
    if max_parts == 0:
        return
    cap = n if max_val is None else min(n, max_val)
    for first in range(cap, 0, -1):
        for rest in _partitions_at_most(n - first, max_parts - 1, first):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# reporting record


@dataclass
class FramePotentialReport:
    """One frame-potential sweep: t grid, values, references and ratios."""

    ensemble_id: str
    t_values: list[float]
    potentials: list[float]
    references: list[float]
    exact_reference: list[bool]
    samples: int | None = None
    stderr: list[float] | None = None
    rows: list[dict] = field(init=False)

    def __post_init__(self) -> None:
        self.rows = []
        for i, t in enumerate(self.t_values):
            row = {
                "t": t,
                "F": self.potentials[i],
                "reference": self.references[i],
                "ratio": self.potentials[i] / self.references[i],
                "exactness": "exact" if self.exact_reference[i] else "approximate",
                "samples": self.samples if self.samples else "",
                "stderr": self.stderr[i] if self.stderr else "",
            }
            self.rows.append(row)
