"""Finite unitary groups: generalized Paulis, qudit Cliffords in any
dimension, cyclic groups, stabilizer-state orbits, SU(2) spin operators and
the 120-element SL(2,F5) qubit representation.

Groups are closed by breadth-first multiplication with dedup modulo a
global phase (except where the +/-1 structure matters, as for SL(2,F5)).
Closure uses the 1e-6 rounding grid of :mod:`.linalg` with an exact
comparison fallback; floating point throughout, no cyclotomic arithmetic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import GroupClosureError, ResourceLimitError
from .linalg import (
    HASH_EXACT_TOL,
    assert_unitary,
    canonical_phase,
    kron,
    raw_key,
)

#: hard cap protecting BFS closure against dedup-tolerance blowups
DEFAULT_MAX_GROUP_SIZE = 200_000


# ---------------------------------------------------------------------------
# generalized Paulis and Clifford generators


def shift_matrix(d: int) -> np.ndarray:
    """X_d with X|j> = |j+1 mod d>."""
    x = np.zeros((d, d), dtype=complex)
    for j in range(d):
        x[(j + 1) % d, j] = 1.0
    return x


def clock_matrix(d: int) -> np.ndarray:
    """Z_d = diag(omega^j), omega = exp(2*pi*i/d)."""
    omega = np.exp(2j * np.pi / d)
    return np.diag(omega ** np.arange(d))


def pauli_unitary(d: int, label: tuple[int, int]) -> np.ndarray:
    """X_d^a Z_d^b for a label (a, b) of exponents mod d."""
    if d < 2:
        raise ValueError("qudit dimension must be >= 2")
    a, b = label
    a %= d
    b %= d
    omega = np.exp(2j * np.pi / d)
    # (X^a Z^b)[j+a mod d, j] = omega^(b*j)
    m = np.zeros((d, d), dtype=complex)
    for j in range(d):
        m[(j + a) % d, j] = omega ** (b * j)
    return m


def pauli_stack(d: int) -> np.ndarray:
    """All d^2 Paulis as an array of shape (d^2, d, d), label order (a, b) = divmod(k, d)."""
    return np.stack([pauli_unitary(d, (a, b)) for a in range(d) for b in range(d)])


def fourier_gate(d: int) -> np.ndarray:
    """Discrete Fourier transform F[j, k] = omega^(jk)/sqrt(d)."""
    if d < 2:
        raise ValueError("qudit dimension must be >= 2")
    j = np.arange(d)
    omega = np.exp(2j * np.pi / d)
    return omega ** np.outer(j, j) / np.sqrt(d)


def quadratic_phase_gate(d: int) -> np.ndarray:
    """Diagonal Clifford L: diag(omega^(j(j+1)/2)) for odd d, diag(zeta^(j^2))
    with zeta = exp(i*pi/d) for even d.

    Satisfies L Z L^dag = Z and L X L^dag = omega X Z (odd d) or zeta X Z (even d).
    """
    if d < 2:
        raise ValueError("qudit dimension must be >= 2")
    j = np.arange(d)
    if d % 2 == 1:
        omega = np.exp(2j * np.pi / d)
        return np.diag(omega ** (j * (j + 1) // 2))
    zeta = np.exp(1j * np.pi / d)
    return np.diag(zeta ** (j * j))


# ---------------------------------------------------------------------------
# symplectic structure


class SymplecticMatrix(NamedTuple):
    """2x2 matrix ((w, x), (y, z)) over Z_d with wz - xy = 1 (mod d)."""

    w: int
    x: int
    y: int
    z: int


def sl2_enumerate(d: int) -> list[SymplecticMatrix]:
    """All 2x2 matrices over Z_d with determinant 1."""
    if d < 2:
        raise ValueError("modulus must be >= 2")
    out = []
    for w in range(d):
        for x in range(d):
            for y in range(d):
                for z in range(d):
                    if (w * z - x * y) % d == 1:
                        out.append(SymplecticMatrix(w, x, y, z))
    return out


def sl2_order(d: int) -> int:
    """|SL2(Z_d)| = d^3 * prod_{p | d} (1 - p^-2)."""
    n = d**3
    for p in sorted({p for p in range(2, d + 1) if d % p == 0 and _is_prime(p)}):
        n = n * (p * p - 1) // (p * p)
    return n


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, int(math.isqrt(n)) + 1))


def pauli_orbits(d: int) -> dict[int, set[tuple[int, int]]]:
    """Partition of Z_d^2 into the sets V_r = {(a, b): gcd(a, b, d) = r}, r | d.

    The label (0, 0) has gcd d and forms the singleton V_d.
    """
    if d < 2:
        raise ValueError("qudit dimension must be >= 2")
    orbits: dict[int, set[tuple[int, int]]] = {}
    for a in range(d):
        for b in range(d):
            r = math.gcd(math.gcd(a, b), d)
            orbits.setdefault(r, set()).add((a, b))
    return orbits


# ---------------------------------------------------------------------------
# finite unitary groups


@dataclass
class FiniteUnitaryGroup:
    """Deduplicated set of unitaries closed under multiplication.

    ``mod_phase`` controls whether dedup runs on the projective quotient
    (global phases removed, the default) or on raw matrices (needed when
    +/-U must stay distinct, as for SL(2,F5)). ``words`` stores one
    generator word per element for provenance.
    """

    dim: int
    elements: list[np.ndarray]
    index: dict[bytes, int]
    generators: list[np.ndarray] = field(default_factory=list)
    words: list[tuple[int, ...]] = field(default_factory=list)
    mod_phase: bool = True
    name: str = ""

    @property
    def size(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def _key(self, u: np.ndarray) -> tuple[np.ndarray, bytes]:
        if self.mod_phase:
            return canonical_phase(u)
        u = np.asarray(u, dtype=complex)
        return u, raw_key(u)

    def find(self, u: np.ndarray) -> int | None:
        """Element id of u (modulo phase if applicable), or None."""
        canon, key = self._key(u)
        i = self.index.get(key)
        if i is None:
            return None
        if np.max(np.abs(self.elements[i] - canon)) > 1e-6:
            return None
        return i

    def inverse_index(self, i: int) -> int:
        j = self.find(self.elements[i].conj().T)
        if j is None:
            raise GroupClosureError("adjoint of a group element not found in the index")
        return j

    def traces(self) -> np.ndarray:
        return np.array([np.trace(u) for u in self.elements])

    def conjugacy_classes(self) -> list[list[int]]:
        """Element ids grouped into conjugacy classes (orbit closure under
        conjugation by the stored generators)."""
        gens = self.generators if self.generators else self.elements
        seen = [False] * self.size
        classes = []
        for i in range(self.size):
            if seen[i]:
                continue
            orbit = [i]
            seen[i] = True
            frontier = [i]
            while frontier:
                new = []
                for j in frontier:
                    for g in gens:
                        c = g @ self.elements[j] @ g.conj().T
                        k = self.find(c)
                        if k is None:
                            raise GroupClosureError("conjugate fell outside the group index")
                        if not seen[k]:
                            seen[k] = True
                            orbit.append(k)
                            new.append(k)
                frontier = new
            classes.append(orbit)
        return classes


def generate_group(
    dim: int,
    generators: list[np.ndarray],
    max_size: int = DEFAULT_MAX_GROUP_SIZE,
    mod_phase: bool = True,
    name: str = "",
) -> FiniteUnitaryGroup:
    """Breadth-first closure of the given unitary generators.

    Dedup is phase-canonical (1e-6 grid with exact fallback) unless
    ``mod_phase=False``. Raises :class:`GroupClosureError` if the closure
    exceeds ``max_size``, which signals a non-finite or too-large group or a
    dedup-tolerance failure.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    for g in generators:
        assert_unitary(np.asarray(g, dtype=complex))
    group = FiniteUnitaryGroup(
        dim=dim,
        elements=[],
        index={},
        generators=[np.asarray(g, dtype=complex) for g in generators],
        mod_phase=mod_phase,
        name=name,
    )
    _close(group, np.eye(dim, dtype=complex), max_size)
    return group


def _close(group: FiniteUnitaryGroup, identity: np.ndarray, max_size: int) -> None:
    def add(u: np.ndarray, word: tuple[int, ...]) -> int | None:
        canon, key = group._key(u)
        i = group.index.get(key)
        if i is not None:
            if np.max(np.abs(group.elements[i] - canon)) > HASH_EXACT_TOL * 1e3:
                raise GroupClosureError("hash-grid collision between distinct elements")
            return None
        if len(group.elements) >= max_size:
            raise GroupClosureError(
                f"closure exceeded max_size={max_size}; group non-finite or tolerance failure"
            )
        group.elements.append(canon)
        group.index[key] = len(group.elements) - 1
        group.words.append(word)
        return len(group.elements) - 1

    add(identity, ())
    frontier = [0]
    while frontier:
        new: list[int] = []
        for i in frontier:
            for gi, g in enumerate(group.generators):
                j = add(group.elements[i] @ g, group.words[i] + (gi,))
                if j is not None:
                    new.append(j)
        frontier = new


def pauli_group(d: int) -> FiniteUnitaryGroup:
    """The d^2-element qudit Pauli (Heisenberg-Weyl) group modulo phases."""
    return generate_group(d, [shift_matrix(d), clock_matrix(d)], name=f"pauli:{d}")


def cyclic_group(d: int) -> FiniteUnitaryGroup:
    """Cyclic group C_d generated by the shift matrix."""
    return generate_group(d, [shift_matrix(d)], name=f"cyclic:{d}")


def clifford_group(d: int, max_size: int = DEFAULT_MAX_GROUP_SIZE) -> FiniteUnitaryGroup:
    """Single-qudit Clifford group mod phase, generated by {F, L, X, Z}.

    F and L realize the standard SL2(Z_d) generators on Pauli labels, X and Z
    supply the Pauli coset, so the closure has size d^2 * |SL2(Z_d)|.
    """
    gens = [fourier_gate(d), quadratic_phase_gate(d), shift_matrix(d), clock_matrix(d)]
    return generate_group(d, gens, max_size=max_size, name=f"clifford:{d}")


def clifford_order(d: int) -> int:
    """Predicted |Cl_d mod phase| = d^2 |SL2(Z_d)|."""
    return d * d * sl2_order(d)


# ---------------------------------------------------------------------------
# stabilizer states


@dataclass
class StabilizerStateSet:
    """All n-qubit stabilizer states as unit vectors, distinct modulo phase."""

    n: int
    states: np.ndarray  # shape (count, 2^n)

    @property
    def count(self) -> int:
        return self.states.shape[0]


def stabilizer_state_count(n: int) -> int:
    """Exact count 2^n * prod_{k=1..n} (2^k + 1)."""
    c = 2**n
    for k in range(1, n + 1):
        c *= 2**k + 1
    return c


def stabilizer_states(n: int) -> StabilizerStateSet:
    """Orbit of |0...0> under <H_i, S_i, CNOT_ij>, closed modulo phase.

    Supports n <= 3 (1080 states); larger n is outside the resource budget.
    """
    if not 1 <= n <= 3:
        raise ResourceLimitError("stabilizer enumeration supports 1 <= n <= 3")
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.diag([1, 1j]).astype(complex)
    gates = [_embed_1q(h, n, i) for i in range(n)]
    gates += [_embed_1q(s, n, i) for i in range(n)]
    gates += [_cnot(n, c, t) for c in range(n) for t in range(n) if c != t]

    start = np.zeros(2**n, dtype=complex)
    start[0] = 1.0
    states: list[np.ndarray] = []
    index: dict[bytes, int] = {}

    def add(v: np.ndarray) -> int | None:
        canon, key = canonical_phase(v)
        if key in index:
            return None
        states.append(canon)
        index[key] = len(states) - 1
        return len(states) - 1

    add(start)
    frontier = [0]
    while frontier:
        new = []
        for i in frontier:
            for g in gates:
                j = add(g @ states[i])
                if j is not None:
                    new.append(j)
        frontier = new
    return StabilizerStateSet(n=n, states=np.array(states))


def _embed_1q(gate: np.ndarray, n: int, i: int) -> np.ndarray:
    m = np.eye(1, dtype=complex)
    for k in range(n):
        m = kron(m, gate if k == i else np.eye(2, dtype=complex))
    return m


def _cnot(n: int, control: int, target: int) -> np.ndarray:
    dim = 2**n
    m = np.zeros((dim, dim), dtype=complex)
    for basis in range(dim):
        bits = [(basis >> (n - 1 - k)) & 1 for k in range(n)]
        if bits[control]:
            bits[target] ^= 1
        out = sum(bit << (n - 1 - k) for k, bit in enumerate(bits))
        m[out, basis] = 1.0
    return m


# ---------------------------------------------------------------------------
# SL(2, F5) qubit representation


def sl2f5_group() -> FiniteUnitaryGroup:
    """The 120-element binary icosahedral group as 2x2 unitaries.

    Built by closing the corrected generator set (entries are Z[omega] sums
    with omega = exp(2*pi*i/15)), then conjugating every element by the
    inverse square root of the group-averaged Gram matrix
    P = (1/|G|) sum_k g_k^dag g_k so the representation is unitary
    (the unitarian trick). +/-U are kept distinct, so dedup is not
    phase-canonical.
    """
    gens = sl2f5_raw_generators()
    elements, words = _sl2f5_raw_closure()
    p = sl2f5_gram_matrix(elements)
    w, v = np.linalg.eigh(p)
    sqrt_p = (v * np.sqrt(w)) @ v.conj().T
    inv_sqrt_p = (v * (1.0 / np.sqrt(w))) @ v.conj().T
    unitaries = [sqrt_p @ g @ inv_sqrt_p for g in elements]
    for u in unitaries:
        assert_unitary(u)
    return FiniteUnitaryGroup(
        dim=2,
        elements=unitaries,
        index={raw_key(u): i for i, u in enumerate(unitaries)},
        generators=[sqrt_p @ g @ inv_sqrt_p for g in gens],
        words=words,
        mod_phase=False,
        name="sl2f5",
    )


def _sl2f5_raw_closure() -> tuple[list[np.ndarray], list[tuple[int, ...]]]:
    gens = sl2f5_raw_generators()
    elements = [np.eye(2, dtype=complex)]
    words: list[tuple[int, ...]] = [()]
    index = {raw_key(elements[0]): 0}
    frontier = [0]
    while frontier:
        new = []
        for i in frontier:
            for gi, g in enumerate(gens):
                u = elements[i] @ g
                key = raw_key(u)
                if key in index:
                    continue
                if len(elements) >= 360:
                    raise GroupClosureError("SL(2,F5) closure exceeded 3x the expected size")
                elements.append(u)
                words.append(words[i] + (gi,))
                index[key] = len(elements) - 1
                new.append(len(elements) - 1)
        frontier = new
    if len(elements) != 120:
        raise GroupClosureError(f"SL(2,F5) closure has {len(elements)} elements, expected 120")
    return elements, words


def sl2f5_raw_generators() -> list[np.ndarray]:
    """Corrected (non-unitary) SL(2,F5) generators over Z[exp(2*pi*i/15)]."""
    w = np.exp(2j * np.pi / 15)

    def ws(*powers: int) -> complex:
        return sum(w**p for p in powers)

    k1 = np.array(
        [
            [-ws(11, 14), ws(6, 9)],
            [-ws(1, 2, 4, 7, 8, 13), ws(11, 14)],
        ]
    )
    k2 = np.array(
        [
            [w**10, ws(11, 14)],
            [-ws(2, 8), -(w**10)],
        ]
    )
    k3 = np.array(
        [
            [0.0, w**5],
            [-(w**10), -ws(3, 12)],
        ]
    )
    return [k1, k2, k3]


def sl2f5_raw_generators_alt() -> list[np.ndarray]:
    """A second, independent generator set for the same group (closes to the
    same 120 elements up to a change of basis); its averaged Gram matrix is
    (1/2)[[9+3*sqrt5, 6+3*sqrt5 + i*sqrt(27+12*sqrt5)], [conj, 9+3*sqrt5]].

    The bottom-left entry of the second generator must be omega^11 + omega^14
    (the determinant-1 reading; with a minus sign the matrix has |det| != 1
    and the closure diverges).
    """
    w = np.exp(2j * np.pi / 15)

    def ws(*powers: int) -> complex:
        return sum(w**p for p in powers)

    g1 = np.array(
        [
            [-ws(11, 14), -ws(11, 14)],
            [w**10, -ws(1, 4)],
        ]
    )
    g2 = np.array(
        [
            [-ws(1, 2, 4, 8) - 2 * ws(11, 14), ws(6, 9)],
            [ws(11, 14), -(w**5)],
        ]
    )
    return [g1, g2]


def sl2f5_gram_matrix(raw_elements: list[np.ndarray] | None = None) -> np.ndarray:
    """Averaged Gram matrix P = (1/120) sum g^dag g over the raw closure."""
    if raw_elements is None:
        raw_elements, _ = _sl2f5_raw_closure()
    return sum(g.conj().T @ g for g in raw_elements) / len(raw_elements)


# ---------------------------------------------------------------------------
# SU(2) spin operators


class SpinOps(NamedTuple):
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    sp: np.ndarray
    sm: np.ndarray


def su2_spin_ops(s: float) -> SpinOps:
    """Spin operators in the |S, m> basis ordered m = S, S-1, ..., -S.

    S+|S,m> = sqrt((S-m)(S+m+1)) |S,m+1>, and cyclic [Sx, Sy] = i Sz.
    """
    two_s = round(2 * s)
    if two_s < 0 or abs(2 * s - two_s) > 1e-12:
        raise ValueError("2S must be a nonnegative integer")
    d = two_s + 1
    m = s - np.arange(d)  # basis index k holds m = S - k
    sz = np.diag(m).astype(complex)
    sp = np.zeros((d, d), dtype=complex)
    for k in range(1, d):
        # raising maps index k -> k-1
        sp[k - 1, k] = np.sqrt((s - m[k]) * (s + m[k] + 1))
    sm = sp.conj().T
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j
    return SpinOps(sx=sx, sy=sy, sz=sz, sp=sp, sm=sm)


# ---------------------------------------------------------------------------
# JSON export


def group_to_json(group: FiniteUnitaryGroup) -> str:
    """Serialize to {dim, size, elements: [[re, im, ...] row-major]} with 1e-6 rounding."""
    elements = []
    for u in group.elements:
        flat = u.reshape(-1)
        row = []
        for z in flat:
            row.append(round(float(z.real), 6))
            row.append(round(float(z.imag), 6))
        elements.append(row)
    return json.dumps({"dim": group.dim, "size": group.size, "elements": elements})


def states_to_json(state_set: StabilizerStateSet) -> str:
    """Serialize a state set to {dim, size, elements: [[re, im, ...]]} with
    the same 1e-6 export rounding as groups."""
    elements = []
    for v in state_set.states:
        row = []
        for z in v:
            row.append(round(float(z.real), 6))
            row.append(round(float(z.imag), 6))
        elements.append(row)
    return json.dumps(
        {"dim": int(state_set.states.shape[1]), "size": state_set.count, "elements": elements}
    )


def group_from_json(text: str) -> FiniteUnitaryGroup:
    doc = json.loads(text)
    d = int(doc["dim"])
    elements = []
    for row in doc["elements"]:
        flat = np.array(row[0::2]) + 1j * np.array(row[1::2])
        elements.append(flat.reshape(d, d))
    index = {}
    canon_elements = []
    for u in elements:
        canon, key = canonical_phase(u)
        canon_elements.append(canon)
        index[key] = len(canon_elements) - 1
    return FiniteUnitaryGroup(dim=d, elements=canon_elements, index=index)
