"""Dense complex linear algebra: Haar sampling, matrix exponentials,
phase canonicalization and seeded random streams.

All operators are plain ``numpy`` arrays of ``complex128``. Functions are
pure and safe to call concurrently; reproducibility across runs comes from
:class:`RandomSource`, which derives independent child streams
deterministically from a (seed, stream) pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNITARITY_TOL = 1e-10
#: rounding grid for dedup hash keys; coarse enough to absorb 1e-10 noise,
#: fine enough to separate distinct roots of unity for d <= 24
HASH_GRID = 1e-6
#: tolerance of the exact-comparison fallback behind the hash grid
HASH_EXACT_TOL = 1e-9

_STREAM_FANOUT = 2**20


@dataclass(frozen=True)
class RandomSource:
    """Deterministic random stream identified by (seed, stream).

    Identical (seed, stream) pairs reproduce identical sample sequences.
    ``child(i)`` derives disjoint substreams with a fixed fanout so that
    data-parallel Monte Carlo loops stay reproducible under any execution
    order.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, i: int) -> "RandomSource":
        if not 0 <= i < _STREAM_FANOUT:
            raise ValueError(f"substream index {i} outside fanout {_STREAM_FANOUT}")
        return RandomSource(self.seed, self.stream * _STREAM_FANOUT + i + 1)


def haar_unitary(d: int, rng: RandomSource | np.random.Generator) -> np.ndarray:
    """Sample one d x d unitary from the Haar measure.

    Complex Gaussian matrix, QR orthonormalization, then the diagonal phase
    correction that makes the distribution exactly Haar rather than merely
    orthonormal.
    """
    return haar_unitaries(d, 1, rng)[0]


def haar_unitaries(d: int, n: int, rng: RandomSource | np.random.Generator) -> np.ndarray:
    """Sample a batch of n Haar unitaries, shape (n, d, d)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    gen = rng.generator() if isinstance(rng, RandomSource) else rng
    z = gen.standard_normal((n, d, d)) + 1j * gen.standard_normal((n, d, d))
    q, r = np.linalg.qr(z)
    diag = np.einsum("nii->ni", r)
    q = q * (diag / np.abs(diag))[:, None, :]
    return q


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, left factor on the slow index."""
    return np.kron(a, b)


def kron_power(a: np.ndarray, t: int) -> np.ndarray:
    """t-fold Kronecker power of a matrix (t >= 0; t = 0 gives the 1x1 identity)."""
    out = np.eye(1, dtype=complex)
    for _ in range(t):
        out = np.kron(out, a)
    return out


def hermitian_exp(h: np.ndarray, s: float) -> np.ndarray:
    """exp(i*s*H) for Hermitian H, via eigendecomposition.

    Raises ValueError if H is not Hermitian to 1e-10 (max-norm).
    """
    h = np.asarray(h, dtype=complex)
    if np.max(np.abs(h - h.conj().T)) > UNITARITY_TOL:
        raise ValueError("input matrix is not Hermitian to 1e-10")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * s * w)) @ v.conj().T


def is_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol


def assert_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> None:
    if not is_unitary(u, tol):
        raise ValueError(f"matrix is not unitary to {tol}")


def canonical_phase(obj: np.ndarray) -> tuple[np.ndarray, bytes]:
    """Remove the global phase of a vector or matrix and return a hash key.

    The object is multiplied by the phase that makes its first entry of
    magnitude > 1e-9 real and positive. The key is the entrywise rounding
    of the result to the 1e-6 grid, packed to bytes, so that objects equal
    modulo a global phase collide. Raises ValueError on (near-)zero input.
    """
    a = np.asarray(obj, dtype=complex)
    flat = a.reshape(-1)
    big = np.abs(flat) > 1e-9
    if not np.any(big):
        raise ValueError("cannot canonicalize an all-zero object")
    j = int(np.argmax(big))
    pivot = flat[j]
    out = a * (abs(pivot) / pivot)
    # pin the pivot exactly real so a second application is a bit-identical no-op
    out_flat = out.reshape(-1)
    out_flat[j] = abs(out_flat[j])
    return out, _grid_key(out)


def _grid_key(a: np.ndarray) -> bytes:
    re = np.round(a.real / HASH_GRID).astype(np.int64)
    im = np.round(a.imag / HASH_GRID).astype(np.int64)
    # -0.0 rounds to 0 either way; int64 grid is exact for |entries| < 9e12
    return re.tobytes() + im.tobytes()


def raw_key(a: np.ndarray) -> bytes:
    """Hash key without phase canonicalization (for groups kept off the projective quotient)."""
    return _grid_key(np.asarray(a, dtype=complex))


def vec(x: np.ndarray) -> np.ndarray:
    """Column-major vectorization: vec(A X B) = (B^T (x) A) vec(X)."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape((d, d), order="F")


def conjugation_superop(u: np.ndarray) -> np.ndarray:
    """Matrix of X -> U X U^dag acting on column-major vec(X)."""
    return np.kron(np.conj(u), u)
