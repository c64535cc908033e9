"""Small exact linear algebra for one and two qubits.

States are plain numpy complex arrays: a single qubit is shape ``(2,)`` and a
pair is shape ``(4,)`` with index ``2 * bit_bob + bit_alice`` (Bob's particle
is always the first tensor factor). Operators are ``(2, 2)`` arrays.

Every measurement direction used by the protocol lies in the x-z plane of the
Bloch sphere, so an axis is a single angle ``phi`` with
``sigma(phi) = cos(phi) Z + sin(phi) X``. Outcome label 0 always means the +1
eigenstate ``cos(phi/2)|0> + sin(phi/2)|1>``.
"""

from __future__ import annotations

import enum
import math
from typing import Optional, Tuple

import numpy as np

from . import _kernels

EXACT_TOL = 1e-12
AXIS_TOL = 1e-10
TWO_PI = 2.0 * math.pi

IDENTITY = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2.0)

KET_0 = np.array([1, 0], dtype=np.complex128)
KET_1 = np.array([0, 1], dtype=np.complex128)
KET_PLUS = np.array([1, 1], dtype=np.complex128) / math.sqrt(2.0)
KET_MINUS = np.array([1, -1], dtype=np.complex128) / math.sqrt(2.0)

AXIS_Z = 0.0
AXIS_X = math.pi / 2


class Party(enum.IntEnum):
    BOB = _kernels.BOB
    ALICE = _kernels.ALICE


class NotUnitaryError(ValueError):
    pass


class AxisError(ValueError):
    """Raised when an operator is not a real, traceless in-plane observable."""


# ---------------------------------------------------------------------------
# random source
# ---------------------------------------------------------------------------

class RandomSource:
    """Seeded counter-based random stream (Philox).

    ``split(i)`` derives an independent child stream that depends only on the
    root seed and the path of split indices, never on how much the parent
    has been consumed.
    """

    def __init__(self, seed: int, path: Tuple[int, ...] = ()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.path = tuple(int(p) for p in path)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(seq))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, path={self.path})"

    def split(self, i: int) -> "RandomSource":
        return RandomSource(self.seed, self.path + (int(i),))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def normal(self, size=None):
        return self._gen.normal(size=size)


# ---------------------------------------------------------------------------
# predicates and constructors
# ---------------------------------------------------------------------------

def is_hermitian(m: np.ndarray, tol: float = EXACT_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def is_unitary(u: np.ndarray, tol: float = EXACT_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def _require_unitary(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2, 2) or not is_unitary(u):
        raise NotUnitaryError("operator is not a 2x2 unitary")
    return u


def qubit(alpha: complex, beta: complex, tol: float = EXACT_TOL) -> np.ndarray:
    """Build ``alpha|0> + beta|1>``; the amplitudes must already be normalised."""
    v = np.array([alpha, beta], dtype=np.complex128)
    if not np.all(np.isfinite(v)):
        raise ValueError("amplitudes must be finite")
    if abs(np.vdot(v, v).real - 1.0) > tol:
        raise ValueError(f"qubit is not normalised: |a|^2+|b|^2 = {np.vdot(v, v).real!r}")
    return v


def normalize_axis(phi: float) -> float:
    phi = math.fmod(float(phi), TWO_PI)
    if phi < 0.0:
        phi += TWO_PI
    if phi >= TWO_PI:  # fmod of values just below a multiple of 2pi
        phi = 0.0
    return phi


def observable_from_axis(phi: float) -> np.ndarray:
    return math.cos(phi) * SIGMA_Z + math.sin(phi) * SIGMA_X


def eigenstate(phi: float, label: int) -> np.ndarray:
    """Eigenstate of ``sigma(phi)`` carrying outcome ``label`` (0 -> +1, 1 -> -1)."""
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    if label == 0:
        return np.array([c, s], dtype=np.complex128)
    if label == 1:
        return np.array([-s, c], dtype=np.complex128)
    raise ValueError(f"label must be 0 or 1, got {label!r}")


def rotation(theta: float) -> np.ndarray:
    """Real rotation with U|0> = cos t|0> + sin t|1>, U|1> = -sin t|0> + cos t|1>."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def conjugate(m: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Return ``u^-1 m u``."""
    u = _require_unitary(u)
    return u.conj().T @ np.asarray(m, dtype=np.complex128) @ u


def axis_of(m: np.ndarray, tol: float = AXIS_TOL) -> Tuple[float, int]:
    """Invert :func:`observable_from_axis`.

    The sign is folded into the angle, so the returned sign is always +1.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.shape != (2, 2):
        raise AxisError("expected a 2x2 operator")
    if not is_hermitian(m, tol):
        raise AxisError("operator is not Hermitian")
    if abs(np.trace(m)) > tol:
        raise AxisError("operator has nonzero trace")
    if np.max(np.abs(m.imag)) > tol:
        raise AxisError("operator has a y component")
    zc, xc = m[0, 0].real, m[0, 1].real
    if abs(math.hypot(zc, xc) - 1.0) > tol:
        raise AxisError("operator eigenvalues are not +-1")
    return normalize_axis(math.atan2(xc, zc)), 1


def tensor(b: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Pair state with Bob's qubit ``b`` first and Alice's qubit ``a`` second."""
    return np.kron(np.asarray(b, dtype=np.complex128), np.asarray(a, dtype=np.complex128))


def lift(u: np.ndarray, which: Party) -> np.ndarray:
    """The 4x4 operator acting with ``u`` on one party and identity on the other."""
    u = np.asarray(u, dtype=np.complex128)
    return np.kron(u, IDENTITY) if which == Party.BOB else np.kron(IDENTITY, u)


def apply_single(u: np.ndarray, s: np.ndarray, which: Party) -> np.ndarray:
    u = _require_unitary(u)
    m = np.asarray(s, dtype=np.complex128).reshape(2, 2)
    out = u @ m if which == Party.BOB else m @ u.T
    return out.reshape(4)


def expectation(s: np.ndarray, axis_b: float, axis_a: float) -> float:
    return float(_kernels.expectation_batch(np.asarray(s)[None, :], axis_b, axis_a)[0])


def measure_one(
    s: np.ndarray, axis: float, which: Party, rng: RandomSource
) -> Tuple[int, np.ndarray]:
    labels, out = _kernels.measure_batch(
        np.asarray(s)[None, :], np.array([axis]), int(which), np.array([rng.random()])
    )
    return int(labels[0]), out[0]


def outcome_probabilities(s: np.ndarray, axis: float, which: Party) -> np.ndarray:
    """Exact Born probabilities ``[P(label 0), P(label 1)]`` for one party."""
    m = np.asarray(s, dtype=np.complex128).reshape(2, 2)
    probs = []
    for label in (0, 1):
        e = eigenstate(axis, label)
        v = e.conj() @ m if which == Party.BOB else m @ e.conj()
        probs.append(float(np.vdot(v, v).real))
    return np.array(probs)


def collapse(s: np.ndarray, axis: float, which: Party, label: int) -> Optional[np.ndarray]:
    """Post-measurement state for a given label, or None if it has probability 0."""
    e = eigenstate(axis, label)
    proj = np.outer(e, e.conj())
    out = lift(proj, which) @ np.asarray(s, dtype=np.complex128)
    nrm = np.linalg.norm(out)
    if nrm == 0.0:
        return None
    return out / nrm


def joint_distribution(s: np.ndarray, axis_b: float, axis_a: float, first: Party = Party.BOB) -> np.ndarray:
    """Exact joint label distribution ``P[label_bob, label_alice]`` via sequential collapse."""
    second = Party.ALICE if first == Party.BOB else Party.BOB
    axes = {Party.BOB: axis_b, Party.ALICE: axis_a}
    dist = np.zeros((2, 2))
    p_first = outcome_probabilities(s, axes[first], first)
    for l1 in (0, 1):
        if p_first[l1] == 0.0:
            continue
        post = collapse(s, axes[first], first, l1)
        p_second = outcome_probabilities(post, axes[second], second)
        for l2 in (0, 1):
            idx = (l1, l2) if first == Party.BOB else (l2, l1)
            dist[idx] = p_first[l1] * p_second[l2]
    return dist


def overlap(s: np.ndarray, t: np.ndarray) -> complex:
    """``<s|t>``."""
    s, t = np.asarray(s), np.asarray(t)
    if s.shape != t.shape:
        raise ValueError(f"dimension mismatch: {s.shape} vs {t.shape}")
    return complex(np.vdot(s, t))


def reduced_single(s: np.ndarray, which: Party) -> np.ndarray:
    m = np.asarray(s, dtype=np.complex128).reshape(2, 2)
    if which == Party.BOB:
        return m @ m.conj().T
    return m.T @ m.conj()


def purity(rho: np.ndarray) -> float:
    return float(np.trace(rho @ rho).real)

