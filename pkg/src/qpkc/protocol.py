"""The three-phase run: pair distribution and CHSH check, key measurements, cipher.

Random streams: every run takes one :class:`RandomSource` and splits it by
phase, so adding an eavesdropper (stream 1) never shifts the draws of the
honest parties.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import _kernels, _serial, cipher, qmath
from .channels import ChannelId, channel_state, gate_matrix
from .keys import PrivateKey, PublicKey, SecretParams, derive_private_key, derive_public_key, gen_secret_params
from .qmath import Party, RandomSource

MIN_SACRIFICE = 16
DEFAULT_FRACTION = 0.25
DEFAULT_THRESHOLD = 2.5

# CHSH settings: Bob in {z, x}, Alice at +-45 degrees
BOB_SETTINGS = np.array([0.0, math.pi / 2])
ALICE_SETTINGS = np.array([math.pi / 4, qmath.normalize_axis(-math.pi / 4)])

STREAM_KEYS, STREAM_EVE, STREAM_CHECK, STREAM_BOB, STREAM_ALICE, STREAM_MESSAGE = range(6)


class ProtocolError(ValueError):
    pass


class Verdict(enum.Enum):
    CLEAN = "CLEAN"
    EAVESDROPPED = "EAVESDROPPED"


@dataclass
class PairPool:
    """Shared pairs. ``tampered`` and the ``eve_*`` arrays are simulation-side only."""

    states: np.ndarray
    tampered: np.ndarray
    eve_labels: np.ndarray
    eve_axes: np.ndarray

    @classmethod
    def honest(cls, states: np.ndarray) -> "PairPool":
        states = np.array(states, dtype=np.complex128).reshape(-1, 4)
        m = states.shape[0]
        return cls(states, np.zeros(m, bool), np.full(m, -1, np.int8), np.full(m, np.nan))

    def __len__(self) -> int:
        return self.states.shape[0]

    def subset(self, idx) -> "PairPool":
        return PairPool(
            self.states[idx].copy(), self.tampered[idx].copy(),
            self.eve_labels[idx].copy(), self.eve_axes[idx].copy(),
        )


@dataclass(frozen=True)
class EveCheckReport:
    sacrificed: int
    s_estimate: float
    threshold: float
    verdict: Verdict
    indices: Tuple[int, ...] = ()
    correlations: Tuple[Tuple[float, float], Tuple[float, float]] = ((0.0, 0.0), (0.0, 0.0))


@dataclass(frozen=True)
class OutcomeString:
    labels: Tuple[int, ...]
    axes: Tuple[float, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.axes):
            raise ProtocolError("labels and axes differ in length")

    def __len__(self) -> int:
        return len(self.labels)


# ---------------------------------------------------------------------------
# phase I
# ---------------------------------------------------------------------------

def distribute_pairs(m: int, rng: Optional[RandomSource] = None, eve=None) -> PairPool:
    """``m`` copies of Phi+, optionally passed through an eavesdropper first."""
    if m < 1:
        raise ProtocolError(f"need at least one pair, got m={m}")
    pool = PairPool.honest(np.tile(channel_state(ChannelId.PHI_PLUS), (m, 1)))
    if eve is not None:
        if rng is None:
            raise ProtocolError("an eavesdropper needs a random source")
        eve.tamper_pool(pool, rng)
    return pool


def chsh_from_correlations(e: np.ndarray) -> float:
    """``|E00 + E01 + E10 - E11|`` with rows Bob's setting, columns Alice's."""
    return float(abs(e[0, 0] + e[0, 1] + e[1, 0] - e[1, 1]))


def chsh_exact(states: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
    """Exact CHSH value of a (weighted) ensemble of pair states."""
    states = np.asarray(states, dtype=np.complex128).reshape(-1, 4)
    if weights is None:
        weights = np.full(states.shape[0], 1.0 / states.shape[0])
    e = np.empty((2, 2))
    for i, b in enumerate(BOB_SETTINGS):
        for j, a in enumerate(ALICE_SETTINGS):
            e[i, j] = float(np.dot(weights, _kernels.expectation_batch(states, b, a)))
    return chsh_from_correlations(e)


def eavesdrop_check(
    pool: PairPool,
    fraction: float = DEFAULT_FRACTION,
    threshold: float = DEFAULT_THRESHOLD,
    rng: Optional[RandomSource] = None,
) -> Tuple[EveCheckReport, PairPool]:
    if not 0.0 < fraction < 1.0:
        raise ProtocolError(f"fraction must lie in (0, 1), got {fraction!r}")
    if rng is None:
        raise ProtocolError("eavesdrop check needs a random source")
    m = len(pool)
    k = math.ceil(fraction * m)
    if k < MIN_SACRIFICE:
        raise ProtocolError(f"only {k} pairs would be sacrificed, need >= {MIN_SACRIFICE}")
    idx = np.sort(rng.permutation(m)[:k])
    bob_choice = rng.integers(0, 2, size=k)
    alice_choice = rng.integers(0, 2, size=k)
    ub, ua = rng.random(k), rng.random(k)

    lb, post = _kernels.measure_batch(pool.states[idx], BOB_SETTINGS[bob_choice], Party.BOB, ub)
    la, _ = _kernels.measure_batch(post, ALICE_SETTINGS[alice_choice], Party.ALICE, ua)
    prod = (1 - 2 * lb.astype(np.int64)) * (1 - 2 * la.astype(np.int64))

    e = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            sel = (bob_choice == i) & (alice_choice == j)
            if np.any(sel):
                e[i, j] = prod[sel].mean()
    s = chsh_from_correlations(e)
    verdict = Verdict.CLEAN if s > threshold else Verdict.EAVESDROPPED
    keep = np.ones(m, bool)
    keep[idx] = False
    report = EveCheckReport(
        sacrificed=k, s_estimate=s, threshold=float(threshold), verdict=verdict,
        indices=tuple(int(i) for i in idx),
        correlations=tuple(tuple(float(v) for v in row) for row in e),
    )
    return report, pool.subset(np.flatnonzero(keep))


def apply_channel_gates(pool: PairPool, p: SecretParams) -> PairPool:
    """Alice's channel gates on her halves of the first ``p.n`` pairs."""
    if len(pool) < p.n:
        raise ProtocolError(f"pool has {len(pool)} pairs, key needs {p.n}")
    out = pool.subset(np.arange(p.n))
    u = np.stack([gate_matrix(g) for g in p.gates])
    m = out.states.reshape(-1, 2, 2)
    out.states = np.einsum("nba,nca->nbc", m, u).reshape(-1, 4)
    return out


# ---------------------------------------------------------------------------
# phase II
# ---------------------------------------------------------------------------

def _measure(pool: PairPool, axes: Sequence[float], which: Party, rng: RandomSource) -> OutcomeString:
    if len(pool) != len(axes):
        raise ProtocolError(f"pool has {len(pool)} pairs, key has {len(axes)} axes")
    labels, post = _kernels.measure_batch(pool.states, np.asarray(axes), which, rng.random(len(axes)))
    pool.states = post
    return OutcomeString(tuple(int(v) for v in labels), tuple(float(a) for a in axes))


def bob_measure(pool: PairPool, k: PublicKey, rng: RandomSource) -> OutcomeString:
    """Bob's outcomes K_B; collapses the pool in place."""
    return _measure(pool, k.axes, Party.BOB, rng)


def alice_measure(pool: PairPool, k: PrivateKey, rng: RandomSource) -> OutcomeString:
    return _measure(pool, k.axes, Party.ALICE, rng)


def infer_bob_outcomes(ka: OutcomeString, k: PrivateKey) -> OutcomeString:
    if len(ka) != k.n:
        raise ProtocolError("Alice's outcomes and private key differ in length")
    labels = tuple(a if s > 0 else 1 - a for a, s in zip(ka.labels, k.corr_signs))
    return OutcomeString(labels, derive_public_key(k.params).axes)


# ---------------------------------------------------------------------------
# full run
# ---------------------------------------------------------------------------

def default_pool_size(n: int, fraction: float = DEFAULT_FRACTION, min_check: int = 1000) -> int:
    """Enough pairs for ``n`` message positions and a check of about ``min_check`` pairs."""
    return max(math.ceil(n / (1.0 - fraction)) + MIN_SACRIFICE, math.ceil(min_check / fraction))


@dataclass
class RunRecord:
    m: int
    n: int
    seed: int
    check: EveCheckReport
    public: PublicKey
    private: PrivateKey
    pool: PairPool
    k_b: Optional[OutcomeString] = None
    k_a: Optional[OutcomeString] = None
    k_b_inferred: Optional[OutcomeString] = None
    ciphertext: Optional[cipher.Ciphertext] = None
    recovered: Optional[cipher.Message] = None
    extra: Dict[str, object] = field(default_factory=dict)

    @property
    def verdict(self) -> Verdict:
        return self.check.verdict

    def transcript(self) -> dict:
        p = self.private.params
        return {
            "seed": self.seed,
            "m": self.m,
            "n": self.n,
            "sacrificed": list(self.check.indices),
            "s_estimate": self.check.s_estimate,
            "threshold": self.check.threshold,
            "verdict": self.check.verdict.value,
            "channels": [c.value for c in p.channels],
            "gates": [g.value for g in p.gates],
            "public_axes": list(self.public.axes),
            "private_axes": list(self.private.axes),
            "corr_signs": list(self.private.corr_signs),
            "k_b": list(self.k_b.labels) if self.k_b else None,
            "k_a": list(self.k_a.labels) if self.k_a else None,
            "cipher_gates": (
                [g.value for g in cipher.choose_gates(self.k_b.labels)] if self.k_b else None
            ),
        }


def run_protocol(
    message: cipher.Message,
    n: int,
    rng: RandomSource,
    m: Optional[int] = None,
    fraction: float = DEFAULT_FRACTION,
    threshold: float = DEFAULT_THRESHOLD,
    eve=None,
) -> RunRecord:
    """Run all three phases. Stops after the check when the verdict is EAVESDROPPED."""
    if m is None:
        m = default_pool_size(n, fraction)
    if m <= n:
        raise ProtocolError(f"need m > n, got m={m}, n={n}")
    params = gen_secret_params(n, rng.split(STREAM_KEYS))
    public, private = derive_public_key(params), derive_private_key(params)

    pool = distribute_pairs(m, rng.split(STREAM_EVE), eve)
    report, remaining = eavesdrop_check(pool, fraction, threshold, rng.split(STREAM_CHECK))
    record = RunRecord(m=m, n=n, seed=rng.seed, check=report, public=public, private=private, pool=remaining)
    if report.verdict is Verdict.EAVESDROPPED:
        return record
    if len(remaining) < n:
        raise ProtocolError(f"{len(remaining)} pairs left after the check, need {n}")

    channels = apply_channel_gates(remaining, params)
    record.pool = channels
    record.k_b = bob_measure(channels, public, rng.split(STREAM_BOB))
    record.ciphertext = cipher.encrypt(message, cipher.choose_gates(record.k_b.labels))

    record.k_a = alice_measure(channels, private, rng.split(STREAM_ALICE))
    record.k_b_inferred = infer_bob_outcomes(record.k_a, private)
    record.recovered = cipher.decrypt(record.ciphertext, cipher.choose_gates(record.k_b_inferred.labels))
    return record


# ---------------------------------------------------------------------------
# split-party sessions (file based encrypt / decrypt)
# ---------------------------------------------------------------------------

def bob_encrypt(
    public: PublicKey, message: cipher.Message, rng: RandomSource
) -> Tuple[cipher.Ciphertext, np.ndarray]:
    """Bob's side with only the public key.

    Bob measures his halves of fresh Phi+ pairs. Alice's channel gates act on
    the other particle and commute with this measurement, so she can apply
    them afterwards. Returns the ciphertext and Alice's halves (shape (n, 2)).
    """
    pool = distribute_pairs(public.n)
    kb = bob_measure(pool, public, rng)
    halves = pool.states.reshape(-1, 2, 2)
    # Bob's factor is a known eigenstate after collapse; read Alice's factor off it
    bob_part = np.stack([qmath.eigenstate(a, lab) for a, lab in zip(kb.axes, kb.labels)])
    alice = np.einsum("nb,nba->na", np.conj(bob_part), halves)
    return cipher.encrypt(message, cipher.choose_gates(kb.labels)), alice


def alice_decrypt(
    private: PrivateKey, ct: cipher.Ciphertext, alice_halves: np.ndarray, rng: RandomSource
) -> cipher.Message:
    halves = np.asarray(alice_halves, dtype=np.complex128)
    if halves.shape != (private.n, 2):
        raise ProtocolError(f"{halves.shape[0]} particles for a key of length {private.n}")
    if ct.n != private.n:
        raise ProtocolError(f"ciphertext block length {ct.n} does not match key length {private.n}")
    u = np.stack([gate_matrix(g) for g in private.params.gates])
    halves = np.einsum("nij,nj->ni", u, halves)
    pool = PairPool.honest(np.stack([qmath.tensor(qmath.KET_0, h) for h in halves]))
    ka = alice_measure(pool, private, rng)
    kb = infer_bob_outcomes(ka, private)
    return cipher.decrypt(ct, cipher.choose_gates(kb.labels))


def serialize_particles(halves: np.ndarray) -> bytes:
    doc = {
        "version": _serial.FORMAT_VERSION,
        "kind": "particles",
        "n": int(len(halves)),
        "qubits": cipher._qubit_rows(np.asarray(halves)),
    }
    return _serial.dumps(doc).encode("utf-8")


def parse_particles(data: bytes | str) -> np.ndarray:
    doc = _serial.loads(data, "particles")
    n = _serial.require(doc, "n", int)
    rows = _serial.require(doc, "qubits", list, n)
    q = cipher._parse_rows(rows, "qubits")
    if np.max(np.abs(np.sum(np.abs(q) ** 2, axis=1) - 1.0), initial=0.0) > qmath.EXACT_TOL:
        raise _serial.FormatError("particle states are not normalised")
    return q
