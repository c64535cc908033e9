"""Eavesdropper models and the Monte Carlo security experiments."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import _kernels, cipher, qmath
from .channels import CHANNELS
from .qmath import Party, RandomSource

CHUNK = 1 << 16


class AttackKind(enum.Enum):
    INTERCEPT_RESEND_FIXED = "intercept-resend"
    INTERCEPT_RESEND_RANDOM = "intercept-resend-random"
    CHANNEL_GUESS = "channel-guess"
    CIPHERTEXT_DISTINGUISH = "distinguish"


@dataclass(frozen=True)
class EveStrategy:
    """``coverage`` is the fraction of pairs Eve touches; ``axis`` is used by the fixed variant."""

    kind: AttackKind
    axis: float = 0.0
    coverage: float = 1.0
    both_legs: bool = False

    def __post_init__(self):
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"coverage must lie in [0, 1], got {self.coverage!r}")

    @property
    def intercepts(self) -> bool:
        return self.kind in (AttackKind.INTERCEPT_RESEND_FIXED, AttackKind.INTERCEPT_RESEND_RANDOM)

    def _axes(self, m: int, rng: RandomSource) -> np.ndarray:
        if self.kind is AttackKind.INTERCEPT_RESEND_FIXED:
            return np.full(m, qmath.normalize_axis(self.axis))
        return np.where(rng.integers(0, 2, size=m) == 0, qmath.AXIS_Z, qmath.AXIS_X)

    def tamper_pool(self, pool, rng: RandomSource) -> None:
        """Measure-and-resend on the Bob-bound qubits of a :class:`PairPool`, in place."""
        if not self.intercepts:
            raise ValueError(f"strategy {self.kind.value} does not touch pairs")
        m = len(pool)
        # draw everything for all pairs so coverage only masks, never shifts, the stream
        hit = rng.random(m) < self.coverage
        axes = self._axes(m, rng)
        u_bob = rng.random(m)
        u_alice = rng.random(m)
        idx = np.flatnonzero(hit)
        if idx.size == 0:
            return
        labels, post = _kernels.measure_batch(pool.states[idx], axes[idx], Party.BOB, u_bob[idx])
        if self.both_legs:
            _, post = _kernels.measure_batch(post, axes[idx], Party.ALICE, u_alice[idx])
        pool.states[idx] = post
        pool.tampered[idx] = True
        pool.eve_labels[idx] = labels
        pool.eve_axes[idx] = axes[idx]


def tamper_pair(s: np.ndarray, strategy: EveStrategy, rng: RandomSource) -> np.ndarray:
    """Single-pair intercept-resend. The result is a product state."""
    if not strategy.intercepts:
        raise ValueError(f"strategy {strategy.kind.value} does not touch pairs")
    axis = strategy._axes(1, rng)[0]
    _, out = qmath.measure_one(s, axis, Party.BOB, rng)
    if strategy.both_legs:
        _, out = qmath.measure_one(out, axis, Party.ALICE, rng)
    return out


def intercepted_ensemble(s: np.ndarray, axis: float) -> Tuple[np.ndarray, np.ndarray]:
    """Exact post-interception ensemble ``(states, probabilities)`` for one Bob-leg measurement."""
    probs = qmath.outcome_probabilities(s, axis, Party.BOB)
    states = []
    for label in (0, 1):
        post = qmath.collapse(s, axis, Party.BOB, label)
        states.append(post if post is not None else np.asarray(s, dtype=np.complex128))
    return np.array(states), probs


@dataclass
class AttackReport:
    strategy: str
    trials: int
    successes: int
    detection_rate: float
    success_rate: float
    theory_value: float
    details: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")

    def to_dict(self) -> dict:
        return asdict(self)


def undetected_prob(n: int) -> float:
    """Chance of guessing all ``n`` channels, ``8**-n`` (exact in binary64)."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return 0.125 ** n


def _chunked(trials: int, rng: RandomSource, fn: Callable[[int, RandomSource], tuple], workers: int = 1) -> np.ndarray:
    """Sum the tuples ``fn(size, stream)`` over fixed-size chunks.

    Chunk ``i`` always uses ``rng.split(i)``, so the total does not depend on
    ``workers``.
    """
    sizes = [min(CHUNK, trials - start) for start in range(0, trials, CHUNK)]
    jobs = [(size, rng.split(i)) for i, size in enumerate(sizes)]
    if workers <= 1 or len(jobs) == 1:
        parts = [fn(size, stream) for size, stream in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda job: fn(*job), jobs))
    return np.sum(np.array(parts, dtype=np.float64), axis=0)


def channel_guess_experiment(trials: int, rng: RandomSource, n_pairs: int = 1, workers: int = 1) -> AttackReport:
    """Eve guesses ``n_pairs`` secret channels uniformly; success needs all of them right.

    Under the identification that a wrong channel exposes Eve, the detection
    rate is reported as ``1 - success_rate``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    k = len(CHANNELS)

    def chunk(size: int, stream: RandomSource) -> tuple:
        truth = stream.integers(0, k, size=(size, n_pairs))
        guess = stream.integers(0, k, size=(size, n_pairs))
        return (np.count_nonzero(np.all(truth == guess, axis=1)),)

    hits = int(_chunked(trials, rng, chunk, workers)[0])
    rate = hits / trials
    return AttackReport(
        strategy=AttackKind.CHANNEL_GUESS.value, trials=trials, successes=hits,
        detection_rate=1.0 - rate, success_rate=rate, theory_value=undetected_prob(n_pairs),
        details={"n_pairs": n_pairs},
    )


def ciphertext_distinguish_experiment(trials: int, rng: RandomSource, workers: int = 1) -> AttackReport:
    """Eve holds one ciphertext qubit and knows the plaintext it came from.

    She applies the optimal (Helstrom) measurement to decide between H|psi>
    and Z|psi>. The theory value is the discrimination bound averaged over
    the sampled plaintexts.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def chunk(size: int, stream: RandomSource) -> tuple:
        t = stream.uniform(0.0, qmath.TWO_PI, size=size)
        g = stream.integers(0, 2, size=size)
        u = stream.random(size)
        c, s = np.cos(t), np.sin(t)
        inner = (c * (c + s) - s * (c - s)) / math.sqrt(2.0)  # <Z psi|H psi> for real psi
        bound = 0.5 * (1.0 + np.sqrt(np.clip(1.0 - inner ** 2, 0.0, None)))
        return np.count_nonzero(_kernels.helstrom_batch(t, g, u)), float(np.sum(bound))

    hits, bound_sum = _chunked(trials, rng, chunk, workers)
    hits = int(hits)
    theory = float(bound_sum / trials)
    return AttackReport(
        strategy=AttackKind.CIPHERTEXT_DISTINGUISH.value, trials=trials, successes=hits,
        detection_rate=0.0, success_rate=hits / trials, theory_value=theory,
    )


@dataclass(frozen=True)
class AttackConfig:
    m: int = 2000
    n: int = 16
    fraction: float = 0.25
    threshold: float = 2.5
    strategy: Optional[EveStrategy] = None
    trials: int = 100


def _eve_guesses_gate(pool, k_b, public_axes) -> np.ndarray:
    """Positions where Eve's most likely guess of Bob's label is right."""
    tampered = pool.tampered
    ok = np.zeros(len(k_b), bool)
    for i in np.flatnonzero(tampered):
        # Eve resent eigenstate(eve_axis, eve_label); Bob then measured public_axes[i]
        sent = qmath.eigenstate(float(pool.eve_axes[i]), int(pool.eve_labels[i]))
        p0 = abs(np.vdot(qmath.eigenstate(public_axes[i], 0), sent)) ** 2
        guess = 0 if p0 >= 0.5 else 1
        ok[i] = guess == k_b.labels[i]
    return ok


def full_attack_run(config: AttackConfig, rng: RandomSource, workers: int = 1) -> AttackReport:
    """Complete protocol runs with Eve active.

    Detection means the CHSH verdict came back EAVESDROPPED. A success means
    the run was not detected and Eve holds Bob's exact gate for at least one
    message position, so she can undo that ciphertext qubit. The theory
    value is the ideal success rate, 0.
    """
    from .protocol import STREAM_MESSAGE, Verdict, run_protocol

    if config.trials < 1:
        raise ValueError("trials must be >= 1")
    eve = config.strategy

    def one(t: int) -> Tuple[bool, bool]:
        stream = rng.split(t)
        msg = cipher.encode_bits(stream.split(STREAM_MESSAGE).integers(0, 2, size=config.n))
        rec = run_protocol(msg, config.n, stream, m=config.m, fraction=config.fraction,
                           threshold=config.threshold, eve=eve)
        detected = rec.verdict is Verdict.EAVESDROPPED
        success = False
        if not detected and eve is not None:
            success = bool(np.any(_eve_guesses_gate(rec.pool, rec.k_b, rec.public.axes)))
        return detected, success

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results: List[Tuple[bool, bool]] = list(ex.map(one, range(config.trials)))
    else:
        results = [one(t) for t in range(config.trials)]
    detections = sum(d for d, _ in results)
    successes = sum(s for _, s in results)
    name = eve.kind.value if eve is not None else "none"
    return AttackReport(
        strategy=name, trials=config.trials, successes=successes,
        detection_rate=detections / config.trials, success_rate=successes / config.trials,
        theory_value=0.0,
        details={"m": config.m, "n": config.n, "fraction": config.fraction,
                 "threshold": config.threshold,
                 "coverage": eve.coverage if eve is not None else 0.0},
    )
