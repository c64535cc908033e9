"""Public/private key generation from channel correlations.

Alice draws, per position, a channel, a base operator (Z or X) and a rotation
angle. The public key is the rotated base operator; the private key is the
axis on her own particle that is perfectly (anti-)correlated with it for the
chosen channel.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from . import _serial, qmath
from .channels import CHANNELS, ChannelId, GateTag, channel_state, channel_to_gate, correlation_matrix
from .qmath import RandomSource

DETERMINISM_TOL = 1e-10


class BaseOp(enum.Enum):
    Z = "Z"
    X = "X"

    @property
    def matrix(self) -> np.ndarray:
        return qmath.SIGMA_Z if self is BaseOp.Z else qmath.SIGMA_X

    @property
    def swapped(self) -> "BaseOp":
        return BaseOp.X if self is BaseOp.Z else BaseOp.Z


class KeyDerivationError(RuntimeError):
    """A derived private axis failed to be perfectly correlated with the public one."""


@dataclass(frozen=True)
class SecretParams:
    channels: Tuple[ChannelId, ...]
    gates: Tuple[GateTag, ...]
    base_ops: Tuple[BaseOp, ...]
    thetas: Tuple[float, ...]

    def __post_init__(self):
        n = len(self.channels)
        if n == 0:
            raise ValueError("secret parameters must cover at least one position")
        if not (len(self.gates) == len(self.base_ops) == len(self.thetas) == n):
            raise ValueError("secret parameter strings have different lengths")
        for g, c in zip(self.gates, self.channels):
            if channel_to_gate(c) is not g:
                raise ValueError(f"gate {g.value} does not create channel {c.value}")

    @property
    def n(self) -> int:
        return len(self.channels)

    @classmethod
    def from_channels(cls, channels, base_ops, thetas) -> "SecretParams":
        channels = tuple(channels)
        return cls(
            channels=channels,
            gates=tuple(channel_to_gate(c) for c in channels),
            base_ops=tuple(base_ops),
            thetas=tuple(float(t) for t in thetas),
        )


@dataclass(frozen=True)
class PublicKey:
    axes: Tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.axes)

    def fingerprint(self) -> str:
        return hashlib.sha256(serialize_public(self)).hexdigest()[:16]


@dataclass(frozen=True)
class PrivateKey:
    axes: Tuple[float, ...]
    corr_signs: Tuple[int, ...]
    params: SecretParams

    @property
    def n(self) -> int:
        return len(self.axes)


def gen_secret_params(n: int, rng: RandomSource) -> SecretParams:
    if n < 1:
        raise ValueError(f"key length must be >= 1, got {n}")
    ch_idx = rng.integers(0, len(CHANNELS), size=n)
    op_idx = rng.integers(0, 2, size=n)
    thetas = rng.uniform(0.0, qmath.TWO_PI, size=n)
    ops = (BaseOp.Z, BaseOp.X)
    return SecretParams.from_channels(
        [CHANNELS[i] for i in ch_idx], [ops[i] for i in op_idx], thetas.tolist()
    )


def public_axis(base_op: BaseOp, theta: float) -> float:
    return qmath.axis_of(qmath.conjugate(base_op.matrix, qmath.rotation(theta)))[0]


def derive_public_key(p: SecretParams) -> PublicKey:
    return PublicKey(tuple(public_axis(op, t) for op, t in zip(p.base_ops, p.thetas)))


def _plane_vector(phi: float) -> np.ndarray:
    return np.array([math.sin(phi), math.cos(phi)])  # (x, z) components


def private_axis(channel: ChannelId, pub_axis: float) -> Tuple[float, int]:
    """Alice's axis and correlation sign for one position.

    Her direction is ``T^T a`` for the channel's correlation matrix ``T`` and
    Bob's direction ``a``. The measurement axis is reported as an undirected
    line in ``[0, pi)`` and the orientation goes into the sign.
    """
    b = correlation_matrix(channel).as_array().T @ _plane_vector(pub_axis)
    b[np.abs(b) < 1e-15] = 0.0  # cos(pi/2) residue; keeps the z/x table exact
    phi = qmath.normalize_axis(math.atan2(b[0], b[1]))
    if phi >= math.pi:
        phi -= math.pi
    e = qmath.expectation(channel_state(channel), pub_axis, phi)
    if abs(e) < 1.0 - DETERMINISM_TOL:
        raise KeyDerivationError(
            f"channel {channel.value}, public axis {pub_axis!r}: correlation {e!r} is not +-1"
        )
    return phi, 1 if e > 0 else -1


def derive_private_key(p: SecretParams) -> PrivateKey:
    pub = derive_public_key(p)
    axes, signs = [], []
    for channel, a in zip(p.channels, pub.axes):
        phi, sign = private_axis(channel, a)
        axes.append(phi)
        signs.append(sign)
    return PrivateKey(tuple(axes), tuple(signs), p)


def generate_keypair(n: int, rng: RandomSource) -> Tuple[PublicKey, PrivateKey]:
    params = gen_secret_params(n, rng)
    return derive_public_key(params), derive_private_key(params)


def literal_private_axes(p: SecretParams) -> List[Tuple[float, float]]:
    """Diagnostic: Alice's axis from conjugating the table's second-particle operator.

    Returns ``(axis, |correlation|)`` per position, where the second-particle
    operator is the base operator itself for Bell channels and the swapped one
    otherwise, rotated by the same angle as the public key. Unlike
    :func:`derive_private_key` this does not guarantee ``|correlation| = 1``.
    """
    out = []
    for channel, op, theta in zip(p.channels, p.base_ops, p.thetas):
        second = op if channel.is_bell else op.swapped
        phi = qmath.axis_of(qmath.conjugate(second.matrix, qmath.rotation(theta)))[0]
        e = qmath.expectation(channel_state(channel), public_axis(op, theta), phi)
        out.append((phi, abs(e)))
    return out


# ---------------------------------------------------------------------------
# key files
# ---------------------------------------------------------------------------

def serialize_public(k: PublicKey) -> bytes:
    doc = {"version": _serial.FORMAT_VERSION, "kind": "public", "n": k.n, "axes": list(k.axes)}
    return _serial.dumps(doc).encode("utf-8")


def serialize_private(k: PrivateKey) -> bytes:
    p = k.params
    doc = {
        "version": _serial.FORMAT_VERSION,
        "kind": "private",
        "n": k.n,
        "axes": list(k.axes),
        "channels": [c.value for c in p.channels],
        "gates": [g.value for g in p.gates],
        "base_ops": [op.value for op in p.base_ops],
        "thetas": list(p.thetas),
        "corr_signs": list(k.corr_signs),
    }
    return _serial.dumps(doc).encode("utf-8")


def _axes(doc, n) -> Tuple[float, ...]:
    axes = tuple(_serial.as_float(a, "axes") for a in _serial.require(doc, "axes", list, n))
    for a in axes:
        if not 0.0 <= a < qmath.TWO_PI:
            raise _serial.FormatError(f"axis {a!r} outside [0, 2pi)")
    return axes


def _count(doc) -> int:
    n = _serial.require(doc, "n", int)
    if n < 1:
        raise _serial.FormatError(f"key length must be >= 1, got {n}")
    return n


def parse_public(data: bytes | str) -> PublicKey:
    doc = _serial.loads(data, "public")
    return PublicKey(_axes(doc, _count(doc)))


def parse_private(data: bytes | str) -> PrivateKey:
    doc = _serial.loads(data, "private")
    n = _count(doc)
    axes = _axes(doc, n)
    try:
        channels = tuple(ChannelId.parse(c) for c in _serial.require(doc, "channels", list, n))
        gates = tuple(GateTag.parse(g) for g in _serial.require(doc, "gates", list, n))
        ops = tuple(BaseOp(o) for o in _serial.require(doc, "base_ops", list, n))
    except (ValueError, TypeError) as exc:
        raise _serial.FormatError(str(exc)) from None
    thetas = tuple(_serial.as_float(t, "thetas") for t in _serial.require(doc, "thetas", list, n))
    signs = _serial.require(doc, "corr_signs", list, n)
    if any(s not in (1, -1) or isinstance(s, bool) for s in signs):
        raise _serial.FormatError("corr_signs entries must be +1 or -1")
    try:
        params = SecretParams(channels, gates, ops, thetas)
    except ValueError as exc:
        raise _serial.FormatError(str(exc)) from None
    return PrivateKey(axes, tuple(int(s) for s in signs), params)
