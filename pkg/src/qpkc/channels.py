"""The eight maximally entangled pair states and the gates that create them."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict

import numpy as np

from . import qmath
from .qmath import Party

_R2 = 1.0 / math.sqrt(2.0)


class ChannelId(enum.Enum):
    PHI_PLUS = "Phi+"
    PHI_MINUS = "Phi-"
    PSI_PLUS = "Psi+"
    PSI_MINUS = "Psi-"
    LPHI_PLUS = "phi+"
    LPHI_MINUS = "phi-"
    LPSI_PLUS = "psi+"
    LPSI_MINUS = "psi-"

    @property
    def is_bell(self) -> bool:
        """True for the four standard Bell states (same-axis correlation)."""
        return self.value[0].isupper()

    @classmethod
    def parse(cls, name: str) -> "ChannelId":
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown channel name {name!r}") from None


class GateTag(enum.Enum):
    I = "I"
    H = "H"
    Z = "Z"
    HZ = "HZ"
    X = "X"
    HX = "HX"
    Y = "Y"
    HY = "HY"

    @classmethod
    def parse(cls, name: str) -> "GateTag":
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown gate name {name!r}") from None


CHANNELS = tuple(ChannelId)
GATES = tuple(GateTag)

# Stored exactly rather than recomputed; index = 2 * bit_bob + bit_alice.
_CANONICAL = {
    ChannelId.PHI_PLUS: (_R2, 0.0, 0.0, _R2),
    ChannelId.PHI_MINUS: (_R2, 0.0, 0.0, -_R2),
    ChannelId.PSI_PLUS: (0.0, _R2, _R2, 0.0),
    ChannelId.PSI_MINUS: (0.0, _R2, -_R2, 0.0),
    # (|0,+> + |1,->)/sqrt2 etc. with Bob first
    ChannelId.LPHI_PLUS: (0.5, 0.5, 0.5, -0.5),
    ChannelId.LPHI_MINUS: (0.5, 0.5, -0.5, 0.5),
    ChannelId.LPSI_PLUS: (0.5, -0.5, 0.5, 0.5),
    ChannelId.LPSI_MINUS: (0.5, -0.5, -0.5, -0.5),
}

_GATE_MATRICES = {
    GateTag.I: qmath.IDENTITY,
    GateTag.H: qmath.HADAMARD,
    GateTag.Z: qmath.SIGMA_Z,
    GateTag.HZ: qmath.HADAMARD @ qmath.SIGMA_Z,
    GateTag.X: qmath.SIGMA_X,
    GateTag.HX: qmath.HADAMARD @ qmath.SIGMA_X,
    GateTag.Y: qmath.SIGMA_Y,
    GateTag.HY: qmath.HADAMARD @ qmath.SIGMA_Y,
}


@dataclass(frozen=True)
class CorrelationMatrix:
    """In-plane spin correlations ``<sigma_i (x) sigma_j>``, i on Bob, j on Alice."""

    t_xx: float
    t_xz: float
    t_zx: float
    t_zz: float

    def as_array(self) -> np.ndarray:
        """Rows are Bob's (x, z), columns Alice's (x, z)."""
        return np.array([[self.t_xx, self.t_xz], [self.t_zx, self.t_zz]])


def channel_state(cid: ChannelId) -> np.ndarray:
    return np.array(_CANONICAL[cid], dtype=np.complex128)


def gate_matrix(gate: GateTag) -> np.ndarray:
    return _GATE_MATRICES[gate].copy()


def create_channel(gate: GateTag) -> np.ndarray:
    return qmath.apply_single(_GATE_MATRICES[gate], channel_state(ChannelId.PHI_PLUS), Party.ALICE)


def same_up_to_phase(s: np.ndarray, t: np.ndarray, tol: float = 1e-10) -> bool:
    return abs(abs(qmath.overlap(s, t)) - 1.0) <= tol


@lru_cache(maxsize=None)
def _gate_channel_table() -> Dict[GateTag, ChannelId]:
    table = {}
    for gate in GATES:
        created = create_channel(gate)
        matches = [c for c in CHANNELS if same_up_to_phase(channel_state(c), created)]
        if len(matches) != 1:
            raise RuntimeError(f"gate {gate.value} does not produce a unique channel")
        table[gate] = matches[0]
    if len(set(table.values())) != len(CHANNELS):
        raise RuntimeError("gate to channel map is not a bijection")
    return table


def gate_to_channel(gate: GateTag) -> ChannelId:
    return _gate_channel_table()[gate]


def channel_to_gate(cid: ChannelId) -> GateTag:
    for gate, c in _gate_channel_table().items():
        if c is cid:
            return gate
    raise KeyError(cid)


@lru_cache(maxsize=None)
def correlation_matrix(cid: ChannelId) -> CorrelationMatrix:
    s = channel_state(cid)
    x, z = qmath.AXIS_X, qmath.AXIS_Z
    vals = [qmath.expectation(s, b, a) for b, a in ((x, x), (x, z), (z, x), (z, z))]
    # snap the +-1/0 entries to exact values; they are exact up to rounding
    vals = [float(np.round(v)) if abs(v - np.round(v)) < qmath.EXACT_TOL else v for v in vals]
    return CorrelationMatrix(*vals)


def gram_matrix() -> np.ndarray:
    states = [channel_state(c) for c in CHANNELS]
    g = np.empty((len(states), len(states)))
    for i, s in enumerate(states):
        for j, t in enumerate(states):
            g[i, j] = abs(qmath.overlap(s, t)) ** 2
    return g
