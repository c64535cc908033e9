"""Key-controlled H/Z encryption of qubit strings, with blocking and bit encoding."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from . import _serial, qmath
from .qmath import RandomSource

BASIS_TOL = 1e-10


class CipherError(ValueError):
    pass


class Origin(enum.Enum):
    QUBITS = "qubits"
    BITS = "bits"


class GateChoice(enum.Enum):
    GATE_H = "H"
    GATE_Z = "Z"

    @property
    def matrix(self) -> np.ndarray:
        return qmath.HADAMARD if self is GateChoice.GATE_H else qmath.SIGMA_Z


@dataclass(eq=False)
class Message:
    """A string of plaintext qubits, rows ``(alpha, beta)``."""

    qubits: np.ndarray
    origin: Origin = Origin.QUBITS

    def __post_init__(self):
        q = np.asarray(self.qubits, dtype=np.complex128)
        if q.ndim != 2 or q.shape[1] != 2:
            raise CipherError(f"message must have shape (L, 2), got {q.shape}")
        if q.shape[0] == 0:
            raise CipherError("message is empty")
        if not np.all(np.isfinite(q)):
            raise CipherError("message amplitudes must be finite")
        norms = np.sum(np.abs(q) ** 2, axis=1)
        if np.max(np.abs(norms - 1.0)) > qmath.EXACT_TOL:
            raise CipherError("message qubits are not normalised")
        self.qubits = q

    def __len__(self) -> int:
        return self.qubits.shape[0]

    @classmethod
    def from_amplitudes(cls, alphas, betas, allow_complex: bool = False) -> "Message":
        q = np.column_stack([np.asarray(alphas), np.asarray(betas)]).astype(np.complex128)
        if not allow_complex and np.any(q.imag != 0.0):
            raise CipherError("complex amplitudes need allow_complex=True")
        return cls(q)

    @classmethod
    def random_real(cls, length: int, rng: RandomSource) -> "Message":
        t = rng.uniform(0.0, qmath.TWO_PI, size=length)
        return cls(np.column_stack([np.cos(t), np.sin(t)]).astype(np.complex128))


@dataclass(eq=False)
class Ciphertext:
    qubits: np.ndarray
    n: int
    block_count: int
    pad_len: int
    origin: Origin = Origin.QUBITS

    def __post_init__(self):
        self.qubits = np.asarray(self.qubits, dtype=np.complex128)
        if self.n < 1 or self.block_count < 1:
            raise CipherError("ciphertext needs n >= 1 and at least one block")
        if not 0 <= self.pad_len < self.n:
            raise CipherError(f"pad length {self.pad_len} outside [0, {self.n})")
        if self.qubits.shape != (self.n * self.block_count, 2):
            raise CipherError(
                f"ciphertext holds {self.qubits.shape[0]} qubits, metadata says "
                f"{self.block_count} blocks of {self.n}"
            )


def choose_gates(labels: Iterable[int]) -> List[GateChoice]:
    """Bob's outcome label 0 selects H, label 1 selects Z."""
    out = []
    for lab in labels:
        if lab == 0:
            out.append(GateChoice.GATE_H)
        elif lab == 1:
            out.append(GateChoice.GATE_Z)
        else:
            raise CipherError(f"outcome label must be 0 or 1, got {lab!r}")
    return out


def block_message(msg: Message, n: int) -> Tuple[List[Message], int]:
    if n < 1:
        raise CipherError(f"block length must be >= 1, got {n}")
    length = len(msg)
    count = -(-length // n)
    pad = count * n - length
    q = msg.qubits
    if pad:
        q = np.vstack([q, np.tile(qmath.KET_0, (pad, 1))])
    blocks = [Message(q[i * n:(i + 1) * n], msg.origin) for i in range(count)]
    return blocks, pad


def unblock(blocks: Sequence[Message], pad_len: int) -> Message:
    q = np.vstack([b.qubits for b in blocks])
    if pad_len:
        q = q[:-pad_len]
    return Message(q, blocks[0].origin)


def _gate_stack(gates: Sequence[GateChoice]) -> np.ndarray:
    return np.stack([g.matrix for g in gates])


def encrypt(msg: Message, gates: Sequence[GateChoice]) -> Ciphertext:
    n = len(gates)
    if n == 0:
        raise CipherError("no gates to encrypt with")
    blocks, pad = block_message(msg, n)
    g = _gate_stack(gates)
    out = np.vstack([np.einsum("nij,nj->ni", g, b.qubits) for b in blocks])
    return Ciphertext(out, n, len(blocks), pad, msg.origin)


def decrypt(c: Ciphertext, gates: Sequence[GateChoice]) -> Message:
    if len(gates) != c.n:
        raise CipherError(f"{len(gates)} gates for a ciphertext with block length {c.n}")
    g_dag = np.conj(np.transpose(_gate_stack(gates), (0, 2, 1)))
    q = c.qubits.reshape(c.block_count, c.n, 2)
    plain = np.einsum("nij,bnj->bni", g_dag, q).reshape(-1, 2)
    if c.pad_len:
        plain = plain[:-c.pad_len]
    return Message(plain, c.origin)


def fidelities(a: Message, b: Message) -> np.ndarray:
    """Per-qubit ``|<a_i|b_i>|^2``."""
    if len(a) != len(b):
        raise CipherError("messages differ in length")
    return np.abs(np.sum(np.conj(a.qubits) * b.qubits, axis=1)) ** 2


# ---------------------------------------------------------------------------
# classical bits
# ---------------------------------------------------------------------------

def encode_bits(bits) -> Message:
    if isinstance(bits, str):
        if any(ch not in "01" for ch in bits):
            raise CipherError("bit string may only contain '0' and '1'")
        bits = [int(ch) for ch in bits]
    bits = np.asarray(bits, dtype=np.int64).reshape(-1)
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise CipherError("bits must be 0 or 1")
    q = np.zeros((bits.size, 2), dtype=np.complex128)
    q[np.arange(bits.size), bits] = 1.0
    return Message(q, Origin.BITS)


def decode_bits(msg: Message) -> List[int]:
    a = np.abs(msg.qubits)
    mixed = (a[:, 0] > BASIS_TOL) & (a[:, 1] > BASIS_TOL)
    if np.any(mixed):
        first = int(np.argmax(mixed))
        raise CipherError(f"qubit {first} is not a computational basis state")
    return [int(b) for b in (a[:, 1] > a[:, 0])]


def bytes_to_bits(data: bytes) -> List[int]:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8)).tolist()


def bits_to_bytes(bits: Sequence[int]) -> bytes:
    if len(bits) % 8:
        raise CipherError(f"{len(bits)} bits do not fill whole bytes")
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


# ---------------------------------------------------------------------------
# ciphertext ambiguity
# ---------------------------------------------------------------------------

def ciphertext_overlap(psi: np.ndarray) -> float:
    """``|<Z psi|H psi>|^2``: how alike the two possible ciphertexts of ``psi`` are."""
    psi = np.asarray(psi, dtype=np.complex128)
    return abs(np.vdot(qmath.SIGMA_Z @ psi, qmath.HADAMARD @ psi)) ** 2


def printed_overlap_formula(alpha: complex, beta: complex) -> complex:
    """``1/2 [1 + (a* b - b* a)]^2`` taken literally; only a probability for real amplitudes."""
    return 0.5 * (1 + (np.conj(alpha) * beta - np.conj(beta) * alpha)) ** 2


def helstrom_success(overlap_sq: float) -> float:
    """Best single-shot success for telling two equiprobable pure states apart."""
    return 0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - overlap_sq)))


# ---------------------------------------------------------------------------
# ciphertext files
# ---------------------------------------------------------------------------

def _qubit_rows(q: np.ndarray) -> list:
    return [[float(a.real), float(a.imag), float(b.real), float(b.imag)] for a, b in q]


def _parse_rows(rows, field: str) -> np.ndarray:
    out = np.empty((len(rows), 2), dtype=np.complex128)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != 4:
            raise _serial.FormatError(f"{field}[{i}] must be a 4-number list")
        re0, im0, re1, im1 = (_serial.as_float(v, field) for v in row)
        out[i] = (complex(re0, im0), complex(re1, im1))
    return out


def serialize_ciphertext(c: Ciphertext) -> bytes:
    doc = {
        "version": _serial.FORMAT_VERSION,
        "kind": "ciphertext",
        "n": c.n,
        "block_count": c.block_count,
        "pad_len": c.pad_len,
        "origin": c.origin.value,
        "qubits": _qubit_rows(c.qubits),
    }
    return _serial.dumps(doc).encode("utf-8")


def parse_ciphertext(data: bytes | str) -> Ciphertext:
    doc = _serial.loads(data, "ciphertext")
    n = _serial.require(doc, "n", int)
    blocks = _serial.require(doc, "block_count", int)
    pad = _serial.require(doc, "pad_len", int)
    try:
        origin = Origin(doc.get("origin", Origin.QUBITS.value))
    except ValueError:
        raise _serial.FormatError(f"unknown origin {doc.get('origin')!r}") from None
    rows = _serial.require(doc, "qubits", list)
    try:
        return Ciphertext(_parse_rows(rows, "qubits"), n, blocks, pad, origin)
    except CipherError as exc:
        raise _serial.FormatError(str(exc)) from None


def serialize_qubits(msg: Message) -> bytes:
    doc = {"version": _serial.FORMAT_VERSION, "kind": "qubits", "qubits": _qubit_rows(msg.qubits)}
    return _serial.dumps(doc).encode("utf-8")


def parse_qubits(data: bytes | str) -> Message:
    doc = _serial.loads(data, "qubits")
    rows = _serial.require(doc, "qubits", list)
    try:
        return Message(_parse_rows(rows, "qubits"))
    except CipherError as exc:
        raise _serial.FormatError(str(exc)) from None
