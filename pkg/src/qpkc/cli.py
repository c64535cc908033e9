"""Command line entry point.

Exit codes: 0 success, 1 configuration or input error, 2 internal invariant
failure (including a decryption that does not reproduce a valid plaintext),
3 eavesdropping detected.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__, _kernels, _serial, adversary, channels, cipher, keys, protocol, qmath
from .adversary import AttackConfig, AttackKind, EveStrategy
from .qmath import Party, RandomSource

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2
EXIT_EAVESDROPPED = 3

DEMO_BITS = "10110"


class ConfigError(Exception):
    pass


class InvariantError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _seed(args) -> int:
    env = os.environ.get("QPKC_SEED")
    if env is not None and env.strip():
        try:
            return int(env, 0)
        except ValueError:
            raise ConfigError(f"QPKC_SEED={env!r} is not an integer") from None
    return args.seed


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror}") from None


def _emit(args, summary: dict, text_lines: Sequence[str]) -> None:
    if args.format == "json":
        sys.stdout.write(_serial.dumps(summary))
    else:
        for line in text_lines:
            print(line)


def _eve_from_args(args) -> Optional[EveStrategy]:
    if not getattr(args, "eve", None):
        return None
    try:
        kind = AttackKind(args.eve)
    except ValueError:
        raise ConfigError(f"unknown eavesdropper strategy {args.eve!r}") from None
    try:
        eve = EveStrategy(kind, axis=args.eve_axis, coverage=args.eve_coverage, both_legs=args.both_legs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not eve.intercepts:
        raise ConfigError(f"strategy {args.eve!r} does not act on the pairs")
    return eve


# ---------------------------------------------------------------------------
# keygen
# ---------------------------------------------------------------------------

def cmd_keygen(args) -> int:
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    seed = _seed(args)
    try:
        public, private = keys.generate_keypair(args.n, RandomSource(seed))
    except keys.KeyDerivationError as exc:
        raise InvariantError(str(exc)) from None
    _write(args.pub, keys.serialize_public(public))
    _write(args.priv, keys.serialize_private(private))
    fp = public.fingerprint()
    _emit(args, {"n": public.n, "seed": seed, "fingerprint": fp},
          [f"n: {public.n}", f"fingerprint: {fp}"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _message_from_args(args) -> cipher.Message:
    if args.input:
        data = _read(args.input)
        if args.qubits:
            return cipher.parse_qubits(data)
        if not data:
            raise ConfigError(f"message file {args.input} is empty")
        return cipher.encode_bits(cipher.bytes_to_bits(data))
    bits = args.bits if args.bits is not None else DEMO_BITS
    if not bits:
        raise ConfigError("message is empty")
    return cipher.encode_bits(bits)


def cmd_run(args) -> int:
    seed = _seed(args)
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    if not 0.0 < args.fraction < 1.0:
        raise ConfigError("--fraction must lie in (0, 1)")
    m = args.m if args.m is not None else protocol.default_pool_size(args.n, args.fraction)
    if m <= args.n:
        raise ConfigError(f"--m must exceed --n (got m={m}, n={args.n})")
    msg = _message_from_args(args)
    eve = _eve_from_args(args)

    t0 = time.perf_counter()
    try:
        rec = protocol.run_protocol(msg, args.n, RandomSource(seed), m=m, fraction=args.fraction,
                                    threshold=args.threshold, eve=eve)
    except keys.KeyDerivationError as exc:
        raise InvariantError(str(exc)) from None
    elapsed = time.perf_counter() - t0

    config = {
        "n": args.n, "m": m, "seed": seed, "fraction": args.fraction, "threshold": args.threshold,
        "eve": None if eve is None else {
            "strategy": eve.kind.value, "axis": eve.axis, "coverage": eve.coverage, "both_legs": eve.both_legs,
        },
        "message_length": len(msg), "message_origin": msg.origin.value,
    }
    result = {"verdict": rec.verdict.value, "recovered": False}
    code = EXIT_EAVESDROPPED
    if rec.verdict is protocol.Verdict.CLEAN:
        fid = cipher.fidelities(msg, rec.recovered)
        inferred_ok = rec.k_b_inferred.labels == rec.k_b.labels
        recovered = bool(inferred_ok and np.min(fid) >= 1.0 - qmath.EXACT_TOL)
        result.update({"recovered": recovered, "inference_exact": inferred_ok,
                       "fidelities": [float(f) for f in fid]})
        if msg.origin is cipher.Origin.BITS:
            try:
                got = cipher.decode_bits(rec.recovered)
            except cipher.CipherError:
                got = None
            result["plaintext_bits"] = "".join(map(str, cipher.decode_bits(msg)))
            result["recovered_bits"] = None if got is None else "".join(map(str, got))
            recovered = recovered and got == cipher.decode_bits(msg)
            result["recovered"] = recovered
        code = EXIT_OK if recovered else EXIT_INVARIANT

    doc = {"version": _serial.FORMAT_VERSION, "kind": "transcript", "tool_version": __version__,
           "config": config, "protocol": rec.transcript(), "result": result}
    if args.timings:
        doc["timings"] = {"run_seconds": elapsed, "backend": _kernels.BACKEND}
    if args.out:
        _write(args.out, _serial.dumps(doc).encode("utf-8"))
    lines = [
        f"verdict: {rec.verdict.value} (S = {rec.check.s_estimate:.4f}, threshold {args.threshold})",
        f"pairs: m = {m}, sacrificed = {rec.check.sacrificed}, n = {args.n}",
    ]
    if rec.verdict is protocol.Verdict.CLEAN:
        lines.append(f"plaintext recovered: {result['recovered']}")
        if "recovered_bits" in result:
            lines.append(f"bits: {result['plaintext_bits']} -> {result['recovered_bits']}")
    else:
        lines.append("eavesdropping detected: run aborted before any key material was used")
    _emit(args, doc, lines)
    return code


# ---------------------------------------------------------------------------
# encrypt / decrypt
# ---------------------------------------------------------------------------

def _particles_path(args, ct_path: str) -> str:
    return args.particles or f"{ct_path}.particles"


def cmd_encrypt(args) -> int:
    try:
        public = keys.parse_public(_read(args.pub))
    except _serial.FormatError as exc:
        raise ConfigError(f"{args.pub}: {exc}") from None
    data = _read(args.input)
    if args.qubits:
        try:
            msg = cipher.parse_qubits(data)
        except _serial.FormatError as exc:
            raise ConfigError(f"{args.input}: {exc}") from None
    else:
        if not data:
            raise ConfigError(f"message file {args.input} is empty")
        msg = cipher.encode_bits(cipher.bytes_to_bits(data))
    ct, halves = protocol.bob_encrypt(public, msg, RandomSource(_seed(args)))
    _write(args.out, cipher.serialize_ciphertext(ct))
    particles = _particles_path(args, args.out)
    _write(particles, protocol.serialize_particles(halves))
    _emit(args, {"n": ct.n, "block_count": ct.block_count, "pad_len": ct.pad_len,
                 "ciphertext": args.out, "particles": particles},
          [f"encrypted {len(msg)} qubits in {ct.block_count} block(s) of {ct.n}, padding {ct.pad_len}",
           f"ciphertext: {args.out}", f"receiver particles: {particles}"])
    return EXIT_OK


def cmd_decrypt(args) -> int:
    try:
        private = keys.parse_private(_read(args.priv))
        ct = cipher.parse_ciphertext(_read(args.input))
        halves = protocol.parse_particles(_read(_particles_path(args, args.input)))
    except _serial.FormatError as exc:
        raise ConfigError(str(exc)) from None
    try:
        msg = protocol.alice_decrypt(private, ct, halves, RandomSource(_seed(args)))
    except protocol.ProtocolError as exc:
        raise ConfigError(f"key/ciphertext mismatch: {exc}") from None
    if msg.origin is cipher.Origin.BITS:
        try:
            bits = cipher.decode_bits(msg)
        except cipher.CipherError as exc:
            raise InvariantError(f"decryption mismatch (wrong private key?): {exc}") from None
        out = cipher.bits_to_bytes(bits)
    else:
        out = cipher.serialize_qubits(msg)
    _write(args.out, out)
    _emit(args, {"qubits": len(msg), "output": args.out},
          [f"decrypted {len(msg)} qubits -> {args.out}"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# attack
# ---------------------------------------------------------------------------

def cmd_attack(args) -> int:
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    try:
        kind = AttackKind(args.strategy)
    except ValueError:
        raise ConfigError(f"unknown strategy {args.strategy!r}") from None
    rng = RandomSource(_seed(args))
    workers = max(1, args.parallel)
    if kind is AttackKind.CHANNEL_GUESS:
        report = adversary.channel_guess_experiment(args.trials, rng, n_pairs=args.n_pairs, workers=workers)
    elif kind is AttackKind.CIPHERTEXT_DISTINGUISH:
        report = adversary.ciphertext_distinguish_experiment(args.trials, rng, workers=workers)
    else:
        if not 0.0 < args.fraction < 1.0:
            raise ConfigError("--fraction must lie in (0, 1)")
        if args.m <= args.n:
            raise ConfigError("--m must exceed --n")
        eve = EveStrategy(kind, axis=args.axis, coverage=args.coverage, both_legs=args.both_legs)
        cfg = AttackConfig(m=args.m, n=args.n, fraction=args.fraction, threshold=args.threshold,
                           strategy=eve, trials=args.trials)
        try:
            report = adversary.full_attack_run(cfg, rng, workers=workers)
        except protocol.ProtocolError as exc:
            raise ConfigError(str(exc)) from None
    doc = {"version": _serial.FORMAT_VERSION, "kind": "attack_report", "seed": rng.seed, **report.to_dict()}
    if args.out:
        _write(args.out, _serial.dumps(doc).encode("utf-8"))
    _emit(args, doc, [
        f"strategy: {report.strategy}",
        f"trials: {report.trials}",
        f"success rate: {report.success_rate:.6f}   theory: {report.theory_value:.6f}",
        f"detection rate: {report.detection_rate:.6f}",
    ])
    return EXIT_OK


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

Z_AX, X_AX = qmath.AXIS_Z, qmath.AXIS_X
C = channels.ChannelId

# (channel, base op) -> (private axis, correlation sign) at zero rotation
CORRELATION_TABLE = {
    (C.PHI_PLUS, "Z"): (Z_AX, +1), (C.PHI_PLUS, "X"): (X_AX, +1),
    (C.PHI_MINUS, "Z"): (Z_AX, +1), (C.PHI_MINUS, "X"): (X_AX, -1),
    (C.PSI_PLUS, "Z"): (Z_AX, -1), (C.PSI_PLUS, "X"): (X_AX, +1),
    (C.PSI_MINUS, "Z"): (Z_AX, -1), (C.PSI_MINUS, "X"): (X_AX, -1),
    (C.LPHI_PLUS, "Z"): (X_AX, +1), (C.LPHI_PLUS, "X"): (Z_AX, +1),
    (C.LPHI_MINUS, "Z"): (X_AX, +1), (C.LPHI_MINUS, "X"): (Z_AX, -1),
    (C.LPSI_PLUS, "Z"): (X_AX, -1), (C.LPSI_PLUS, "X"): (Z_AX, +1),
    (C.LPSI_MINUS, "Z"): (X_AX, -1), (C.LPSI_MINUS, "X"): (Z_AX, -1),
}


def _axis_name(phi: float) -> str:
    return {0.0: "z", X_AX: "x"}.get(phi, f"{phi:.4f}")


def _check_table(lines: List[str]) -> Tuple[bool, str]:
    ok = True
    for (cid, op), (axis, sign) in CORRELATION_TABLE.items():
        p = keys.SecretParams.from_channels([cid], [keys.BaseOp(op)], [0.0])
        k = keys.derive_private_key(p)
        got_axis, got_sign = k.axes[0], k.corr_signs[0]
        row_ok = abs(got_axis - axis) <= qmath.AXIS_TOL and got_sign == sign
        ok &= row_ok
        lines.append(f"    {cid.value:5s} public {op} -> private {_axis_name(got_axis)} "
                     f"sign {got_sign:+d}  {'ok' if row_ok else 'MISMATCH'}")
    return ok, "16 rows"


def _check_determinism(rng: RandomSource) -> Tuple[bool, str]:
    p = keys.gen_secret_params(1000, rng)
    k = keys.derive_private_key(p)
    pub = keys.derive_public_key(p)
    states = np.stack([channels.channel_state(c) for c in p.channels])
    e = _kernels.expectation_batch(states, np.array(pub.axes), np.array(k.axes))
    dev = float(np.max(np.abs(1.0 - np.abs(e))))
    return dev < keys.DETERMINISM_TOL, f"max |1 - |E|| over 1000 triples = {dev:.3e}"


def _check_literal(rng: RandomSource) -> Tuple[bool, str]:
    p = keys.gen_secret_params(1000, rng)
    lit = keys.literal_private_axes(p)
    bad = sum(1 for _, e in lit if e < 1.0 - keys.DETERMINISM_TOL)
    worst = min(e for _, e in lit)
    return True, (f"literal conjugation of the second-particle operator: {bad}/1000 positions "
                  f"not perfectly correlated, min |E| = {worst:.4f} (informational)")


def _check_gram() -> Tuple[bool, str]:
    g = channels.gram_matrix()
    sym = np.max(np.abs(g - g.T)) <= qmath.EXACT_TOL
    diag = np.max(np.abs(np.diag(g) - 1.0)) <= qmath.EXACT_TOL
    off = g[~np.eye(len(g), dtype=bool)]
    return bool(sym and diag and np.max(off) > 0), f"max off-diagonal overlap = {np.max(off):.3f}"


def _check_entanglement() -> Tuple[bool, str]:
    dev = max(
        float(np.max(np.abs(qmath.reduced_single(channels.channel_state(c), w) - np.eye(2) / 2)))
        for c in channels.CHANNELS for w in Party
    )
    return dev <= qmath.EXACT_TOL, f"max |rho - I/2| = {dev:.1e}"


def _check_bijection() -> Tuple[bool, str]:
    image = {channels.gate_to_channel(g) for g in channels.GATES}
    return len(image) == 8, ", ".join(f"{g.value}->{channels.gate_to_channel(g).value}" for g in channels.GATES)


def _check_chsh() -> Tuple[bool, str]:
    honest = protocol.chsh_exact(channels.channel_state(C.PHI_PLUS)[None, :])
    worst = 0.0
    for axis in np.linspace(0.0, math.pi, 13):
        states, probs = adversary.intercepted_ensemble(channels.channel_state(C.PHI_PLUS), axis)
        worst = max(worst, protocol.chsh_exact(states, probs))
    ok = abs(honest - 2 * math.sqrt(2)) <= qmath.EXACT_TOL and worst <= 2.0 + qmath.EXACT_TOL
    return ok, f"honest S = {honest:.12f}, max intercepted S = {worst:.6f}"


def _check_overlap(rng: RandomSource) -> Tuple[bool, str]:
    t = rng.uniform(0.0, qmath.TWO_PI, size=1000)
    dev = max(abs(cipher.ciphertext_overlap(np.array([math.cos(a), math.sin(a)])) - 0.5) for a in t)
    return dev <= qmath.EXACT_TOL, f"max ||<Z psi|H psi>|^2 - 1/2| = {dev:.1e}"


def _check_order() -> Tuple[bool, str]:
    dev = 0.0
    for c in channels.CHANNELS:
        s = channels.channel_state(c)
        for b in (Z_AX, X_AX):
            for a in (Z_AX, X_AX):
                d1 = qmath.joint_distribution(s, b, a, Party.BOB)
                d2 = qmath.joint_distribution(s, b, a, Party.ALICE)
                dev = max(dev, float(np.max(np.abs(d1 - d2))))
    return dev <= qmath.EXACT_TOL, f"max joint-distribution difference = {dev:.1e}"


def cmd_selftest(args) -> int:
    rng = RandomSource(_seed(args))
    table_lines: List[str] = []
    checks: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
        ("correlation table", lambda: _check_table(table_lines)),
        ("determinism sweep", lambda: _check_determinism(rng.split(0))),
        ("gate/channel bijection", _check_bijection),
        ("maximal entanglement", _check_entanglement),
        ("gram matrix", _check_gram),
        ("exact CHSH", _check_chsh),
        ("ciphertext overlap", lambda: _check_overlap(rng.split(1))),
        ("measurement order", _check_order),
        ("literal private-key formula", lambda: _check_literal(rng.split(2))),
    ]
    results = []
    failed = False
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash in a check is a failure, not a traceback
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failed |= not ok
        results.append({"check": name, "passed": ok, "detail": detail})
    lines = []
    for r in results:
        lines.append(f"{'PASS' if r['passed'] else 'FAIL'}  {r['check']}: {r['detail']}")
        if r["check"] == "correlation table":
            lines.extend(table_lines)
    _emit(args, {"version": _serial.FORMAT_VERSION, "kind": "selftest", "backend": _kernels.BACKEND,
                 "passed": not failed, "checks": results, "table": [ln.strip() for ln in table_lines]},
          lines)
    return EXIT_INVARIANT if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qpkc", description="Quantum public-key cryptosystem simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seed=True):
        if seed:
            p.add_argument("--seed", type=int, default=0, help="root seed (QPKC_SEED overrides)")
        p.add_argument("--format", choices=("json", "text"), default="json", help="stdout format")

    p = sub.add_parser("keygen", help="generate a public/private key pair")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--pub", required=True)
    p.add_argument("--priv", required=True)
    common(p)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("run", help="run the full protocol end to end")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--fraction", type=float, default=protocol.DEFAULT_FRACTION)
    p.add_argument("--threshold", type=float, default=protocol.DEFAULT_THRESHOLD)
    p.add_argument("--bits", default=None, help=f"inline bit message (default {DEMO_BITS})")
    p.add_argument("--in", dest="input", default=None, help="message file (raw bytes, or qubits with --qubits)")
    p.add_argument("--qubits", action="store_true", help="--in is a qubit document")
    p.add_argument("--eve", default=None, help="intercept-resend | intercept-resend-random")
    p.add_argument("--eve-axis", type=float, default=0.0)
    p.add_argument("--eve-coverage", type=float, default=1.0)
    p.add_argument("--both-legs", action="store_true")
    p.add_argument("--out", default=None, help="transcript file")
    p.add_argument("--timings", action="store_true", help="add wall-clock timings to the transcript")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("encrypt", help="encrypt a file with a public key")
    p.add_argument("--pub", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--particles", default=None, help="receiver particle file (default <out>.particles)")
    p.add_argument("--qubits", action="store_true")
    common(p)
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", help="decrypt a ciphertext with a private key")
    p.add_argument("--priv", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--particles", default=None, help="receiver particle file (default <in>.particles)")
    common(p)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("attack", help="run a security experiment")
    p.add_argument("--strategy", required=True,
                   help="channel-guess | distinguish | intercept-resend | intercept-resend-random")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--n-pairs", type=int, default=1, help="channels guessed jointly (channel-guess)")
    p.add_argument("--m", type=int, default=2000)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--fraction", type=float, default=protocol.DEFAULT_FRACTION)
    p.add_argument("--threshold", type=float, default=protocol.DEFAULT_THRESHOLD)
    p.add_argument("--axis", type=float, default=0.0)
    p.add_argument("--coverage", type=float, default=1.0)
    p.add_argument("--both-legs", action="store_true")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("selftest", help="run the invariant battery")
    common(p)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        # parse, cipher and protocol errors all derive from ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantError, keys.KeyDerivationError) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
