"""Acceptance criteria, one test each, each printing a single PASS/FAIL line."""

import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from qpkc import adversary, cipher, keys, protocol, qmath
from qpkc.adversary import AttackConfig, AttackKind, EveStrategy
from qpkc.channels import CHANNELS, ChannelId as C, channel_state, gram_matrix
from qpkc.cli import main
from qpkc.keys import BaseOp
from qpkc.qmath import Party, RandomSource

from conftest import kron_expectation

Z, X = 0.0, math.pi / 2


@pytest.fixture
def verdict(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, detail
    return emit


def test_ac1_end_to_end(verdict):
    seeds = RandomSource(2024).integers(0, 2**62, size=100)
    worst = 1.0
    bits_ok = 0
    t0 = time.perf_counter()
    for seed in seeds:
        rng = RandomSource(int(seed))
        msg_rng = rng.split(protocol.STREAM_MESSAGE)
        plain = cipher.Message.random_real(64 + int(msg_rng.integers(0, 64)), msg_rng.split(0))
        rec = protocol.run_protocol(plain, 64, rng, m=4096, fraction=0.5)
        if rec.verdict is not protocol.Verdict.CLEAN:
            worst = 0.0
            continue
        worst = min(worst, float(cipher.fidelities(plain, rec.recovered).min()))
        bits = msg_rng.split(1).integers(0, 2, size=64).tolist()
        ct = cipher.encrypt(cipher.encode_bits(bits), cipher.choose_gates(rec.k_b.labels))
        got = cipher.decode_bits(cipher.decrypt(ct, cipher.choose_gates(rec.k_b_inferred.labels)))
        bits_ok += got == bits
    elapsed = time.perf_counter() - t0
    ok = worst >= 1 - 1e-12 and bits_ok == 100 and elapsed < 5.0
    verdict("AC1 end-to-end", ok,
            f"100 runs n=64, min fidelity {worst:.16f}, exact bit messages {bits_ok}/100, {elapsed:.2f} s (< 5 s)")


TABLE = {
    (C.PHI_PLUS, "Z"): (Z, 1), (C.PHI_PLUS, "X"): (X, 1),
    (C.PHI_MINUS, "Z"): (Z, 1), (C.PHI_MINUS, "X"): (X, -1),
    (C.PSI_PLUS, "Z"): (Z, -1), (C.PSI_PLUS, "X"): (X, 1),
    (C.PSI_MINUS, "Z"): (Z, -1), (C.PSI_MINUS, "X"): (X, -1),
    (C.LPHI_PLUS, "Z"): (X, 1), (C.LPHI_PLUS, "X"): (Z, 1),
    (C.LPHI_MINUS, "Z"): (X, 1), (C.LPHI_MINUS, "X"): (Z, -1),
    (C.LPSI_PLUS, "Z"): (X, -1), (C.LPSI_PLUS, "X"): (Z, 1),
    (C.LPSI_MINUS, "Z"): (X, -1), (C.LPSI_MINUS, "X"): (Z, -1),
}


def test_ac2_table_reproduction(verdict):
    bad = []
    for (cid, op), want in TABLE.items():
        got = keys.private_axis(cid, keys.public_axis(BaseOp(op), 0.0))
        if got != want:
            bad.append(f"{cid.value}/{op}: {got} != {want}")
    verdict("AC2 correlation table", not bad, f"{16 - len(bad)}/16 entries exact" + (f"; {bad}" if bad else ""))


def test_ac3_determinism_sweep(verdict):
    rng = RandomSource(303)
    ch = rng.integers(0, 8, size=1000)
    ops = rng.integers(0, 2, size=1000)
    thetas = rng.uniform(0, 2 * math.pi, size=1000)
    worst = 1.0
    for c, o, t in zip(ch, ops, thetas):
        cid = CHANNELS[c]
        pub = keys.public_axis((BaseOp.Z, BaseOp.X)[o], float(t))
        phi, _ = keys.private_axis(cid, pub)
        worst = min(worst, abs(kron_expectation(channel_state(cid), pub, phi)))
    verdict("AC3 determinism sweep", worst >= 1 - 1e-10, f"1000 triples, min |<pub x priv>| = {worst:.16f} (>= 1-1e-10)")


def test_ac4_ciphertext_overlap(verdict):
    t = RandomSource(404).uniform(0, 2 * math.pi, size=10_000)
    dev = max(abs(cipher.ciphertext_overlap(np.array([math.cos(a), math.sin(a)])) - 0.5) for a in t)
    verdict("AC4 ciphertext overlap", dev <= 1e-12, f"10^4 real states, max ||<Hpsi|Zpsi>|^2 - 1/2| = {dev:.2e}")


def test_ac5_channel_guess(verdict):
    rep = adversary.channel_guess_experiment(80_000, RandomSource(505))
    exact = all(Fraction(adversary.undetected_prob(n)) == Fraction(1, 8 ** n) for n in range(17))
    ok = 0.115 <= rep.success_rate <= 0.135 and rep.theory_value == 0.125 and exact
    verdict("AC5 channel guess", ok,
            f"8e4 trials, success {rep.success_rate:.5f} in [0.115, 0.135], theory 1/8; "
            f"8^-n exact for n<=16: {exact}")


def test_ac6_chsh_separation(verdict):
    t0 = time.perf_counter()
    honest = protocol.chsh_exact(channel_state(C.PHI_PLUS))

    pool = protocol.distribute_pairs(400_000)
    report, _ = protocol.eavesdrop_check(pool, 0.25, 2.5, RandomSource(606))
    mc = report.s_estimate

    pool = protocol.distribute_pairs(2000, RandomSource(607), EveStrategy(AttackKind.INTERCEPT_RESEND_RANDOM))
    per_pair = max(protocol.chsh_exact(s) for s in pool.states)

    cfg = AttackConfig(m=2000, n=16, fraction=0.25, threshold=2.5,
                       strategy=EveStrategy(AttackKind.INTERCEPT_RESEND_FIXED), trials=300)
    det = adversary.full_attack_run(cfg, RandomSource(608)).detection_rate
    elapsed = time.perf_counter() - t0

    ok = (abs(honest - 2 * math.sqrt(2)) <= 1e-12 and report.sacrificed == 100_000
          and abs(mc - 2 * math.sqrt(2)) <= 0.05 and per_pair <= 2 + 1e-12 and det > 0.99 and elapsed < 30)
    verdict("AC6 CHSH separation", ok,
            f"exact S {honest:.15f}; MC S {mc:.4f} at 1e5 pairs; max per-pair S under attack {per_pair:.6f}; "
            f"detection {det:.3f} at m=2000; {elapsed:.1f} s (< 30 s)")


def test_ac7_entanglement(verdict):
    worst = max(np.max(np.abs(qmath.reduced_single(channel_state(c), p) - np.eye(2) / 2))
                for c in CHANNELS for p in Party)
    g = gram_matrix()
    sym = np.max(np.abs(g - g.T))
    diag = np.max(np.abs(np.diag(g) - 1))
    off = np.max(g[~np.eye(8, dtype=bool)])
    ok = worst <= 1e-12 and sym <= 1e-12 and diag <= 1e-12 and off > 0
    verdict("AC7 entanglement and Gram", ok,
            f"max |rho - I/2| {worst:.1e}; Gram asym {sym:.1e}, diag err {diag:.1e}, max off-diagonal {off:.3f}")


def _capture(argv, capsys, files):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out, {f: Path(f).read_bytes() for f in files}


def test_ac8_replay(verdict, capsys, tmp_path, monkeypatch):
    monkeypatch.delenv("QPKC_SEED", raising=False)
    msg = tmp_path / "m.bin"
    msg.write_bytes(b"replay me, byte for byte")
    pub, priv = tmp_path / "k.pub", tmp_path / "k.priv"
    ct, rec = tmp_path / "c.json", tmp_path / "r.bin"
    commands = {
        "keygen": (["keygen", "--n", 32, "--pub", pub, "--priv", priv, "--seed", 8], [pub, priv]),
        "encrypt": (["encrypt", "--pub", pub, "--in", msg, "--out", ct, "--seed", 8], [ct, f"{ct}.particles"]),
        "decrypt": (["decrypt", "--priv", priv, "--in", ct, "--out", rec, "--seed", 8], [rec]),
        "run": (["run", "--n", 16, "--seed", 8, "--out", tmp_path / "t.json"], [tmp_path / "t.json"]),
        "run-eve": (["run", "--seed", 8, "--eve", "intercept-resend-random", "--eve-coverage", 0.5], []),
        "attack-guess": (["attack", "--strategy", "channel-guess", "--trials", 20000, "--seed", 8], []),
        "attack-dist": (["attack", "--strategy", "distinguish", "--trials", 20000, "--seed", 8, "--parallel", 2], []),
        "attack-ir": (["attack", "--strategy", "intercept-resend", "--trials", 4, "--seed", 8,
                       "--out", tmp_path / "a.json"], [tmp_path / "a.json"]),
        "selftest": (["selftest", "--seed", 8], []),
    }
    differing = []
    for name, (argv, files) in commands.items():
        first = _capture(argv, capsys, files)
        second = _capture(argv, capsys, files)
        if first != second:
            differing.append(name)
    ok = not differing and rec.read_bytes() == msg.read_bytes()
    verdict("AC8 replay determinism", ok,
            f"{len(commands) - len(differing)}/{len(commands)} commands byte-identical across two invocations"
            + (f"; differing: {differing}" if differing else ""))


def test_ac9_order_invariance(verdict):
    axis_pairs = [(Z, Z), (Z, X), (X, Z), (math.pi / 3, 5 * math.pi / 4)]
    worst = 0.0
    for c in CHANNELS:
        s = channel_state(c)
        for pb, pa in axis_pairs:
            d = qmath.joint_distribution(s, pb, pa, Party.BOB) - qmath.joint_distribution(s, pb, pa, Party.ALICE)
            worst = max(worst, float(np.max(np.abs(d))))
    verdict("AC9 order invariance", worst <= 1e-12, f"8 channels x 4 axis pairs, max difference {worst:.1e}")
