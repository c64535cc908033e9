import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpkc import keys
from qpkc._serial import FormatError
from qpkc.channels import CHANNELS, ChannelId as C
from qpkc.keys import BaseOp, SecretParams
from qpkc.qmath import RandomSource

from conftest import kron_expectation

GOLDEN = Path(__file__).parent / "golden"
Z, X = 0.0, math.pi / 2

# (channel, public base op) -> (private axis, correlation sign) at theta = 0
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


@pytest.mark.parametrize("key", sorted(TABLE, key=lambda k: (k[0].value, k[1])), ids=lambda k: f"{k[0].value}-{k[1]}")
def test_table_at_theta_zero(key):
    cid, op = key
    pub = keys.public_axis(BaseOp(op), 0.0)
    assert pub == (Z if op == "Z" else X)
    assert keys.private_axis(cid, pub) == TABLE[key]


def test_public_axis_is_rotated_base():
    # R(theta)^T sigma_z R(theta) is the axis at -2 theta; sigma_x moves to pi/2 - 2 theta
    for theta in (0.1, 1.0, 2.5, 4.0):
        assert keys.public_axis(BaseOp.Z, theta) == pytest.approx((-2 * theta) % (2 * math.pi), abs=1e-12)
        assert keys.public_axis(BaseOp.X, theta) == pytest.approx((math.pi / 2 - 2 * theta) % (2 * math.pi), abs=1e-12)


@given(
    st.sampled_from(CHANNELS),
    st.sampled_from(list(BaseOp)),
    st.floats(min_value=0.0, max_value=2 * math.pi, allow_nan=False, exclude_max=True),
)
@settings(max_examples=300)
def test_private_axis_is_perfectly_correlated(cid, op, theta):
    from qpkc.channels import channel_state

    pub = keys.public_axis(op, theta)
    phi, sign = keys.private_axis(cid, pub)
    assert 0.0 <= phi < math.pi
    e = kron_expectation(channel_state(cid), pub, phi)
    assert abs(e) >= 1 - 1e-10
    assert sign == (1 if e > 0 else -1)


def test_unique_up_to_orientation():
    # any other in-plane axis is strictly less correlated
    from qpkc.channels import channel_state

    s = channel_state(C.LPSI_MINUS)
    pub = keys.public_axis(BaseOp.Z, 0.4)
    phi, _ = keys.private_axis(C.LPSI_MINUS, pub)
    for d in np.linspace(0.01, math.pi - 0.01, 25):
        assert abs(kron_expectation(s, pub, phi + d)) < 1 - 1e-6


def test_generate_keypair_is_seeded():
    p1, s1 = keys.generate_keypair(32, RandomSource(4))
    p2, s2 = keys.generate_keypair(32, RandomSource(4))
    assert p1 == p2 and s1 == s2
    assert keys.generate_keypair(32, RandomSource(5))[0] != p1
    assert p1.n == s1.n == 32


def test_secret_params_validation():
    with pytest.raises(ValueError):
        SecretParams((), (), (), ())
    good = SecretParams.from_channels([C.PHI_PLUS], [BaseOp.Z], [0.0])
    with pytest.raises(ValueError):
        SecretParams(good.channels, (keys.GateTag.H,), good.base_ops, good.thetas)
    with pytest.raises(ValueError):
        SecretParams(good.channels, good.gates, good.base_ops, (0.0, 1.0))
    with pytest.raises(ValueError):
        keys.gen_secret_params(0, RandomSource(0))


def test_key_files_round_trip():
    pub, priv = keys.generate_keypair(20, RandomSource(8))
    assert keys.parse_public(keys.serialize_public(pub)) == pub
    assert keys.parse_private(keys.serialize_private(priv)) == priv


def test_golden_public_key():
    pub, priv = keys.generate_keypair(3, RandomSource(123))
    assert keys.serialize_public(pub) == (GOLDEN / "public_n3.json").read_bytes()
    assert keys.serialize_private(priv) == (GOLDEN / "private_n3.json").read_bytes()


@pytest.mark.parametrize("text,needle", [
    ('{"version": 1, "kind": "public", "n": 2, "axes": [0.5]}', "axes"),
    ('{"version": 1, "kind": "public", "n": 1, "axes": [7.0]}', "axis"),
    ('{"version": 2, "kind": "public", "n": 1, "axes": [0.5]}', "version"),
    ('{"version": 1, "kind": "private", "n": 1, "axes": [0.5]}', "kind"),
    ('{"version": 1, "kind": "public", "n": 1, "axes": [0.5]', None),
    ('{"version": 1, "kind": "public", "n": 0, "axes": []}', ">= 1"),
])
def test_malformed_public(text, needle):
    with pytest.raises(FormatError, match=needle):
        keys.parse_public(text)


def test_malformed_private_gate_mismatch():
    _, priv = keys.generate_keypair(2, RandomSource(1))
    doc = keys.serialize_private(priv).decode()
    bad = doc.replace(f'"{priv.params.gates[0].value}"', '"HY"' if priv.params.gates[0].value != "HY" else '"I"', 1)
    with pytest.raises(FormatError):
        keys.parse_private(bad)


def test_literal_formula_is_diagnostic_only():
    rng = RandomSource(2)
    p = keys.gen_secret_params(400, rng)
    corr = np.array([c for _, c in keys.literal_private_axes(p)])
    assert np.all(corr <= 1 + 1e-12)
    assert np.any(corr < 1 - 1e-6)  # the literal reading is not always perfectly correlated
    assert np.any(corr > 1 - 1e-12)
