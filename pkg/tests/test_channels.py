import math

import numpy as np
import pytest

from qpkc import channels
from qpkc.channels import CHANNELS, GATES, ChannelId as C, GateTag as G
from qpkc.qmath import Party, reduced_single

from conftest import R2, kron_expectation

# hand-written amplitudes, index 2*bob + alice
EXPECTED = {
    C.PHI_PLUS: [R2, 0, 0, R2],
    C.PHI_MINUS: [R2, 0, 0, -R2],
    C.PSI_PLUS: [0, R2, R2, 0],
    C.PSI_MINUS: [0, R2, -R2, 0],
    C.LPHI_PLUS: [0.5, 0.5, 0.5, -0.5],
    C.LPHI_MINUS: [0.5, 0.5, -0.5, 0.5],
    C.LPSI_PLUS: [0.5, -0.5, 0.5, 0.5],
    C.LPSI_MINUS: [0.5, -0.5, -0.5, -0.5],
}

GATE_OF = {
    G.I: C.PHI_PLUS, G.H: C.LPHI_PLUS, G.Z: C.PHI_MINUS, G.HZ: C.LPHI_MINUS,
    G.X: C.PSI_PLUS, G.HX: C.LPSI_PLUS, G.Y: C.PSI_MINUS, G.HY: C.LPSI_MINUS,
}

# rows Bob (x, z), columns Alice (x, z)
T_EXPECTED = {
    C.PHI_PLUS: [[1, 0], [0, 1]],
    C.PHI_MINUS: [[-1, 0], [0, 1]],
    C.PSI_PLUS: [[1, 0], [0, -1]],
    C.PSI_MINUS: [[-1, 0], [0, -1]],
    C.LPHI_PLUS: [[0, 1], [1, 0]],
    C.LPHI_MINUS: [[0, -1], [1, 0]],
    C.LPSI_PLUS: [[0, 1], [-1, 0]],
    C.LPSI_MINUS: [[0, -1], [-1, 0]],
}


def test_eight_channels_eight_gates():
    assert len(CHANNELS) == 8 and len(GATES) == 8
    assert sum(c.is_bell for c in CHANNELS) == 4


@pytest.mark.parametrize("cid", CHANNELS, ids=lambda c: c.value)
def test_canonical_amplitudes(cid):
    np.testing.assert_allclose(channels.channel_state(cid), EXPECTED[cid], atol=1e-15)


@pytest.mark.parametrize("gate", GATES, ids=lambda g: g.value)
def test_gate_creates_channel(gate):
    assert channels.gate_to_channel(gate) is GATE_OF[gate]
    assert channels.channel_to_gate(GATE_OF[gate]) is gate
    made = channels.create_channel(gate)
    assert channels.same_up_to_phase(made, np.array(EXPECTED[GATE_OF[gate]], dtype=complex))


def test_y_gates_carry_a_global_phase():
    made = channels.create_channel(G.Y)
    ratio = made[1] / channels.channel_state(C.PSI_MINUS)[1]
    assert abs(abs(ratio) - 1) < 1e-12
    assert abs(ratio.imag) > 0.5


def test_bijection():
    assert len({channels.gate_to_channel(g) for g in GATES}) == 8


@pytest.mark.parametrize("cid", CHANNELS, ids=lambda c: c.value)
def test_maximally_entangled(cid):
    s = channels.channel_state(cid)
    for who in Party:
        np.testing.assert_allclose(reduced_single(s, who), np.eye(2) / 2, atol=1e-12)


@pytest.mark.parametrize("cid", CHANNELS, ids=lambda c: c.value)
def test_correlation_matrix(cid):
    t = channels.correlation_matrix(cid)
    np.testing.assert_array_equal(t.as_array(), T_EXPECTED[cid])
    s = channels.channel_state(cid)
    ax = {"x": math.pi / 2, "z": 0.0}
    assert kron_expectation(s, ax["x"], ax["x"]) == pytest.approx(t.t_xx, abs=1e-12)
    assert kron_expectation(s, ax["x"], ax["z"]) == pytest.approx(t.t_xz, abs=1e-12)
    assert kron_expectation(s, ax["z"], ax["x"]) == pytest.approx(t.t_zx, abs=1e-12)
    assert kron_expectation(s, ax["z"], ax["z"]) == pytest.approx(t.t_zz, abs=1e-12)
    a = t.as_array()
    np.testing.assert_allclose(a @ a.T, np.eye(2), atol=1e-15)


def test_gram_matrix():
    g = channels.gram_matrix()
    assert g.shape == (8, 8)
    np.testing.assert_allclose(g, g.conj().T, atol=1e-15)
    np.testing.assert_allclose(np.diag(g), 1.0, atol=1e-12)
    off = np.abs(g[~np.eye(8, dtype=bool)])
    assert off.max() > 0.1
    # entries are squared overlaps; Bell states are mutually orthogonal, cross terms are 0 or 1/2
    i = {c: k for k, c in enumerate(CHANNELS)}
    assert g[i[C.PHI_PLUS], i[C.LPHI_PLUS]] < 1e-15
    assert g[i[C.PHI_PLUS], i[C.LPHI_MINUS]] == pytest.approx(0.5, abs=1e-12)
    assert g[i[C.PHI_PLUS], i[C.PSI_MINUS]] < 1e-15
    assert set(np.round(g, 12).ravel().tolist()) <= {0.0, 0.5, 1.0}


def test_parse_names():
    assert C.parse("psi-") is C.LPSI_MINUS
    assert G.parse("HZ") is G.HZ
    with pytest.raises(ValueError):
        C.parse("Omega")
    with pytest.raises(ValueError):
        G.parse("ZZ")
