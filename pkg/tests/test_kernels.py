"""The numba and numpy kernels must agree label for label."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from qpkc import _kernels

pytestmark = pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba not installed")


def random_states(n, seed):
    g = np.random.default_rng(seed)
    v = g.normal(size=(n, 4)) + 1j * g.normal(size=(n, 4))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@pytest.mark.parametrize("party", [_kernels.BOB, _kernels.ALICE])
def test_measure_paths_agree(party):
    n = 5000
    g = np.random.default_rng(1)
    s = random_states(n, 2)
    phis = g.uniform(0, 2 * math.pi, n)
    u = g.random(n)
    l1, o1 = _kernels.measure_batch_numpy(s, phis, party, u)
    l2, o2 = _kernels.measure_batch_jit(s, phis, party, u)
    np.testing.assert_array_equal(l1, l2)
    np.testing.assert_allclose(o1, o2, atol=1e-13)
    np.testing.assert_allclose(np.linalg.norm(o1, axis=1), 1.0, atol=1e-12)


def test_expectation_paths_agree():
    n = 2000
    g = np.random.default_rng(3)
    s = random_states(n, 4)
    pb, pa = g.uniform(0, 7, n), g.uniform(0, 7, n)
    np.testing.assert_allclose(
        _kernels.expectation_batch_numpy(s, pb, pa), _kernels.expectation_batch_jit(s, pb, pa), atol=1e-13
    )


def test_helstrom_paths_agree():
    n = 20000
    g = np.random.default_rng(5)
    t = g.uniform(0, 2 * math.pi, n)
    bits = g.integers(0, 2, n).astype(np.int8)
    u = g.random(n)
    np.testing.assert_array_equal(
        _kernels.helstrom_batch_numpy(t, bits, u), _kernels.helstrom_batch_jit(t, bits, u)
    )


def test_helstrom_measurement_is_optimal():
    # oracle: eigh of |c0><c0| - |c1><c1|, success prob = 1/2 (1 + sum of positive eigenvalues)
    g = np.random.default_rng(6)
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    z = np.diag([1.0, -1.0])
    for t in g.uniform(0, 2 * math.pi, 20):
        psi = np.array([math.cos(t), math.sin(t)])
        c0, c1 = h @ psi, z @ psi
        w, v = np.linalg.eigh(np.outer(c0, c0) - np.outer(c1, c1))
        p_opt = 0.5 * (1 + w[w > 0].sum())
        # exact success of the kernel's measurement: average over both gates with u spanning [0,1)
        n = 200_000
        u = (np.arange(n) + 0.5) / n
        ok_h = _kernels.helstrom_batch_numpy(np.full(n, t), np.zeros(n, np.int8), u).mean()
        ok_z = _kernels.helstrom_batch_numpy(np.full(n, t), np.ones(n, np.int8), u).mean()
        assert 0.5 * (ok_h + ok_z) == pytest.approx(p_opt, abs=1e-4)
        assert p_opt == pytest.approx(0.5 * (1 + 1 / math.sqrt(2)), abs=1e-12)


def test_env_flag_selects_numpy():
    env = dict(os.environ, QPKC_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "import qpkc; print(qpkc.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_default_backend_is_numba():
    if os.environ.get("QPKC_DISABLE_NUMBA"):
        pytest.skip("numpy path forced by environment")
    assert _kernels.BACKEND == "numba"
