"""Batched numeric kernels for pair measurement and Monte Carlo trials.

Each kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version. Both consume the same pre-drawn uniforms, so for a given random
stream they return the same labels. Set ``QPKC_DISABLE_NUMBA=1`` to force the
numpy path (handy for debugging or when numba is not installed).
"""

import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

BOB = 0
ALICE = 1


def _env_disabled() -> bool:
    return os.environ.get("QPKC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAS_NUMBA and not _env_disabled()
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy reference path
# ---------------------------------------------------------------------------

def _eigvecs_numpy(phis):
    half = 0.5 * phis
    c, s = np.cos(half), np.sin(half)
    # e0 = (c, s) is the +1 eigenvector of sigma(phi), e1 = (-s, c) the -1 one
    return c, s


def measure_batch_numpy(states, phis, party, u):
    states = np.asarray(states, dtype=np.complex128)
    m = states.reshape(-1, 2, 2)  # [pair, bob, alice]
    c, s = _eigvecs_numpy(np.asarray(phis, dtype=np.float64))
    if party == BOB:
        v0 = c[:, None] * m[:, 0, :] + s[:, None] * m[:, 1, :]
        v1 = -s[:, None] * m[:, 0, :] + c[:, None] * m[:, 1, :]
    else:
        v0 = c[:, None] * m[:, :, 0] + s[:, None] * m[:, :, 1]
        v1 = -s[:, None] * m[:, :, 0] + c[:, None] * m[:, :, 1]
    p0 = np.sum(np.abs(v0) ** 2, axis=1)
    p1 = np.sum(np.abs(v1) ** 2, axis=1)
    take0 = (u < p0) | (p1 <= 0.0)
    labels = np.where(take0, 0, 1).astype(np.int8)
    v = np.where(take0[:, None], v0, v1)
    norm = np.sqrt(np.where(take0, p0, p1))
    v = v / norm[:, None]
    e_first = np.where(take0, c, -s)
    e_second = np.where(take0, s, c)
    out = np.empty_like(m)
    if party == BOB:
        out[:, 0, :] = e_first[:, None] * v
        out[:, 1, :] = e_second[:, None] * v
    else:
        out[:, :, 0] = v * e_first[:, None]
        out[:, :, 1] = v * e_second[:, None]
    return labels, out.reshape(-1, 4)


def expectation_batch_numpy(states, phis_b, phis_a):
    states = np.asarray(states, dtype=np.complex128)
    cb, sb = np.cos(phis_b), np.sin(phis_b)
    ca, sa = np.cos(phis_a), np.sin(phis_a)
    # sigma(phi) = [[cos, sin], [sin, -cos]]; build the 4x4 kron row by row
    ob = np.stack([np.stack([cb, sb], -1), np.stack([sb, -cb], -1)], -2)
    oa = np.stack([np.stack([ca, sa], -1), np.stack([sa, -ca], -1)], -2)
    op = np.einsum("nij,nkl->nikjl", ob, oa).reshape(-1, 4, 4)
    t = np.einsum("nij,nj->ni", op, states)
    return np.real(np.sum(np.conj(states) * t, axis=1))


def helstrom_batch_numpy(psi_angles, gate_bits, u):
    """Optimal guess between H|psi> and Z|psi> for real |psi> = (cos t, sin t).

    Returns a boolean success array. ``gate_bits`` is 0 for H, 1 for Z.
    """
    ct, st = np.cos(psi_angles), np.sin(psi_angles)
    r = 1.0 / np.sqrt(2.0)
    h0, h1 = r * (ct + st), r * (ct - st)
    z0, z1 = ct, -st
    # D = |H psi><H psi| - |Z psi><Z psi|, real symmetric 2x2, trace 0
    d00 = h0 * h0 - z0 * z0
    d01 = h0 * h1 - z0 * z1
    lam = np.sqrt(d00 * d00 + d01 * d01)
    # +lam eigenvector of [[d00, d01], [d01, -d00]]
    ex = np.where(d00 >= 0.0, d00 + lam, d01)
    ey = np.where(d00 >= 0.0, d01, lam - d00)
    en = np.sqrt(ex * ex + ey * ey)
    ex, ey = ex / en, ey / en
    sent0 = np.where(gate_bits == 0, h0, z0)
    sent1 = np.where(gate_bits == 0, h1, z1)
    p_guess_h = (ex * sent0 + ey * sent1) ** 2
    guess_h = u < p_guess_h
    return guess_h == (gate_bits == 0)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @numba.njit(cache=True)
    def measure_batch_jit(states, phis, party, u):
        n = states.shape[0]
        labels = np.empty(n, dtype=np.int8)
        out = np.empty((n, 4), dtype=np.complex128)
        for k in range(n):
            c = np.cos(0.5 * phis[k])
            s = np.sin(0.5 * phis[k])
            if party == 0:
                # bob index b -> amps 2b, 2b+1
                v00 = c * states[k, 0] + s * states[k, 2]
                v01 = c * states[k, 1] + s * states[k, 3]
                v10 = -s * states[k, 0] + c * states[k, 2]
                v11 = -s * states[k, 1] + c * states[k, 3]
            else:
                v00 = c * states[k, 0] + s * states[k, 1]
                v01 = c * states[k, 2] + s * states[k, 3]
                v10 = -s * states[k, 0] + c * states[k, 1]
                v11 = -s * states[k, 2] + c * states[k, 3]
            p0 = (v00.real * v00.real + v00.imag * v00.imag) + (v01.real * v01.real + v01.imag * v01.imag)
            p1 = (v10.real * v10.real + v10.imag * v10.imag) + (v11.real * v11.real + v11.imag * v11.imag)
            if u[k] < p0 or p1 <= 0.0:
                labels[k] = 0
                nrm = np.sqrt(p0)
                w0, w1 = v00 / nrm, v01 / nrm
                e0, e1 = c, s
            else:
                labels[k] = 1
                nrm = np.sqrt(p1)
                w0, w1 = v10 / nrm, v11 / nrm
                e0, e1 = -s, c
            if party == 0:
                out[k, 0] = e0 * w0
                out[k, 1] = e0 * w1
                out[k, 2] = e1 * w0
                out[k, 3] = e1 * w1
            else:
                out[k, 0] = w0 * e0
                out[k, 1] = w0 * e1
                out[k, 2] = w1 * e0
                out[k, 3] = w1 * e1
        return labels, out

    @numba.njit(cache=True)
    def expectation_batch_jit(states, phis_b, phis_a):
        n = states.shape[0]
        res = np.empty(n, dtype=np.float64)
        ob = np.empty((2, 2))
        oa = np.empty((2, 2))
        for k in range(n):
            cb, sb = np.cos(phis_b[k]), np.sin(phis_b[k])
            ca, sa = np.cos(phis_a[k]), np.sin(phis_a[k])
            ob[0, 0], ob[0, 1], ob[1, 0], ob[1, 1] = cb, sb, sb, -cb
            oa[0, 0], oa[0, 1], oa[1, 0], oa[1, 1] = ca, sa, sa, -ca
            acc = 0.0
            for i in range(2):
                for j in range(2):
                    t = 0.0j
                    for p in range(2):
                        for q in range(2):
                            t += ob[i, p] * oa[j, q] * states[k, 2 * p + q]
                    a = states[k, 2 * i + j]
                    acc += a.real * t.real + a.imag * t.imag
            res[k] = acc
        return res

    @numba.njit(cache=True)
    def helstrom_batch_jit(psi_angles, gate_bits, u):
        n = psi_angles.shape[0]
        ok = np.empty(n, dtype=np.bool_)
        r = 1.0 / np.sqrt(2.0)
        for k in range(n):
            ct, st = np.cos(psi_angles[k]), np.sin(psi_angles[k])
            h0, h1 = r * (ct + st), r * (ct - st)
            z0, z1 = ct, -st
            d00 = h0 * h0 - z0 * z0
            d01 = h0 * h1 - z0 * z1
            lam = np.sqrt(d00 * d00 + d01 * d01)
            if d00 >= 0.0:
                ex, ey = d00 + lam, d01
            else:
                ex, ey = d01, lam - d00
            en = np.sqrt(ex * ex + ey * ey)
            ex, ey = ex / en, ey / en
            if gate_bits[k] == 0:
                amp = ex * h0 + ey * h1
            else:
                amp = ex * z0 + ey * z1
            guess_h = u[k] < amp * amp
            ok[k] = guess_h == (gate_bits[k] == 0)
        return ok

else:  # pragma: no cover
    measure_batch_jit = expectation_batch_jit = helstrom_batch_jit = None


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def measure_batch(states, phis, party, u):
    """Projective measurement of one party of each pair along in-plane axes.

    ``u`` holds one uniform in [0, 1) per pair; label 0 is taken when
    ``u < P(label 0)``. Returns ``(labels, collapsed_states)``.
    """
    states = np.ascontiguousarray(states, dtype=np.complex128).reshape(-1, 4)
    phis = np.ascontiguousarray(phis, dtype=np.float64).reshape(-1)
    u = np.ascontiguousarray(u, dtype=np.float64).reshape(-1)
    if USE_NUMBA:
        return measure_batch_jit(states, phis, int(party), u)
    return measure_batch_numpy(states, phis, int(party), u)


def expectation_batch(states, phis_b, phis_a):
    """Exact <s| sigma(phi_b) x sigma(phi_a) |s> per pair."""
    states = np.ascontiguousarray(states, dtype=np.complex128).reshape(-1, 4)
    n = states.shape[0]
    phis_b = np.ascontiguousarray(np.broadcast_to(np.asarray(phis_b, dtype=np.float64), (n,)))
    phis_a = np.ascontiguousarray(np.broadcast_to(np.asarray(phis_a, dtype=np.float64), (n,)))
    if USE_NUMBA:
        return expectation_batch_jit(states, phis_b, phis_a)
    return expectation_batch_numpy(states, phis_b, phis_a)


def helstrom_batch(psi_angles, gate_bits, u):
    psi_angles = np.ascontiguousarray(psi_angles, dtype=np.float64)
    gate_bits = np.ascontiguousarray(gate_bits, dtype=np.int8)
    u = np.ascontiguousarray(u, dtype=np.float64)
    if USE_NUMBA:
        return helstrom_batch_jit(psi_angles, gate_bits, u)
    return helstrom_batch_numpy(psi_angles, gate_bits, u)
