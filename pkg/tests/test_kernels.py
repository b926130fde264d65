"""Backend cross-checks: the numba and numpy kernel paths must agree bit
for bit, and both must match slow reference implementations."""
import numpy as np
import pytest

from soqn import _kernels
from soqn.rng import RandomStream

needs_numba = pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba not installed")


def _transmit_inputs(n, seed=123, eta=0.7, p_noise=0.02, p_flip=0.05):
    rng = RandomStream(seed, "kernel-test")
    args = (
        np.ones(n, dtype=np.uint8),
        rng.bits(n), rng.bits(n), rng.bits(n),
        eta, p_noise, p_flip,
        rng.uniforms(n), rng.uniforms(n), rng.uniforms(n), rng.uniforms(n), rng.uniforms(n),
    )
    return args


def _transmit_reference(sig_present, tx_bits, tx_bases, rx_bases, eta, p_noise, p_flip,
                        u_mismatch, u_sig, u_noise, u_flip, u_noisebit):
    """Straight-line python restatement of the per-pulse contract."""
    n = len(tx_bits)
    detected = np.zeros(n, dtype=np.uint8)
    bits = np.zeros(n, dtype=np.uint8)
    noise_only = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        ideal = int(tx_bits[i]) if tx_bases[i] == rx_bases[i] else int(u_mismatch[i] < 0.5)
        sig = bool(sig_present[i]) and u_sig[i] < eta
        noise = u_noise[i] < p_noise
        detected[i] = sig or noise
        if sig:
            bits[i] = ideal ^ int(u_flip[i] < p_flip)
        elif noise:
            bits[i] = int(u_noisebit[i] < 0.5)
        noise_only[i] = noise and not sig
    return detected, bits, noise_only


def _toeplitz_reference(key, t, m):
    n = len(key)
    out = np.zeros(m, dtype=np.uint8)
    for i in range(m):
        out[i] = int(np.sum(t[i : i + n].astype(np.int64) * key.astype(np.int64))) & 1
    return out


class TestTransmitKernel:
    def test_numpy_matches_reference(self):
        args = _transmit_inputs(500)
        got = _kernels._transmit_numpy(*args)
        want = _transmit_reference(*args)
        for g, w in zip(got, want):
            assert np.array_equal(g, w)

    @needs_numba
    def test_backends_identical(self):
        args = _transmit_inputs(20000)
        a = _kernels.TRANSMIT_IMPLS["numpy"](*args)
        b = _kernels.TRANSMIT_IMPLS["numba"](*args)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    def test_ideal_channel(self):
        args = list(_transmit_inputs(1000, eta=1.0, p_noise=0.0, p_flip=0.0))
        detected, bits, noise_only = _kernels.transmit_pulses(*args)
        assert detected.all()
        assert not noise_only.any()
        match = args[2] == args[3]
        assert np.array_equal(bits[match], args[1][match])


class TestToeplitzKernel:
    def test_numpy_matches_reference(self):
        rng = RandomStream(5, "toeplitz")
        key = rng.bits(300)
        m = 120
        t = rng.bits(len(key) + m - 1)
        assert np.array_equal(_kernels._toeplitz_numpy(key, t, m),
                              _toeplitz_reference(key, t, m))

    @needs_numba
    def test_backends_identical(self):
        rng = RandomStream(6, "toeplitz")
        key = rng.bits(5000)
        m = 3000
        t = rng.bits(len(key) + m - 1)
        assert np.array_equal(_kernels.TOEPLITZ_IMPLS["numpy"](key, t, m),
                              _kernels.TOEPLITZ_IMPLS["numba"](key, t, m))

    def test_linear_in_key(self):
        # universal-hash linearity: T(k1 xor k2) == T(k1) xor T(k2)
        rng = RandomStream(7, "toeplitz")
        k1, k2 = rng.bits(800), rng.bits(800)
        m = 350
        t = rng.bits(800 + m - 1)
        h = _kernels.toeplitz_hash
        assert np.array_equal(h(np.bitwise_xor(k1, k2), t, m),
                              np.bitwise_xor(h(k1, t, m), h(k2, t, m)))

    def test_block_boundary_sizes(self):
        rng = RandomStream(8, "toeplitz")
        for n, m in [(1, 1), (10, 1), (2048, 2048), (2049, 2050)]:
            key = rng.bits(n)
            t = rng.bits(n + m - 1)
            assert np.array_equal(_kernels._toeplitz_numpy(key, t, m),
                                  _toeplitz_reference(key, t, m))
