"""QKD sessions over an acquired optical link.

Two protocol flavors share one prepare-measure core: four-state BB84 between
peers, and a polarization plug-and-play variant between a server (measuring
party) and a client (encoding party) where only the returned single-photon
leg sees channel statistics. Post-processing is sifting, sampled error
estimation, modeled reconciliation with entropy-based leakage accounting,
and Toeplitz-hash privacy amplification.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from ._kernels import toeplitz_hash, transmit_pulses
from .channel import ChannelParams, transmittance
from .rng import RandomStream


class SessionAbort(str, Enum):
    NONE = "none"
    INSUFFICIENT_DETECTIONS = "insufficient_detections"
    QBER_EXCEEDS_THRESHOLD = "qber_exceeds_threshold"
    TROJAN_ALARM = "trojan_alarm"


class Basis(IntEnum):
    RECTILINEAR = 0
    DIAGONAL = 1


class Polarization(Enum):
    H = ("H", 0, Basis.RECTILINEAR)
    V = ("V", 1, Basis.RECTILINEAR)
    P = ("+", 0, Basis.DIAGONAL)
    M = ("-", 1, Basis.DIAGONAL)

    def __init__(self, symbol: str, bit: int, basis: Basis):
        self.symbol = symbol
        self.bit = bit
        self.basis = basis


_PREPARE = {
    (0, Basis.RECTILINEAR): Polarization.H,
    (1, Basis.RECTILINEAR): Polarization.V,
    (0, Basis.DIAGONAL): Polarization.P,
    (1, Basis.DIAGONAL): Polarization.M,
}


@dataclass(frozen=True)
class Pulse:
    """An optical pulse: a bright reference or an encoded single photon."""

    kind: str  # 'strong' | 'single_photon'
    polarization: Polarization | None
    intensity: float  # mean photon number

    def __post_init__(self):
        if self.kind not in ("strong", "single_photon"):
            raise ValueError(f"unknown pulse kind: {self.kind}")
        if self.intensity < 0:
            raise ValueError("intensity must be >= 0")
        if self.kind == "single_photon" and self.intensity > 1.0:
            raise ValueError("single_photon pulses must have intensity <= 1")
        if self.kind == "strong" and self.intensity <= 1.0:
            raise ValueError("strong pulses must have intensity > 1")


@dataclass(frozen=True)
class EveConfig:
    mode: str = "none"  # none | intercept_resend | trojan_probe
    probe_intensity: float = 0.0

    def __post_init__(self):
        if self.mode not in ("none", "intercept_resend", "trojan_probe"):
            raise ValueError(f"unknown eve mode: {self.mode}")
        if self.mode == "trojan_probe" and self.probe_intensity <= 0:
            raise ValueError("trojan_probe requires probe_intensity > 0")


EVE_OFF = EveConfig()


@dataclass(frozen=True)
class ProtocolParams:
    min_sift_len: int = 1000
    sample_fraction: float = 0.5
    qber_abort: float = 0.11
    f_ec: float = 1.16
    safety_margin_bits: int = 100
    signal_mean_photons: float = 0.5  # target level after the variable attenuator
    trojan_tolerance: float = 0.25
    strong_pulse_intensity: float = 1e6

    def __post_init__(self):
        if self.min_sift_len < 1:
            raise ValueError("min_sift_len must be >= 1")
        if not (0.0 < self.sample_fraction < 1.0):
            raise ValueError("sample_fraction must be in (0, 1)")
        if not (0.0 <= self.qber_abort < 0.5):
            raise ValueError("qber_abort must be in [0, 0.5)")
        if self.f_ec < 1.0:
            raise ValueError("f_ec must be >= 1")
        if self.safety_margin_bits < 0:
            raise ValueError("safety_margin_bits must be >= 0")
        if not (0.0 < self.signal_mean_photons <= 1.0):
            raise ValueError("signal_mean_photons must be in (0, 1]")
        if not (0.0 < self.trojan_tolerance < 1.0):
            raise ValueError("trojan_tolerance must be in (0, 1)")
        if self.strong_pulse_intensity <= 1.0:
            raise ValueError("strong_pulse_intensity must be > 1")


@dataclass(frozen=True)
class SessionRecord:
    """Outcome of one key-generation run."""

    n_pulses: int
    sifted_len: int
    qber: float
    reconciliation_leak_bits: int
    final_key: np.ndarray  # uint8 bits, empty when aborted
    aborted: bool
    abort_reason: SessionAbort

    def __post_init__(self):
        self.final_key.setflags(write=False)
        if self.aborted != (self.abort_reason is not SessionAbort.NONE):
            raise ValueError("aborted flag inconsistent with abort_reason")
        if self.aborted != (len(self.final_key) == 0):
            raise ValueError("aborted sessions carry an empty final key, successful ones do not")
        if not (0.0 <= self.qber <= 0.5):
            raise ValueError("recorded qber must be in [0, 0.5]")
        if self.sifted_len > self.n_pulses or len(self.final_key) > self.sifted_len:
            raise ValueError("key lengths must shrink along the pipeline")


def prepare(bit: int, basis: Basis) -> Polarization:
    """Encode a bit in a basis: (0,R)->H, (1,R)->V, (0,D)->+, (1,D)->-."""
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    return _PREPARE[(bit, Basis(basis))]


def measure(pol: Polarization, basis: Basis, rng: RandomStream) -> int:
    """Measure a polarization: deterministic in the matched basis, a fair
    coin otherwise."""
    if pol.basis == Basis(basis):
        return pol.bit
    return rng.bit()


def intercept_resend(pol: Polarization, rng: RandomStream) -> Polarization:
    """Eve measures in a uniformly random basis and re-prepares the outcome."""
    eve_basis = Basis(rng.bit())
    return prepare(measure(pol, eve_basis, rng), eve_basis)


def trojan_monitor(measured_intensity: float, expected_intensity: float,
                   tolerance_fraction: float) -> bool:
    """True (alarm) iff the monitored intensity deviates from the expected
    one by more than ``tolerance_fraction`` relatively."""
    if expected_intensity <= 0:
        raise ValueError("expected_intensity must be > 0")
    if not (0.0 < tolerance_fraction < 1.0):
        raise ValueError("tolerance_fraction must be in (0, 1)")
    return abs(measured_intensity - expected_intensity) / expected_intensity > tolerance_fraction


def sift(sender_bases, receiver_bases, sender_bits, receiver_bits, detected):
    """Keep positions that were detected and measured in the matching basis."""
    sb = np.asarray(sender_bases, dtype=np.uint8)
    rb = np.asarray(receiver_bases, dtype=np.uint8)
    sx = np.asarray(sender_bits, dtype=np.uint8)
    rx = np.asarray(receiver_bits, dtype=np.uint8)
    det = np.asarray(detected, dtype=bool)
    n = len(sb)
    if not (len(rb) == len(sx) == len(rx) == len(det) == n):
        raise ValueError("sift inputs must have equal lengths")
    keep = det & (sb == rb)
    return sx[keep], rx[keep]


def estimate_qber(sifted_sender, sifted_receiver, sample_fraction: float,
                  rng: RandomStream):
    """Disclose a random sample, measure its error rate, drop it from both keys.

    Returns (qber, remaining_sender, remaining_receiver).
    """
    sa = np.asarray(sifted_sender, dtype=np.uint8)
    sb = np.asarray(sifted_receiver, dtype=np.uint8)
    if len(sa) != len(sb):
        raise ValueError("sifted keys must have equal lengths")
    if len(sa) < 2:
        raise ValueError("need at least 2 sifted bits to estimate the error rate")
    if not (0.0 < sample_fraction < 1.0):
        raise ValueError("sample_fraction must be in (0, 1)")
    n = len(sa)
    k = math.ceil(sample_fraction * n)
    perm = rng.permutation(n)
    sample = perm[:k]
    qber = float(np.count_nonzero(sa[sample] != sb[sample])) / k
    remaining = np.sort(perm[k:])
    return qber, sa[remaining], sb[remaining]


def binary_entropy(p: float) -> float:
    """Binary entropy h2(p) in bits, with h2(0) = h2(1) = 0."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def reconcile(sender_key, receiver_key, qber: float, f_ec: float = 1.16):
    """Modeled reconciliation: the receiver adopts the sender key and the
    public leakage is charged as ceil(f_ec * h2(qber) * len).

    Returns (corrected_receiver_key, leak_bits).
    """
    sa = np.asarray(sender_key, dtype=np.uint8)
    sb = np.asarray(receiver_key, dtype=np.uint8)
    if len(sa) != len(sb):
        raise ValueError("keys must have equal lengths")
    if not (0.0 <= qber < 0.5):
        raise ValueError("reconciliation requires qber < 0.5")
    leak = math.ceil(f_ec * binary_entropy(qber) * len(sa))
    return sa.copy(), leak


def privacy_amplify(key, qber: float, leak_bits: int, rng: RandomStream, *,
                    qber_abort: float = 0.11, safety_margin_bits: int = 0) -> np.ndarray:
    """Compress a reconciled key to its secret length via a Toeplitz hash.

    Final length is floor(len * (1 - h2(qber)) - leak_bits - margin). Returns
    an empty array (abort) when that is non-positive or qber exceeds the
    abort threshold. Deterministic given the stream state.
    """
    k = np.asarray(key, dtype=np.uint8)
    n = len(k)
    if n == 0:
        raise ValueError("privacy amplification needs a non-empty key")
    m = math.floor(n * (1.0 - binary_entropy(qber)) - leak_bits - safety_margin_bits)
    if m <= 0 or qber > qber_abort:
        return np.empty(0, dtype=np.uint8)
    t_bits = rng.bits(n + m - 1)
    return toeplitz_hash(k, t_bits, m)


def _aborted(n_pulses: int, sifted_len: int, qber: float, reason: SessionAbort) -> SessionRecord:
    return SessionRecord(
        n_pulses=n_pulses,
        sifted_len=sifted_len,
        qber=min(qber, 0.5),
        reconciliation_leak_bits=0,
        final_key=np.empty(0, dtype=np.uint8),
        aborted=True,
        abort_reason=reason,
    )


def _prepare_measure_rounds(n_pulses: int, loss_db: float, eve: EveConfig,
                            channel: ChannelParams, rng: RandomStream):
    """One batch of prepare -> (eve) -> channel -> measure rounds.

    Returns (sender_bits, sender_bases, receiver_bases, detected,
    receiver_bits). Draw order is fixed so a session replays bit-for-bit
    from its stream.
    """
    eta_total = transmittance(loss_db) * channel.detector_efficiency
    if not (0.0 < eta_total <= 1.0):
        raise ValueError(f"eta_total out of (0, 1]: {eta_total}")
    sender_bits = rng.bits(n_pulses)
    sender_bases = rng.bits(n_pulses)
    if eve.mode == "intercept_resend":
        eve_bases = rng.bits(n_pulses)
        eve_coin = rng.bits(n_pulses)
        tx_bits = np.where(eve_bases == sender_bases, sender_bits, eve_coin).astype(np.uint8)
        tx_bases = eve_bases
    else:
        tx_bits = sender_bits
        tx_bases = sender_bases
    receiver_bases = rng.bits(n_pulses)
    u_mismatch = rng.uniforms(n_pulses)
    u_sig = rng.uniforms(n_pulses)
    u_noise = rng.uniforms(n_pulses)
    u_flip = rng.uniforms(n_pulses)
    u_noisebit = rng.uniforms(n_pulses)
    present = np.ones(n_pulses, dtype=np.uint8)
    detected, receiver_bits, _ = transmit_pulses(
        present, tx_bits, tx_bases, receiver_bases,
        eta_total, channel.noise_prob, channel.intrinsic_error_prob,
        u_mismatch, u_sig, u_noise, u_flip, u_noisebit,
    )
    return sender_bits, sender_bases, receiver_bases, detected, receiver_bits


def _postprocess(n_pulses: int, sender_bits, sender_bases, receiver_bases,
                 detected, receiver_bits, rng: RandomStream,
                 protocol: ProtocolParams) -> SessionRecord:
    sifted_a, sifted_b = sift(sender_bases, receiver_bases, sender_bits,
                              receiver_bits, detected)
    sifted_len = len(sifted_a)
    # error estimation needs at least 2 bits regardless of the configured floor
    if sifted_len < max(protocol.min_sift_len, 2):
        return _aborted(n_pulses, sifted_len, 0.0, SessionAbort.INSUFFICIENT_DETECTIONS)
    qber, rem_a, rem_b = estimate_qber(sifted_a, sifted_b, protocol.sample_fraction, rng)
    if qber > protocol.qber_abort:
        return _aborted(n_pulses, sifted_len, qber, SessionAbort.QBER_EXCEEDS_THRESHOLD)
    if len(rem_a) == 0:
        return _aborted(n_pulses, sifted_len, qber, SessionAbort.INSUFFICIENT_DETECTIONS)
    corrected, leak = reconcile(rem_a, rem_b, qber, protocol.f_ec)
    # Key agreement is asserted, not assumed: after reconciliation both ends
    # must hold the sender key bit for bit.
    if not np.array_equal(corrected, rem_a):
        raise AssertionError("reconciled keys disagree")
    final = privacy_amplify(corrected, qber, leak, rng,
                            qber_abort=protocol.qber_abort,
                            safety_margin_bits=protocol.safety_margin_bits)
    if len(final) == 0:
        # qber cleared the abort threshold but the leakage plus margin ate
        # the whole key; there is nothing left to distill.
        reason = (SessionAbort.QBER_EXCEEDS_THRESHOLD if qber > protocol.qber_abort
                  else SessionAbort.INSUFFICIENT_DETECTIONS)
        return _aborted(n_pulses, sifted_len, qber, reason)
    return SessionRecord(
        n_pulses=n_pulses,
        sifted_len=sifted_len,
        qber=qber,
        reconciliation_leak_bits=leak,
        final_key=final,
        aborted=False,
        abort_reason=SessionAbort.NONE,
    )


def _require_active(link) -> float:
    if getattr(link, "state", "active") != "active":
        raise ValueError(f"link {getattr(link, 'endpoints', link)} is not active")
    return float(link.loss_db)


def run_bb84_session(link, n_pulses: int, eve: EveConfig, rng: RandomStream,
                     channel: ChannelParams | None = None,
                     protocol: ProtocolParams | None = None) -> SessionRecord:
    """Run one BB84 session over an active link; see module docstring."""
    channel = channel or ChannelParams()
    protocol = protocol or ProtocolParams()
    loss_db = _require_active(link)
    if n_pulses < 1:
        raise ValueError("n_pulses must be >= 1")
    rounds = _prepare_measure_rounds(n_pulses, loss_db, eve, channel, rng)
    return _postprocess(n_pulses, *rounds, rng, protocol)


def run_plugplay_session(server_link, n_pulses: int, eve: EveConfig, rng: RandomStream,
                         channel: ChannelParams | None = None,
                         protocol: ProtocolParams | None = None) -> SessionRecord:
    """Run one polarization plug-and-play session over an active link.

    The server's strong forward pulse always arrives; the client splits it,
    monitors half on the intensity detector, encodes and attenuates the
    other half, and returns it. Only that returned single-photon leg runs
    through the channel statistics. An intensity anomaly on the monitor
    aborts before any quantum rounds.
    """
    channel = channel or ChannelParams()
    protocol = protocol or ProtocolParams()
    loss_db = _require_active(server_link)
    if n_pulses < 1:
        raise ValueError("n_pulses must be >= 1")

    strong = Pulse("strong", None, protocol.strong_pulse_intensity)
    expected_monitor = strong.intensity / 2.0  # 50/50 split
    if eve.mode == "trojan_probe":
        monitor_reading = eve.probe_intensity
    else:
        monitor_reading = expected_monitor
    if trojan_monitor(monitor_reading, expected_monitor, protocol.trojan_tolerance):
        return _aborted(n_pulses, 0, 0.0, SessionAbort.TROJAN_ALARM)

    # The attenuator scales to the target level using the monitor reading;
    # with an honest reading the returned pulse sits exactly at the target.
    # A low reading inside the tolerance window can let the pulse run hot,
    # capped at one photon on average.
    returned = Pulse("single_photon", None,
                     min(1.0, protocol.signal_mean_photons * expected_monitor / monitor_reading))

    leg_eve = eve if eve.mode == "intercept_resend" else EVE_OFF
    rounds = _prepare_measure_rounds(n_pulses, loss_db, leg_eve, channel, rng)
    return _postprocess(n_pulses, *rounds, rng, protocol)
