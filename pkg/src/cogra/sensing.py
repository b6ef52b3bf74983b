"""Energy-detector operating characteristics and idle-decision posteriors."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from scipy.special import ndtr, ndtri

if TYPE_CHECKING:
    from .traffic import TrafficModel


class ZeroIdleProbability(ValueError):
    """The sensing outcome "idle" can never occur."""


def qfunc(x):
    """Gaussian tail probability Q(x) = P(N(0,1) > x)."""
    return ndtr(-x)


def qfunc_inv(p):
    """Inverse of :func:`qfunc`."""
    return -ndtri(p)


@dataclass(frozen=True)
class SensingSpec:
    """Sensing performance and the detector settings behind it.

    Parameters
    ----------
    p_d, p_f : float
        Probabilities of detection and false alarm.
    tau : float
        Sensing duration in milliseconds.
    fs : float
        Sampling frequency in Hz.
    snr_s : float
        Normalised primary-signal SNR seen by the detector.
    """

    p_d: float
    p_f: float
    tau: float
    fs: float = 100e3
    snr_s: float = 0.1

    def __post_init__(self):
        if not (0.0 <= self.p_d <= 1.0 and 0.0 <= self.p_f <= 1.0):
            raise ValueError(f"p_d={self.p_d}, p_f={self.p_f} must lie in [0, 1]")
        if self.tau < 0.0:
            raise ValueError(f"sensing duration must be >= 0, got {self.tau}")
        if self.fs <= 0.0 or self.snr_s <= 0.0:
            raise ValueError("fs and snr_s must be positive")

    @classmethod
    def from_targets(cls, target_pd, target_pf, snr_s=0.1, fs=100e3):
        """Sensing spec whose duration just meets both targets."""
        tau = sensing_duration_for_targets(snr_s, fs, target_pd, target_pf)
        return cls(p_d=target_pd, p_f=target_pf, tau=tau, fs=fs, snr_s=snr_s)

    @classmethod
    def from_threshold(cls, threshold, tau, snr_s=0.1, fs=100e3):
        """Sensing spec for a detector run at a given normalised threshold."""
        p_d, p_f = detector_roc(snr_s, tau, fs, threshold)
        return cls(p_d=p_d, p_f=p_f, tau=tau, fs=fs, snr_s=snr_s)


@dataclass(frozen=True)
class IdlePosterior:
    pr_idle_decision: float
    post_idle: float
    post_busy: float


def _samples(tau, fs):
    return tau * 1e-3 * fs


def detector_roc(snr_s, tau, fs, threshold):
    """(p_d, p_f) of the energy detector.

    ``tau`` is in ms, ``fs`` in Hz and ``threshold`` is the decision level
    normalised by the noise variance.
    """
    n = _samples(tau, fs)
    if n < 1.0:
        raise ValueError(f"tau*fs = {n:g} samples; need at least one")
    p_d = qfunc((threshold - snr_s - 1.0) * math.sqrt(n / (2.0 * snr_s + 1.0)))
    p_f = qfunc((threshold - 1.0) * math.sqrt(n))
    return float(p_d), float(p_f)


def threshold_for_pf(snr_s, tau, fs, target_pf):
    """Normalised threshold that gives false-alarm probability ``target_pf``."""
    return 1.0 + float(qfunc_inv(target_pf)) / math.sqrt(_samples(tau, fs))


def sensing_duration_for_targets(snr_s, fs, target_pd, target_pf):
    """Shortest sensing duration (ms) meeting detection and false-alarm targets."""
    if not 0.0 < target_pf < target_pd < 1.0:
        raise ValueError(
            f"need 0 < target_pf < target_pd < 1, got pf={target_pf}, pd={target_pd}"
        )
    num = float(qfunc_inv(target_pf)) - math.sqrt(2.0 * snr_s + 1.0) * float(
        qfunc_inv(target_pd)
    )
    if num <= 0.0:
        raise ValueError(
            f"targets pd={target_pd}, pf={target_pf} cannot both be met at snr_s={snr_s}"
        )
    return 1e3 * (num / snr_s) ** 2 / fs


def posterior_given_idle(traffic: TrafficModel, p_d, p_f) -> IdlePosterior:
    pr_idle, pr_busy = traffic.priors()
    a = pr_idle * (1.0 - p_f)
    b = pr_busy * (1.0 - p_d)
    den = a + b
    if den <= 0.0:
        raise ZeroIdleProbability(
            f"idle decision impossible with p_d={p_d}, p_f={p_f}"
        )
    return IdlePosterior(pr_idle_decision=den, post_idle=a / den, post_busy=b / den)
