"""Chain diagnostics and probabilistic forecast scoring."""

from __future__ import annotations

import numpy as np

from .circular import circular_distance, circular_summary


def autocorrelations(trace: np.ndarray) -> np.ndarray:
    """Normalized autocorrelation function via FFT; rho[0] == 1."""
    x = np.asarray(trace, dtype=float)
    n = x.size
    x = x - x.mean()
    nfft = 1
    while nfft < 2 * n:
        nfft *= 2
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n].real / n
    if acov[0] <= 0:
        raise ValueError("zero variance")
    return acov / acov[0]


def ress(trace) -> float:
    """Relative effective sample size 1 / (1 + 2 * sum of autocorrelations).

    The infinite sum is truncated with Geyer's initial positive sequence
    rule: consecutive lag pairs (rho_{2k-1} + rho_{2k}) are accumulated
    while they stay positive.
    """
    x = np.asarray(trace, dtype=float)
    if x.size < 10:
        raise ValueError("trace too short for a RESS estimate")
    if np.ptp(x) == 0.0:
        raise ValueError("zero variance")
    rho = autocorrelations(x)
    total = 0.0
    k = 1
    while k + 1 < rho.size:
        pair = rho[k] + rho[k + 1]
        if pair <= 0.0:
            break
        total += pair
        k += 2
    return 1.0 / (1.0 + 2.0 * total)


def circular_ress(angle_trace) -> float:
    """RESS of an angle trace: minimum over its cos and sin components."""
    x = np.asarray(angle_trace, dtype=float)
    return min(ress(np.cos(x)), ress(np.sin(x)))


def circular_crps(predictive, observation: float) -> float:
    """Monte Carlo circular CRPS, lower is better.

    E[d(theta, obs)] - E[d(theta, theta')] / 2 with d(a,b) = 1 - cos(a-b).
    The self-distance term pairs the draws disjointly (2i, 2i+1) so the
    two draws in each pair are independent.
    """
    pred = np.asarray(predictive, dtype=float)
    if pred.size < 2:
        raise ValueError("need at least two predictive draws")
    e_obs = float(np.mean(circular_distance(pred, observation)))
    half = pred.size // 2
    e_pair = float(np.mean(circular_distance(pred[0 : 2 * half : 2], pred[1 : 2 * half : 2])))
    return e_obs - 0.5 * e_pair


def predictive_summary(samples):
    """Per-location circular mean and variance of predictive draws.

    ``samples`` has one column per test location. Returns (means, variances).
    """
    s = np.atleast_2d(np.asarray(samples, dtype=float))
    summaries = [circular_summary(s[:, j]) for j in range(s.shape[1])]
    means = np.array([cs.mean_direction for cs in summaries])
    variances = np.array([cs.circular_variance for cs in summaries])
    return means, variances
