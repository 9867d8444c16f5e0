"""Log-ratio diagnostics comparing gaps and hitting times with conductance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RatioDiagnostics:
    gap_ratio: float
    tau_ratios: np.ndarray
    median_tau_ratio: float
    fraction_above: float
    epsilon: float


def metastability_ratios(gap: float, phi_min: float, hitting_samples, phi_S: float,
                         epsilon: float = 0.3) -> RatioDiagnostics:
    """``log(gap)/log(phi_min)`` and ``log(tau)/log(1/phi_S)`` for each hitting time.

    Hitting times are positive and ``log(1/phi_S)`` is positive, so the tau
    ratios are non-negative; ``tau = 0`` is counted as one step (ratio 0).
    ``fraction_above`` is the share of tau ratios exceeding ``1 + epsilon``.
    Censored samples (``None``) must be filtered out by the caller.
    """
    if not (0 < gap < 1 and 0 < phi_min < 1 and 0 < phi_S < 1):
        raise ValueError("gap and conductances must lie in (0, 1)")
    taus = list(hitting_samples)
    if any(t is None for t in taus):
        raise ValueError("censored hitting times must be filtered and reported separately")
    t = np.maximum(np.asarray(taus, dtype=float), 1.0)
    ratios = np.log(t) / -math.log(phi_S)
    median = float(np.median(ratios)) if ratios.size else math.nan
    above = float(np.mean(ratios > 1.0 + epsilon)) if ratios.size else math.nan
    return RatioDiagnostics(math.log(gap) / math.log(phi_min), ratios, median, above, epsilon)
