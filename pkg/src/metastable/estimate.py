"""Monte-Carlo estimates and their error bars."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta as beta_dist


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    replicas: int
    censored: int = 0

    @property
    def censored_fraction(self) -> float:
        return self.censored / self.replicas if self.replicas else 0.0


def binomial_estimate(successes: int, trials: int) -> Estimate:
    if trials <= 0:
        raise ValueError("need at least one trial")
    p = successes / trials
    return Estimate(p, math.sqrt(p * (1.0 - p) / trials), trials)


def upper_confidence(successes: int, trials: int, level: float = 0.95) -> float:
    """One-sided upper confidence bound for a binomial proportion.

    With zero successes this is the rule of three, 3/N (the exact bound
    ``1 - 0.05**(1/N)`` is never larger).  Otherwise Clopper-Pearson.
    """
    if trials <= 0:
        return 1.0
    if successes == 0 and abs(level - 0.95) < 1e-12:
        return min(1.0, 3.0 / trials)
    if successes >= trials:
        return 1.0
    return float(beta_dist.ppf(level, successes + 1, trials - successes))


def lower_confidence(successes: int, trials: int, level: float = 0.95) -> float:
    """One-sided Clopper-Pearson lower bound."""
    if successes <= 0 or trials <= 0:
        return 0.0
    return float(beta_dist.ppf(1.0 - level, successes, trials - successes + 1))


def batch_means(values, batches: int = 50) -> Estimate:
    """Mean of a correlated series with a batch-means standard error."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 2 * batches:
        raise ValueError("series too short for the requested number of batches")
    size = n // batches
    means = x[: size * batches].reshape(batches, size).mean(axis=1)
    return Estimate(float(x.mean()), float(means.std(ddof=1) / math.sqrt(batches)), n)
