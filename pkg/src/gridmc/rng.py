"""Counter-based uniform variates: value = f(seed, trial, assumption).

Stateless mixing (splitmix64 finalizer chain) makes every stream
reproducible and order-independent, so trials can run in parallel and
still match a serial run bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer
    x = np.uint64(x) if np.isscalar(x) else x
    x ^= x >> np.uint64(30)
    x *= np.uint64(_C1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_C2)
    x ^= x >> np.uint64(31)
    return x


@dataclass(frozen=True)
class RandomSource:
    seed: int

    def uniform(self, trial: int, assumption: int) -> float:
        """One variate in the open interval (0, 1)."""
        return float(self.uniform_block(np.array([trial]), np.array([assumption]))[0, 0])

    def uniform_block(self, trials, assumptions) -> np.ndarray:
        """Matrix of variates for the trial x assumption grid."""
        with np.errstate(over="ignore"):
            t = _mix64((np.asarray(trials, dtype=np.uint64) + np.uint64(1))
                       * np.uint64(_GOLDEN))
            k = _mix64((np.asarray(assumptions, dtype=np.uint64) + np.uint64(1))
                       * np.uint64(_C1))
            s = _mix64(np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF) + np.uint64(_GOLDEN))
            x = _mix64(s ^ t[:, None])
            x = _mix64(x ^ k[None, :])
        # top 53 bits, shifted into the open unit interval
        return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def uniform_for(src: RandomSource, trial: int, assumption: int) -> float:
    return src.uniform(trial, assumption)
