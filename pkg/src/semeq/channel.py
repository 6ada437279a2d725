"""AWGN channel on 2-D symbols, parameterized by peak SNR in dB.

Symbols are amplitude-bounded to [-1, 1] per component before
transmission, so snr_db is referenced to unit peak power: the noise
variance per component is 10**(-snr_db / 10).  The receiver applies no
clipping; snr_db = inf is an exact passthrough.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

Symbol = tuple[float, float]


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float

    def __post_init__(self) -> None:
        if math.isnan(self.snr_db):
            raise ValueError("snr_db must not be NaN")

    @property
    def noise_variance(self) -> float:
        """Per-component noise variance; zero at snr_db = inf."""
        if math.isinf(self.snr_db):
            if self.snr_db < 0:
                raise ValueError("snr_db = -inf is not meaningful")
            return 0.0
        return 10.0 ** (-self.snr_db / 10.0)

    @property
    def noise_sigma(self) -> float:
        return math.sqrt(self.noise_variance)


def transmit(x: Symbol, cfg: ChannelConfig, rng: random.Random) -> Symbol:
    """Add i.i.d. Gaussian noise per component; bit-exact passthrough at inf."""
    sigma = cfg.noise_sigma
    if sigma == 0.0:
        return x
    return (x[0] + rng.gauss(0.0, sigma), x[1] + rng.gauss(0.0, sigma))
