"""Warm-up calibration of the dopamine gate and its evaluation afterwards."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from dassdp.errors import CalibrationError, GateStateError

EPSILON_SIGMA = 1e-8
EPSILON_K = 1e-3


@dataclass(frozen=True)
class GateCalibration:
    """Frozen statistics of the warm-up (synchrony, loss) sequences."""

    mu_s: float
    sigma_s: float
    slope: float
    mu_l: float
    sigma_l: float
    fallback_active: bool
    n_warmup: int

    def __post_init__(self):
        if self.fallback_active and self.slope != 0.0:
            raise CalibrationError("fallback calibration must have slope 0")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GateCalibration":
        data = json.loads(text)
        return cls(**{k: data[k] for k in cls.__dataclass_fields__})


@dataclass
class WarmupAccumulator:
    """Append-only store of (synchrony, loss) pairs collected during warm-up.

    Raw pairs are kept (2N floats) because the slope needs standardized
    products, which a single streaming pass cannot reproduce bit for bit.
    """

    s: list = field(default_factory=list)
    loss: list = field(default_factory=list)
    frozen: bool = False

    @property
    def count(self) -> int:
        return len(self.s)

    def record(self, s_b: float, loss_b: float) -> "WarmupAccumulator":
        if self.frozen:
            raise GateStateError("warm-up accumulator is frozen; calibration already fitted")
        self.s.append(float(s_b))
        self.loss.append(float(loss_b))
        return self

    def extend(self, s_values, loss_values) -> "WarmupAccumulator":
        s_values = np.asarray(s_values, dtype=np.float64).ravel()
        loss_values = np.asarray(loss_values, dtype=np.float64).ravel()
        if s_values.shape != loss_values.shape:
            raise CalibrationError(
                f"synchrony and loss sequences differ in length: {s_values.size} vs {loss_values.size}"
            )
        for s_b, l_b in zip(s_values, loss_values):
            self.record(s_b, l_b)
        return self


def _population_stats(x: np.ndarray) -> tuple[float, float]:
    mu = math.fsum(x) / x.size
    var = math.fsum((x - mu) ** 2) / x.size
    return mu, math.sqrt(var)


def fit_slope(
    acc: WarmupAccumulator,
    epsilon_sigma: float = EPSILON_SIGMA,
    epsilon_k: float = EPSILON_K,
) -> GateCalibration:
    """Standardize both sequences (1/N statistics) and set k = -mean(S_hat * l_hat).

    Falls back to k = 0 when either sequence has a tiny spread or the fitted
    slope is negligible. Freezes the accumulator.
    """
    n = acc.count
    if n < 2:
        raise CalibrationError(f"need at least 2 warm-up pairs, have {n}")
    s = np.asarray(acc.s, dtype=np.float64)
    loss = np.asarray(acc.loss, dtype=np.float64)
    if not (np.isfinite(s).all() and np.isfinite(loss).all()):
        raise CalibrationError("warm-up data contains non-finite values")

    mu_s, sigma_s = _population_stats(s)
    mu_l, sigma_l = _population_stats(loss)
    acc.frozen = True

    if sigma_s < epsilon_sigma or sigma_l < epsilon_sigma:
        return GateCalibration(mu_s, sigma_s, 0.0, mu_l, sigma_l, True, n)

    s_hat = (s - mu_s) / sigma_s
    l_hat = (loss - mu_l) / sigma_l
    k = -math.fsum(s_hat * l_hat) / n
    # rounding can push a perfect correlation a hair past 1
    k = min(1.0, max(-1.0, k))
    if abs(k) < epsilon_k:
        return GateCalibration(mu_s, sigma_s, 0.0, mu_l, sigma_l, True, n)
    return GateCalibration(mu_s, sigma_s, k, mu_l, sigma_l, False, n)


def gate(cal: GateCalibration | None, s_b):
    """``clip(1 + k (S_b - mu_S) / sigma_S, 0, 2)``; exactly 1 under fallback.

    Accepts a scalar or an array of synchrony values.
    """
    if cal is None:
        raise GateStateError("gate evaluated before calibration was fitted")
    s_b = np.asarray(s_b, dtype=np.float64)
    if cal.fallback_active:
        out = np.ones_like(s_b)
    else:
        out = np.clip(1.0 + cal.slope * (s_b - cal.mu_s) / cal.sigma_s, 0.0, 2.0)
    return float(out) if out.ndim == 0 else out


def linear_gate(k: float, s_hat):
    """Unclipped gate ``1 + k * S_hat`` used by the first-order analysis."""
    return 1.0 + k * np.asarray(s_hat, dtype=np.float64)
