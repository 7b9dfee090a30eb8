"""Synchrony-gated Gaussian Hebbian update and the clipped batch weight delta."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dassdp.counters import OpCounter
from dassdp.errors import ParameterError, ShapeError
from dassdp.spike_record import FirstSpikeRecord, latency_matrix


@dataclass
class PlasticityParams:
    """Hyperparameters of the local rule.

    Defaults are the amplitudes used for the CIFAR experiments; ``sigma``
    is in timesteps. Instances are mutable so a caller may adjust the
    amplitudes or bandwidth between steps.
    """

    a_plus: float = 1.5e-3
    a_minus: float = 1.0e-4
    sigma: float = 1.0
    clip_lo: float = -1.0
    clip_hi: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        # zero amplitudes are allowed so the rule can be switched off in ablations
        for name in ("a_plus", "a_minus"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ParameterError(f"{name} must be finite and >= 0, got {value}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ParameterError(f"sigma must be finite and > 0, got {self.sigma}")
        if not self.clip_lo < self.clip_hi:
            raise ParameterError(f"clip_lo ({self.clip_lo}) must be < clip_hi ({self.clip_hi})")


def gaussian_kernel(delta_t, sigma: float) -> np.ndarray:
    """``exp(-dt^2 / (2 sigma^2))`` evaluated in float64."""
    if not (np.isfinite(sigma) and sigma > 0):
        raise ParameterError(f"sigma must be finite and > 0, got {sigma}")
    dt = np.asarray(delta_t, dtype=np.float64)
    return np.exp(-(dt * dt) / (2.0 * sigma * sigma))


def synchrony_mask(post_ind, pre_ind) -> np.ndarray:
    """Per-sample outer product of post and pre fire indicators, (B, C_out, C_in)."""
    q = np.asarray(post_ind, dtype=np.uint8)
    p = np.asarray(pre_ind, dtype=np.uint8)
    if q.ndim != 2 or p.ndim != 2:
        raise ShapeError(f"indicators must be 2-D (B, C), got {q.shape} and {p.shape}")
    if q.shape[0] != p.shape[0]:
        raise ShapeError(f"batch size mismatch: post {q.shape[0]}, pre {p.shape[0]}")
    return q[:, :, None] * p[:, None, :]


def per_sample_update(g, lam, params: PlasticityParams) -> np.ndarray:
    """``g * ((A+ + A-) * lambda - A-)``: +A+ g on co-firing pairs, -A- g otherwise."""
    g = np.asarray(g, dtype=np.float64)
    lam = np.asarray(lam)
    if g.shape != lam.shape:
        raise ShapeError(f"kernel shape {g.shape} != mask shape {lam.shape}")
    # select form: (A+ + A-) - A- is not always exactly A+ in floating point
    return np.where(lam != 0, params.a_plus * g, -params.a_minus * g)


def batch_synchrony(post_ind, pre_ind) -> np.ndarray:
    """Fraction of co-active (post, pre) pairs per sample, shape (B,).

    The mean of the outer product factorises into the product of the two
    active fractions, which avoids materialising the (C_out, C_in) mask.
    """
    q = np.asarray(post_ind, dtype=np.float64)
    p = np.asarray(pre_ind, dtype=np.float64)
    if q.ndim != 2 or p.ndim != 2 or q.shape[0] != p.shape[0]:
        raise ShapeError(f"incompatible indicator shapes {q.shape} and {p.shape}")
    return q.mean(axis=1) * p.mean(axis=1)


def pre_clip_mean(u, gates) -> np.ndarray:
    """Gate-weighted mean over samples, summed in sample order."""
    u = np.asarray(u, dtype=np.float64)
    gates = np.asarray(gates, dtype=np.float64)
    if u.ndim != 3:
        raise ShapeError(f"update tensor must be (B, C_out, C_in), got {u.shape}")
    if gates.shape != (u.shape[0],):
        raise ShapeError(f"need one gate per sample: gates {gates.shape}, updates {u.shape}")
    for b in range(u.shape[0]):
        if not np.isfinite(gates[b]):
            raise ParameterError(f"non-finite gate {gates[b]} at batch index {b}")
        if not np.isfinite(u[b]).all():
            raise ParameterError(f"non-finite update entry at batch index {b}")
    acc = gates[0] * u[0]
    for b in range(1, u.shape[0]):
        acc = acc + gates[b] * u[b]
    return acc / u.shape[0]


def batch_delta(u, gates, params: PlasticityParams) -> np.ndarray:
    """Clipped gate-weighted batch mean of per-sample updates, (C_out, C_in)."""
    return np.clip(pre_clip_mean(u, gates), params.clip_lo, params.clip_hi)


def saturation_fraction(pre_clip: np.ndarray, params: PlasticityParams) -> float:
    """Fraction of entries the final clip would change."""
    hit = (pre_clip < params.clip_lo) | (pre_clip > params.clip_hi)
    return float(hit.mean())


def update_tensor(
    post: FirstSpikeRecord,
    pre: FirstSpikeRecord,
    params: PlasticityParams,
    counter: OpCounter | None = None,
) -> np.ndarray:
    """Per-sample update tensor U_b straight from two first-spike records."""
    dt = latency_matrix(post, pre, counter=counter)
    lam = synchrony_mask(post.indicators, pre.indicators)
    return per_sample_update(gaussian_kernel(dt, params.sigma), lam, params)


def ssdp_delta(
    post: FirstSpikeRecord,
    pre: FirstSpikeRecord,
    params: PlasticityParams,
    gates=None,
    counter: OpCounter | None = None,
) -> np.ndarray:
    """Full fast pipeline: records -> U_b -> clipped weight delta.

    With ``gates=None`` every sample gets gate 1, i.e. the ungated
    two-factor rule.
    """
    u = update_tensor(post, pre, params, counter=counter)
    if gates is None:
        gates = np.ones(u.shape[0])
    return batch_delta(u, gates, params)
