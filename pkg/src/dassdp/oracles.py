"""Brute-force references and closed-form cost formulas.

Nothing in here is on the training path. ``pairwise_reference`` scans the
raw trains for every (sample, post, pre) triple in plain Python so that it
shares no code with the vectorised pipeline it checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dassdp.counters import OpCounter
from dassdp.errors import ParameterError
from dassdp.plasticity import PlasticityParams, ssdp_delta
from dassdp.spike_record import check_spikes, extract_record

SCHEMES = ("first-spike-cache", "multi-spike-log", "neuron-trace", "synapse-eligibility")


def _first_spike(row, T: int, counter: OpCounter | None) -> int:
    # full window scan, no early exit: the reference cost is T per lookup
    first = T
    for t in range(T):
        if row[t] and first == T:
            first = t
    if counter is not None:
        counter.add("scan", T)
    return first


def pairwise_reference(
    pre_train,
    post_train,
    params: PlasticityParams,
    gates=None,
    counter: OpCounter | None = None,
) -> np.ndarray:
    """Weight delta by per-pair temporal scanning (O(B T C_out C_in))."""
    pre = check_spikes(pre_train)
    post = check_spikes(post_train)
    B, c_in, T = pre.shape
    _, c_out, _ = post.shape
    if gates is None:
        gates = [1.0] * B
    two_sigma_sq = 2.0 * params.sigma * params.sigma

    out = np.empty((c_out, c_in), dtype=np.float64)
    for i in range(c_out):
        for j in range(c_in):
            total = 0.0
            for b in range(B):
                t_post = _first_spike(post[b, i].tolist(), T, counter)
                t_pre = _first_spike(pre[b, j].tolist(), T, counter)
                lam = 1 if (t_post < T and t_pre < T) else 0
                dt = float(abs(t_post - t_pre))
                g = math.exp(-(dt * dt) / two_sigma_sq)
                dw = g * params.a_plus if lam else -g * params.a_minus
                total += float(gates[b]) * dw
            mean = total / B
            out[i, j] = min(max(mean, params.clip_lo), params.clip_hi)
    return out


def fast_delta(pre_train, post_train, params, gates=None, counter=None) -> np.ndarray:
    """The production pipeline with the same signature as the reference."""
    pre = extract_record(pre_train, counter=counter)
    post = extract_record(post_train, counter=counter)
    return ssdp_delta(post, pre, params, gates=gates, counter=counter)


def decomposition_check(grad, u_tensors, s_hat, k: float) -> dict:
    """Numerically verify the first-order split of the gated update.

    With a linear gate ``G_b = 1 + k s_hat_b`` (scale factor set to 1)::

        mean_b <grad, G_b U_b> == <grad, U_bar> + k mean_b(s_hat_b <grad, U_b>)

    Returns both sides, the absolute residual, and the residual relative to
    the largest term involved.
    """
    grad = np.asarray(grad, dtype=np.float64)
    u = np.asarray(u_tensors, dtype=np.float64)
    s_hat = np.asarray(s_hat, dtype=np.float64)
    B = u.shape[0]
    inner = np.array([math.fsum((grad * u[b]).ravel()) for b in range(B)])
    gates = 1.0 + k * s_hat
    lhs = math.fsum(float(gates[b]) * math.fsum((grad * u[b]).ravel()) for b in range(B)) / B
    u_bar = u.sum(axis=0) / B
    baseline = math.fsum((grad * u_bar).ravel())
    rhs = baseline + k * math.fsum(s_hat * inner) / B
    residual = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs), abs(baseline), float(np.abs(inner).max(initial=0.0)))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "baseline": baseline,
        "residual": residual,
        "relative": residual / scale if scale > 0 else 0.0,
    }


@dataclass
class SchemeSpec:
    """Dimensions and activity statistics of a hooked module for cost comparison."""

    scheme: str
    b: int
    c_in: int
    c_out: int
    t: int
    r_pre: float = 1.0
    r_post: float = 1.0
    t_bytes: int = 4
    b_bool: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if min(self.b, self.c_in, self.c_out, self.t) < 1:
            raise ParameterError("dimensions must be >= 1")
        if self.r_pre < 0 or self.r_post < 0:
            raise ParameterError(f"spike rates must be >= 0, got {self.r_pre}, {self.r_post}")
        if self.t_bytes not in (2, 4):
            raise ParameterError(f"t_bytes must be 2 or 4, got {self.t_bytes}")


def memory_estimate(spec: SchemeSpec) -> dict:
    """Extra memory of each timing-log scheme.

    The first-spike cache and multi-spike log have exact byte formulas. The
    trace and eligibility schemes are only known up to constants, so an
    element count is returned with ``unit == "elements"``.
    """
    b, ci, co = spec.b, spec.c_in, spec.c_out
    if spec.scheme == "first-spike-cache":
        return {"value": b * (ci + co) * spec.t_bytes, "unit": "bytes"}
    if spec.scheme == "multi-spike-log":
        value = b * (ci * (spec.r_pre * spec.t_bytes) + co * (spec.r_post * spec.t_bytes))
        return {"value": value, "unit": "bytes"}
    if spec.scheme == "neuron-trace":
        return {"value": b * (ci + co), "unit": "elements"}
    return {"value": b * co * ci, "unit": "elements"}


def time_estimate(spec: SchemeSpec) -> int:
    """Leading-order per-batch operation count of each scheme."""
    b, ci, co, t = spec.b, spec.c_in, spec.c_out, spec.t
    if spec.scheme == "first-spike-cache":
        return b * t * (ci + co) + b * co * ci
    return b * t * co * ci


def op_counter_audit(b: int, c_in: int, c_out: int, t: int, seed: int = 0) -> dict:
    """Run both paths on a random instance and report their operation counts."""
    rng = np.random.default_rng(seed)
    pre = (rng.random((b, c_in, t)) < 0.3).astype(np.uint8)
    post = (rng.random((b, c_out, t)) < 0.3).astype(np.uint8)
    params = PlasticityParams()
    fast, oracle = OpCounter(), OpCounter()
    fast_delta(pre, post, params, counter=fast)
    pairwise_reference(pre, post, params, counter=oracle)
    return {
        "fast_pairwise": fast["pairwise"],
        "fast_scan": fast["record_scan"],
        "oracle_scan": oracle["scan"],
    }
