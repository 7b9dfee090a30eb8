"""Dopamine-modulated spike-synchrony-dependent plasticity (DA-SSDP).

Training-time local update rule for spiking networks: first-spike capture,
synchrony-gated Gaussian Hebbian updates, a warm-up-fitted dopamine gate,
and a post-step weight correction, plus reference oracles and cost models.
"""

from dassdp.errors import (
    CalibrationError,
    DassdpError,
    GateStateError,
    ParameterError,
    ShapeError,
)
from dassdp.gate import GateCalibration, WarmupAccumulator, fit_slope, gate
from dassdp.plasticity import (
    PlasticityParams,
    batch_delta,
    batch_synchrony,
    gaussian_kernel,
    per_sample_update,
    ssdp_delta,
    synchrony_mask,
)
from dassdp.spike_record import (
    FirstSpikeRecord,
    binarize,
    extract_record,
    latency_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "DassdpError",
    "FirstSpikeRecord",
    "GateCalibration",
    "GateStateError",
    "ParameterError",
    "PlasticityParams",
    "ShapeError",
    "WarmupAccumulator",
    "batch_delta",
    "batch_synchrony",
    "binarize",
    "extract_record",
    "fit_slope",
    "gate",
    "gaussian_kernel",
    "latency_matrix",
    "per_sample_update",
    "ssdp_delta",
    "synchrony_mask",
]
