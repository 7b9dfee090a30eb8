"""MACs / SOPs / energy accounting for spiking layer graphs.

Energies are computed in picojoules and converted once at the end.
The first spike-encoding convolution is billed per MAC, everything else
per synaptic operation (SOP = mean input rate x T x MACs).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dassdp.errors import ParameterError
from dassdp.spike_record import check_spikes

KINDS = ("snn-conv-first", "snn-conv", "snn-fc", "attention-block")
PJ_PER_MJ = 1e9
PJ_PER_UJ = 1e6


@dataclass(frozen=True)
class BlockCost:
    block_id: str
    kind: str
    macs: float
    mean_input_rate: float
    timesteps: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"{self.block_id}: unknown block kind {self.kind!r}")
        if self.macs < 0:
            raise ParameterError(f"{self.block_id}: macs must be >= 0, got {self.macs}")
        if not 0.0 <= self.mean_input_rate <= 1.0:
            raise ParameterError(
                f"{self.block_id}: firing rate must lie in [0, 1], got {self.mean_input_rate}"
            )
        if self.timesteps < 1:
            raise ParameterError(f"{self.block_id}: timesteps must be >= 1")


@dataclass(frozen=True)
class EnergyModel:
    e_mac: float = 4.6  # pJ per MAC, 45 nm
    e_ac: float = 0.9  # pJ per SOP, 45 nm

    def __post_init__(self):
        if self.e_mac <= 0 or self.e_ac <= 0:
            raise ParameterError("energy coefficients must be > 0")


def sops(block: BlockCost) -> float:
    return block.mean_input_rate * block.timesteps * block.macs


def block_energy_pj(block: BlockCost, model: EnergyModel = EnergyModel()) -> float:
    if block.kind == "snn-conv-first":
        return model.e_mac * block.macs
    return model.e_ac * sops(block)


def model_energy(blocks, model: EnergyModel = EnergyModel()) -> float:
    """Total energy in mJ."""
    blocks = list(blocks)
    if not blocks:
        raise ParameterError("model_energy needs at least one block")
    mac_ops = sum(b.macs for b in blocks if b.kind == "snn-conv-first")
    ac_ops = sum(sops(b) for b in blocks if b.kind != "snn-conv-first")
    return (model.e_mac * mac_ops + model.e_ac * ac_ops) / PJ_PER_MJ


def rate_monitor(train) -> float:
    """Mean firing rate over every (sample, channel, step) entry."""
    return float(check_spikes(train).mean())


def load_blocks(path) -> list[BlockCost]:
    """Read ``[{"kind", "macs", "rate", "T", optional "id"}, ...]``."""
    entries = json.loads(Path(path).read_text())
    return [
        BlockCost(
            block_id=str(e.get("id", f"block{n}")),
            kind=e["kind"],
            macs=float(e["macs"]),
            mean_input_rate=float(e["rate"]),
            timesteps=int(e["T"]),
        )
        for n, e in enumerate(entries)
    ]


def energy_table(blocks, model: EnergyModel = EnergyModel()) -> list[dict]:
    rows = []
    for b in blocks:
        rows.append(
            {
                "block": b.block_id,
                "kind": b.kind,
                "macs": b.macs,
                "sops": 0.0 if b.kind == "snn-conv-first" else sops(b),
                "energy_uJ": block_energy_pj(b, model) / PJ_PER_UJ,
            }
        )
    return rows


def dense_macs(c_in: int, c_out: int) -> int:
    return c_in * c_out


def conv_macs(c_in: int, c_out: int, kernel: int, h_out: int, w_out: int, groups: int = 1) -> int:
    return (c_in // groups) * kernel * kernel * c_out * h_out * w_out


def measured_rate(trains) -> float:
    """Pooled mean rate over several trains of possibly different shapes."""
    spikes = sum(int(np.asarray(t).sum()) for t in trains)
    entries = sum(np.asarray(t).size for t in trains)
    return spikes / entries if entries else 0.0
