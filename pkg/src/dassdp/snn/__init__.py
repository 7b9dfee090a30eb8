"""Desk-scale LIF network, surrogate-gradient training and DA-SSDP hooks."""

from dassdp.snn.lif import LifLayer, LifTrace, lif_forward, surrogate_backward
from dassdp.snn.optim import SGD, Adam
from dassdp.snn.trainer import HookState, Network, run_experiment, train_step

__all__ = ["Adam", "HookState", "LifLayer", "LifTrace", "Network", "SGD",
           "lif_forward", "run_experiment", "surrogate_backward", "train_step"]
