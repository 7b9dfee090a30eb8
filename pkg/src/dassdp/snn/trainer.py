"""Two-layer LIF classifier trained by surrogate gradients, with DA-SSDP hooks.

The local rule never touches the forward pass or the optimizer: after each
supervised step the hooks read the spike records of that step's forward
pass and, once warm-up is over, add a clipped correction to their weights.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from dassdp.config import TrainConfig
from dassdp.errors import GateStateError, ParameterError
from dassdp.gate import GateCalibration, WarmupAccumulator, fit_slope, gate
from dassdp.plasticity import (
    PlasticityParams,
    batch_synchrony,
    pre_clip_mean,
    saturation_fraction,
    update_tensor,
)
from dassdp.snn.lif import LifLayer, LifTrace, lif_forward, surrogate_backward
from dassdp.snn.optim import make_optimizer
from dassdp.snn.tasks import SpikeDataset, make_task
from dassdp.spike_record import FirstSpikeRecord, extract_record

log = logging.getLogger(__name__)

LAYERS = ("fc1", "fc2")


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class ForwardCache:
    inputs: np.ndarray  # (T, B, C_in)
    traces: dict  # layer id -> LifTrace
    logits: np.ndarray

    def layer_io(self, layer_id: str) -> tuple[np.ndarray, np.ndarray]:
        """(pre, post) spikes of a layer, time-major."""
        trace: LifTrace = self.traces[layer_id]
        return trace.inputs, trace.spikes


class Network:
    """Input spikes -> LIF hidden layer (fc1) -> LIF output layer (fc2) -> rate readout."""

    def __init__(self, c_in, hidden, n_classes, rng, membrane_decay=0.5, threshold=1.0,
                 reset_mode="subtract", readout_scale=5.0, init_scale=1.0, surrogate_width=0.5):
        def init(c_out, c_in_):
            return rng.normal(0.0, init_scale / np.sqrt(c_in_), size=(c_out, c_in_))

        common = dict(membrane_decay=membrane_decay, threshold=threshold, reset_mode=reset_mode)
        self.layers = {
            "fc1": LifLayer(init(hidden, c_in), **common),
            "fc2": LifLayer(init(n_classes, hidden), **common),
        }
        self.readout_scale = readout_scale
        self.surrogate_width = surrogate_width

    @classmethod
    def from_config(cls, cfg: TrainConfig, c_in: int, rng) -> "Network":
        m = cfg.model
        return cls(c_in, m.hidden, cfg.task.n_classes, rng, membrane_decay=m.membrane_decay,
                   threshold=m.threshold, reset_mode=m.reset_mode, readout_scale=m.readout_scale,
                   init_scale=m.init_scale, surrogate_width=cfg.surrogate_width)

    def params(self) -> dict:
        return {name: layer.weights for name, layer in self.layers.items()}

    def forward(self, x, smooth: bool = False) -> ForwardCache:
        """``x`` is a (B, C_in, T) spike batch."""
        inputs = np.transpose(np.asarray(x, dtype=np.float64), (2, 0, 1))
        h, tr1 = lif_forward(self.layers["fc1"], inputs, smooth, self.surrogate_width)
        o, tr2 = lif_forward(self.layers["fc2"], h, smooth, self.surrogate_width)
        logits = self.readout_scale * o.mean(axis=0)
        return ForwardCache(inputs=inputs, traces={"fc1": tr1, "fc2": tr2}, logits=logits)

    def loss(self, cache: ForwardCache, y) -> np.ndarray:
        """Per-sample cross-entropy."""
        z = cache.logits - cache.logits.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return -logp[np.arange(len(y)), y]

    def backward(self, cache: ForwardCache, y) -> dict:
        """Gradients of the batch-mean loss w.r.t. every weight matrix."""
        B = len(y)
        grad_logits = softmax(cache.logits)
        grad_logits[np.arange(B), y] -= 1.0
        grad_logits /= B
        T = cache.inputs.shape[0]
        grad_o = np.broadcast_to(grad_logits * self.readout_scale / T, (T,) + grad_logits.shape)
        g2, grad_h = surrogate_backward(self.layers["fc2"], cache.traces["fc2"], grad_o,
                                        self.surrogate_width)
        g1, _ = surrogate_backward(self.layers["fc1"], cache.traces["fc1"], grad_h,
                                   self.surrogate_width)
        return {"fc1": g1, "fc2": g2}

    def predict(self, x) -> np.ndarray:
        return self.forward(x).logits.argmax(axis=1)


def _batch_major(spikes: np.ndarray) -> np.ndarray:
    return np.transpose(spikes, (1, 2, 0)).astype(np.uint8)


@dataclass
class HookState:
    """Per-layer DA-SSDP state: own amplitudes, warm-up data and calibration."""

    layer_id: str
    params: PlasticityParams = field(default_factory=PlasticityParams)
    accumulator: WarmupAccumulator = field(default_factory=WarmupAccumulator)
    calibration: GateCalibration | None = None
    last_pre_record: FirstSpikeRecord | None = None
    last_post_record: FirstSpikeRecord | None = None

    def capture(self, cache: ForwardCache) -> None:
        pre, post = cache.layer_io(self.layer_id)
        self.last_pre_record = extract_record(_batch_major(pre))
        self.last_post_record = extract_record(_batch_major(post))

    def synchrony(self) -> np.ndarray:
        return batch_synchrony(self.last_post_record.indicators, self.last_pre_record.indicators)


def make_hooks(cfg: TrainConfig, net: Network) -> list[HookState]:
    if not cfg.plasticity_enabled:
        return []
    hooks = []
    for layer_id in cfg.hooks:
        if layer_id not in net.layers:
            raise ParameterError(f"hook on nonexistent layer {layer_id!r}; have {list(net.layers)}")
        hooks.append(HookState(layer_id, params=copy.deepcopy(cfg.plasticity)))
    return hooks


def compute_gates(hook: HookState, s_b: np.ndarray, cfg: TrainConfig) -> np.ndarray:
    if cfg.rule == "ssdp":
        return np.ones_like(s_b)
    if cfg.gate_mode == "per-batch":
        return np.full_like(s_b, gate(hook.calibration, float(s_b.mean())))
    return np.asarray(gate(hook.calibration, s_b), dtype=np.float64).reshape(s_b.shape)


def train_step(net: Network, optimizer, x, y, hooks, epoch: int, cfg: TrainConfig) -> dict:
    """One supervised step followed by the post-step local correction.

    Order: forward, loss, backward, optimizer step; then per hook: synchrony
    from this step's records; warm-up epochs only record (S_b, loss_b);
    the first gated step fits the calibration; gated steps add the clipped
    delta to the hooked weights.
    """
    cache = net.forward(x)
    losses = net.loss(cache, y)
    grads = net.backward(cache, y)
    optimizer.step(net.params(), grads)

    out = {
        "loss": float(losses.mean()),
        "accuracy": float((cache.logits.argmax(axis=1) == y).mean()),
        "hooks": {},
        "deltas": {},
    }
    for hook in hooks:
        hook.capture(cache)
        s_b = hook.synchrony()
        info = {"s_b": s_b.tolist()}
        out["hooks"][hook.layer_id] = info

        if epoch < cfg.warmup_epochs:
            info["phase"] = "warmup"
            if cfg.rule == "da-ssdp":
                if cfg.gate_mode == "per-batch":
                    hook.accumulator.record(s_b.mean(), losses.mean())
                else:
                    hook.accumulator.extend(s_b, losses)
            continue

        info["phase"] = "gated"
        if cfg.rule == "da-ssdp" and hook.calibration is None:
            if epoch != cfg.warmup_epochs:
                raise GateStateError(
                    f"hook {hook.layer_id}: gated phase at epoch {epoch} with no calibration"
                )
            hook.calibration = fit_slope(hook.accumulator, cfg.epsilon_sigma, cfg.epsilon_k)
            log.info("hook %s calibrated: %s", hook.layer_id, hook.calibration)

        gates = compute_gates(hook, s_b, cfg)
        u = update_tensor(hook.last_post_record, hook.last_pre_record, hook.params)
        pre_clip = pre_clip_mean(u, gates)
        delta = np.clip(pre_clip, hook.params.clip_lo, hook.params.clip_hi)
        net.layers[hook.layer_id].weights += delta

        info["gates"] = gates.tolist()
        info["gates_out_of_range"] = int(((gates < 0) | (gates > 2)).sum())
        info["saturation"] = saturation_fraction(pre_clip, hook.params)
        if hook.calibration is not None:
            info["k"] = hook.calibration.slope
            info["fallback"] = hook.calibration.fallback_active
        out["deltas"][hook.layer_id] = delta
    return out


def evaluate(net: Network, data: SpikeDataset, batch_size: int = 256) -> float:
    correct = 0
    for start in range(0, len(data), batch_size):
        sl = slice(start, start + batch_size)
        correct += int((net.predict(data.x[sl]) == data.y[sl]).sum())
    return correct / len(data)


@dataclass
class RunResult:
    config: TrainConfig
    net: Network
    hooks: list
    optimizer: object
    log: list
    train_acc: list
    test_acc: list

    @property
    def final_test_acc(self) -> float:
        return self.test_acc[-1]

    def calibrations(self) -> dict:
        return {h.layer_id: h.calibration for h in self.hooks}


def run_experiment(cfg: TrainConfig, dataset=None, on_step=None, stop_epoch=None) -> RunResult:
    """Train for ``cfg.total_epochs`` (or up to ``stop_epoch``) deterministically.

    ``on_step(epoch, step, net, optimizer, result)`` is called after every
    train step if given. Returns the network, hook states and a list of
    JSON-ready log records (one per step plus one per epoch).
    """
    if dataset is None:
        t = cfg.task
        dataset = make_task(t.name, t.n_train, t.n_test, t.n_classes, t.group_size,
                            cfg.timesteps, t.p_on, t.p_off, seed=cfg.seed)
    train, test = dataset
    init_rng = np.random.default_rng([cfg.seed, 1])
    order_rng = np.random.default_rng([cfg.seed, 2])
    net = Network.from_config(cfg, train.x.shape[1], init_rng)
    optimizer = make_optimizer(cfg.optimizer, cfg.learning_rate)
    hooks = make_hooks(cfg, net)
    tag = {"seed": cfg.seed, "config_hash": cfg.config_hash()}

    records, train_acc, test_acc = [], [], []
    step = 0
    n_epochs = cfg.total_epochs if stop_epoch is None else stop_epoch
    for epoch in range(n_epochs):
        order = order_rng.permutation(len(train))
        losses = []
        for start in range(0, len(train), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            res = train_step(net, optimizer, train.x[idx], train.y[idx], hooks, epoch, cfg)
            losses.append(res["loss"])
            records.append({
                "type": "step", "epoch": epoch, "step": step,
                "phase": "warmup" if epoch < cfg.warmup_epochs else "gated",
                "loss": res["loss"], "accuracy": res["accuracy"], "hooks": res["hooks"], **tag,
            })
            if on_step is not None:
                on_step(epoch, step, net, optimizer, res)
            step += 1
        train_acc.append(evaluate(net, train))
        test_acc.append(evaluate(net, test))
        records.append({
            "type": "epoch", "epoch": epoch, "train_loss": float(np.mean(losses)),
            "train_acc": train_acc[-1], "test_acc": test_acc[-1], **tag,
        })
        log.debug("epoch %d train %.3f test %.3f", epoch, train_acc[-1], test_acc[-1])
    return RunResult(cfg, net, hooks, optimizer, records, train_acc, test_acc)
