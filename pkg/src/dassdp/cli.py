"""Command-line entry point: ``dassdp <subcommand> ...``.

Subcommands: train, calibrate-only, oracle-suite, cost, mem-table,
export-synchrony, raster. Outputs are plain data files (JSON-lines, JSON,
CSV, npz); nothing is plotted. ``DASSDP_OUT`` overrides the default output
directory when ``--out`` is not given.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from dassdp.config import TrainConfig, load_config
from dassdp.cost import EnergyModel, energy_table, load_blocks, model_energy
from dassdp.errors import DassdpError
from dassdp.gate import fit_slope
from dassdp.oracles import SCHEMES, SchemeSpec, fast_delta, memory_estimate, pairwise_reference, time_estimate
from dassdp.plasticity import PlasticityParams
from dassdp.snn.trainer import Network, run_experiment
from dassdp.snn.tasks import make_task

log = logging.getLogger("dassdp")


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("DASSDP_OUT", "runs/latest"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_cfg(args) -> TrainConfig:
    data = {}
    if args.config:
        data = load_config(args.config).to_dict()
    if args.seed is not None:
        data["seed"] = args.seed
    if args.hook:
        data["hooks"] = list(args.hook)
    if args.mode:
        data["gate_mode"] = args.mode
    return TrainConfig.from_dict(data)


def _median_by_phase(records, hook_id) -> dict:
    per_phase = {"warmup": [], "gated": []}
    for rec in records:
        if rec.get("type") == "step" and hook_id in rec["hooks"]:
            per_phase[rec["phase"]].append(float(np.mean(rec["hooks"][hook_id]["s_b"])))
    return {p: (float(np.median(v)) if v else None) for p, v in per_phase.items()}


def write_jsonl(records, path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path) -> list[dict]:
    records = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DassdpError(f"{path}:{n}: malformed log line ({exc})") from None
    return records


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    out = _out_dir(args)
    t0 = time.perf_counter()
    result = run_experiment(cfg)
    tag = {"seed": cfg.seed, "config_hash": cfg.config_hash()}

    write_jsonl(result.log, out / "metrics.jsonl")
    np.savez(out / "weights.npz", seed=cfg.seed, config_hash=tag["config_hash"],
             **{name: w for name, w in result.net.params().items()})
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))

    summary = {
        **tag,
        "final_train_acc": result.train_acc[-1],
        "final_test_acc": result.final_test_acc,
        "rule": cfg.rule,
        "hooks": {},
    }
    calibrations = {}
    for hook in result.hooks:
        entry = {"median_s_b": _median_by_phase(result.log, hook.layer_id)}
        if hook.calibration is not None:
            cal = json.loads(hook.calibration.to_json())
            calibrations[hook.layer_id] = {**cal, **tag}
            entry["k"] = hook.calibration.slope
            entry["fallback"] = hook.calibration.fallback_active
        summary["hooks"][hook.layer_id] = entry
    if calibrations:
        summary["calibration"] = calibrations
        (out / "calibration.json").write_text(json.dumps(calibrations, indent=2, sort_keys=True))
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    print(json.dumps(summary, indent=2, sort_keys=True))
    log.info("train finished in %.1fs, artifacts in %s", time.perf_counter() - t0, out)
    return 0


def cmd_calibrate_only(args) -> int:
    cfg = _load_cfg(args)
    if cfg.rule != "da-ssdp" or not cfg.hooks:
        raise DassdpError("calibrate-only needs rule: da-ssdp and at least one hook")
    out = _out_dir(args)
    result = run_experiment(cfg, stop_epoch=cfg.warmup_epochs)
    tag = {"seed": cfg.seed, "config_hash": cfg.config_hash()}
    calibrations = {}
    for hook in result.hooks:
        cal = fit_slope(hook.accumulator, cfg.epsilon_sigma, cfg.epsilon_k)
        calibrations[hook.layer_id] = {**json.loads(cal.to_json()), **tag}
    (out / "calibration.json").write_text(json.dumps(calibrations, indent=2, sort_keys=True))
    print(json.dumps(calibrations, indent=2, sort_keys=True))
    return 0


def cmd_oracle_suite(args) -> int:
    rng = np.random.default_rng(args.seed or 0)
    params = PlasticityParams()
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(args.instances):
        B, c_in, c_out, T = (int(rng.integers(1, hi + 1)) for hi in (8, 16, 16, 10))
        pre = (rng.random((B, c_in, T)) < rng.random()).astype(np.uint8)
        post = (rng.random((B, c_out, T)) < rng.random()).astype(np.uint8)
        gates = rng.uniform(0.0, 2.0, size=B)
        ref = pairwise_reference(pre, post, params, gates)
        fast = fast_delta(pre, post, params, gates)
        denom = np.maximum(np.maximum(np.abs(ref), np.abs(fast)), 1e-300)
        worst = max(worst, float((np.abs(ref - fast) / denom).max()))
    ok = worst <= 1e-12
    print(f"oracle-suite: {args.instances} instances, max relative error {worst:.3e}, "
          f"{time.perf_counter() - t0:.1f}s -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_cost(args) -> int:
    blocks = load_blocks(args.blocks)
    model = EnergyModel(e_mac=args.e_mac, e_ac=args.e_ac)
    rows = energy_table(blocks, model)
    print(f"{'block':<16}{'kind':<18}{'MACs':>16}{'SOPs':>16}{'energy (uJ)':>14}")
    for r in rows:
        print(f"{r['block']:<16}{r['kind']:<18}{r['macs']:>16.6g}{r['sops']:>16.6g}{r['energy_uJ']:>14.4f}")
    print(f"total: {model_energy(blocks, model) * 1e3:.4f} uJ")
    return 0


def cmd_mem_table(args) -> int:
    print(f"B={args.b} C_in={args.c_in} C_out={args.c_out} T={args.t} "
          f"r_pre={args.r_pre} r_post={args.r_post} t_bytes={args.t_bytes}")
    print(f"{'scheme':<22}{'memory':>14} {'unit':<9}{'time (ops)':>14}")
    for scheme in SCHEMES:
        spec = SchemeSpec(scheme, args.b, args.c_in, args.c_out, args.t,
                          args.r_pre, args.r_post, args.t_bytes)
        mem = memory_estimate(spec)
        print(f"{scheme:<22}{mem['value']:>14g} {mem['unit']:<9}{time_estimate(spec):>14d}")
    return 0


def export_synchrony(records) -> tuple[list[dict], dict]:
    """One row per (step, hook): batch-mean S_b and mean gate (blank during warm-up)."""
    rows = []
    for rec in records:
        if rec.get("type") != "step":
            continue
        for hook_id, info in sorted(rec["hooks"].items()):
            gates = info.get("gates")
            rows.append({
                "epoch": rec["epoch"], "step": rec["step"], "hook_id": hook_id,
                "phase": rec["phase"], "s_b": float(np.mean(info["s_b"])),
                "gate": "" if gates is None else float(np.mean(gates)),
            })
    medians = {}
    for phase in ("warmup", "gated"):
        vals = [r["s_b"] for r in rows if r["phase"] == phase]
        medians[phase] = float(np.median(vals)) if vals else None
    return rows, medians


def cmd_export_synchrony(args) -> int:
    records = read_jsonl(args.log)
    rows, medians = export_synchrony(records)
    steps = [r for r in records if r.get("type") == "step"]
    if not steps:
        raise DassdpError(f"{args.log}: no step records")
    buf = io.StringIO()
    buf.write(f"# seed={steps[0]['seed']} config_hash={steps[0]['config_hash']}\n")
    writer = csv.DictWriter(buf, fieldnames=["epoch", "step", "hook_id", "phase", "s_b", "gate"],
                            lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    Path(args.out).write_text(buf.getvalue())
    for phase, med in medians.items():
        print(f"median s_b [{phase}]: {'n/a' if med is None else f'{med:.6g}'}")
    return 0


def raster(net: Network, sample) -> dict:
    """Spike events and counts of every LIF layer for one (C_in, T) sample."""
    cache = net.forward(np.asarray(sample)[None])
    out = {}
    for layer_id, trace in cache.traces.items():
        spikes = trace.spikes[:, 0, :]  # (T, C)
        t_idx, n_idx = np.nonzero(spikes)
        events = sorted(zip(n_idx.tolist(), t_idx.tolist()))
        out[layer_id] = {"events": events, "counts": spikes.sum(axis=0).astype(int).tolist()}
    return out


def load_network(cfg: TrainConfig, weights_path, c_in: int) -> Network:
    path = Path(weights_path)
    if not path.exists():
        raise DassdpError(f"missing checkpoint {path}")
    net = Network.from_config(cfg, c_in, np.random.default_rng(0))
    with np.load(path) as data:
        for name in net.layers:
            net.layers[name].weights = np.array(data[name], dtype=np.float64)
    return net


def cmd_raster(args) -> int:
    cfg = _load_cfg(args)
    t = cfg.task
    _, test = make_task(t.name, t.n_train, t.n_test, t.n_classes, t.group_size,
                        cfg.timesteps, t.p_on, t.p_off, seed=cfg.seed)
    net = load_network(cfg, args.weights, test.x.shape[1])
    res = raster(net, test.x[args.sample])
    out = _out_dir(args) / f"{args.label}raster_sample{args.sample}.csv"
    lines = [f"# seed={cfg.seed} config_hash={cfg.config_hash()} sample={args.sample}",
             "layer,neuron,t"]
    for layer_id, r in res.items():
        lines += [f"{layer_id},{n},{ts}" for n, ts in r["events"]]
    out.write_text("\n".join(lines) + "\n")
    counts_path = out.with_name(out.stem + "_counts.csv")
    counts = [f"# seed={cfg.seed} config_hash={cfg.config_hash()} sample={args.sample}",
              "layer,neuron,count"]
    for layer_id, r in res.items():
        counts += [f"{layer_id},{n},{c}" for n, c in enumerate(r["counts"])]
    counts_path.write_text("\n".join(counts) + "\n")
    print(f"wrote {out} and {counts_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dassdp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(p):
        p.add_argument("--config", help="YAML/JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory (default $DASSDP_OUT or runs/latest)")
        p.add_argument("--hook", action="append", help="layer id to hook (repeatable)")
        p.add_argument("--mode", choices=["per-sample", "per-batch"], help="gate granularity")

    p = sub.add_parser("train", help="train and write metrics, calibration, weights, summary")
    run_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate-only", help="run warm-up only and write the fitted calibration")
    run_flags(p)
    p.set_defaults(func=cmd_calibrate_only)

    p = sub.add_parser("oracle-suite", help="fast pipeline vs per-pair scanning reference")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle_suite)

    p = sub.add_parser("cost", help="per-block and total energy from a block-cost JSON file")
    p.add_argument("blocks")
    p.add_argument("--e-mac", type=float, default=4.6)
    p.add_argument("--e-ac", type=float, default=0.9)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("mem-table", help="memory/time of timing-log schemes")
    p.add_argument("--b", type=int, default=16)
    p.add_argument("--c-in", type=int, default=64)
    p.add_argument("--c-out", type=int, default=64)
    p.add_argument("--t", type=int, default=4)
    p.add_argument("--r-pre", type=float, default=1.0)
    p.add_argument("--r-post", type=float, default=1.0)
    p.add_argument("--t-bytes", type=int, default=4)
    p.set_defaults(func=cmd_mem_table)

    p = sub.add_parser("export-synchrony", help="per-batch S_b/gate CSV from a metrics log")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_synchrony)

    p = sub.add_parser("raster", help="spike raster of one test sample from a checkpoint")
    run_flags(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--sample", type=int, default=0)
    p.add_argument("--label", default="", help="file name prefix, e.g. 'baseline_'")
    p.set_defaults(func=cmd_raster)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DassdpError, OSError, KeyError) as exc:
        print(f"dassdp {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
