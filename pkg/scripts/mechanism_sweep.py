"""Compare DA-SSDP against the supervised-only baseline over several seeds.

Prints, per seed and hook, the fitted slope and the median batch synchrony
in the last warm-up decade vs the last gated decade, plus test accuracy of
both runs. Optionally writes the rows as JSON-lines.

    python scripts/mechanism_sweep.py --config configs/informative.yaml --seeds 5
"""

import argparse
import json
import time

import numpy as np

from dassdp.config import TrainConfig, load_config
from dassdp.snn.trainer import run_experiment


def median_s(log, hook, lo, hi):
    vals = [np.mean(r["hooks"][hook]["s_b"]) for r in log
            if r["type"] == "step" and lo <= r["epoch"] < hi]
    return float(np.median(vals))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/informative.yaml")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--p-on", type=float, help="override task.p_on")
    ap.add_argument("--p-off", type=float, help="override task.p_off")
    ap.add_argument("--jsonl", help="write one row per seed here")
    args = ap.parse_args()

    base_cfg = load_config(args.config).to_dict()
    if args.p_on is not None:
        base_cfg["task"]["p_on"] = args.p_on
    if args.p_off is not None:
        base_cfg["task"]["p_off"] = args.p_off

    rows = []
    for seed in range(args.seeds):
        cfg = TrainConfig.from_dict({**base_cfg, "seed": seed})
        t0 = time.perf_counter()
        da = run_experiment(cfg)
        elapsed = time.perf_counter() - t0
        base = run_experiment(TrainConfig.from_dict({**base_cfg, "seed": seed, "rule": "none"}))
        w, e = cfg.warmup_epochs, cfg.total_epochs
        row = {"seed": seed, "seconds": round(elapsed, 2),
               "test_acc": da.final_test_acc, "baseline_test_acc": base.final_test_acc, "hooks": {}}
        for hook in da.hooks:
            row["hooks"][hook.layer_id] = {
                "k": hook.calibration.slope,
                "fallback": hook.calibration.fallback_active,
                "median_s_warmup": median_s(da.log, hook.layer_id, max(0, w - 10), w),
                "median_s_gated": median_s(da.log, hook.layer_id, max(w, e - 10), e),
            }
        rows.append(row)
        hooks = "  ".join(f"{h}: k={v['k']:+.3f} S {v['median_s_warmup']:.3f}->{v['median_s_gated']:.3f}"
                          for h, v in row["hooks"].items())
        print(f"seed {seed}  {hooks}  acc {da.final_test_acc:.4f} (baseline {base.final_test_acc:.4f})"
              f"  {elapsed:.1f}s")

    if args.jsonl:
        with open(args.jsonl, "w") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
