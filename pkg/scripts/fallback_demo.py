"""Show the calibration outcome on the informative, shuffled and silent tasks.

For each task this fits the gate after warm-up and reports the slope, the
fallback flag, and whether the gated run ends with the same weights as the
ungated two-factor rule (it must whenever the fallback is active).

    python scripts/fallback_demo.py --seed 0
"""

import argparse

import numpy as np

from dassdp.config import TrainConfig, load_config
from dassdp.snn.trainer import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/informative.yaml")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mode", choices=["per-sample", "per-batch"])
    args = ap.parse_args()

    base = load_config(args.config).to_dict()
    base["seed"] = args.seed
    if args.mode:
        base["gate_mode"] = args.mode

    for task in ("informative", "shuffled", "silent"):
        d = {**base, "task": {**base["task"], "name": task}}
        da = run_experiment(TrainConfig.from_dict(d))
        two_factor = run_experiment(TrainConfig.from_dict({**d, "rule": "ssdp"}))
        same = all(np.array_equal(w, two_factor.net.params()[n]) for n, w in da.net.params().items())
        cals = "  ".join(f"{h}: k={c.slope:+.3f} fallback={c.fallback_active}"
                         for h, c in da.calibrations().items())
        print(f"{task:<12} {cals}  weights == two-factor run: {same}  "
              f"test acc {da.final_test_acc:.3f}")


if __name__ == "__main__":
    main()
