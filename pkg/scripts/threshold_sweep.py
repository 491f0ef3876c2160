"""Classification accuracy as a function of the threshold factor z.

Labels are recomputed from the stored initial and final measures, so one
dataset serves every z.

    python3 scripts/threshold_sweep.py --data runs/default/dataset.jsonl --z 0.5 0.6 0.7 0.8
"""
import argparse
import json

import numpy as np

from witness_bounds.dataset import MEASURE_NAMES, load_dataset, relabel, split_dataset
from witness_bounds.ml.training import TrainConfig, evaluate, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--data", required=True)
    ap.add_argument("--z", type=float, nargs="+", default=[0.5, 0.6, 0.7, 0.8])
    ap.add_argument("--targets", nargs="+", default=list(MEASURE_NAMES))
    ap.add_argument("--max-epochs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    samples, cfg, _ = load_dataset(args.data)
    rows = []
    for z in args.z:
        split = split_dataset(relabel(samples, z), seed=args.seed, require_count=cfg.n_samples)
        for target in args.targets:
            tcfg = TrainConfig(task="classification", target=target, max_epochs=args.max_epochs, seed=args.seed)
            m = evaluate(train(split, tcfg), split.test)
            ones = float(np.mean([s.labels_class[target] for s in split.test]))
            rows.append({"z": z, "target": target, "accuracy": m["accuracy"], "label1_fraction": ones})
            print(json.dumps(rows[-1]), flush=True)


if __name__ == "__main__":
    main()
