"""Full learning pipeline: generate (or reuse) the dataset, train the six
CoherenceNets (regression and classification for c_l1, c_g, c_ref), evaluate
on the test split and write results JSON.

    python3 scripts/run_ml_experiment.py --workdir runs/default
    python3 scripts/run_ml_experiment.py --n-samples 800 --max-epochs 20   # quick look
"""
import argparse
import json
import logging
import os
import time

from witness_bounds.dataset import (
    MEASURE_NAMES, DatasetConfig, dataset_metadata, generate_dataset, load_dataset, save_dataset, split_dataset,
)
from witness_bounds.ml.training import TrainConfig, evaluate, save_checkpoint, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--workdir", default="runs/default")
    ap.add_argument("--n-samples", type=int, default=8000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--max-epochs", type=int, default=100)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    os.makedirs(args.workdir, exist_ok=True)

    data_path = os.path.join(args.workdir, "dataset.jsonl")
    cfg = DatasetConfig(n_samples=args.n_samples, seed=args.seed)
    if os.path.exists(data_path):
        samples, cfg, _ = load_dataset(data_path)
        logging.info("reusing %s (%d samples)", data_path, len(samples))
    else:
        t0 = time.perf_counter()
        samples = generate_dataset(cfg, workers=args.workers)
        save_dataset(data_path, samples, cfg, dataset_metadata(samples, cfg))
        logging.info("generated %d samples in %.0f s", len(samples), time.perf_counter() - t0)

    split = split_dataset(samples, seed=args.seed, require_count=cfg.n_samples)
    results = []
    for task in ("regression", "classification"):
        for target in MEASURE_NAMES:
            tcfg = TrainConfig(task=task, target=target, max_epochs=args.max_epochs, seed=args.seed)
            t0 = time.perf_counter()
            ckpt = train(split, tcfg)
            metrics = evaluate(ckpt, split.test)
            save_checkpoint(os.path.join(args.workdir, f"checkpoint_{task}_{target}.json"), ckpt, metrics)
            results.append({"task": task, "target": target, "lr": ckpt.lr, "weight_decay": ckpt.weight_decay,
                            "best_epoch": ckpt.best_epoch, "val_metric": ckpt.val_metric,
                            "seconds": time.perf_counter() - t0, **metrics})
            logging.info("%s %s: %s", task, target, {k: round(v, 4) if isinstance(v, float) else v
                                                      for k, v in metrics.items()})
    with open(os.path.join(args.workdir, "results.json"), "w") as fh:
        json.dump({"dataset": cfg.to_dict(), "results": results}, fh, indent=2)


if __name__ == "__main__":
    main()
