"""Command-line entry point: ``witness-bounds <command> [options]``.

Commands
    bounds          witness-based GME bounds for GHZ_n, W_n or a state read from JSON
    verify-table1   coherence measures against their D_inc bounds on random mixtures
    channel-check   Kraus amplitude damping against the RK4 Lindblad integrator
    gen-data        generate the damped-state dataset (JSON lines)
    train           grid-search train one CoherenceNet (task x target)
    eval            evaluate checkpoints on the test split, write metrics JSON

Every command accepts ``--format table|csv|json``, ``--out PATH``, ``--seed``
and ``--config FILE.json``.  Config keys are the fields of the command's config
record; unknown keys are an error.  Flags override config values.  Relative
output paths are resolved against ``$WITNESS_BOUNDS_OUTPUT_DIR`` when set.

Exit codes: 0 success, 1 an invariant or inequality was violated, 2 usage,
config or input error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .channels import LindbladSpec, damp_all_qubits, lindblad_rk4, p_of_gamma_t
from .coherence import CoherenceReport, GeometricOptions, coherence_report
from .dataset import (
    DatasetConfig,
    dataset_metadata,
    generate_dataset,
    load_dataset,
    save_dataset,
    split_dataset,
)
from .entanglement import GMEBoundReport, biseparable_overlap, gme_bound_report, gme_witness_projector
from .errors import ConfigError, WitnessBoundsError
from .linalg import frobenius_norm, matrix_from_dict, vector_from_dict
from .states import check_density_matrix, check_pure_state, child_rng, ghz_state, projector, random_mixed_state, w_state

log = logging.getLogger("witness_bounds")

OUTPUT_DIR_ENV = "WITNESS_BOUNDS_OUTPUT_DIR"
EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


# -- per-command config records -----------------------------------------------

@dataclass(frozen=True)
class BoundsConfig:
    state: str = "ghz"  # ghz | w | file
    n: int = 3
    c: float | None = None  # default: max overlap with biseparable states
    path: str | None = None
    seed: int = 42


@dataclass(frozen=True)
class Table1Config:
    nmps: tuple = (2, 5, 10, 20, 100)
    trials: int = 100
    dim: int = 4
    seed: int = 42
    slack: float = 1e-9
    geometric_tolerance: float = 1e-6


@dataclass(frozen=True)
class ChannelCheckConfig:
    gamma: float = 1.0
    t: float = 0.7
    dt: float | None = None  # default t / 1000
    n_states: int = 100
    tolerance: float = 1e-6
    seed: int = 42


@dataclass(frozen=True)
class TrainRunConfig:
    data: str = "dataset.jsonl"
    task: str = "regression"
    target: str = "c_g"
    lr_grid: tuple = (1e-3, 1e-4)
    wd_grid: tuple = (1e-4, 1e-5)
    max_epochs: int = 100
    patience: int = 30
    seed: int = 42
    checkpoint: str | None = None
    curve: str | None = None


@dataclass(frozen=True)
class EvalConfig:
    data: str = "dataset.jsonl"
    checkpoints: tuple = ()
    metrics: str = "metrics.json"
    seed: int = 42


def load_config(cls, path: str | None, overrides: dict):
    """defaults < JSON config file < explicit flags (``None`` means not given)."""
    values = {}
    if path:
        try:
            with open(path) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys for {cls.__name__}: {sorted(unknown)}")
    values.update({k: v for k, v in overrides.items() if v is not None and k in known})
    for f in fields(cls):
        if f.name in values and isinstance(values[f.name], list):
            values[f.name] = tuple(values[f.name])
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def config_digest(cfg) -> str:
    d = cfg.to_dict() if hasattr(cfg, "to_dict") else asdict(cfg)
    return hashlib.sha256(json.dumps(d, sort_keys=True, default=list).encode()).hexdigest()[:16]


def run_metadata(command: str, cfg, seed) -> dict:
    import scipy

    return {
        "command": command,
        "seed": seed,
        "config_hash": config_digest(cfg),
        "config": cfg.to_dict() if hasattr(cfg, "to_dict") else asdict(cfg),
        "versions": {
            "witness_bounds": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }


# -- output -------------------------------------------------------------------

def output_path(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, path)
    return path


def _short(x):
    """6 significant digits for terminal output."""
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.6g}")
    if isinstance(x, dict):
        return {k: _short(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_short(v) for v in x]
    return x


def _cell(x, full: bool) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if full else f"{float(x):.6g}"
    return str(x)


def render(fmt: str, header, rows, meta: dict, summary: dict | None = None, full: bool = False) -> str:
    if fmt == "json":
        doc = {"metadata": meta, "rows": [dict(zip(header, r)) for r in rows]}
        if summary is not None:
            doc["summary"] = summary
        return json.dumps(doc if full else _short(doc), indent=2, default=_json_default) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(x, full) for x in r])
        return buf.getvalue()
    cells = [list(header)] + [[_cell(x, False) for x in r] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(wd) for c, wd in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * wd for wd in widths))
    if summary:
        lines.append("")
        lines += [f"{k}: {json.dumps(_short(v), default=_json_default)}" for k, v in summary.items()]
    lines.append(f"# seed={meta['seed']} config_hash={meta['config_hash']} "
                 + " ".join(f"{k}={v}" for k, v in meta["versions"].items()))
    return "\n".join(lines) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serialisable: {type(o)}")


def emit(args, header, rows, meta, summary=None) -> None:
    sys.stdout.write(render(args.format, header, rows, meta, summary))
    out = output_path(args.out)
    if out:
        fmt = "json" if args.format == "json" else "csv"
        with open(out, "w") as fh:
            fh.write(render(fmt, header, rows, meta, summary, full=True))
        if fmt == "csv":
            with open(out + ".meta.json", "w") as fh:
                json.dump({"metadata": meta, "summary": summary}, fh, indent=2, default=_json_default)


# -- commands -----------------------------------------------------------------

def _state_from_file(path: str):
    """JSON with ``{"psi": {d, re, im}}`` (pure) or ``{"rho": {...}, "target": {...}}``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read state file {path}: {exc}") from exc
    if "psi" in doc:
        psi = check_pure_state(vector_from_dict(doc["psi"]))
        return psi, projector(psi)
    if "rho" in doc and "target" in doc:
        return check_pure_state(vector_from_dict(doc["target"])), check_density_matrix(matrix_from_dict(doc["rho"]))
    raise ConfigError("state file needs 'psi', or 'rho' together with 'target'")


def bounds_report(cfg: BoundsConfig) -> GMEBoundReport:
    if cfg.state == "ghz":
        target = ghz_state(cfg.n)
        rho = projector(target)
    elif cfg.state == "w":
        target = w_state(cfg.n)
        rho = projector(target)
    elif cfg.state == "file":
        if not cfg.path:
            raise ConfigError("bounds file needs --path")
        target, rho = _state_from_file(cfg.path)
    else:
        raise ConfigError(f"unknown state {cfg.state!r}")
    c = biseparable_overlap(target) if cfg.c is None else cfg.c
    name = cfg.state if cfg.state == "file" else f"{cfg.state}{cfg.n}"
    return gme_bound_report(gme_witness_projector(target, c), rho, state=name)


def cmd_bounds(args) -> int:
    cfg = load_config(BoundsConfig, args.config, {"state": args.state, "n": args.n, "c": args.c,
                                                  "path": args.path, "seed": args.seed})
    report = bounds_report(cfg)
    emit(args, GMEBoundReport.CSV_HEADER, [report.csv_row()], run_metadata("bounds", cfg, cfg.seed))
    return EXIT_OK


TABLE1_HEADER = ("nmps",) + CoherenceReport.CSV_HEADER + ("trial",)


def table1_rows(cfg: Table1Config) -> tuple:
    """Per-trial rows and the number of inequality violations."""
    if min(cfg.nmps) < 2:
        raise ConfigError("every NMPS must be >= 2")
    opts = GeometricOptions(tolerance=cfg.geometric_tolerance, seed=cfg.seed)
    rows, violations, index = [], 0, 0
    for n in cfg.nmps:
        for trial in range(cfg.trials):
            rho = random_mixed_state(cfg.dim, n, child_rng(cfg.seed, index), weights="equal")
            index += 1
            rep = coherence_report(rho, opts)
            ok = rep.satisfies_bounds(cfg.slack)
            if not all(ok):
                violations += 1
                log.error("NMPS %d trial %d violates %s", n, trial, [i for i, v in enumerate(ok) if not v])
            rows.append((n,) + rep.csv_row() + (trial,))
    return rows, violations


def table1_summary(rows, nmps) -> dict:
    from scipy.stats import spearmanr

    arr = np.array([r[:-1] for r in rows], dtype=float)
    means = {int(n): dict(zip(CoherenceReport.CSV_HEADER, arr[arr[:, 0] == n, 1:].mean(axis=0))) for n in nmps}
    d_means = [means[int(n)]["d_inc"] for n in nmps]
    rho = float(spearmanr(list(nmps), d_means).statistic) if len(nmps) > 1 else float("nan")
    return {"means": means, "spearman_d_inc_vs_nmps": rho}


def cmd_verify_table1(args) -> int:
    cfg = load_config(Table1Config, args.config, {"nmps": tuple(args.nmps) if args.nmps else None,
                                                  "trials": args.trials, "seed": args.seed})
    rows, violations = table1_rows(cfg)
    summary = table1_summary(rows, cfg.nmps)
    summary["violations"] = violations
    summary["trials_total"] = len(rows)
    if args.format == "table":
        # terminal view: per-NMPS means, one row each
        means = summary["means"]
        shown = [(n,) + tuple(means[int(n)][k] for k in CoherenceReport.CSV_HEADER) for n in cfg.nmps]
        sys.stdout.write(render("table", ("nmps (mean)",) + CoherenceReport.CSV_HEADER, shown,
                                run_metadata("verify-table1", cfg, cfg.seed),
                                {k: v for k, v in summary.items() if k != "means"}))
        if args.out:
            with open(output_path(args.out), "w") as fh:
                fh.write(render("csv", TABLE1_HEADER, rows, {}, None, full=True))
    else:
        emit(args, TABLE1_HEADER, rows, run_metadata("verify-table1", cfg, cfg.seed), summary)
    if violations:
        print(f"error: {violations} trial(s) violate the coherence inequalities", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def channel_deviation(cfg: ChannelCheckConfig) -> tuple:
    """Max F-norm gap between Kraus damping and RK4 over random 2-qubit states."""
    spec = LindbladSpec(cfg.gamma, 2)
    p = p_of_gamma_t(cfg.gamma, cfg.t)
    worst, devs = 0.0, []
    for i in range(cfg.n_states):
        rng = child_rng(cfg.seed, i)
        rho = random_mixed_state(4, int(rng.integers(1, 5)), rng, weights="uniform")
        dev = frobenius_norm(damp_all_qubits(rho, p) - lindblad_rk4(rho, spec, cfg.t, cfg.dt))
        devs.append(dev)
        worst = max(worst, dev)
    return worst, devs


def cmd_channel_check(args) -> int:
    cfg = load_config(ChannelCheckConfig, args.config, {"gamma": args.gamma, "t": args.t, "dt": args.dt,
                                                        "n_states": args.n_states, "seed": args.seed})
    if cfg.dt is not None and cfg.dt <= 0:
        raise ConfigError("dt must be positive")
    t0 = time.perf_counter()
    worst, devs = channel_deviation(cfg)
    dt = cfg.dt if cfg.dt is not None else cfg.t / 1000
    row = (cfg.gamma, cfg.t, dt, p_of_gamma_t(cfg.gamma, cfg.t), cfg.n_states, worst, float(np.mean(devs)))
    header = ("gamma", "t", "dt", "p", "n_states", "max_deviation", "mean_deviation")
    emit(args, header, [row], run_metadata("channel-check", cfg, cfg.seed),
         {"passed": worst < cfg.tolerance, "tolerance": cfg.tolerance, "seconds": time.perf_counter() - t0})
    if worst >= cfg.tolerance:
        print(f"error: deviation {worst:.3e} exceeds {cfg.tolerance:.1e}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_gen_data(args) -> int:
    cfg = load_config(DatasetConfig, args.config, {"n_samples": args.n_samples, "seed": args.seed})
    t0 = time.perf_counter()
    samples = generate_dataset(cfg, workers=args.workers)
    meta_data = dataset_metadata(samples, cfg)
    out = output_path(args.out or "dataset.jsonl")
    save_dataset(out, samples, cfg, meta_data)
    frac = meta_data["label_one_fraction"]
    row = (out, len(samples), frac["c_l1"], frac["c_g"], frac["c_ref"], meta_data["p_ks_statistic"],
           time.perf_counter() - t0)
    header = ("path", "n_samples", "label1_c_l1", "label1_c_g", "label1_c_ref", "p_ks", "seconds")
    sys.stdout.write(render(args.format, header, [row], run_metadata("gen-data", cfg, cfg.seed)))
    return EXIT_OK


def _load_split(path: str, seed: int):
    samples, dcfg, _ = load_dataset(path)
    return split_dataset(samples, seed=seed, require_count=dcfg.n_samples)


def cmd_train(args) -> int:
    from .ml.training import TrainConfig, save_checkpoint, train

    cfg = load_config(TrainRunConfig, args.config, {
        "data": args.data, "task": args.task, "target": args.target, "max_epochs": args.max_epochs,
        "seed": args.seed, "checkpoint": args.checkpoint, "curve": args.curve,
    })
    tcfg = TrainConfig(task=cfg.task, target=cfg.target, lr_grid=cfg.lr_grid, wd_grid=cfg.wd_grid,
                       max_epochs=cfg.max_epochs, patience=cfg.patience, seed=cfg.seed)
    split = _load_split(cfg.data, cfg.seed)
    t0 = time.perf_counter()
    ckpt = train(split, tcfg)
    stem = f"{cfg.task}_{cfg.target}"
    ckpt_path = output_path(cfg.checkpoint or f"checkpoint_{stem}.json")
    curve_path = output_path(cfg.curve or f"curve_{stem}.csv")
    meta = run_metadata("train", cfg, cfg.seed)
    save_checkpoint(ckpt_path, ckpt, {"validation": ckpt.val_metric, "metadata": meta})
    with open(curve_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("lr_max", "weight_decay", "epoch", "lr", "train_loss", "val_metric"))
        for run in ckpt.runs:
            for epoch, lr_e, tr, val in run.history:
                w.writerow((repr(run.lr), repr(run.weight_decay), epoch, repr(lr_e), repr(tr), repr(val)))
    header = ("task", "target", "loss", "lr", "weight_decay", "best_epoch", "val_metric", "checkpoint", "seconds")
    row = (cfg.task, cfg.target, tcfg.loss, ckpt.lr, ckpt.weight_decay, ckpt.best_epoch, ckpt.val_metric,
           ckpt_path, time.perf_counter() - t0)
    sys.stdout.write(render(args.format, header, [row], meta))
    return EXIT_OK


def cmd_eval(args) -> int:
    from .ml.training import evaluate, load_checkpoint

    cfg = load_config(EvalConfig, args.config, {"data": args.data, "seed": args.seed, "metrics": args.out,
                                                "checkpoints": tuple(args.checkpoint) if args.checkpoint else None})
    if not cfg.checkpoints:
        raise ConfigError("eval needs at least one --checkpoint")
    samples, dcfg, _ = load_dataset(cfg.data)
    results, rows = [], []
    for path in cfg.checkpoints:
        ckpt = load_checkpoint(path)
        split = split_dataset(samples, seed=ckpt.config.seed, require_count=dcfg.n_samples)
        m = evaluate(ckpt, split.test)
        results.append({"checkpoint": path, "task": ckpt.config.task, "target": ckpt.config.target, **m})
        rows.append((ckpt.config.task, ckpt.config.target, m.get("mae"), m.get("mse"), m.get("accuracy"),
                     m.get("bce"), m["n"]))
    meta = run_metadata("eval", cfg, cfg.seed)
    metrics_path = output_path(cfg.metrics)
    with open(metrics_path, "w") as fh:
        json.dump({"metadata": meta, "results": results}, fh, indent=2, default=_json_default)
    header = ("task", "target", "mae", "mse", "accuracy", "bce", "n_test")
    sys.stdout.write(render(args.format, header, rows, meta))
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--out", help="output file (relative paths honour $%s)" % OUTPUT_DIR_ENV)
    common.add_argument("--seed", type=int)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="witness-bounds", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", parents=[common], help="GME lower bounds from a projector witness")
    b.add_argument("state", choices=("ghz", "w", "file"))
    b.add_argument("--c", type=float, help="witness constant c in W = cI - |psi><psi|")
    b.add_argument("--n", type=int, help="number of qubits (ghz, w)")
    b.add_argument("--path", help="state JSON for 'file'")
    b.set_defaults(func=cmd_bounds)

    t = sub.add_parser("verify-table1", parents=[common], help="coherence inequalities on random mixtures")
    t.add_argument("--nmps", type=int, nargs="+")
    t.add_argument("--trials", type=int)
    t.set_defaults(func=cmd_verify_table1)

    ch = sub.add_parser("channel-check", parents=[common], help="Kraus vs RK4 amplitude damping")
    ch.add_argument("--gamma", type=float)
    ch.add_argument("--t", type=float)
    ch.add_argument("--dt", type=float)
    ch.add_argument("--n-states", type=int)
    ch.set_defaults(func=cmd_channel_check)

    g = sub.add_parser("gen-data", parents=[common], help="generate the training dataset")
    g.add_argument("--n-samples", type=int)
    g.add_argument("--workers", type=int, default=1)
    g.set_defaults(func=cmd_gen_data)

    tr = sub.add_parser("train", parents=[common], help="train one CoherenceNet")
    tr.add_argument("--data")
    tr.add_argument("--task", choices=("regression", "classification"))
    tr.add_argument("--target", choices=("c_l1", "c_g", "c_ref"))
    tr.add_argument("--max-epochs", type=int)
    tr.add_argument("--checkpoint")
    tr.add_argument("--curve")
    tr.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", parents=[common], help="evaluate checkpoints on the test split")
    e.add_argument("--data")
    e.add_argument("--checkpoint", action="append")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (WitnessBoundsError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
