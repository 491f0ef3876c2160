"""Training data for the coherence-monitoring experiment.

Each sample is a random two-qubit mixed state rho0, a phase-matched witness
built from it, and the state rho_t after amplitude damping of both qubits
with a random p.  Features are Re(rho0), Im(rho0) (row-major) and
Re Tr(W0 rho_t); labels are exact coherence measures of rho_t and per-measure
"fell below z times the initial value" bits.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .channels import damp_all_qubits
from .coherence import GeometricOptions, c_geometric, c_l1, c_rel_ent, phase_matched_witness, witness_expectation
from .errors import BadCount, ConfigError, CorruptRecord, IncoherentInput, SchemaMismatch
from .linalg import matrix_from_dict, matrix_to_dict
from .states import check_density_matrix, child_rng, random_mixed_state

log = logging.getLogger(__name__)

SCHEMA = "witness-bounds/dataset"
SCHEMA_VERSION = 1
MEASURE_NAMES = ("c_l1", "c_g", "c_ref")
SPLIT_FRACTIONS = (0.70, 0.15, 0.15)


@dataclass(frozen=True)
class DatasetConfig:
    dim: int = 4
    n_components: int = 3
    p_low: float = 0.0
    p_high: float = 0.5
    threshold_z: float = 0.8
    seed: int = 42
    n_samples: int = 8000
    weight_law: str = "uniform"
    geometric_tolerance: float = 1e-6
    geometric_restarts: int = 4

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown dataset config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def n_features(self) -> int:
        return 2 * self.dim * self.dim + 1

    def geometric_options(self) -> GeometricOptions:
        return GeometricOptions(tolerance=self.geometric_tolerance, restarts=self.geometric_restarts)


@dataclass
class Sample:
    sample_id: int
    rho0: np.ndarray
    damping_p: float
    witness: np.ndarray
    features: np.ndarray
    labels_regression: dict  # measures of rho_t
    labels_class: dict
    initial_measures: dict  # measures of rho0

    def to_record(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "rho0": matrix_to_dict(self.rho0),
            "damping_p": self.damping_p,
            "witness": matrix_to_dict(self.witness),
            "features": [float(x) for x in self.features],
            "labels_regression": dict(self.labels_regression),
            "labels_class": dict(self.labels_class),
            "initial_measures": dict(self.initial_measures),
        }

    @classmethod
    def from_record(cls, r: dict) -> "Sample":
        return cls(
            sample_id=int(r["sample_id"]),
            rho0=matrix_from_dict(r["rho0"]),
            damping_p=float(r["damping_p"]),
            witness=matrix_from_dict(r["witness"]),
            features=np.asarray(r["features"], dtype=float),
            labels_regression={k: float(r["labels_regression"][k]) for k in MEASURE_NAMES},
            labels_class={k: int(r["labels_class"][k]) for k in MEASURE_NAMES},
            initial_measures={k: float(r["initial_measures"][k]) for k in MEASURE_NAMES},
        )


@dataclass
class DatasetSplit:
    train: list
    validation: list
    test: list
    seed: int


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def invert(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


# -- generation ---------------------------------------------------------------

def coherence_measures(rho, opts: GeometricOptions | None = None) -> dict:
    return {"c_l1": c_l1(rho), "c_g": c_geometric(rho, opts), "c_ref": c_rel_ent(rho)}


def class_labels(final: dict, initial: dict, z: float) -> dict:
    return {k: int(final[k] < z * initial[k]) for k in MEASURE_NAMES}


def relabel(samples: list, z: float) -> list:
    """Copies of ``samples`` with class labels recomputed for threshold factor z."""
    return [replace(s, labels_class=class_labels(s.labels_regression, s.initial_measures, z)) for s in samples]


def build_features(rho0, witness_value: float) -> np.ndarray:
    rho0 = np.asarray(rho0)
    return np.concatenate([rho0.real.reshape(-1), rho0.imag.reshape(-1), [witness_value]])


def generate_sample(sample_id: int, config: DatasetConfig = DatasetConfig(), master_seed: int | None = None) -> Sample:
    seed = config.seed if master_seed is None else master_seed
    rng = child_rng(seed, sample_id)
    while True:
        rho0 = random_mixed_state(config.dim, config.n_components, rng, weights=config.weight_law)
        try:
            w0 = phase_matched_witness(rho0)
            break
        except IncoherentInput:
            log.warning("sample %d: incoherent initial state, resampling", sample_id)
    p = float(rng.uniform(config.p_low, config.p_high))
    return make_sample(sample_id, rho0, p, w0.operator, config)


def make_sample(sample_id: int, rho0, p: float, witness, config: DatasetConfig) -> Sample:
    rho_t = damp_all_qubits(rho0, p)
    m = witness_expectation(witness, rho_t)
    opts = config.geometric_options()
    final = coherence_measures(rho_t, opts)
    initial = coherence_measures(rho0, opts)
    return Sample(
        sample_id=sample_id,
        rho0=rho0,
        damping_p=p,
        witness=np.asarray(witness),
        features=build_features(rho0, m),
        labels_regression=final,
        labels_class=class_labels(final, initial, config.threshold_z),
        initial_measures=initial,
    )


def _generate_one(args):
    i, config = args
    return generate_sample(i, config)


def generate_dataset(config: DatasetConfig = DatasetConfig(), workers: int = 1) -> list:
    """``config.n_samples`` samples, each from its own child stream of ``config.seed``.

    Output is ordered by sample_id whatever the worker count.
    """
    jobs = [(i, config) for i in range(config.n_samples)]
    if workers <= 1:
        return [_generate_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_generate_one, jobs, chunksize=64))


def dataset_metadata(samples: list, config: DatasetConfig) -> dict:
    from scipy import stats

    p = np.array([s.damping_p for s in samples])
    ks = stats.kstest(p, stats.uniform(loc=config.p_low, scale=config.p_high - config.p_low).cdf)
    return {
        "n_samples": len(samples),
        "label_one_fraction": {k: float(np.mean([s.labels_class[k] for s in samples])) for k in MEASURE_NAMES},
        "p_ks_statistic": float(ks.statistic),
        "weight_law": config.weight_law,
        "config_hash": config_hash(config.to_dict()),
    }


def config_hash(d: dict) -> str:
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


# -- split and scaling --------------------------------------------------------

def split_sizes(n: int) -> tuple:
    n_train = int(round(SPLIT_FRACTIONS[0] * n))
    n_val = int(round(SPLIT_FRACTIONS[1] * n))
    return n_train, n_val, n - n_train - n_val


def split_dataset(samples: list, seed: int = 42, require_count: int | None = 8000) -> DatasetSplit:
    """Seeded uniform shuffle, then 70/15/15 slices (5600/1200/1200 for 8000 samples)."""
    n = len(samples)
    if require_count is not None and n != require_count:
        raise BadCount(f"expected {require_count} samples, got {n}")
    if n < 3:
        raise BadCount(f"need at least 3 samples to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    n_train, n_val, _ = split_sizes(n)
    shuffled = [samples[i] for i in order]
    return DatasetSplit(shuffled[:n_train], shuffled[n_train : n_train + n_val], shuffled[n_train + n_val :], seed)


def feature_matrix(samples: list) -> np.ndarray:
    return np.stack([s.features for s in samples])


def fit_standardizer(train) -> Standardizer:
    x = feature_matrix(train) if isinstance(train, list) else np.asarray(train, dtype=float)
    if x.shape[0] == 0:
        raise BadCount("cannot fit a standardizer on an empty set")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return Standardizer(mean, std)


def apply_standardizer(s: Standardizer, features) -> np.ndarray:
    return s.apply(features)


# -- persistence --------------------------------------------------------------

def save_dataset(path, samples: list, config: DatasetConfig, metadata: dict | None = None) -> None:
    header = {
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "n_samples": len(samples),
        "config": config.to_dict(),
        "metadata": metadata or {},
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for s in samples:
            fh.write(json.dumps(s.to_record()) + "\n")


def _validate(s: Sample, config: DatasetConfig, line: int) -> None:
    d = config.dim
    if s.features.shape != (config.n_features,):
        raise CorruptRecord(f"expected {config.n_features} features, got {s.features.shape}", line)
    if s.rho0.shape != (d, d) or s.witness.shape != (d, d):
        raise CorruptRecord("matrix shape mismatch", line)
    try:
        check_density_matrix(s.rho0)
    except ValueError as exc:
        raise CorruptRecord(f"rho0: {exc}", line) from None
    if np.abs(s.witness - s.witness.conj().T).max() > 1e-12 or np.any(np.diag(s.witness) != 0):
        raise CorruptRecord("witness is not a Hermitian zero-diagonal probe", line)
    if not config.p_low <= s.damping_p <= config.p_high:
        raise CorruptRecord(f"damping_p {s.damping_p} outside configured range", line)
    if not np.allclose(s.features[:-1], build_features(s.rho0, 0.0)[:-1], rtol=0, atol=0):
        raise CorruptRecord("features do not match rho0", line)
    if s.labels_class != class_labels(s.labels_regression, s.initial_measures, config.threshold_z):
        raise CorruptRecord("class labels inconsistent with stored measures", line)
    upper = {"c_l1": d - 1.0, "c_g": 1.0 - 1.0 / d, "c_ref": np.log2(d)}
    for k in MEASURE_NAMES:
        for v in (s.labels_regression[k], s.initial_measures[k]):
            if not -1e-9 <= v <= upper[k] + 1e-9:
                raise CorruptRecord(f"{k}={v} outside [0, {upper[k]}]", line)


def load_dataset(path):
    """Read a dataset file; returns (samples, config, metadata).

    Every record is validated; failures raise ``CorruptRecord`` carrying the
    1-based line number.
    """
    with open(path) as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    try:
        header = json.loads(lines[0])
    except (IndexError, json.JSONDecodeError):
        raise SchemaMismatch("missing or unreadable header line") from None
    if header.get("schema") != SCHEMA or header.get("version") != SCHEMA_VERSION:
        raise SchemaMismatch(f"unsupported header {header.get('schema')!r} v{header.get('version')!r}")
    config = DatasetConfig.from_dict(header["config"])
    samples = []
    for lineno, text in enumerate(lines[1:], start=2):
        try:
            s = Sample.from_record(json.loads(text))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CorruptRecord(f"unparseable record ({exc})", lineno) from None
        _validate(s, config, lineno)
        samples.append(s)
    if len(samples) != header.get("n_samples", len(samples)):
        raise CorruptRecord(f"file holds {len(samples)} records, header says {header['n_samples']}", len(lines) + 1)
    return samples, config, header.get("metadata", {})


def export_csv(path, samples: list) -> None:
    n_feat = samples[0].features.size if samples else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["sample_id", "damping_p"]
            + [f"f{i}" for i in range(n_feat)]
            + [f"y_{k}" for k in MEASURE_NAMES]
            + [f"cls_{k}" for k in MEASURE_NAMES]
        )
        for s in samples:
            w.writerow(
                [s.sample_id, repr(s.damping_p)]
                + [repr(float(x)) for x in s.features]
                + [repr(s.labels_regression[k]) for k in MEASURE_NAMES]
                + [s.labels_class[k] for k in MEASURE_NAMES]
            )


def audit_sample(s: Sample, config: DatasetConfig, tol: float = 1e-9) -> list:
    """Recompute labels from (rho0, damping_p); return a list of mismatch messages."""
    fresh = make_sample(s.sample_id, s.rho0, s.damping_p, s.witness, config)
    problems = []
    for k in MEASURE_NAMES:
        if abs(fresh.labels_regression[k] - s.labels_regression[k]) > tol:
            problems.append(f"{k}: stored {s.labels_regression[k]!r}, recomputed {fresh.labels_regression[k]!r}")
    if fresh.labels_class != s.labels_class:
        problems.append("class labels differ")
    if abs(fresh.features[-1] - s.features[-1]) > tol:
        problems.append("witness feature differs")
    return problems


def load_config_file(path) -> DatasetConfig:
    data = json.loads(Path(path).read_text())
    return DatasetConfig.from_dict(data.get("dataset", data))
