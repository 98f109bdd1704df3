"""Dataset ingestion, serialization, synthetic generation, and configuration.

Four concerns live here:

- IDX image/label ingestion (``read_idx``) plus the matching writer used by
  tests and dataset preparation;
- spike-record files as newline-delimited JSON (``write_records`` /
  ``read_records``), an exact round-trip for float64 spike times;
- a two-class synthetic generator whose classes differ only in spike *timing*
  (``synthetic_temporal``), for exercising windowed decoders;
- model serialization to .npz (``save_model`` / ``load_model``) and the YAML
  experiment configuration (``load_config``) with strict key checking.
"""

from __future__ import annotations

import dataclasses
import gzip
import hashlib
import json
import struct
from dataclasses import dataclass, field, fields

import numpy as np
import yaml

from .core import PopulationMap, SpikeRecord, validate_record
from .decode import BayesModel, PvModel
from .lif import DiehlCookNetwork, LifParams
from .stdp import StdpParams
from .training import EncodeParams

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
IMAGE_SIDE = 28
IMAGE_PIXELS = IMAGE_SIDE * IMAGE_SIDE

MODEL_FORMAT_VERSION = 1


class SerializationError(ValueError):
    """A file could not be parsed as the expected container or version."""


class ConfigError(ValueError):
    """The experiment configuration is malformed (unknown or missing keys)."""


@dataclass(frozen=True)
class LabeledImage:
    """One 28x28 grayscale image as raw byte intensities plus its label."""

    pixels: np.ndarray  # (784,), uint8, exactly the file bytes
    label: int

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.uint8)
        object.__setattr__(self, "pixels", px)
        if px.shape != (IMAGE_PIXELS,):
            raise ValueError(f"pixels must have length {IMAGE_PIXELS}")
        if not (0 <= self.label <= 9):
            raise ValueError("label must be in [0, 9]")


def _open_maybe_gzip(path):
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(fh, n: int, path, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise SerializationError(f"{path}: truncated while reading {what}")
    return buf


def read_idx(images_path, labels_path, limit: int | None = None) -> list[LabeledImage]:
    """Parse big-endian IDX image/label files into labeled images.

    Images must carry magic 0x00000803 with dims (N, 28, 28) and labels magic
    0x00000801 with dim (N); counts must agree. Intensities are the raw file
    bytes. ``limit`` truncates to the first examples; gzip-compressed files
    are detected by their signature.
    """
    with _open_maybe_gzip(images_path) as fh:
        magic, n_images, rows, cols = struct.unpack(
            ">IIII", _read_exact(fh, 16, images_path, "image header")
        )
        if magic != IDX_IMAGE_MAGIC:
            raise SerializationError(
                f"{images_path}: bad image magic 0x{magic:08x}"
            )
        if (rows, cols) != (IMAGE_SIDE, IMAGE_SIDE):
            raise SerializationError(
                f"{images_path}: expected {IMAGE_SIDE}x{IMAGE_SIDE} images, "
                f"got {rows}x{cols}"
            )
        raw = _read_exact(fh, n_images * IMAGE_PIXELS, images_path, "pixel data")
        pixels = np.frombuffer(raw, dtype=np.uint8).reshape(n_images, IMAGE_PIXELS)
    with _open_maybe_gzip(labels_path) as fh:
        magic, n_labels = struct.unpack(
            ">II", _read_exact(fh, 8, labels_path, "label header")
        )
        if magic != IDX_LABEL_MAGIC:
            raise SerializationError(
                f"{labels_path}: bad label magic 0x{magic:08x}"
            )
        labels = np.frombuffer(
            _read_exact(fh, n_labels, labels_path, "label data"), dtype=np.uint8
        )
    if n_images != n_labels:
        raise SerializationError(
            f"image/label count mismatch: {n_images} images, {n_labels} labels"
        )
    n = n_images if limit is None else min(limit, n_images)
    return [LabeledImage(pixels=pixels[i], label=int(labels[i])) for i in range(n)]


def write_idx(images_path, labels_path, images, labels) -> None:
    """Write (N, 784) byte images and length-N labels as IDX files."""
    px = np.ascontiguousarray(np.asarray(images, dtype=np.uint8))
    if px.ndim != 2 or px.shape[1] != IMAGE_PIXELS:
        raise ValueError(f"images must be (N, {IMAGE_PIXELS})")
    lab = np.asarray(labels, dtype=np.uint8)
    if lab.shape != (px.shape[0],):
        raise ValueError("labels must match image count")
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, px.shape[0],
                             IMAGE_SIDE, IMAGE_SIDE))
        fh.write(px.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABEL_MAGIC, lab.shape[0]))
        fh.write(lab.tobytes())


def _record_to_obj(record: SpikeRecord) -> dict:
    return {
        "example_id": record.example_id,
        "trial": record.trial,
        "duration_ms": record.duration_ms,
        "label": record.label,
        "trains": [t.tolist() for t in record.trains],
    }


def _record_from_obj(obj: dict) -> SpikeRecord:
    keys = {"example_id", "trial", "duration_ms", "label", "trains"}
    if not isinstance(obj, dict) or set(obj) != keys:
        raise ValueError(f"record object must have exactly the keys {sorted(keys)}")
    return SpikeRecord(
        example_id=str(obj["example_id"]),
        trial=int(obj["trial"]),
        duration_ms=float(obj["duration_ms"]),
        label=None if obj["label"] is None else int(obj["label"]),
        trains=tuple(np.asarray(t, dtype=np.float64) for t in obj["trains"]),
    )


def write_records(path, records) -> None:
    """Write spike records as newline-delimited JSON, one record per line.

    Every record is validated first; any invariant violation refuses the
    whole write. Spike times serialize via their shortest exact decimal
    representation, so reads recover the float64 values bit-for-bit.
    """
    recs = list(records)
    for i, rec in enumerate(recs):
        problems = validate_record(rec)
        if problems:
            raise SerializationError(
                f"record {i} ({rec.example_id!r}): {problems[0]}"
            )
    with open(path, "w", encoding="utf-8") as fh:
        for rec in recs:
            fh.write(json.dumps(_record_to_obj(rec)))
            fh.write("\n")


def read_records(path) -> list[SpikeRecord]:
    """Read a newline-delimited spike-record file; errors name the line."""
    out: list[SpikeRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = _record_from_obj(json.loads(line))
            except (ValueError, TypeError, KeyError) as exc:
                raise SerializationError(f"{path}: line {lineno}: {exc}") from exc
            problems = validate_record(rec)
            if problems:
                raise SerializationError(
                    f"{path}: line {lineno}: {problems[0]}"
                )
            out.append(rec)
    return out


def synthetic_temporal(n_per_class: int, n_neurons: int, duration_ms: float,
                       seed: int) -> list[SpikeRecord]:
    """Two classes separable by spike timing but not by total count.

    Every neuron has the same expected total count for both classes; class 0
    spends 80% of that rate mass in the first half of the interval, class 1
    in the second half (inhomogeneous Poisson, uniform within each half).
    A single full-interval window therefore cannot separate the classes in
    expectation, while windowed decoders can.
    """
    if duration_ms < 100.0:
        raise ValueError("duration_ms must be >= 100")
    if n_per_class < 1 or n_neurons < 1:
        raise ValueError("n_per_class and n_neurons must be >= 1")
    # Per-neuron expected totals are fixed (class-independent) by construction.
    totals = np.linspace(12.0, 28.0, n_neurons)
    hot_fraction = 0.8
    half = duration_ms / 2.0
    rng = np.random.default_rng(seed)
    records: list[SpikeRecord] = []
    for i in range(2 * n_per_class):
        label = i % 2
        trains = []
        for j in range(n_neurons):
            lam_first = totals[j] * (hot_fraction if label == 0 else 1 - hot_fraction)
            lam_second = totals[j] - lam_first
            first = rng.uniform(0.0, half, rng.poisson(lam_first))
            second = rng.uniform(half, duration_ms, rng.poisson(lam_second))
            trains.append(np.unique(np.concatenate([first, second])))
        records.append(
            SpikeRecord(example_id=f"synth-{i:05d}", trial=0,
                        duration_ms=duration_ms, label=label,
                        trains=tuple(trains))
        )
    return records


def _params_blob(params) -> str:
    return json.dumps(dataclasses.asdict(params), sort_keys=True)


def save_model(path, model) -> None:
    """Serialize a network, Bayes model, PV model, or population map to .npz.

    All float64 arrays round-trip bit-exactly; the container carries a format
    version and a kind tag that ``load_model`` dispatches on.
    """
    common = {"format_version": np.int64(MODEL_FORMAT_VERSION)}
    if isinstance(model, DiehlCookNetwork):
        np.savez(
            path, **common, kind="network",
            w_input_exc=model.w_input_exc, theta_mv=model.theta_mv,
            w_exc_inh=np.float64(model.w_exc_inh),
            w_inh_exc=np.float64(model.w_inh_exc),
            n_input=np.int64(model.n_input), n_exc=np.int64(model.n_exc),
            w_max=np.float64(model.w_max),
            exc_params=_params_blob(model.exc_params),
            inh_params=_params_blob(model.inh_params),
        )
    elif isinstance(model, BayesModel):
        np.savez(path, **common, kind="bayes", f=model.f, priors=model.priors)
    elif isinstance(model, PvModel):
        np.savez(path, **common, kind="pv", w=model.w)
    elif isinstance(model, PopulationMap):
        np.savez(
            path, **common, kind="population",
            assignment=model.assignment, n_classes=np.int64(model.n_classes),
            forced_default=np.asarray(model.forced_default, dtype=np.int64),
        )
    else:
        raise SerializationError(f"cannot serialize {type(model).__name__}")


def load_model(path):
    """Load a model saved by ``save_model``; raises on version mismatch."""
    try:
        with np.load(path, allow_pickle=False) as data:
            payload = {k: data[k] for k in data.files}
    except (OSError, ValueError) as exc:
        raise SerializationError(f"{path}: not a readable model file: {exc}") from exc
    try:
        version = int(payload["format_version"])
        if version != MODEL_FORMAT_VERSION:
            raise SerializationError(
                f"{path}: format version {version}, expected {MODEL_FORMAT_VERSION}"
            )
        kind = str(payload["kind"])
        if kind == "network":
            return DiehlCookNetwork(
                n_input=int(payload["n_input"]), n_exc=int(payload["n_exc"]),
                w_input_exc=payload["w_input_exc"],
                w_exc_inh=float(payload["w_exc_inh"]),
                w_inh_exc=float(payload["w_inh_exc"]),
                theta_mv=payload["theta_mv"],
                exc_params=LifParams(**json.loads(str(payload["exc_params"]))),
                inh_params=LifParams(**json.loads(str(payload["inh_params"]))),
                w_max=float(payload["w_max"]),
            )
        if kind == "bayes":
            return BayesModel(f=payload["f"], priors=payload["priors"])
        if kind == "pv":
            return PvModel(w=payload["w"])
        if kind == "population":
            return PopulationMap(
                assignment=payload["assignment"],
                n_classes=int(payload["n_classes"]),
                forced_default=tuple(int(j) for j in payload["forced_default"]),
            )
        raise SerializationError(f"{path}: unknown model kind {kind!r}")
    except KeyError as exc:
        raise SerializationError(f"{path}: missing field {exc}") from exc


# --- experiment configuration ---


@dataclass(frozen=True)
class DatasetConfig:
    """Where examples come from: IDX files or the synthetic generator."""

    kind: str = "idx"            # "idx" | "synthetic"
    dir: str | None = None       # idx: directory with the four MNIST-style files
    limit_train: int | None = None
    limit_test: int | None = None
    n_per_class: int = 250       # synthetic
    n_neurons: int = 30          # synthetic
    duration_ms: float = 350.0   # synthetic


@dataclass(frozen=True)
class NetworkConfig:
    n_input: int = 784
    n_exc: int = 100
    w_max: float = 1.0
    w_exc_inh: float | None = None  # None -> one spike fires the partner, x10
    w_inh_exc: float = 70.0


@dataclass(frozen=True)
class LifConfig:
    exc: LifParams = field(default_factory=LifParams.excitatory_defaults)
    inh: LifParams = field(default_factory=LifParams.inhibitory_defaults)


@dataclass(frozen=True)
class TrainingConfig:
    seeds: tuple[int, ...] | None = None  # must be listed explicitly
    passes: int = 1


@dataclass(frozen=True)
class RecordConfig:
    trials: int = 1


@dataclass(frozen=True)
class DecodeConfig:
    decoders: tuple[str, ...] = ("hmfr", "norm_hmfr", "bayes", "pv", "cfr")
    window_ms_default: float = 350.0
    window_ms_bayes: float = 10.0
    norm: str = "softmax"
    prior: str = "uniform"
    r_max: float = 20.0


@dataclass(frozen=True)
class CombineConfig:
    combiners: tuple[str, ...] = ("ngm", "gm", "am", "mv", "am_mv")
    weights: tuple[float, ...] | None = None


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "runs/out"


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    lif: LifConfig = field(default_factory=LifConfig)
    stdp: StdpParams = field(default_factory=StdpParams)
    encode: EncodeParams = field(default_factory=EncodeParams)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    record: RecordConfig = field(default_factory=RecordConfig)
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    combine: CombineConfig = field(default_factory=CombineConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


def _build_dataclass(cls, mapping, path: str):
    """Instantiate a (possibly nested) dataclass from a mapping, strictly.

    Unknown keys are rejected with their full dotted path; lists become
    tuples; nested dataclass fields recurse.
    """
    if mapping is None:
        mapping = {}
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, "
                          f"got {type(mapping).__name__}")
    by_name = {f.name: f for f in fields(cls)}
    unknown = sorted(set(mapping) - set(by_name))
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"unknown config key '{where}{unknown[0]}'")
    kwargs = {}
    for name, value in mapping.items():
        kwargs[name] = tuple(value) if isinstance(value, list) else value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


# Nested sections whose dataclass types are resolved by field name (string
# annotations from `from __future__ import annotations` hide them at runtime).
_CONFIG_SECTIONS = {
    "dataset": DatasetConfig,
    "network": NetworkConfig,
    "lif": LifConfig,
    "stdp": StdpParams,
    "encode": EncodeParams,
    "training": TrainingConfig,
    "record": RecordConfig,
    "decode": DecodeConfig,
    "combine": CombineConfig,
    "output": OutputConfig,
}
_LIF_SECTIONS = {"exc": LifParams, "inh": LifParams}


def parse_config(mapping: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a nested mapping, strictly."""
    if mapping is None:
        mapping = {}
    if not isinstance(mapping, dict):
        raise ConfigError("config root must be a mapping")
    unknown = sorted(set(mapping) - set(_CONFIG_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown config key '{unknown[0]}'")
    kwargs = {}
    for name, cls in _CONFIG_SECTIONS.items():
        if name not in mapping:
            continue
        if name == "lif":
            sub = mapping[name] or {}
            if not isinstance(sub, dict):
                raise ConfigError("lif: expected a mapping")
            bad = sorted(set(sub) - set(_LIF_SECTIONS))
            if bad:
                raise ConfigError(f"unknown config key 'lif.{bad[0]}'")
            kwargs[name] = LifConfig(**{
                k: _build_dataclass(LifParams, v, f"lif.{k}")
                for k, v in sub.items()
            })
        else:
            kwargs[name] = _build_dataclass(cls, mapping[name], name)
    cfg = ExperimentConfig(**kwargs)
    if cfg.dataset.kind not in ("idx", "synthetic"):
        raise ConfigError(f"dataset.kind must be 'idx' or 'synthetic', "
                          f"got {cfg.dataset.kind!r}")
    if cfg.training.seeds is None or len(cfg.training.seeds) == 0:
        raise ConfigError("training.seeds must list every member seed explicitly")
    if any((not isinstance(s, int)) or s < 0 for s in cfg.training.seeds):
        raise ConfigError("training.seeds must be nonnegative integers")
    return cfg


def load_config(path) -> ExperimentConfig:
    """Load and validate a YAML experiment configuration."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw)


def config_digest(cfg: ExperimentConfig) -> str:
    """Short stable hash identifying a configuration in reports."""
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True, default=list)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]
