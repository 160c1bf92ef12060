"""Experiment orchestration: configuration, the training loop, metric logs,
checkpoints, and the three desk-scale studies (frozen decision layer,
loss-menu comparison, activation-vs-weight similarity).

Every run is fully determined by its config: the seed drives parameter
init, batch order, and any synthetic data, so identical configs replay
bit-identically. The decision-column separability score is sampled at every
step in both of its algebraic forms and the two are required to agree.
"""

import csv
import io
import json
import os
import struct
import zlib
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import losses, optim
from .data import BatchPlan, batches
from .errors import ConfigError, DataError, FormatError, NumericError
from .linalg import pca_reduce
from .network import (
    FINAL_INITS,
    Network,
    backward,
    decide_classes,
    forward,
    init_network,
    mlp_spec,
)
from .separability import (
    format_epsilon,
    separability_metric,
    separability_metric_trace_form,
    separability_report,
)

LOSS_KINDS = ("softmax_ce", "softmax_ce_plus_center")

# Both separability forms are evaluated at every logged step; they must
# agree to this tolerance or the run aborts.
EPSILON_FORM_TOL = 1e-9


@dataclass(frozen=True)
class TrainConfig:
    """Everything needed to replay a run.

    ``layer_dims`` lists MLP widths input-first; the last width is the class
    count. ``data_source``/``class_filter`` describe where the CLI finds the
    dataset; library callers pass datasets explicitly.
    """

    layer_dims: tuple
    epochs: int
    seed: int
    loss: str = "softmax_ce"
    use_reconstruction: bool = False
    lam: float = 0.001
    batch_size: int = 128
    base_lr: float = 0.1
    milestones: tuple = ()
    lr_factor: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 1e-4
    freeze_final: bool = False
    final_init: str = "uniform_scaled"
    center_rate: float = 0.5
    data_source: str = ""
    class_filter: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(d) for d in self.layer_dims))
        object.__setattr__(self, "milestones", tuple(int(m) for m in self.milestones))
        object.__setattr__(self, "class_filter", tuple(int(c) for c in self.class_filter))
        if self.loss not in LOSS_KINDS:
            raise ConfigError(f"unknown loss {self.loss!r}; pick from {LOSS_KINDS}")
        if self.final_init not in FINAL_INITS:
            raise ConfigError(f"unknown final_init {self.final_init!r}")
        if self.lam < 0:
            raise ConfigError(f"lam must be >= 0, got {self.lam}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")

    def schedule(self):
        return optim.LrSchedule(
            base_lr=self.base_lr,
            milestones=self.milestones,
            factor=self.lr_factor,
        )

    def network_spec(self):
        return mlp_spec(self.layer_dims)


@dataclass(frozen=True)
class MetricRecord:
    step: int
    epoch: int
    loss_cls: float
    loss_re: float
    loss_total: float
    train_accuracy: float
    epsilon: float


@dataclass(frozen=True)
class RunArtifact:
    """Output of one training run: provenance plus results."""

    config: TrainConfig
    records: tuple
    network: Network
    report: object
    eval_accuracy: tuple = ()


def evaluate_accuracy(net, ds):
    """Fraction of dataset samples whose top logit matches the label."""
    trace = forward(net, ds.features)
    return float(np.mean(decide_classes(trace.logits) == ds.labels))


def _sample_epsilon(w, step):
    eps = separability_metric(w)
    eps_trace = separability_metric_trace_form(w)
    # Absolute tolerance at ordinary magnitudes, relative once a diverging
    # run pushes the metric far above 1 (roundoff alone exceeds 1e-9 there).
    tol = EPSILON_FORM_TOL * max(1.0, abs(eps), abs(eps_trace))
    if abs(eps - eps_trace) > tol:
        raise NumericError(
            f"separability forms disagree at step {step}: "
            f"{eps!r} vs {eps_trace!r}"
        )
    return eps


def train(config, ds, eval_ds=None):
    """Run the configured training loop on ``ds``.

    Appends one :class:`MetricRecord` per step (batch loss parts, batch
    accuracy, decision-column separability) and, when ``eval_ds`` is given,
    records its accuracy at each epoch end. Raises :class:`NumericError`
    with the step index if the loss leaves the finite range.
    """
    spec = config.network_spec()
    if ds.n_classes != spec.n_classes:
        raise ConfigError(
            f"dataset has {ds.n_classes} classes but the network ends "
            f"in {spec.n_classes}"
        )
    if ds.dim != spec.input_dim:
        raise ConfigError(
            f"dataset features have {ds.dim} dims but the network takes "
            f"{spec.input_dim}"
        )

    net = init_network(spec, config.seed, final_init=config.final_init)
    params = net.parameters()
    state = optim.SgdState.for_params(
        params, momentum=config.momentum, weight_decay=config.weight_decay
    )
    update_mask = optim.freeze_mask(net, config.freeze_final)
    decay_mask = optim.decay_mask(net)
    plan = BatchPlan(batch_size=config.batch_size, seed=config.seed)
    schedule = config.schedule()

    centers = None
    if config.loss == "softmax_ce_plus_center":
        centers = losses.CenterState.zeros(
            spec.n_classes, spec.latent_dim, update_rate=config.center_rate
        )

    records = []
    eval_accuracy = []
    step = 0
    for epoch in range(config.epochs):
        lr = optim.lr_at(schedule, epoch)
        for feats, labels in batches(ds, plan, epoch):
            trace = forward(net, feats)
            logits = trace.logits
            latent = trace.latent

            ce, ce_grad = losses.softmax_cross_entropy(logits, labels)
            cls_value = ce
            cls_latent_grad = None
            if centers is not None:
                c_value, c_grad, centers = losses.center_loss(
                    latent, labels, centers
                )
                cls_value += c_value
                cls_latent_grad = c_grad
            cls_seeds = losses.GradSeeds(
                logit_grad=ce_grad, latent_grad=cls_latent_grad
            )

            re_value = 0.0
            re_seeds = losses.GradSeeds()
            if config.use_reconstruction:
                onehot = losses.one_hot(labels, spec.n_classes)
                re_value, re_latent, re_w = losses.reconstruction_loss(
                    latent, onehot, net.final_weight
                )
                re_seeds = losses.GradSeeds(latent_grad=re_latent, w_grad=re_w)

            value, seeds = losses.total_loss(
                cls_value, cls_seeds, re_value, re_seeds, config.lam
            )
            if not np.isfinite(value.total):
                last = records[-1] if records else None
                raise NumericError(
                    f"non-finite loss at step {step}; last finite record: {last}"
                )

            latent_extra = (
                seeds.latent_grad
                if seeds.latent_grad is not None
                else np.zeros_like(latent)
            )
            grads = backward(net, trace, seeds.logit_grad, latent_extra)
            if seeds.w_grad is not None:
                arrays = list(grads.arrays)
                arrays[-1] = arrays[-1] + seeds.w_grad
                grads = replace(grads, arrays=tuple(arrays))

            params, state = optim.sgd_step(
                params, grads.arrays, state, lr, update_mask, decay_mask
            )
            net = net.replace_parameters(params)

            batch_acc = float(np.mean(decide_classes(logits) == labels))
            records.append(
                MetricRecord(
                    step=step,
                    epoch=epoch,
                    loss_cls=value.cls,
                    loss_re=value.re,
                    loss_total=value.total,
                    train_accuracy=batch_acc,
                    epsilon=_sample_epsilon(net.final_weight, step),
                )
            )
            step += 1
        if eval_ds is not None:
            eval_accuracy.append(evaluate_accuracy(net, eval_ds))

    return RunArtifact(
        config=config,
        records=tuple(records),
        network=net,
        report=separability_report(net.final_weight),
        eval_accuracy=tuple(eval_accuracy),
    )


def latent_features(net, ds):
    """Latent (decision-layer input) activations for every sample."""
    return forward(net, ds.features).latent


# ---------------------------------------------------------------------------
# Experiments


@dataclass(frozen=True)
class FrozenArm:
    """One arm of the frozen-decision-layer comparison."""

    name: str
    accuracy: float
    epsilon: float
    epsilon_steps: tuple
    pca3: np.ndarray
    labels: np.ndarray


@dataclass(frozen=True)
class FrozenLinearityResult:
    orthonormal: FrozenArm
    random: FrozenArm


def experiment_frozen_linearity(train_ds, test_ds, seed, config=None):
    """Train twin networks whose decision layer never updates: one arm gets
    orthonormal columns, the other raw uniform [-1, 1] columns. Reports both
    test accuracies, both separability scores, and 3-D projections of the
    test latents."""
    if config is None:
        config = TrainConfig(
            layer_dims=(train_ds.dim, 64, train_ds.n_classes),
            epochs=30,
            seed=seed,
            milestones=(15, 25),
        )
    arms = []
    for name, final_init in (
        ("orthonormal", "semi_orthogonal"),
        ("random", "uniform_unit"),
    ):
        cfg = replace(config, seed=seed, freeze_final=True, final_init=final_init)
        artifact = train(cfg, train_ds, eval_ds=test_ds)
        latents = latent_features(artifact.network, test_ds)
        arms.append(
            FrozenArm(
                name=name,
                accuracy=artifact.eval_accuracy[-1],
                epsilon=artifact.report.epsilon,
                epsilon_steps=tuple(r.epsilon for r in artifact.records),
                pca3=pca_reduce(latents, min(3, latents.shape[1])),
                labels=test_ds.labels.copy(),
            )
        )
    return FrozenLinearityResult(orthonormal=arms[0], random=arms[1])


@dataclass(frozen=True)
class ComparisonCell:
    loss: str
    use_reconstruction: bool
    accuracies: tuple
    epsilons: tuple

    @property
    def mean_accuracy(self):
        return float(np.mean(self.accuracies))

    @property
    def mean_epsilon(self):
        return float(np.mean(self.epsilons))


@dataclass(frozen=True)
class LossComparisonResult:
    cells: tuple
    rank_correlation: float

    def cell(self, loss, use_reconstruction):
        for c in self.cells:
            if c.loss == loss and c.use_reconstruction == use_reconstruction:
                return c
        raise KeyError((loss, use_reconstruction))


def experiment_loss_comparison(train_ds, test_ds, seeds, config=None):
    """Train every loss-menu cell ({softmax CE, CE+center} x {with, without
    the reconstruction term}) over the given seeds; report mean test
    accuracy and mean final separability per cell, plus the Spearman rank
    correlation between cell accuracy and negated separability score."""
    from scipy.stats import spearmanr

    seeds = tuple(seeds)
    if not seeds:
        raise ConfigError("need at least one seed")
    if config is None:
        config = TrainConfig(
            layer_dims=(train_ds.dim, 64, train_ds.n_classes),
            epochs=30,
            seed=seeds[0],
            milestones=(15, 25),
        )
    cells = []
    for loss in LOSS_KINDS:
        for use_re in (False, True):
            accs, epss = [], []
            for seed in seeds:
                cfg = replace(
                    config, seed=seed, loss=loss, use_reconstruction=use_re
                )
                artifact = train(cfg, train_ds, eval_ds=test_ds)
                accs.append(artifact.eval_accuracy[-1])
                epss.append(artifact.report.epsilon)
            cells.append(
                ComparisonCell(
                    loss=loss,
                    use_reconstruction=use_re,
                    accuracies=tuple(accs),
                    epsilons=tuple(epss),
                )
            )
    acc = [c.mean_accuracy for c in cells]
    neg_eps = [-c.mean_epsilon for c in cells]
    if len(set(acc)) < 2 or len(set(neg_eps)) < 2:
        # Spearman is undefined when either margin is constant (e.g. all
        # cells reach the same accuracy on an easy dataset).
        rho = float("nan")
    else:
        rho = float(spearmanr(acc, neg_eps).statistic)
    return LossComparisonResult(cells=tuple(cells), rank_correlation=rho)


@dataclass(frozen=True)
class SimilarityRow:
    class_index: int
    euclidean: float
    cosine_distance: float


def similarity_report(net, ds):
    """Per class: distance between the class's mean latent activation and
    the matching decision column, as Euclidean distance and cosine distance
    (1 - cosine similarity)."""
    latents = latent_features(net, ds)
    w = net.final_weight
    if w.shape[1] != ds.n_classes:
        raise ConfigError(
            f"network has {w.shape[1]} decision columns, dataset has "
            f"{ds.n_classes} classes"
        )
    rows = []
    for c in range(ds.n_classes):
        member = ds.labels == c
        if not member.any():
            raise DataError(f"class {c} has no samples")
        mean_latent = latents[member].mean(axis=0)
        col = w[:, c]
        euclid = float(np.linalg.norm(mean_latent - col))
        denom = np.linalg.norm(mean_latent) * np.linalg.norm(col)
        if denom == 0.0:
            cosine = 1.0 if euclid > 0 else 0.0
        else:
            cosine = float(1.0 - mean_latent @ col / denom)
        rows.append(
            SimilarityRow(class_index=c, euclidean=euclid, cosine_distance=cosine)
        )
    return rows


# ---------------------------------------------------------------------------
# Files: PCA export, metric logs, checkpoints, config text


def export_pca(latents, labels, path, k=3):
    """Reduce latents to ``k`` principal components and write a CSV with
    columns pc1..pck,label. Floats are written at full precision."""
    latents = np.asarray(latents, dtype=np.float64)
    labels = np.asarray(labels)
    reduced = pca_reduce(latents, min(k, latents.shape[1]))
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(
                [f"pc{i + 1}" for i in range(reduced.shape[1])] + ["label"]
            )
            for row, label in zip(reduced, labels):
                writer.writerow([repr(float(v)) for v in row] + [int(label)])
    except OSError as e:
        raise FormatError(f"cannot write PCA export to {path}: {e}") from e
    return reduced


METRIC_COLUMNS = (
    "step",
    "epoch",
    "loss_cls",
    "loss_re",
    "loss_total",
    "train_acc",
    "epsilon",
)


def metrics_to_csv(records):
    """Render metric records in the fixed log schema (one header row,
    decimal floats, separability in scientific notation)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.step,
                r.epoch,
                f"{r.loss_cls:.12g}",
                f"{r.loss_re:.12g}",
                f"{r.loss_total:.12g}",
                f"{r.train_accuracy:.6g}",
                format_epsilon(r.epsilon),
            ]
        )
    return buf.getvalue()


def write_metrics_csv(records, path):
    with open(path, "w", newline="") as f:
        f.write(metrics_to_csv(records))


# Checkpoint container: magic, version, JSON header describing the layer
# stack and array shapes, raw little-endian float64 payloads, then a CRC32
# of everything before it.
CHECKPOINT_MAGIC = b"WSCK"
CHECKPOINT_VERSION = 1


def save_checkpoint(net, path):
    """Serialize network spec and parameters; the trailing checksum lets
    :func:`load_checkpoint` reject corrupt or truncated files."""
    header = {
        "version": CHECKPOINT_VERSION,
        "layers": [
            {"in": l.in_dim, "out": l.out_dim, "activation": l.activation}
            for l in net.spec.layers
        ],
        "arrays": [
            {"name": name, "shape": list(arr.shape)}
            for name, arr in zip(net.parameter_names(), net.parameters())
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    blob = bytearray()
    blob += CHECKPOINT_MAGIC
    blob += struct.pack(">II", CHECKPOINT_VERSION, len(header_bytes))
    blob += header_bytes
    for arr in net.parameters():
        blob += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    blob += struct.pack(">I", zlib.crc32(bytes(blob)) & 0xFFFFFFFF)
    with open(path, "wb") as f:
        f.write(bytes(blob))


def load_checkpoint(path):
    """Read a checkpoint back into a :class:`Network`."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 16 or blob[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a checkpoint (bad magic)")
    (stored_crc,) = struct.unpack(">I", blob[-4:])
    actual_crc = zlib.crc32(blob[:-4]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise FormatError(
            f"{path}: checksum mismatch (file corrupt or truncated)"
        )
    version, header_len = struct.unpack(">II", blob[4:12])
    if version != CHECKPOINT_VERSION:
        raise FormatError(
            f"{path}: checkpoint version {version} unsupported "
            f"(expected {CHECKPOINT_VERSION})"
        )
    try:
        header = json.loads(blob[12 : 12 + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: unreadable checkpoint header: {e}") from e

    from .network import LayerSpec, NetworkSpec

    spec = NetworkSpec(
        layers=tuple(
            LayerSpec(l["in"], l["out"], l["activation"]) for l in header["layers"]
        )
    )
    offset = 12 + header_len
    arrays = []
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        end = offset + count * 8
        if end > len(blob) - 4:
            raise FormatError(f"{path}: payload shorter than header promises")
        arrays.append(
            np.frombuffer(blob[offset:end], dtype="<f8").reshape(shape).copy()
        )
        offset = end
    if offset != len(blob) - 4:
        raise FormatError(f"{path}: payload longer than header promises")

    weights, biases = [], []
    it = iter(arrays)
    names = iter(header["arrays"])
    for k in range(len(spec.layers)):
        weights.append(next(it))
        entry = next(names)
        has_bias = k < len(spec.layers) - 1
        if has_bias:
            biases.append(next(it))
            next(names)
        else:
            biases.append(None)
    return Network(spec, weights, biases)


def config_to_text(config):
    """Flat key = value rendering; values are JSON literals so types are
    explicit and parse back exactly."""
    lines = []
    for key, value in asdict(config).items():
        if isinstance(value, tuple):
            value = list(value)
        lines.append(f"{key} = {json.dumps(value)}")
    return "\n".join(lines) + "\n"


def config_from_text(text):
    """Parse :func:`config_to_text` output (or a hand-written file in the
    same shape) back into a :class:`TrainConfig`."""
    fields = {f: None for f in TrainConfig.__dataclass_fields__}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value': {raw!r}")
        key, _, rhs = line.partition("=")
        key = key.strip()
        if key not in fields:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        try:
            values[key] = json.loads(rhs.strip())
        except json.JSONDecodeError as e:
            raise ConfigError(f"line {lineno}: bad value for {key}: {e}") from e
    for key in ("layer_dims", "milestones", "class_filter"):
        if key in values:
            values[key] = tuple(values[key])
    try:
        return TrainConfig(**values)
    except TypeError as e:
        raise ConfigError(f"incomplete config: {e}") from e


def write_run_artifact(artifact, out_dir):
    """Persist a run: config snapshot, metric CSV, and final checkpoint."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.txt"), "w") as f:
        f.write(config_to_text(artifact.config))
    write_metrics_csv(artifact.records, os.path.join(out_dir, "metrics.csv"))
    save_checkpoint(artifact.network, os.path.join(out_dir, "checkpoint.bin"))
