"""Datasets: IDX container I/O, class filtering, synthetic fixtures, batching.

Features are always row-per-sample float64 in [0, 1]; labels are contiguous
integers below ``n_classes``. ``class_map`` remembers how original label
values map onto the contiguous ones (identity until a filter remaps them).

Two synthetic generators cover offline work: isotropic Gaussian blobs for
fast property tests, and a rendered-digit set (28 x 28 glyphs with placement
jitter and speckle noise) that exercises the full image pipeline when the
real digit files are not on disk.
"""

import gzip
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, FormatError, NumericError
from .rng import STREAM_BATCH, STREAM_DATA, generator

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    class_map: dict

    def __post_init__(self):
        f = self.features
        l = self.labels
        if f.ndim != 2:
            raise DataError(f"features must be 2-D, got ndim={f.ndim}")
        if l.shape != (f.shape[0],):
            raise DataError(
                f"label count {l.shape} != sample count {f.shape[0]}"
            )
        if not np.all(np.isfinite(f)):
            raise NumericError("features contain non-finite values")
        if f.size and (f.min() < 0.0 or f.max() > 1.0):
            raise DataError("features must lie in [0, 1]")
        if l.size and (l.min() < 0 or l.max() >= self.n_classes):
            raise DataError(
                f"labels must lie in [0, {self.n_classes}), got "
                f"[{l.min()}, {l.max()}]"
            )
        if len(set(self.class_map.values())) != len(self.class_map):
            raise DataError("class_map must be injective")

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]


def _read_exact(f, count, path, what):
    data = f.read(count)
    if len(data) != count:
        raise FormatError(
            f"{path}: truncated while reading {what} "
            f"(wanted {count} bytes, got {len(data)})"
        )
    return data


def _open_binary(path):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_idx_array(path, expected_magic, n_dims, what):
    with _open_binary(path) as f:
        (magic,) = struct.unpack(">I", _read_exact(f, 4, path, "magic"))
        if magic != expected_magic:
            raise FormatError(
                f"{path}: bad magic for {what}: expected "
                f"0x{expected_magic:08x}, found 0x{magic:08x}"
            )
        dims = struct.unpack(
            f">{n_dims}I", _read_exact(f, 4 * n_dims, path, "dimensions")
        )
        total = int(np.prod(dims))
        payload = _read_exact(f, total, path, "payload")
        if f.read(1):
            raise FormatError(f"{path}: trailing bytes after payload")
    return dims, np.frombuffer(payload, dtype=np.uint8)


def read_idx(images_path, labels_path):
    """Load an image/label IDX file pair into a :class:`Dataset`.

    Pixels are scaled by 1/255 and images flattened to rows. Each file's
    big-endian header is checked (magic number, dimension sizes, exact
    payload length), and the image and label counts must agree.
    """
    (n_images, rows, cols), pixels = _read_idx_array(
        images_path, IDX_IMAGE_MAGIC, 3, "images"
    )
    (n_labels,), raw_labels = _read_idx_array(
        labels_path, IDX_LABEL_MAGIC, 1, "labels"
    )
    if n_images != n_labels:
        raise FormatError(
            f"image/label count mismatch: {images_path} has {n_images}, "
            f"{labels_path} has {n_labels}"
        )
    features = pixels.reshape(n_images, rows * cols).astype(np.float64) / 255.0
    labels = raw_labels.astype(np.int64)
    n_classes = int(labels.max()) + 1 if labels.size else 1
    return Dataset(
        features=features,
        labels=labels,
        n_classes=n_classes,
        class_map={c: c for c in range(n_classes)},
    )


def write_idx(ds, images_path, labels_path, image_shape=None):
    """Write a dataset back to an IDX image/label pair.

    Features are scaled by 255 and rounded to bytes, so data that came from
    :func:`read_idx` round-trips exactly. ``image_shape`` defaults to a
    single row per image.
    """
    n = len(ds)
    if image_shape is None:
        image_shape = (1, ds.dim)
    rows, cols = image_shape
    if rows * cols != ds.dim:
        raise FormatError(
            f"image shape {image_shape} does not cover {ds.dim} features"
        )
    if ds.n_classes > 256:
        raise FormatError("IDX labels are single bytes; need n_classes <= 256")
    pixels = np.rint(ds.features * 255.0).astype(np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, n, rows, cols))
        f.write(pixels.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABEL_MAGIC, n))
        f.write(ds.labels.astype(np.uint8).tobytes())


def filter_classes(ds, keep):
    """Keep only samples of the listed classes, relabelled 0..k-1 in the
    order given; ``class_map`` then records original -> contiguous."""
    keep = [int(c) for c in keep]
    if not keep:
        raise DataError("keep list must be non-empty")
    if len(set(keep)) != len(keep):
        raise DataError(f"duplicate classes in keep list: {keep}")
    present = set(np.unique(ds.labels).tolist())
    unknown = [c for c in keep if c not in present]
    if unknown:
        raise DataError(f"classes not present in dataset: {unknown}")

    new_index = {c: i for i, c in enumerate(keep)}
    mask = np.isin(ds.labels, keep)
    relabelled = np.array([new_index[c] for c in ds.labels[mask]], dtype=np.int64)
    class_map = {
        orig: new_index[cur]
        for orig, cur in ds.class_map.items()
        if cur in new_index
    }
    return Dataset(
        features=ds.features[mask],
        labels=relabelled,
        n_classes=len(keep),
        class_map=class_map,
    )


def synth_blobs(n_classes, per_class, dim, spread, seed):
    """Gaussian blob classes: one seeded random center per class, isotropic
    noise of scale ``spread``, samples clipped to [0, 1]. Deterministic."""
    if n_classes < 1 or per_class < 1 or dim < 1:
        raise ConfigError("n_classes, per_class, and dim must be positive")
    rand = generator(seed, STREAM_DATA, n_classes, per_class, dim)
    centers = rand.uniform(0.0, 1.0, size=(n_classes, dim))
    features = np.empty((n_classes * per_class, dim))
    labels = np.empty(n_classes * per_class, dtype=np.int64)
    for c in range(n_classes):
        block = slice(c * per_class, (c + 1) * per_class)
        noise = rand.standard_normal((per_class, dim)) * spread
        features[block] = np.clip(centers[c] + noise, 0.0, 1.0)
        labels[block] = c
    return Dataset(
        features=features,
        labels=labels,
        n_classes=n_classes,
        class_map={c: c for c in range(n_classes)},
    )


# 5 x 7 digit glyphs for the rendered-digit generator.
_GLYPHS = {
    0: (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    1: ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    2: (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    3: ("#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."),
    4: ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    5: ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    6: ("..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."),
    7: ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    8: (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    9: (".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."),
}

DIGIT_SIDE = 28


def _render_digit(digit, rand):
    glyph = np.array(
        [[ch == "#" for ch in row] for row in _GLYPHS[digit]], dtype=np.float64
    )
    scaled = np.kron(glyph, np.ones((3, 3)))  # 21 x 15
    canvas = np.zeros((DIGIT_SIDE, DIGIT_SIDE))
    top = 3 + rand.integers(-3, 4)
    left = 6 + rand.integers(-3, 4)
    level = rand.integers(150, 256)
    body = scaled * np.clip(
        level - rand.integers(0, 60, size=scaled.shape), 0, 255
    )
    canvas[top : top + 21, left : left + 15] = body
    speckle = rand.random((DIGIT_SIDE, DIGIT_SIDE)) < 0.08
    canvas = np.where(
        speckle & (canvas == 0),
        rand.integers(0, 64, size=canvas.shape),
        canvas,
    )
    return canvas.reshape(-1) / 255.0


def synth_digits(per_class, seed):
    """Rendered 28 x 28 digit images, ten classes, deterministic per seed.

    Glyphs are placed with +-3 pixel jitter, per-pixel intensity variation,
    and background speckle, giving a learnable but non-trivial image task
    whose bytes survive an IDX round trip exactly.
    """
    if per_class < 1:
        raise ConfigError("per_class must be positive")
    features = np.empty((10 * per_class, DIGIT_SIDE * DIGIT_SIDE))
    labels = np.empty(10 * per_class, dtype=np.int64)
    i = 0
    for digit in range(10):
        for j in range(per_class):
            rand = generator(seed, STREAM_DATA, digit, j)
            features[i] = _render_digit(digit, rand)
            labels[i] = digit
            i += 1
    return Dataset(
        features=features,
        labels=labels,
        n_classes=10,
        class_map={c: c for c in range(10)},
    )


@dataclass(frozen=True)
class BatchPlan:
    """Deterministic epoch batching: a fresh permutation is derived from
    (seed, epoch); every sample appears exactly once per epoch and the last
    batch may be short."""

    batch_size: int
    seed: int

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(
                f"batch_size must be positive, got {self.batch_size}"
            )


def batches(ds, plan, epoch):
    """Yield (features, labels) batches for one epoch of ``ds``."""
    n = len(ds)
    if plan.batch_size > n:
        raise ConfigError(
            f"batch_size {plan.batch_size} exceeds dataset size {n}"
        )
    perm = generator(plan.seed, STREAM_BATCH, epoch).permutation(n)
    for start in range(0, n, plan.batch_size):
        idx = perm[start : start + plan.batch_size]
        yield ds.features[idx], ds.labels[idx]


_MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def load_mnist_dir(directory):
    """Load the standard digit IDX file pair layout from ``directory``.

    Accepts plain or gzipped files under the conventional names. Raises
    :class:`FormatError` if a file is missing, with fetch instructions.
    """
    import os

    out = {}
    for split, (img_name, lbl_name) in _MNIST_FILES.items():
        paths = []
        for name in (img_name, lbl_name):
            plain = os.path.join(directory, name)
            gz = plain + ".gz"
            if os.path.exists(plain):
                paths.append(plain)
            elif os.path.exists(gz):
                paths.append(gz)
            else:
                raise FormatError(
                    f"missing {name}[.gz] in {directory}; download the four "
                    "MNIST IDX files (train/t10k images and labels) into that "
                    "directory, e.g. from https://ossci-datasets.s3.amazonaws"
                    ".com/mnist/"
                )
        out[split] = read_idx(paths[0], paths[1])
    return out["train"], out["test"]
