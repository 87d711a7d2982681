"""
Dataset ingestion: MNIST IDX files, seeded Gaussian blobs, stratified splits.
"""

import gzip
import logging
import struct
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from models.dataset import Dataset, ExperimentData
from models.run import BlobsSource, DatasetSource, MnistSource
from utils.errors import FormatError, TruncatedFileError, ValidationError
from utils.rng import SeedLike, as_generator, draw_seed, substream

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
CENTER_LO, CENTER_HI = 0.2, 0.8
CENTER_CANDIDATES = 64

PathLike = Union[str, Path]


def _read_bytes(path: PathLike) -> bytes:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"IDX file not found: {path}")
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        return f.read()


def _parse_idx(path: PathLike, expected_magic: int) -> Tuple[np.ndarray, Tuple[int, ...]]:
    data = _read_bytes(path)
    if len(data) < 8:
        raise TruncatedFileError(f"{path} is too short for an IDX header ({len(data)} bytes)")
    magic, count = struct.unpack(">II", data[:8])
    if magic != expected_magic:
        raise FormatError(f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    if count == 0:
        raise FormatError(f"{path} holds no examples")

    ndim = magic & 0xFF
    header_len = 4 + 4 * ndim
    if len(data) < header_len:
        raise TruncatedFileError(f"{path} ends inside its IDX header")
    dims = (count,) + struct.unpack(f">{ndim - 1}I", data[8:header_len])
    size = int(np.prod(dims))
    payload = data[header_len:]
    if len(payload) < size:
        raise TruncatedFileError(f"{path}: header promises {size} bytes of data, file holds {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8, count=size).reshape(dims), dims


def load_mnist_idx(
    images_path: PathLike,
    labels_path: PathLike,
    num_classes: Optional[int] = None,
    split_tag: str = "train",
) -> Dataset:
    """
    Big-endian IDX image/label pair → Dataset with pixels scaled by 1/255.
    Gzipped files (.gz) are read transparently.
    """
    images, image_dims = _parse_idx(images_path, IMAGES_MAGIC)
    labels, _ = _parse_idx(labels_path, LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(f"image count {images.shape[0]} ({images_path}) != label count {labels.shape[0]} ({labels_path})")

    rows, cols = image_dims[1], image_dims[2]
    x = images.reshape(images.shape[0], rows * cols).astype(np.float64) / 255.0
    y = labels.astype(np.int64)
    k = num_classes if num_classes is not None else max(10, int(y.max()) + 1)
    logger.info(f"✅ Loaded {x.shape[0]} examples ({rows}×{cols}) from {images_path}")
    return Dataset(x=x, y=y, num_classes=k, split_tag=split_tag, image_shape=(1, rows, cols))


def write_idx(path: PathLike, array: np.ndarray, magic: int) -> Path:
    """Write a uint8 array as an IDX file (images: n×rows×cols, labels: n)"""
    path = Path(path)
    array = np.ascontiguousarray(array, dtype=np.uint8)
    if array.ndim != (magic & 0xFF):
        raise ValidationError(f"magic 0x{magic:08x} expects {magic & 0xFF} dimensions, array has {array.ndim}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(struct.pack(f">I{array.ndim}I", magic, *array.shape))
        f.write(array.tobytes())
    return path


def export_idx(data: Dataset, images_path: PathLike, labels_path: PathLike) -> None:
    """Write a dataset as an IDX pair (features rescaled to bytes by ×255)"""
    shape = data.image_shape[1:] if len(data.image_shape) == 3 else (1, data.dim)
    pixels = np.rint(data.x * 255.0).reshape((data.n,) + tuple(shape))
    write_idx(images_path, pixels, IMAGES_MAGIC)
    write_idx(labels_path, data.y, LABELS_MAGIC)


def _spread_centers(rng: np.random.Generator, k: int, d: int) -> np.ndarray:
    """Best-separated of a fixed number of seeded center draws"""
    best, best_gap = None, -1.0
    for _ in range(CENTER_CANDIDATES):
        centers = rng.uniform(CENTER_LO, CENTER_HI, size=(k, d))
        gaps = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=-1)
        gap = gaps[np.triu_indices(k, 1)].min()
        if gap > best_gap:
            best, best_gap = centers, gap
    return best


def make_blobs(n: int, k: int, d: int, spread: float, seed: SeedLike) -> Dataset:
    """K Gaussian clusters around seeded centers in [0.2, 0.8]^d, clipped to [0, 1]"""
    if k < 2 or n < k or d < 2:
        raise ValidationError(f"blobs need k >= 2, n >= k and d >= 2 (got n={n}, k={k}, d={d})")
    if spread < 0 or not np.isfinite(spread):
        raise ValidationError(f"spread must be a finite value >= 0, got {spread}")

    rng = as_generator(seed)
    centers = _spread_centers(rng, k, d)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    y = np.repeat(np.arange(k), sizes)
    x = np.clip(centers[y] + spread * rng.standard_normal((n, d)), 0.0, 1.0)
    order = rng.permutation(n)
    return Dataset(x=x[order], y=y[order], num_classes=k, split_tag="train")


def split(data: Dataset, eval_fraction: float, seed: SeedLike) -> Tuple[Dataset, Dataset]:
    """
    Stratified split. round(n·fraction) examples go to eval, apportioned over
    classes by largest remainder, so every class count is within 1 of
    class_size·fraction.
    """
    if not 0.0 < eval_fraction < 1.0:
        raise ValidationError(f"eval_fraction must lie in (0, 1), got {eval_fraction}")

    counts = data.class_counts()
    ideal = counts * eval_fraction
    eval_counts = np.floor(ideal).astype(np.int64)
    extra = int(np.floor(data.n * eval_fraction + 0.5)) - int(eval_counts.sum())
    by_remainder = sorted(range(data.num_classes), key=lambda c: (-(ideal[c] - eval_counts[c]), c))
    for c in by_remainder[: max(extra, 0)]:
        eval_counts[c] += 1

    for c in range(data.num_classes):
        if eval_counts[c] < 1 or eval_counts[c] > counts[c] - 1:
            raise ValidationError(
                f"eval_fraction {eval_fraction} leaves class {c} empty in one split ({counts[c]} examples, {eval_counts[c]} to eval)"
            )

    rng = as_generator(seed)
    eval_idx, train_idx = [], []
    for c in range(data.num_classes):
        members = rng.permutation(np.flatnonzero(data.y == c))
        eval_idx.append(members[: eval_counts[c]])
        train_idx.append(members[eval_counts[c] :])

    train = data.subset(np.sort(np.concatenate(train_idx)), split_tag="train")
    held_out = data.subset(np.sort(np.concatenate(eval_idx)), split_tag="eval")
    return train, held_out


def build_experiment_data(source: DatasetSource, eval_fraction: float, seed: int) -> ExperimentData:
    """Load or generate the dataset a run names and split it (seeded by the run)"""
    if isinstance(source, MnistSource):
        data = load_mnist_idx(source.images, source.labels)
        if source.limit is not None and source.limit < data.n:
            keep = substream(seed, "data").permutation(data.n)[: source.limit]
            data = data.subset(np.sort(keep))
        if source.eval_images is not None and source.eval_labels is not None:
            held_out = load_mnist_idx(source.eval_images, source.eval_labels, num_classes=data.num_classes, split_tag="eval")
            return ExperimentData(train=data, eval=held_out)
    elif isinstance(source, BlobsSource):
        data = make_blobs(source.n, source.k, source.d, source.spread, draw_seed(substream(seed, "data")))
    else:
        raise ValidationError(f"unknown dataset source {source!r}")

    train, held_out = split(data, eval_fraction, substream(seed, "split"))
    logger.info(f"📊 Split {data.n} examples into {train.n} train / {held_out.n} eval")
    return ExperimentData(train=train, eval=held_out)
