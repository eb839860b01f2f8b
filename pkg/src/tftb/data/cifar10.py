"""CIFAR-10 binary-format loader.

The distributed binary batches hold 10000 records each; one record is exactly
3073 bytes: a single label byte (0..9) followed by 3072 channel-major pixel
bytes (1024 red, 1024 green, 1024 blue, rows within a channel).  Pixels are
scaled to [0, 1] and then normalised per channel with constants computed from
the training split; the constants travel in ``Dataset.meta`` so they can be
echoed into the run manifest.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from ..errors import CorruptDataError
from .dataset import Dataset, SampleRecord

RECORD_BYTES = 3073
PIXELS = 3072
CHANNEL = 1024
RECORDS_PER_FILE = 10000
NUM_CLASSES = 10
TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
TEST_FILE = "test_batch.bin"


def read_batch_file(path) -> tuple[np.ndarray, np.ndarray]:
    """Parse one binary batch: (labels uint8 (n,), pixels float64 (n, 3072) in [0,1]).

    Accepts any whole number of records; ``load_cifar10`` enforces the
    10000-records-per-file convention on top of this.
    """
    blob = Path(path).read_bytes()
    if len(blob) == 0 or len(blob) % RECORD_BYTES != 0:
        k = len(blob) // RECORD_BYTES + 1
        raise CorruptDataError(
            f"{path}: {len(blob)} bytes is not a whole number of {RECORD_BYTES}-byte "
            f"records (nearest: {k * RECORD_BYTES})"
        )
    records = np.frombuffer(blob, dtype=np.uint8).reshape(-1, RECORD_BYTES)
    labels = records[:, 0]
    bad = np.flatnonzero(labels > NUM_CLASSES - 1)
    if bad.size:
        i = int(bad[0])
        raise CorruptDataError(
            f"{path}: corrupt record {i} at byte offset {i * RECORD_BYTES}: "
            f"label byte {int(labels[i])} > 9"
        )
    pixels = records[:, 1:].astype(np.float64) / 255.0
    return labels.copy(), pixels


def _read_exact(path) -> tuple[np.ndarray, np.ndarray]:
    expected = RECORDS_PER_FILE * RECORD_BYTES
    actual = os.path.getsize(path)
    if actual != expected:
        raise CorruptDataError(f"{path}: expected {expected} bytes, got {actual}")
    return read_batch_file(path)


def channel_stats(pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel mean/std of [0,1]-scaled pixels, channels in R,G,B order."""
    per_channel = pixels.reshape(-1, 3, CHANNEL)
    mean = per_channel.mean(axis=(0, 2))
    std = per_channel.std(axis=(0, 2))
    return mean, np.where(std == 0.0, 1.0, std)


def _normalize(pixels: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    shaped = pixels.reshape(-1, 3, CHANNEL)
    shaped = (shaped - mean[None, :, None]) / std[None, :, None]
    return shaped.reshape(-1, PIXELS)


def _to_samples(labels: np.ndarray, pixels: np.ndarray) -> list[SampleRecord]:
    return [
        SampleRecord(id=i, features=pixels[i], target=int(labels[i]), class_tag=int(labels[i]))
        for i in range(len(labels))
    ]


def load_cifar10(directory) -> tuple[Dataset, Dataset]:
    """Load the six standard binary batches into (train, test) datasets."""
    directory = Path(directory)
    train_parts = [_read_exact(directory / name) for name in TRAIN_FILES]
    test_labels, test_pixels = _read_exact(directory / TEST_FILE)
    train_labels = np.concatenate([p[0] for p in train_parts])
    train_pixels = np.concatenate([p[1] for p in train_parts])

    mean, std = channel_stats(train_pixels)
    meta = {
        "channel_mean": [float(m) for m in mean],
        "channel_std": [float(s) for s in std],
    }
    train = Dataset(
        _to_samples(train_labels, _normalize(train_pixels, mean, std)),
        num_classes=NUM_CLASSES,
        split_tag="train",
        meta=dict(meta),
    )
    test = Dataset(
        _to_samples(test_labels, _normalize(test_pixels, mean, std)),
        num_classes=NUM_CLASSES,
        split_tag="test",
        meta=dict(meta),
    )
    return train, test
