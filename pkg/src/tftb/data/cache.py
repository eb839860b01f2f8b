"""Binary cache for generated datasets.

Layout (integers little-endian):

    bytes 0..7   magic b"TFTBDAT1"
    u32          version (currently 1)
    u32          length L of the header
    L bytes      header, UTF-8 JSON: split_tag, num_classes, n_samples,
                 feature_shape, target_kind ("class" | "map"),
                 target_shape, meta (generator parameters incl. seed)
    per sample   id (i64), class_tag (i64), features (raw <f8),
                 then target: i64 for "class", raw <f8 for "map"
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CorruptDataError
from .dataset import Dataset, SampleRecord

MAGIC = b"TFTBDAT1"
VERSION = 1


def save_dataset(dataset: Dataset, path) -> None:
    first = dataset.samples[0] if dataset.samples else None
    target_kind = "map" if isinstance(first.target, np.ndarray) else "class"
    target_shape = list(first.target.shape) if target_kind == "map" else []
    header = json.dumps(
        {
            "split_tag": dataset.split_tag,
            "num_classes": dataset.num_classes,
            "n_samples": len(dataset.samples),
            "feature_shape": list(dataset.feature_shape),
            "target_kind": target_kind,
            "target_shape": target_shape,
            "meta": dataset.meta,
        },
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header)))
        fh.write(header)
        for s in dataset.samples:
            fh.write(struct.pack("<qq", s.id, s.class_tag))
            fh.write(np.ascontiguousarray(s.features, dtype="<f8").tobytes())
            if target_kind == "class":
                fh.write(struct.pack("<q", int(s.target)))
            else:
                fh.write(np.ascontiguousarray(s.target, dtype="<f8").tobytes())


def load_dataset(path) -> Dataset:
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise CorruptDataError(f"{path}: bad magic {blob[:8]!r}, expected {MAGIC!r}")
    version, header_len = struct.unpack("<II", blob[8:16])
    if version != VERSION:
        raise CorruptDataError(f"{path}: unsupported cache version {version}")
    header = json.loads(blob[16 : 16 + header_len].decode("utf-8"))
    feature_shape = tuple(header["feature_shape"])
    target_kind = header["target_kind"]
    target_shape = tuple(header["target_shape"])
    feat_bytes = int(np.prod(feature_shape, dtype=np.int64)) * 8 if feature_shape else 8

    offset = 16 + header_len
    samples: list[SampleRecord] = []
    for _ in range(header["n_samples"]):
        try:
            sid, tag = struct.unpack_from("<qq", blob, offset)
        except struct.error as exc:
            raise CorruptDataError(f"{path}: truncated at sample header, offset {offset}") from exc
        offset += 16
        feats = np.frombuffer(blob, dtype="<f8", count=int(np.prod(feature_shape)), offset=offset)
        feats = feats.reshape(feature_shape).copy()
        offset += feat_bytes
        if target_kind == "class":
            (target,) = struct.unpack_from("<q", blob, offset)
            offset += 8
            samples.append(SampleRecord(sid, feats, int(target), tag))
        else:
            count = int(np.prod(target_shape))
            tmap = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
            offset += count * 8
            samples.append(SampleRecord(sid, feats, tmap.reshape(target_shape).copy(), tag))
    if offset != len(blob):
        raise CorruptDataError(f"{path}: {len(blob) - offset} trailing bytes")
    return Dataset(
        samples,
        num_classes=header["num_classes"],
        split_tag=header["split_tag"],
        meta=header["meta"],
    )
