"""Datasets: CIFAR-10 binary loader, synthetic generators, density maps, cache."""

import math

import numpy as np
import pytest

from tftb.data import (
    UNSTRATIFIED,
    Dataset,
    DotMap,
    SampleRecord,
    density_map,
    load_cifar10,
    load_dataset,
    read_batch_file,
    save_dataset,
    synth_classification,
    synth_counting,
    train_val_split,
)
from tftb.data.cifar10 import RECORD_BYTES, channel_stats
from tftb.errors import ConfigError, CorruptDataError, ShapeError

# ---------------------------------------------------------------------------
# CIFAR-10 binary format


def write_records(path, labels, pixel_byte=0):
    out = bytearray()
    for label in labels:
        out.append(label)
        out.extend([pixel_byte] * (RECORD_BYTES - 1))
    path.write_bytes(bytes(out))


def test_single_record_file_parses_label_and_scaled_pixels(tmp_path):
    path = tmp_path / "one.bin"
    write_records(path, [3], pixel_byte=255)
    labels, pixels = read_batch_file(path)
    assert labels.tolist() == [3]
    assert pixels.shape == (1, 3072)
    assert np.array_equal(pixels, np.ones((1, 3072)))


def test_truncated_file_is_a_framing_error(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"\x00" * (RECORD_BYTES * 4 - 1))
    with pytest.raises(CorruptDataError, match="not a whole number"):
        read_batch_file(path)


def test_label_byte_above_nine_reports_record_offset(tmp_path):
    path = tmp_path / "bad_label.bin"
    write_records(path, [1, 14, 2])
    with pytest.raises(CorruptDataError, match=rf"record 1 at byte offset {RECORD_BYTES}"):
        read_batch_file(path)


def test_read_batch_file_is_deterministic(tmp_path):
    rng = np.random.default_rng(0)
    blob = rng.integers(0, 256, RECORD_BYTES * 3, dtype=np.uint8)
    blob[::RECORD_BYTES] = rng.integers(0, 10, 3, dtype=np.uint8)
    path = tmp_path / "rand.bin"
    path.write_bytes(blob.tobytes())
    l1, p1 = read_batch_file(path)
    l2, p2 = read_batch_file(path)
    assert np.array_equal(l1, l2)
    assert np.array_equal(p1, p2)


def test_load_cifar10_standard_layout_counts_and_normalization(cifar_dir):
    train, test = load_cifar10(cifar_dir)
    assert len(train) == 50000
    assert len(test) == 10000
    assert train.num_classes == 10
    assert train.feature_shape == (3072,)
    assert len(train.meta["channel_mean"]) == 3
    assert train.meta == test.meta
    assert sorted(train.ids) == list(range(50000))


def test_load_cifar10_wrong_size_reports_expected_vs_actual(tmp_path):
    for name in [f"data_batch_{i}.bin" for i in range(1, 6)] + ["test_batch.bin"]:
        np.zeros(10000 * RECORD_BYTES, dtype=np.uint8).tofile(str(tmp_path / name))
    (tmp_path / "data_batch_2.bin").write_bytes(b"\x00" * 1000)
    with pytest.raises(CorruptDataError, match=f"expected {10000 * RECORD_BYTES} bytes, got 1000"):
        load_cifar10(tmp_path)


def test_channel_stats_are_per_channel():
    pixels = np.zeros((4, 3072))
    pixels[:, :1024] = 0.25      # red
    pixels[:, 1024:2048] = 0.5   # green
    pixels[:, 2048:] = 0.75      # blue
    mean, std = channel_stats(pixels)
    assert np.allclose(mean, [0.25, 0.5, 0.75])
    assert np.array_equal(std, [1.0, 1.0, 1.0])  # zero spread guards to 1


# ---------------------------------------------------------------------------
# synthetic classification


def test_synth_classification_counts_per_class():
    ds = synth_classification(seed=0, n_per_class=100, num_classes=2, easy_fraction=0.5)
    assert len(ds) == 200
    sizes = ds.class_sizes()
    assert sizes == {0: 100, 1: 100}
    assert sorted(ds.ids) == list(range(200))


def test_synth_classification_all_easy_lies_within_one_cluster_scale():
    ds = synth_classification(seed=3, n_per_class=80, num_classes=3, easy_fraction=1.0)
    angles = 2 * np.pi * np.arange(3) / 3
    centroids = 3.0 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    for s in ds.samples:
        center = np.concatenate([centroids[s.class_tag], np.zeros(2)])
        assert np.linalg.norm(s.features - center) <= 1.0


def test_synth_classification_same_seed_is_byte_identical():
    a = synth_classification(seed=9, n_per_class=50, num_classes=4, easy_fraction=0.6)
    b = synth_classification(seed=9, n_per_class=50, num_classes=4, easy_fraction=0.6)
    assert len(a) == len(b)
    for sa, sb in zip(a.samples, b.samples):
        assert sa.id == sb.id and sa.class_tag == sb.class_tag
        assert sa.features.tobytes() == sb.features.tobytes()


def test_synth_classification_validates_parameters():
    with pytest.raises(ConfigError):
        synth_classification(seed=0, n_per_class=10, num_classes=1, easy_fraction=0.5)
    with pytest.raises(ConfigError):
        synth_classification(seed=0, n_per_class=10, num_classes=2, easy_fraction=1.5)


# ---------------------------------------------------------------------------
# density maps


def test_empty_dot_map_gives_all_zero_density():
    out = density_map(DotMap(20, 16, ()), sigma=3.0)
    assert out.shape == (16, 20)
    assert np.array_equal(out, np.zeros((16, 20)))


def test_single_centered_point_has_unit_mass_and_argmax_at_point():
    for sigma in (0.5, 2.0, 7.0):
        out = density_map(DotMap(17, 17, ((8.0, 8.0),)), sigma=sigma)
        assert abs(out.sum() - 1.0) <= 1e-6
        assert np.unravel_index(np.argmax(out), out.shape) == (8, 8)


def test_density_matches_brute_force_pixel_loop_oracle():
    rng = np.random.default_rng(5)
    w, h, sigma = 21, 18, 10.0
    points = tuple((float(rng.uniform(0, w)), float(rng.uniform(0, h))) for _ in range(7))
    got = density_map(DotMap(w, h, points), sigma)
    assert abs(got.sum() - 7.0) <= 1e-6

    # independent dense double-loop evaluation
    want = np.zeros((h, w))
    for px, py in points:
        kernel = np.zeros((h, w))
        for y in range(h):
            for x in range(w):
                kernel[y, x] = math.exp(-((x - px) ** 2 + (y - py) ** 2) / (2 * sigma * sigma))
        want += kernel / kernel.sum()
    assert np.max(np.abs(got - want)) < 1e-9


def test_out_of_bounds_point_names_the_point():
    with pytest.raises(ConfigError, match=r"\(25.0, 3.0\)"):
        DotMap(20, 16, ((25.0, 3.0),))


def test_density_map_rejects_nonpositive_sigma():
    with pytest.raises(ConfigError):
        density_map(DotMap(16, 16, ()), sigma=0.0)


# ---------------------------------------------------------------------------
# synthetic counting


def test_synth_counting_bookkeeping_and_mass():
    ds = synth_counting(seed=1, n_images=50, image_size=16, max_objects=5, sigma=2.0)
    assert len(ds) == 50
    assert all(s.class_tag == UNSTRATIFIED for s in ds.samples)
    for s in ds.samples:
        count = round(float(s.target.sum()))
        assert abs(s.target.sum() - count) <= 1e-6
        assert 0 <= count <= 5


def test_synth_counting_same_seed_identical():
    a = synth_counting(seed=4, n_images=10, image_size=16, max_objects=4, sigma=2.0)
    b = synth_counting(seed=4, n_images=10, image_size=16, max_objects=4, sigma=2.0)
    for sa, sb in zip(a.samples, b.samples):
        assert sa.features.tobytes() == sb.features.tobytes()
        assert sa.target.tobytes() == sb.target.tobytes()


def test_synth_counting_validates_parameters():
    with pytest.raises(ConfigError):
        synth_counting(seed=0, n_images=5, image_size=8, max_objects=3, sigma=2.0)
    with pytest.raises(ConfigError):
        synth_counting(seed=0, n_images=5, image_size=16, max_objects=0, sigma=2.0)


# ---------------------------------------------------------------------------
# dataset invariants, split, cache


def test_dataset_rejects_duplicate_ids_and_mixed_shapes():
    rec = lambda i, dim: SampleRecord(i, np.zeros(dim), 0, 0)  # noqa: E731
    with pytest.raises(ConfigError, match="duplicate"):
        Dataset([rec(1, 3), rec(1, 3)], num_classes=2, split_tag="t")
    with pytest.raises(ShapeError, match="mixed"):
        Dataset([rec(1, 3), rec(2, 4)], num_classes=2, split_tag="t")


def test_train_val_split_is_disjoint_and_seeded():
    ds = synth_classification(seed=2, n_per_class=60, num_classes=3, easy_fraction=0.5)
    train, val = train_val_split(ds, 0.1, seed=7)
    train2, val2 = train_val_split(ds, 0.1, seed=7)
    assert set(train.ids).isdisjoint(val.ids)
    assert set(train.ids) | set(val.ids) == set(ds.ids)
    assert len(val) == round(0.1 * len(ds))
    assert train.ids == train2.ids and val.ids == val2.ids
    assert train_val_split(ds, 0.1, seed=8)[1].ids != val.ids


def test_fingerprint_distinguishes_data_and_is_stable():
    a = synth_classification(seed=2, n_per_class=30, num_classes=2, easy_fraction=0.5)
    b = synth_classification(seed=3, n_per_class=30, num_classes=2, easy_fraction=0.5)
    assert a.fingerprint() == a.fingerprint()
    assert a.fingerprint() != b.fingerprint()


@pytest.mark.parametrize("kind", ["classification", "counting"])
def test_dataset_cache_round_trip(tmp_path, kind):
    if kind == "classification":
        ds = synth_classification(seed=5, n_per_class=20, num_classes=3, easy_fraction=0.4)
    else:
        ds = synth_counting(seed=5, n_images=8, image_size=16, max_objects=3, sigma=2.0)
    path = tmp_path / "cache.bin"
    save_dataset(ds, path)
    loaded = load_dataset(path)
    assert loaded.split_tag == ds.split_tag
    assert loaded.num_classes == ds.num_classes
    assert loaded.meta == ds.meta
    assert loaded.ids == ds.ids
    for sa, sb in zip(ds.samples, loaded.samples):
        assert sa.features.tobytes() == sb.features.tobytes()
        if kind == "counting":
            assert sa.target.tobytes() == sb.target.tobytes()
        else:
            assert sa.target == sb.target


def test_dataset_cache_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"WRONGMAG" + b"\x00" * 16)
    with pytest.raises(CorruptDataError, match="magic"):
        load_dataset(path)
