"""Test the synthetic generator, the CIFAR-10 reader and dataset helpers."""
import numpy as np
import pytest

from disco.data import (CIFAR_CLASSES, Dataset, SynthConfig, generate_synthetic, living_nonliving,
                        load_cifar_binary, parse_cifar_bytes, shape_mask)
from disco.errors import ConfigError, DimensionError, FormatError, ParameterError
from disco.info import conditional_entropy, mutual_information


def label_joint(a, b, ka, kb):
    table = np.zeros((ka, kb))
    np.add.at(table, (a, b), 1.0)
    return table / table.sum()


def cifar_record(label, pixels):
    return bytes([label]) + pixels.astype(np.uint8).tobytes()


def test_generator_is_deterministic(synth_cfg):
    a = generate_synthetic(synth_cfg, 12)
    b = generate_synthetic(synth_cfg, 12)
    assert np.array_equal(a.images, b.images)
    assert np.array_equal(a.task_labels, b.task_labels)
    c = generate_synthetic(synth_cfg.replace(seed=4), 12)
    assert not np.array_equal(a.images, c.images)


def test_generator_shapes_and_range(synth_cfg):
    data = generate_synthetic(synth_cfg, 10)
    assert data.images.shape == (10, 3, 16, 16)
    assert data.images.dtype == np.float32
    assert data.images.min() >= 0.0 and data.images.max() <= 1.0
    assert sorted(np.bincount(data.task_labels)) == [5, 5]


def test_full_correlation_ties_sensitive_to_task(synth_cfg):
    cfg = synth_cfg.replace(task_classes=4, correlation=1.0)
    data = generate_synthetic(cfg, 200)
    joint = label_joint(data.sensitive_labels, data.task_labels, 2, 4)
    assert conditional_entropy(joint) == pytest.approx(0.0, abs=1e-12)


def test_zero_correlation_leaves_labels_nearly_independent(synth_cfg):
    data = generate_synthetic(synth_cfg.replace(task_classes=4), 4000)
    joint = label_joint(data.task_labels, data.sensitive_labels, 4, 2)
    assert mutual_information(joint) < 0.01


def test_empty_dataset(synth_cfg):
    data = generate_synthetic(synth_cfg, 0)
    assert len(data) == 0
    assert data.images.shape == (0, 3, 16, 16)


def test_overlap_moves_the_tint_onto_the_shape(synth_cfg):
    """With no overlap the tint sits in the right half; full overlap leaves it untouched."""
    clean = synth_cfg.replace(noise=0.0)
    apart = generate_synthetic(clean, 8).images
    together = generate_synthetic(clean.replace(overlap=1.0), 8).images
    right = slice(12, 16)
    assert not np.allclose(apart[:, :, 4:12, right], 0.4)
    assert np.allclose(together[:, :, :, right], 0.4)


def test_synth_config_validation(synth_cfg):
    with pytest.raises(ConfigError):
        synth_cfg.replace(overlap=1.5).validate()
    with pytest.raises(ConfigError):
        synth_cfg.replace(image_size=10).validate()
    with pytest.raises(ConfigError):
        synth_cfg.replace(task_classes=9).validate()


def test_shape_masks_are_distinct():
    masks = [shape_mask(k, 8) for k in range(8)]
    assert all(m.any() for m in masks)
    assert len({m.tobytes() for m in masks}) == 8


def test_dataset_split_subset_and_batches(tiny_data, rng):
    train, test = tiny_data
    assert (len(train), len(test)) == (16, 8)
    assert train.image_size == 16
    seen = []
    for images, y, y_hat in train.batches(5, rng=rng):
        assert len(images) == len(y) == len(y_hat) <= 5
        seen.extend(y.tolist())
    assert sorted(seen) == sorted(train.task_labels.tolist())
    sub = train.subset([2, 0])
    assert np.array_equal(sub.images[1], train.images[0])
    assert train.labels('sensitive') is train.sensitive_labels
    with pytest.raises(DimensionError):
        train.split(17)
    with pytest.raises(ParameterError):
        train.labels('age')


def test_dataset_rejects_bad_labels():
    with pytest.raises(ParameterError):
        Dataset(np.zeros((1, 3, 4, 4)), [2], [0], task_classes=2, sensitive_classes=2)
    with pytest.raises(DimensionError):
        Dataset(np.zeros((2, 3, 4, 4)), [0], [0], task_classes=2, sensitive_classes=2)


def test_cifar_single_record(tmp_path):
    pixels = np.arange(3 * 32 * 32) % 256
    path = tmp_path / "one.bin"
    path.write_bytes(cifar_record(3, pixels))
    data = load_cifar_binary(str(path))
    assert len(data) == 1
    assert data.task_labels[0] == 3
    assert data.sensitive_labels[0] == 1
    assert data.images[0, 0, 0, 1] == pytest.approx(1 / 255)
    assert data.images[0, 2, 31, 31] == pytest.approx(((3 * 1024 - 1) % 256) / 255)
    assert data.task_classes == len(CIFAR_CLASSES)


def test_cifar_records_keep_file_order(tmp_path):
    zeros = np.zeros(3 * 32 * 32)
    path = tmp_path / "two.bin"
    path.write_bytes(cifar_record(0, zeros) + cifar_record(9, zeros + 255))
    data = load_cifar_binary([str(path)])
    assert data.task_labels.tolist() == [0, 9]
    assert data.sensitive_labels.tolist() == [0, 0]
    assert data.images[1].min() == 1.0
    assert len(load_cifar_binary(str(path), limit=1)) == 1


def test_cifar_truncated_file(tmp_path):
    path = tmp_path / "short.bin"
    path.write_bytes(cifar_record(1, np.zeros(3 * 32 * 32))[:-10])
    with pytest.raises(FormatError):
        load_cifar_binary(str(path))
    with pytest.raises(FormatError):
        parse_cifar_bytes(bytes([12]) + bytes(3 * 32 * 32))


def test_living_assignment():
    assert [living_nonliving(k) for k in range(10)] == [0, 0, 1, 1, 1, 1, 1, 1, 0, 0]
    assert living_nonliving('horse') == 1
    with pytest.raises(ParameterError):
        living_nonliving('whale')
