"""Test the benchmark container and activation export."""
import numpy as np
import pytest

from disco.benchmark import (HEADER, MAGIC, WEIGHT_PREFIX, BenchmarkReader, BenchmarkRecord,
                             client_state_from_record, encode_record, export_run, load_state,
                             read_benchmark, restore_client, save_state, write_benchmark)
from disco.errors import DimensionError, FormatError
from disco.pipeline import PreprocessConfig, SplitPipeline


@pytest.fixture
def records(rng):
    return [
        BenchmarkRecord(0, 'disco', 'synthetic', 1, 0,
                        {'z': rng.standard_normal((4, 2, 2)), 'x': rng.uniform(size=(3, 4, 4))}),
        BenchmarkRecord(1, 'none', 'cifar10', 7, 1, {'z': rng.standard_normal((4, 2, 2))}),
        BenchmarkRecord(5, 'random_prune', 'données', tensors={'scalar': np.array(2.5)}),
    ]


def test_round_trip(tmp_path, records):
    path = str(tmp_path / "bench.dibm")
    size = write_benchmark(records, path)
    assert size == (tmp_path / "bench.dibm").stat().st_size
    assert read_benchmark(path) == records


def test_empty_container_is_header_only(tmp_path):
    path = str(tmp_path / "empty.dibm")
    assert HEADER.size == 18
    assert write_benchmark([], path) == 18
    assert read_benchmark(path) == []


def test_header_holds_the_record_count(tmp_path, records):
    path = tmp_path / "bench.dibm"
    write_benchmark(records, str(path))
    magic, _, flags, count = HEADER.unpack(path.read_bytes()[:HEADER.size])
    assert (magic, flags, count) == (MAGIC, 0, len(records))


def test_random_access(tmp_path, records):
    path = str(tmp_path / "bench.dibm")
    write_benchmark(iter(records), path)
    with BenchmarkReader(path) as reader:
        assert len(reader) == 3
        assert reader[2] == records[2]
        assert reader[-3] == records[0]
        with pytest.raises(IndexError):
            reader[3]


def test_tensors_are_little_endian_float32(records):
    record = BenchmarkRecord(0, 'd', 's', tensors={'t': np.array([1.0, 2.0], dtype=np.float64)})
    assert record.tensors['t'].dtype == np.dtype('<f4')
    assert encode_record(record).endswith(np.array([1.0, 2.0], dtype='<f4').tobytes())


def test_bad_magic(tmp_path, records):
    path = tmp_path / "bench.dibm"
    write_benchmark(records, str(path))
    raw = bytearray(path.read_bytes())
    raw[:4] = b'NOPE'
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError) as excinfo:
        BenchmarkReader(str(path))
    assert excinfo.value.offset == 0
    assert MAGIC == b'DIBM'


def test_truncated_record(tmp_path, records):
    path = tmp_path / "bench.dibm"
    write_benchmark(records, str(path))
    raw = path.read_bytes()
    path.write_bytes(raw[:-3])
    with BenchmarkReader(str(path)) as reader:
        assert reader[0] == records[0]
        with pytest.raises(FormatError) as excinfo:
            reader[2]
    assert excinfo.value.offset is not None


def test_trailing_bytes_after_empty_index(tmp_path):
    path = tmp_path / "empty.dibm"
    write_benchmark([], str(path))
    path.write_bytes(path.read_bytes() + b'\0')
    with pytest.raises(FormatError):
        BenchmarkReader(str(path))


def test_state_checkpoint(tmp_path, tiny_pipeline):
    path = str(tmp_path / "state.dibm")
    state = tiny_pipeline.state_dict()
    save_state(state, path)
    loaded = load_state(path)
    assert list(loaded) == list(state)
    assert all(np.array_equal(loaded[k], state[k]) for k in state)


def test_export_layout(tmp_path, tiny_pipeline, tiny_data):
    _, test = tiny_data
    path = str(tmp_path / "export.dibm")
    export_run(tiny_pipeline, test, 3, path)
    exported = read_benchmark(path)
    assert len(exported) == 3
    assert exported[1].tensors['z'].shape == tiny_pipeline.activation_shape
    assert np.allclose(exported[2].tensors['x'], test.images[2])
    assert exported[0].task_label == test.task_labels[0]
    assert exported[0].defense_id == 'disco'
    assert any(k.startswith(WEIGHT_PREFIX) for k in exported[0].tensors)
    assert not any(k.startswith(WEIGHT_PREFIX) for k in exported[1].tensors)


def test_export_is_deterministic_under_random_defenses(tmp_path, tiny_pipeline, tiny_data):
    _, test = tiny_data
    tiny_pipeline.set_defense('random_prune')
    a, b = str(tmp_path / "a.dibm"), str(tmp_path / "b.dibm")
    export_run(tiny_pipeline, test, 4, a)
    export_run(tiny_pipeline, test, 4, b)
    assert read_benchmark(a) == read_benchmark(b)


def test_export_bounds(tmp_path, tiny_pipeline, tiny_data):
    _, test = tiny_data
    path = str(tmp_path / "none.dibm")
    assert export_run(tiny_pipeline, test, 0, path) == 18
    with pytest.raises(DimensionError):
        export_run(tiny_pipeline, test, len(test) + 1, path)


def test_restore_client_from_export(tmp_path, tiny_pipeline, tiny_data):
    _, test = tiny_data
    path = str(tmp_path / "export.dibm")
    export_run(tiny_pipeline, test, 1, path)
    other = SplitPipeline(preprocess=PreprocessConfig(d=2, filters=4, input_size=16),
                          split_index=3, task_classes=2, seed=99)
    assert other.client_checksum() != tiny_pipeline.client_checksum()
    restore_client(other, read_benchmark(path)[0])
    assert other.client_checksum() == tiny_pipeline.client_checksum()
    with pytest.raises(FormatError):
        client_state_from_record(BenchmarkRecord(0, 'd', 's'))
