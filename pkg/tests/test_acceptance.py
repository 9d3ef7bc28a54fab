"""End-to-end properties of the defense.

The quick checks run with the rest of the suite. The desk-scale runs train
full pipelines on thousands of images; they are marked slow and only run
with PYDISCO_SLOW=1.
"""
import csv

import numpy as np
import pytest

from disco.benchmark import BenchmarkRecord, read_benchmark, write_benchmark
from disco.config import ExperimentConfig
from disco.main import main
from disco.pipeline import active_channel_count
from disco.tensor import Tensor, no_grad
from disco.training import (correlation_study, defense_comparison, noise_sweep, sweep_pruning_ratio,
                            train_pipeline)

SEEDS = [0, 1, 2]


def read_rows(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def as_number(text):
    try:
        return float(text)
    except ValueError:
        return text


@pytest.mark.parametrize("ratio", [round(0.1 * i, 1) for i in range(11)])
def test_hard_masks_keep_exactly_the_rounded_count(tiny_pipeline, tiny_data, ratio):
    train, _ = tiny_data
    tiny_pipeline.set_pruning_ratio(ratio)
    with tiny_pipeline.evaluating(), no_grad():
        out = tiny_pipeline.obfuscate(tiny_pipeline.client_activations(Tensor(train.images[:6])), hard=True)
    expected = active_channel_count(ratio, 16)
    assert out.mask.active_channels().tolist() == [expected] * 6
    pruned = out.mask.values.data == 0
    assert not out.z.data[pruned].any()


def test_rewriting_a_container_is_byte_identical(tmp_path, rng):
    records = [BenchmarkRecord(i, 'disco', 'synthetic', i % 2, 1 - i % 2,
                               {'z': rng.standard_normal((4, 2, 2)), 'x': rng.uniform(size=(3, 4, 4))})
               for i in range(5)]
    first, second = tmp_path / "first.dibm", tmp_path / "second.dibm"
    write_benchmark(records, str(first))
    write_benchmark(read_benchmark(str(first)), str(second))
    assert first.read_bytes() == second.read_bytes()


def test_reruns_reproduce_every_table(tmp_path):
    config = tmp_path / "sweep.cfg"
    config.write_text("\n".join([
        "dataset = synthetic", "n_train = 8", "n_test = 4", "image_size = 16", "task_classes = 2",
        "d = 2", "filters = 4", "batch_size = 4", "phase1_epochs = 1", "phase2_epochs = 1",
        "r_grid = 0.0, 0.5, 1.0", "attack_mode = SA", "attack_budget = 2", "attack_targets = 2",
        "attack_epochs = 1", "seed = 5", "",
    ]))
    for name in ("a", "b"):
        assert main(['sweep', '-c', str(config), '-o', str(tmp_path / name), '-v', '0']) == 0
    tables = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert 'sweep.csv' in tables
    for table in tables:
        first, second = read_rows(tmp_path / "a" / table), read_rows(tmp_path / "b" / table)
        assert len(first) == len(second)
        for row_a, row_b in zip(first, second):
            assert row_a.keys() == row_b.keys()
            for key in row_a:
                a, b = as_number(row_a[key]), as_number(row_b[key])
                if isinstance(a, float):
                    assert b == pytest.approx(a, rel=1e-6, abs=1e-12, nan_ok=True)
                else:
                    assert a == b


# ----------------------------------------------------------------------
# Desk-scale runs


@pytest.fixture(scope='module')
def desk():
    """5,000 synthetic training images with a shape task and a colour attribute."""
    config = ExperimentConfig(dataset='synthetic', n_train=5000, n_test=500, image_size=32, task_classes=4,
                              sensitive_classes=2, correlation=0.0, overlap=0.1, phase1_epochs=4,
                              phase2_epochs=4, attack_budget=400, attack_targets=16, attack_epochs=10,
                              attack_iterations=300, server_epochs=2)
    config.validate()
    train, test = config.load_data()
    return config, train, test


def column_mean(rows, defense, column):
    return float(np.mean([row[column] for row in rows if row['defense'] == defense]))


@pytest.mark.slow
def test_disco_lowers_leakage_and_reconstruction_quality(desk):
    config, train, test = desk
    leakage = config.attack_config('decoder', 'SA')
    inversion = config.attack_config('likelihood_max', 'SI')
    rows = defense_comparison(train, test, ['none', 'disco'], SEEDS, config.build_pipeline,
                              config.train_config(), [leakage, inversion])
    leak = 'attack0_decoder_SA_accuracy_mean'
    ssim = 'attack1_likelihood_max_SI_ssim_mean'
    assert column_mean(rows, 'disco', leak) <= column_mean(rows, 'none', leak) - 0.15
    assert column_mean(rows, 'disco', 'utility_acc') >= column_mean(rows, 'none', 'utility_acc') - 0.05
    assert column_mean(rows, 'disco', ssim) <= 0.6 * column_mean(rows, 'none', ssim)


@pytest.mark.slow
def test_reconstruction_quality_falls_as_more_channels_are_pruned(desk):
    config, train, test = desk
    attack = config.attack_config('decoder', 'SI')
    grid = [0.0, 0.3, 0.6, 0.9, 1.0]
    per_seed = []
    for seed in SEEDS:
        pipeline = config.build_pipeline('disco', seed)
        train_pipeline(pipeline, train, config.train_config().replace(seed=seed))
        per_seed.append(sweep_pruning_ratio(pipeline, train, test, grid, retrain_server=True,
                                            cfg=config.train_config().replace(seed=seed), attack_configs=[attack]))
    ssim = [np.mean([rows[i]['attack0_decoder_SI_ssim_mean'] for rows in per_seed]) for i in range(len(grid) - 1)]
    assert all(b <= a + 0.03 for a, b in zip(ssim, ssim[1:]))
    fully_pruned = np.mean([rows[-1]['utility_acc'] for rows in per_seed])
    assert abs(fully_pruned - 1.0 / config.task_classes) <= 0.05


@pytest.mark.slow
def test_noise_matching_disco_privacy_destroys_utility(desk):
    config, train, test = desk
    attack = config.attack_config('decoder', 'SI')
    chance = 1.0 / config.task_classes
    disco = config.build_pipeline('disco')
    train_pipeline(disco, train, config.train_config())
    disco_row = sweep_pruning_ratio(disco, train, test, [config.pruning_ratio], cfg=config.train_config(),
                                    attack_configs=[attack])[0]
    assert disco_row['utility_acc'] >= chance + 0.25

    baseline = config.build_pipeline('none')
    train_pipeline(baseline, train, config.train_config())
    result = noise_sweep(baseline, train, test, [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0], config.train_config(),
                         attack, target_ssim=disco_row['attack0_decoder_SI_ssim_mean'])
    assert result.matched_sigma is not None
    assert result.rows[-1]['utility_acc'] <= chance + 0.10


@pytest.mark.slow
def test_overlapping_attributes_leak_more(desk):
    config, _, _ = desk
    leakage = config.attack_config('decoder', 'SA')
    result = correlation_study(config.synth_config(), [0.9, 0.1], SEEDS, config.n_train, config.n_test,
                               config.build_pipeline, config.train_config(), leakage)
    summary = result.summary()
    high, low = summary['0.9'], summary['0.1']
    assert high['leakage_mean'] > low['leakage_mean']
    assert high['utility_mean'] <= low['utility_mean'] + 0.05
