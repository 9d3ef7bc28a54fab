"""Test the decoder, leakage and likelihood-maximisation attacks."""
import numpy as np
import pytest

from disco.attacks import (AttackConfig, AttackReport, evaluate_attack_suite,
                           likelihood_maximization_attack, read_pnm, read_reports, run_attack_on_arrays,
                           run_attack_on_records, save_reconstructions, split_indices,
                           train_supervised_decoder, write_pnm, write_reports)
from disco.benchmark import export_run, read_benchmark
from disco.errors import ConfigError, DimensionError, FormatError
from disco.tensor import Module, ops


class Passthrough(Module):
    """A client that transmits its input unchanged."""

    def forward(self, x):
        return x


class Exploding(Module):
    def forward(self, x):
        return ops.scale(x, float('inf'))


@pytest.fixture
def separable(rng):
    """Activations whose every entry carries the sign of the label."""
    labels = np.tile([0, 1], 12)
    z = (2.0 * labels - 1.0)[:, None, None, None] * np.ones((24, 2, 2, 2))
    z = z + rng.normal(0, 0.1, size=z.shape)
    return z.astype(np.float32), labels


def test_config_validation():
    with pytest.raises(ConfigError) as excinfo:
        AttackConfig(kind='likelihood_max', mode='SA').validate()
    assert excinfo.value.key == 'mode'
    with pytest.raises(ConfigError):
        AttackConfig(budget=0).validate()
    with pytest.raises(ConfigError):
        AttackConfig(parametrization='wavelet').validate()
    AttackConfig(kind='likelihood_max', budget=0, iterations=0).validate()


def test_split_indices():
    train, targets = split_indices(10, AttackConfig(budget=4, targets=3))
    assert train.tolist() == [0, 1, 2, 3]
    assert targets.tolist() == [7, 8, 9]
    train, _ = split_indices(10, AttackConfig(kind='likelihood_max', targets=3))
    assert len(train) == 0
    with pytest.raises(ConfigError):
        split_indices(2, AttackConfig(targets=3))
    with pytest.raises(ConfigError) as excinfo:
        split_indices(10, AttackConfig(budget=8, targets=3))
    assert excinfo.value.key == 'budget'


def test_leakage_classifier_separates_toy_activations(separable):
    z, labels = separable
    cfg = AttackConfig(mode='SA', budget=16, targets=8, epochs=50, lr=0.05, batch_size=32)
    report = run_attack_on_arrays(z, None, labels, cfg)
    assert report.ok
    assert report.accuracy == 1.0
    assert report.summary()['accuracy_mean'] == 1.0
    assert len(report.loss_history) == 50


def test_decoder_learns_a_passthrough(rng, tiny_data):
    """When z is the image itself the decoder's l1 drops well below its starting value."""
    train, _ = tiny_data
    x = train.images[:4]
    cfg = AttackConfig(budget=4, epochs=60, lr=0.05, batch_size=4)
    fit = train_supervised_decoder(x, x, cfg)
    assert fit.losses[-1] < 0.8 * fit.losses[0]
    assert not fit.model.training


def test_decoder_needs_pairs():
    with pytest.raises(ConfigError):
        train_supervised_decoder(np.zeros((0, 2, 4, 4)), np.zeros((0, 3, 8, 8)), AttackConfig())
    with pytest.raises(DimensionError):
        train_supervised_decoder(np.zeros((2, 2, 4, 4)), np.zeros((3, 3, 8, 8)), AttackConfig())


def test_input_attack_needs_true_inputs(separable):
    z, labels = separable
    with pytest.raises(DimensionError):
        run_attack_on_arrays(z, None, labels, AttackConfig(mode='SI', budget=4, targets=4))


def test_likelihood_inverts_a_passthrough_client(tiny_data):
    train, _ = tiny_data
    x = train.images[0]
    cfg = AttackConfig(kind='likelihood_max', parametrization='pixel', iterations=60, lr=0.1, momentum=0.0)
    x_hat, report = likelihood_maximization_attack(x, Passthrough(), cfg, x_true=x, image_size=16)
    assert report.ok
    assert report.ssim[0] > 0.95
    assert x_hat.shape == x.shape
    assert len(report.loss_history) == 61
    assert all(b <= a for a, b in zip(report.loss_history, report.loss_history[1:]))


def test_likelihood_stops_without_improvement(tiny_data):
    train, _ = tiny_data
    x = train.images[0]
    cfg = AttackConfig(kind='likelihood_max', parametrization='pixel', iterations=50, lr=0.0,
                       stop_patience=3)
    _, report = likelihood_maximization_attack(x, Passthrough(), cfg, image_size=16)
    assert len(report.loss_history) == 4
    assert report.ssim == []


def test_likelihood_zero_iterations_scores_the_initial_image(tiny_data):
    train, _ = tiny_data
    cfg = AttackConfig(kind='likelihood_max', iterations=0)
    _, report = likelihood_maximization_attack(train.images[0], Passthrough(), cfg, image_size=16)
    assert len(report.loss_history) == 1
    assert report.final_loss == report.loss_history[0]


def test_likelihood_reports_non_finite_losses(tiny_data):
    train, _ = tiny_data
    cfg = AttackConfig(kind='likelihood_max', iterations=5)
    x_hat, report = likelihood_maximization_attack(train.images[0], Exploding(), cfg, image_size=16)
    assert x_hat is None
    assert report.status == 'failed'
    assert 'non-finite' in report.message


def test_likelihood_against_a_fully_pruned_client(tiny_pipeline, tiny_data):
    """With R = 1 the target is all zeros; the attack runs but has nothing to recover."""
    _, test = tiny_data
    tiny_pipeline.set_pruning_ratio(1.0)
    cfg = AttackConfig(kind='likelihood_max', iterations=3, targets=2)
    reports = evaluate_attack_suite(tiny_pipeline, test, [cfg])
    assert len(reports) == 1
    report = reports[0]
    assert report.ok
    assert len(report.ssim) == 2
    assert report.reconstructions.shape == (2, 3, 16, 16)


def test_likelihood_needs_client_weights(separable):
    z, _ = separable
    cfg = AttackConfig(kind='likelihood_max', targets=2)
    with pytest.raises(ConfigError):
        run_attack_on_arrays(z, np.zeros((24, 3, 4, 4)), None, cfg)


def test_empty_suite(tiny_pipeline, tiny_data):
    _, test = tiny_data
    assert evaluate_attack_suite(tiny_pipeline, test, []) == []


def test_suite_is_seed_deterministic(tiny_pipeline, tiny_data):
    _, test = tiny_data
    tiny_pipeline.set_defense('gaussian_noise')
    cfg = AttackConfig(mode='SA', budget=4, targets=4, epochs=2, batch_size=4)
    first = evaluate_attack_suite(tiny_pipeline, test, [cfg])[0]
    second = evaluate_attack_suite(tiny_pipeline, test, [cfg])[0]
    assert first.to_dict() == second.to_dict()


def test_exported_records_reproduce_in_process_attacks(tmp_path, tiny_pipeline, tiny_data):
    _, test = tiny_data
    cfg = AttackConfig(mode='SI', budget=4, targets=4, epochs=2, batch_size=4)
    in_process = evaluate_attack_suite(tiny_pipeline, test, [cfg])[0]
    path = str(tmp_path / "export.dibm")
    export_run(tiny_pipeline, test, len(test), path)
    offline = run_attack_on_records(read_benchmark(path), cfg)
    assert offline.defense == in_process.defense == 'disco'
    for key, value in in_process.summary().items():
        assert offline.summary()[key] == pytest.approx(value, abs=1e-6)
    with pytest.raises(ConfigError):
        run_attack_on_records([], cfg)


def test_report_serialisation(tmp_path):
    cfg = AttackConfig(mode='SA')
    report = AttackReport(kind='decoder', mode='SA', defense='none', correct=[1, 0, 1, 1],
                          final_loss=0.3, config=cfg.to_dict())
    assert report.accuracy == 0.75
    failed = AttackReport.failed(cfg, 'boom', defense='disco')
    assert not failed.ok
    assert failed.summary() == {}
    path = str(tmp_path / "attacks.jsonl")
    write_reports([report, failed], path)
    rows = read_reports(path)
    assert [row['status'] for row in rows] == ['ok', 'failed']
    assert rows[0]['summary']['accuracy_mean'] == 0.75


def test_pnm_round_trip(tmp_path, rng):
    image = rng.uniform(size=(3, 5, 4))
    path = write_pnm(str(tmp_path / "x.ppm"), image)
    back = read_pnm(path)
    assert back.shape == (3, 5, 4)
    assert np.abs(back - image).max() <= 0.5 / 255 + 1e-6
    gray = read_pnm(write_pnm(str(tmp_path / "g.pgm"), image[:1]))
    assert gray.shape == (1, 5, 4)
    (tmp_path / "bad.ppm").write_bytes(b'P6\n4 4\n255\n\x00')
    with pytest.raises(FormatError):
        read_pnm(str(tmp_path / "bad.ppm"))


def test_save_reconstructions(tmp_path, rng):
    recon = rng.uniform(size=(2, 3, 4, 4))
    paths = save_reconstructions(str(tmp_path / "images"), recon, originals=recon, prefix='attack0')
    assert len(paths) == 4
    assert paths[1].endswith('attack0_000_true.ppm')
