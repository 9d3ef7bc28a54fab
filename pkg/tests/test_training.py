"""Test the two-phase training protocol, the sweeps and the studies."""
import copy
import json
import math

import numpy as np
import pytest

from disco.attacks import AttackConfig
from disco.data import Dataset
from disco.errors import ConfigError, DimensionError, TrainingError
from disco.metrics import top1_accuracy
from disco.pipeline import PreprocessConfig, SplitPipeline
from disco.tasks import TaskManager
from disco.tensor import SGD, Tensor, no_grad, ops
from disco.training import (GapReport, LossRecord, TrainConfig, Trainer, adversary_loss,
                            correlation_study, defense_comparison, evaluate_utility, finetune_server,
                            joint_objective, make_adversary, measure_generalization_gap, noise_sweep,
                            phase1_train_utility, phase2_train_filter, read_loss_csv, sweep_pruning_ratio,
                            train_pipeline, write_loss_csv)


def parameter_values(params):
    return [p.data.copy() for p in params]


def unchanged(before, params):
    return all(np.array_equal(b, p.data) for b, p in zip(before, params))


@pytest.fixture
def quick_attack():
    return AttackConfig(mode='SA', kind='decoder', budget=4, targets=4, epochs=1, batch_size=4)


def build_tiny(defense, seed):
    return SplitPipeline(preprocess=PreprocessConfig(d=2, filters=4, input_size=16), split_index=3,
                         task_classes=2, defense_mode=defense, seed=seed)


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0).validate()
    with pytest.raises(ConfigError):
        TrainConfig(privacy_mode='XX').validate()
    assert TrainConfig().replace(rho=2.0).rho == 2.0


def test_initial_loss_is_near_chance(tiny_pipeline, tiny_data, tiny_train_cfg):
    """With lr 0 nothing moves and the first loss sits at ln K."""
    train, _ = tiny_data
    params = tiny_pipeline.parameters()
    before = parameter_values(params)
    records = phase1_train_utility(tiny_pipeline, train, tiny_train_cfg.replace(lr=0.0))
    assert len(records) == 1
    assert records[0].l_util == pytest.approx(math.log(2), abs=0.15)
    assert unchanged(before, params)


def test_phase1_lowers_the_utility_loss(tiny_pipeline, tiny_data, tiny_train_cfg):
    train, _ = tiny_data
    memorise = train.subset(range(8))
    cfg = tiny_train_cfg.replace(phase1_epochs=12, batch_size=8, lr=0.02)
    records = phase1_train_utility(tiny_pipeline, memorise, cfg)
    assert [r.epoch for r in records] == list(range(12))
    assert records[-1].l_util < records[0].l_util
    assert all(r.phase == 1 and r.is_finite() for r in records)


def test_phase2_leaves_a_frozen_client_untouched(tiny_pipeline, tiny_data, tiny_train_cfg):
    train, _ = tiny_data
    client = tiny_pipeline.client_parameters()
    filters = tiny_pipeline.filter_parameters()
    client_before, filter_before = parameter_values(client), parameter_values(filters)
    result = phase2_train_filter(tiny_pipeline, train, tiny_train_cfg.replace(temperature=1.0))
    assert unchanged(client_before, client)
    assert not unchanged(filter_before, filters)
    assert all(p.requires_grad for p in client)
    assert result.adversary is not None
    assert [r.phase for r in result.history] == [2]


def test_phase2_unfrozen_client_moves(tiny_pipeline, tiny_data, tiny_train_cfg):
    train, _ = tiny_data
    client = tiny_pipeline.client_parameters()
    before = parameter_values(client)
    phase2_train_filter(tiny_pipeline, train, tiny_train_cfg.replace(freeze_client=False))
    assert not unchanged(before, client)


def test_adversary_step_lowers_its_own_loss(tiny_pipeline, tiny_data):
    """Holding the filter generator, one adversary step moves L_priv in the adversary's favour."""
    train, _ = tiny_data
    images, sensitive = train.images[:8], train.sensitive_labels[:8]
    adversary = make_adversary(tiny_pipeline, 'SA', 2, seed=0)
    with no_grad():
        z = tiny_pipeline.activations(Tensor(images), hard=False).detach()
    before, _ = adversary_loss(adversary, z, images, sensitive, 'SA')
    before.backward()
    SGD(adversary.parameters(), lr=0.05, momentum=0.0).step()
    with no_grad():
        after, _ = adversary_loss(adversary, z, images, sensitive, 'SA')
    assert after.item() < before.item()


def test_filter_step_raises_the_privacy_loss(tiny_pipeline, tiny_data):
    """Holding the adversary, one filter step on L_J with rho = 0 increases L_priv."""
    train, _ = tiny_data
    images, y, sensitive = train.images[:8], train.task_labels[:8], train.sensitive_labels[:8]
    tiny_pipeline.set_temperature(1.0)
    adversary = make_adversary(tiny_pipeline, 'SA', 2, seed=0)
    x = Tensor(images)
    joint = joint_objective(tiny_pipeline, adversary, x, images, y, sensitive, 0.0, 'SA')
    joint.backward()
    SGD(tiny_pipeline.filter_parameters(), lr=0.1, momentum=0.0).step()
    with no_grad():
        after = joint_objective(tiny_pipeline, adversary, x, images, y, sensitive, 0.0, 'SA')
    assert after.item() < joint.item()


def test_input_mode_adversary_is_a_decoder(tiny_pipeline, tiny_data):
    train, _ = tiny_data
    adversary = make_adversary(tiny_pipeline, 'SI', seed=1)
    with no_grad():
        z = tiny_pipeline.activations(Tensor(train.images[:2]), hard=False)
        loss, metric = adversary_loss(adversary, z, train.images[:2], train.sensitive_labels[:2], 'SI')
    assert loss.item() == pytest.approx(metric)
    with pytest.raises(DimensionError):
        make_adversary(tiny_pipeline, 'XX')


def test_train_pipeline_schedule(tiny_pipeline, tiny_data, tiny_train_cfg):
    train, test = tiny_data
    result = train_pipeline(tiny_pipeline, train, tiny_train_cfg)
    assert [r.phase for r in result.history] == [1, 2, 3]
    assert result.adversary is not None
    assert not tiny_pipeline.training
    assert 0.0 <= evaluate_utility(tiny_pipeline, test) <= 1.0


def test_baseline_schedules_skip_filter_training(tiny_data, tiny_train_cfg):
    train, _ = tiny_data
    result = train_pipeline(build_tiny('none', 0), train, tiny_train_cfg)
    assert [r.phase for r in result.history] == [1]
    assert result.adversary is None
    result = train_pipeline(build_tiny('random_prune', 0), train, tiny_train_cfg)
    assert [r.phase for r in result.history] == [1, 3]


def test_finetune_server_only_moves_the_task_network(tiny_pipeline, tiny_data, tiny_train_cfg):
    train, _ = tiny_data
    others = tiny_pipeline.client_parameters() + tiny_pipeline.filter_parameters()
    task = tiny_pipeline.task_parameters()
    others_before, task_before = parameter_values(others), parameter_values(task)
    records = finetune_server(tiny_pipeline, train, tiny_train_cfg, epochs=2)
    assert [r.phase for r in records] == [3, 3]
    assert unchanged(others_before, others)
    assert not unchanged(task_before, task)


def test_divergence_writes_diagnostics(tmp_path, tiny_pipeline, tiny_data, tiny_train_cfg):
    train, _ = tiny_data
    tiny_pipeline.client.blocks[0].conv.weight.data[...] = np.nan
    trainer = Trainer(tiny_pipeline, tiny_train_cfg, out_dir=str(tmp_path))
    with pytest.raises(TrainingError) as excinfo:
        trainer.phase1(train)
    assert excinfo.value.step == 1
    diagnostics = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diagnostics['phase'] == 1
    assert 'parameter_norms' in diagnostics


def test_loss_csv_round_trip(tmp_path):
    records = [LossRecord(1, 1, 0, 0.69, 0.0, 0.69, 0.5, 0.0),
               LossRecord(2, 2, 0, 0.6, 0.7, -0.1, 0.75, 0.5)]
    path = str(tmp_path / "losses.csv")
    write_loss_csv(records, path)
    assert read_loss_csv(path) == records


def test_generalization_gap(tiny_pipeline, tiny_data, tiny_train_cfg):
    train, test = tiny_data
    adversary = make_adversary(tiny_pipeline, 'SA', 2)
    same = measure_generalization_gap(tiny_pipeline, adversary, train, train)
    assert same.gap == 0.0
    report = measure_generalization_gap(tiny_pipeline, adversary, train, test)
    assert report.gap == abs(report.signed_gap)
    assert GapReport(1.0, 0.5).to_dict()['signed_gap'] == -0.5


def test_sweep_rows_follow_the_grid(tiny_pipeline, tiny_data, tiny_train_cfg, quick_attack):
    train, test = tiny_data
    tiny_pipeline.eval()
    rows = sweep_pruning_ratio(tiny_pipeline, train, test, [0.0, 0.5, 1.0], cfg=tiny_train_cfg,
                               attack_configs=[quick_attack])
    assert [row['R'] for row in rows] == [0.0, 0.5, 1.0]
    assert [row['active_channels'] for row in rows] == [16, 8, 0]
    assert rows[0]['attack0_decoder_SA_status'] == 'ok'
    assert 0.0 <= rows[0]['attack0_decoder_SA_accuracy_mean'] <= 1.0
    assert tiny_pipeline.pruning_ratio == 0.6
    with pytest.raises(ConfigError):
        sweep_pruning_ratio(tiny_pipeline, train, test, [])


def test_sweep_on_a_thread_pool_matches_sequential(tiny_pipeline, tiny_data, tiny_train_cfg):
    train, test = tiny_data
    tiny_pipeline.eval()
    grid = [0.2, 0.6]
    sequential = sweep_pruning_ratio(tiny_pipeline, train, test, grid, retrain_server=True, cfg=tiny_train_cfg)
    manager = TaskManager(workers=2)
    pooled = sweep_pruning_ratio(tiny_pipeline, train, test, grid, retrain_server=True, cfg=tiny_train_cfg,
                                 manager=manager)
    assert pooled == sequential
    assert manager.kind_stats['sweep_point'].successes == 2


def test_defense_comparison_rows(tiny_data, tiny_train_cfg, quick_attack):
    train, test = tiny_data
    rows = defense_comparison(train, test, ['none', 'disco'], [0, 1], build_tiny, tiny_train_cfg,
                              [quick_attack])
    assert [(row['defense'], row['seed']) for row in rows] == [('none', 0), ('none', 1),
                                                              ('disco', 0), ('disco', 1)]
    assert all('attack0_decoder_SA_accuracy_mean' in row for row in rows)


def test_noise_sweep_needs_input_reconstruction(tiny_pipeline, tiny_data, tiny_train_cfg, quick_attack):
    train, test = tiny_data
    with pytest.raises(ConfigError):
        noise_sweep(tiny_pipeline, train, test, [1.0], tiny_train_cfg, quick_attack)


def test_noise_sweep_stops_at_the_target(tiny_pipeline, tiny_data, tiny_train_cfg):
    train, test = tiny_data
    attack = AttackConfig(mode='SI', kind='decoder', budget=4, targets=4, epochs=1, batch_size=4)
    result = noise_sweep(tiny_pipeline, train, test, [0.5, 1.0, 2.0], tiny_train_cfg, attack, target_ssim=1.0)
    assert result.matched_sigma == 0.5
    assert len(result.rows) == 1
    assert result.rows[0]['chance'] == 0.5
    assert tiny_pipeline.defense_mode == 'disco'


def test_correlation_study_summary(synth_cfg, tiny_train_cfg, quick_attack):
    result = correlation_study(synth_cfg, [0.0, 1.0], [0], 12, 8, build_tiny, tiny_train_cfg, quick_attack)
    assert [row['overlap'] for row in result.rows] == [0.0, 1.0]
    summary = result.summary()
    assert set(summary) == {'0', '1'}
    assert 0.0 <= summary['1']['leakage_mean'] <= 1.0


def memorise(pipeline, data, cfg):
    """Phase 1 on one full batch until the task network fits it."""
    return phase1_train_utility(pipeline, data, cfg.replace(phase1_epochs=80, batch_size=len(data), lr=0.02))


def test_task_network_overfits_a_tiny_batch(tiny_data, tiny_train_cfg):
    train, _ = tiny_data
    records = memorise(build_tiny('none', 0), train.subset(range(8)), tiny_train_cfg)
    assert records[-1].util_acc == 1.0
    assert records[-1].l_util < records[0].l_util


def test_memorised_labels_open_a_generalization_gap(tiny_data, tiny_train_cfg):
    """Against a holdout whose every task label is wrong, L_J grows by far more than a fluctuation."""
    train, _ = tiny_data
    seen = train.subset(range(8))
    relabelled = Dataset(seen.images, 1 - seen.task_labels, seen.sensitive_labels,
                         seen.task_classes, seen.sensitive_classes)
    pipeline = build_tiny('none', 0)
    memorise(pipeline, seen, tiny_train_cfg)
    adversary = make_adversary(pipeline, 'SA', 2, seed=0)
    report = measure_generalization_gap(pipeline, adversary, seen, relabelled)
    assert report.signed_gap > 0.5
    assert measure_generalization_gap(pipeline, adversary, seen, seen).gap == 0.0


def test_joint_objective_falls_as_the_privacy_loss_rises(tiny_pipeline, tiny_data):
    """Central differences along the ascent direction of L_priv over the filter generator."""
    train, _ = tiny_data
    images, y, sensitive = train.images[:8], train.task_labels[:8], train.sensitive_labels[:8]
    tiny_pipeline.set_temperature(1.0)
    tiny_pipeline.eval()
    adversary = make_adversary(tiny_pipeline, 'SA', 2, seed=0)
    adversary.eval()
    x = Tensor(images)
    params = tiny_pipeline.filter_parameters()

    l_priv, _ = adversary_loss(adversary, tiny_pipeline.activations(x, hard=False), images, sensitive, 'SA')
    l_priv.backward()
    ascent = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    norm = math.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in ascent))
    assert norm > 0.0

    def losses_at(step):
        saved = parameter_values(params)
        for p, g in zip(params, ascent):
            p.data += (step / norm) * g
        with no_grad():
            z = tiny_pipeline.activations(x, hard=False)
            priv = adversary_loss(adversary, z, images, sensitive, 'SA')[0].item()
            joint = {rho: joint_objective(tiny_pipeline, adversary, x, images, y, sensitive, rho, 'SA').item()
                     for rho in (0.0, 1.0)}
            util = ops.softmax_cross_entropy(tiny_pipeline.task(z), y).item()
        for p, value in zip(params, saved):
            p.data[...] = value
        return priv, joint, util

    eps = 1e-2
    priv_up, joint_up, util_up = losses_at(eps)
    priv_down, joint_down, util_down = losses_at(-eps)
    priv_rate = (priv_up - priv_down) / (2 * eps)
    joint_rate = (joint_up[0.0] - joint_down[0.0]) / (2 * eps)
    assert priv_rate > 0.0
    assert joint_rate < 0.0
    assert joint_rate == pytest.approx(-priv_rate, rel=1e-3)
    util_rate = (util_up - util_down) / (2 * eps)
    full_rate = (joint_up[1.0] - joint_down[1.0]) / (2 * eps)
    assert full_rate == pytest.approx(util_rate - priv_rate, rel=1e-2, abs=1e-3)


def test_sweep_endpoints(tiny_data, tiny_train_cfg):
    """R = 0 transmits every channel; R = 1 transmits none, so the server sees a constant."""
    train, test = tiny_data
    pipeline = build_tiny('disco', 0)
    phase1_train_utility(pipeline, train, tiny_train_cfg.replace(phase1_epochs=3))
    pipeline.eval()
    undefended = top1_accuracy(pipeline.predict(test.images, defend_output=False), test.task_labels)
    rows = sweep_pruning_ratio(pipeline, train, test, [0.0, 1.0], cfg=tiny_train_cfg)
    assert rows[0]['utility_acc'] == pytest.approx(undefended)

    silent = copy.deepcopy(pipeline)
    silent.set_pruning_ratio(1.0)
    predicted = silent.predict(test.images).argmax(axis=1)
    assert len(set(predicted.tolist())) == 1
    share = float(np.mean(test.task_labels == predicted[0]))
    assert rows[1]['utility_acc'] == pytest.approx(share)
    assert rows[1]['utility_acc'] <= max(np.bincount(test.task_labels, minlength=2)) / len(test)


def test_phase2_rejects_baseline_defenses(tiny_data, tiny_train_cfg):
    train, _ = tiny_data
    for defense in ('none', 'random_prune', 'gaussian_noise'):
        with pytest.raises(ConfigError) as excinfo:
            phase2_train_filter(build_tiny(defense, 0), train, tiny_train_cfg)
        assert excinfo.value.key == 'defense_mode'
