from ..training import sweep_pruning_ratio
from .command_factory import command
from .common import prepare_pipeline, write_rows


@command
def cmd_sweep(config, system):
    """Privacy-utility table over the pruning-ratio grid ``r_grid``."""
    train, test = config.load_data()
    pipeline, _ = prepare_pipeline(config, system, train)
    rows = sweep_pruning_ratio(pipeline, train, test, config.r_grid, config.retrain_server,
                               config.train_config(), [config.attack_config()], config.workers,
                               manager=system.task_manager)
    write_rows(system, 'sweep.csv', rows)
    return {'points': len(rows)}
