from ..benchmark import export_run
from .command_factory import command
from .common import prepare_pipeline


@command
def cmd_export(config, system):
    """Write the first ``export_count`` test samples as benchmark records."""
    train, test = config.load_data()
    pipeline, _ = prepare_pipeline(config, system, train)
    path = system.path(config.export_path)
    size = export_run(pipeline, test, config.export_count, path)
    system.record(path)
    return {'records': config.export_count, 'bytes': size, 'defense_mode': pipeline.defense_mode,
            'activation_shape': list(pipeline.activation_shape)}
