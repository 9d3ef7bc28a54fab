import logging

from ..training import evaluate_utility, measure_generalization_gap
from .command_factory import command
from .common import prepare_pipeline, save_expert, save_pipeline, write_summary

logger = logging.getLogger(__name__)


@command
def cmd_train(config, system):
    """Train the configured pipeline and save its weights."""
    train, test = config.load_data()
    pipeline, result = prepare_pipeline(config, system, train)
    save_pipeline(system, pipeline)
    summary = {
        'defense_mode': pipeline.defense_mode,
        'train_accuracy': evaluate_utility(pipeline, train),
        'test_accuracy': evaluate_utility(pipeline, test),
        'client_checksum': pipeline.client_checksum(),
        'epochs': len(result.history),
        'pipeline': pipeline.describe(),
    }
    if result.adversary is not None:
        gap = measure_generalization_gap(pipeline, result.adversary, train, test, config.rho,
                                         config.privacy_mode)
        summary['generalization_gap'] = gap.to_dict()
    if config.expert_attribute:
        summary['experts'] = save_expert(config, system, pipeline)
    write_summary(system, 'train_summary.json', summary)
    logger.info(f"Test accuracy {summary['test_accuracy']:.3f}")
    return summary
