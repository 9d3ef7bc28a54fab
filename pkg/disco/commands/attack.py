import logging

from ..attacks import evaluate_attack_suite
from .command_factory import command
from .common import prepare_pipeline, write_attack_reports, write_rows

logger = logging.getLogger(__name__)


@command
def cmd_attack(config, system):
    """Attack the activations a trained pipeline transmits for the test split."""
    train, test = config.load_data()
    pipeline, _ = prepare_pipeline(config, system, train)
    reports = evaluate_attack_suite(pipeline, test, [config.attack_config()])
    write_attack_reports(system, 'attacks.jsonl', reports)
    rows = [dict(kind=r.kind, mode=r.mode, defense=r.defense, status=r.status, **r.summary()) for r in reports]
    write_rows(system, 'attacks.csv', rows)
    return {'reports': rows}
