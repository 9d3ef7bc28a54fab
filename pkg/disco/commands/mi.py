import json
import logging

import numpy as np

from ..info import check_dpi_chain, check_post_pruning_bound, random_system
from ..training.logs import json_default
from .command_factory import command
from .common import write_rows

logger = logging.getLogger(__name__)


@command
def cmd_mi(config, system):
    """Exact information checks on ``mi_systems`` seeded random systems."""
    rows, reports = [], []
    for index in range(config.mi_systems):
        rng = np.random.default_rng((config.seed, index))
        discrete = random_system(rng, config.mi_max_alphabet, config.mi_max_layers,
                                 config.mi_keep_probability, config.mi_dropout)
        dpi = check_dpi_chain(discrete)
        pruning = check_post_pruning_bound(discrete)
        reports.append({'system': index, 'alphabet': discrete.alphabet_size, 'layers': discrete.depth,
                        'dpi': dpi.to_dict(), 'pruning': pruning.to_dict()})
        rows.append({'system': index, 'p': pruning.p, 'i_x_f': pruning.i_x_f, 'i_x_fp': pruning.i_x_fp,
                     'i_f_fp': pruning.i_f_fp, 'decrease': pruning.decrease,
                     'stated_bound': pruning.stated_bound, 'dpi_passed': dpi.passed,
                     'pruning_passed': pruning.passed, 'stated_bound_ok': pruning.stated_bound_ok})
    path = system.path('mi_reports.jsonl')
    with open(path, 'w') as f:
        for report in reports:
            f.write(json.dumps(report, sort_keys=True, default=json_default) + '\n')
    system.record(path)
    write_rows(system, 'mi_summary.csv', rows)
    failures = [row['system'] for row in rows if not (row['dpi_passed'] and row['pruning_passed'])]
    summary = {'systems': len(rows), 'failures': failures,
               'stated_bound_violations': sum(1 for row in rows if not row['stated_bound_ok'])}
    if failures:
        logger.warning(f"Information inequalities failed on systems {failures}")
    return summary
