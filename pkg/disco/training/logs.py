"""Loss records and their CSV/JSON serialisation."""

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Sequence

logger = logging.getLogger(__name__)


@dataclass
class LossRecord:
    """Epoch means of the utility, privacy and joint losses.

    ``l_joint`` is rho * l_util - l_priv; ``adv_metric`` is the proxy
    adversary's accuracy (attribute mode) or l1 error (input mode).
    """
    step: int
    phase: int
    epoch: int
    l_util: float
    l_priv: float
    l_joint: float
    util_acc: float
    adv_metric: float

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.l_util, self.l_priv, self.l_joint,
                                                self.util_acc, self.adv_metric))


CSV_FIELDS = [f.name for f in fields(LossRecord)]


def write_loss_csv(records: Sequence[LossRecord], path: str) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for record in records:
            writer.writerow({k: _fmt(v) for k, v in asdict(record).items()})
    logger.debug(f"Wrote {len(records)} loss records to {path}")


def read_loss_csv(path: str) -> List[LossRecord]:
    with open(path, newline='') as f:
        return [LossRecord(step=int(row['step']), phase=int(row['phase']), epoch=int(row['epoch']),
                           l_util=float(row['l_util']), l_priv=float(row['l_priv']),
                           l_joint=float(row['l_joint']), util_acc=float(row['util_acc']),
                           adv_metric=float(row['adv_metric']))
                for row in csv.DictReader(f)]


def write_rows_csv(rows: Sequence[Dict[str, Any]], path: str) -> None:
    """Write a list of flat dicts; columns follow the first row's key order."""
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(path, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def write_json(payload: Any, path: str) -> None:
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=json_default)
        f.write('\n')


def json_default(value):
    if hasattr(value, 'to_dict'):
        return value.to_dict()
    if hasattr(value, 'tolist'):
        return value.tolist()
    return str(value)


def _fmt(value: Any) -> Any:
    if isinstance(value, float):
        return repr(round(value, 10))
    return value
