# app/services/summary.py
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from app.schemas.analysis import ResultRecord, ResultSummary
from app.schemas.metric import CHANNELS, ComparisonStatus


def summarize_records(
    records: Iterable[ResultRecord],
    center: Optional[Tuple[float, float]] = None,
    radius_m: Optional[float] = None,
) -> ResultSummary:
    """
    Counts by status over all records, channel means/maxima over ok records.
    Means and maxima are None when no record is ok.
    """
    records = list(records)
    counts = {status.value: 0 for status in ComparisonStatus}
    ok: List[ResultRecord] = []
    for rec in records:
        counts[rec.status.value] += 1
        if rec.is_ok:
            ok.append(rec)

    mean: Dict[str, Optional[float]] = {}
    maximum: Dict[str, Optional[float]] = {}
    for channel in CHANNELS:
        values = np.array([r.channels[channel] for r in ok if r.channels.get(channel) is not None], dtype=float)
        mean[channel] = float(np.mean(values)) if values.size else None
        maximum[channel] = float(np.max(values)) if values.size else None

    return ResultSummary(
        n_receivers=len(records),
        counts=counts,
        mean=mean,
        max=maximum,
        empty=not ok,
        center=center,
        radius_m=radius_m,
    )
