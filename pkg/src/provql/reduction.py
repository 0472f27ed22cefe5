"""Merging of excessive repeated events before storage.

The OS splits one logical read/write into many system calls; consecutive
events between the same entity pair with the same operation are merged when
the gap between them is within a threshold, summing the transferred amount
and keeping the union time window. Merging preserves which pairs of events
are causally ordered, so dependency tracking is unaffected.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .errors import ValidationError
from .model import Event

DEFAULT_THRESHOLD_NS = 1_000_000_000  # 1 second


@dataclass
class ReductionConfig:
    threshold_ns: int = DEFAULT_THRESHOLD_NS

    def __post_init__(self):
        if self.threshold_ns < 0:
            raise ValidationError("merge threshold must be >= 0")


@dataclass
class ReductionStats:
    input_events: int = 0
    output_events: int = 0

    @property
    def merged_away(self) -> int:
        return self.input_events - self.output_events


def _group_key(ev: Event) -> tuple:
    # Everything except the data amount and time window must agree.
    return (ev.srcid, ev.dstid, ev.optype, ev.category, ev.note)


def _merge_group(group: list, threshold: int) -> list:
    """Greedy left-to-right merge of one start-time sorted group.

    The run accumulator absorbs the next event while it starts within
    [0, threshold] of the accumulator's end; any other gap (too large, or
    negative because the events overlap) closes the run. This equals
    merging adjacent pairs to fixation, because a merge never changes the
    boundary times the neighbouring gap checks look at.
    """
    out = []
    acc = group[0]
    prev_start = acc.starttime
    for ev in group[1:]:
        if ev.starttime < prev_start:
            raise ValidationError("events are not sorted by start time within their group")
        prev_start = ev.starttime
        gap = ev.starttime - acc.endtime
        if 0 <= gap <= threshold:
            acc = replace(acc, endtime=ev.endtime, amount=acc.amount + ev.amount)
        else:
            out.append(acc)
            acc = ev
    out.append(acc)
    return out


def reduce_events(events: Sequence[Event], cfg: ReductionConfig | None = None) -> tuple:
    """Merge a batch of events; returns (reduced list, ReductionStats).

    Events must be start-time sorted within each (source, sink, operation)
    group; whole-batch start-time order is the easy way to guarantee that.
    The total amount and the union of time windows are preserved, and
    reducing twice changes nothing.
    """
    cfg = cfg or ReductionConfig()
    groups: dict = {}
    order: list = []
    for ev in events:
        key = _group_key(ev)
        bucket = groups.get(key)
        if bucket is None:
            groups[key] = bucket = []
            order.append(key)
        bucket.append(ev)

    reduced: list = []
    for key in order:
        reduced.extend(_merge_group(groups[key], cfg.threshold_ns))
    reduced.sort(key=lambda e: (e.starttime, e.endtime, e.srcid, e.dstid, e.optype))
    stats = ReductionStats(input_events=len(events), output_events=len(reduced))
    return reduced, stats


def renumber(events: Iterable[Event], start: int = 0) -> list:
    """Assign dense ids in list order (after reduction reshuffles ids)."""
    return [replace(ev, id=start + i) for i, ev in enumerate(events)]
