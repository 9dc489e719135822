"""Day-level binning and pre/during/post event windows."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from itertools import groupby
from typing import Sequence

from .model import Dataset, DriftError, PredictionRecord

DEFAULT_WINDOW_DAYS = 14
DEFAULT_MIN_BIN_SIZE = 5


class WindowError(DriftError, ValueError):
    pass


@dataclass(frozen=True)
class TemporalBin:
    day: date
    records: tuple[PredictionRecord, ...]

    def __post_init__(self):
        if not self.records:
            raise ValueError("a bin must hold at least one record")

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class EventConfig:
    event_name: str
    during_start: date
    during_end: date
    pre_days: int = DEFAULT_WINDOW_DAYS
    post_days: int = DEFAULT_WINDOW_DAYS

    def __post_init__(self):
        for name in ("during_start", "during_end"):
            value = getattr(self, name)
            if isinstance(value, str):
                object.__setattr__(self, name, date.fromisoformat(value))
            elif isinstance(value, datetime):
                object.__setattr__(self, name, value.date())
        if self.during_start > self.during_end:
            raise ValueError(f"{self.event_name}: during_start after during_end")
        if int(self.pre_days) < 1 or int(self.post_days) < 1:
            raise ValueError(f"{self.event_name}: pre_days and post_days must be positive")


@dataclass(frozen=True)
class EventWindows:
    pre: tuple[TemporalBin, ...]
    during: tuple[TemporalBin, ...]
    post: tuple[TemporalBin, ...]
    event_name: str = ""
    flags: tuple[str, ...] = field(default=())

    @property
    def sizes(self) -> dict:
        return {
            "pre_days": len(self.pre),
            "during_days": len(self.during),
            "post_days": len(self.post),
            "pre_records": sum(len(b) for b in self.pre),
            "during_records": sum(len(b) for b in self.during),
            "post_records": sum(len(b) for b in self.post),
        }

    def all_bins(self) -> tuple[TemporalBin, ...]:
        return self.pre + self.during + self.post


def utc_day(timestamp: int) -> date:
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).date()


def assign_bins(dataset: Dataset | Sequence[PredictionRecord]) -> list[TemporalBin]:
    """Group records into one bin per UTC calendar day; empty days are omitted.

    Records keep their dataset order inside each bin, which is timestamp order
    with input order breaking ties.
    """
    records = dataset.records if isinstance(dataset, Dataset) else tuple(dataset)
    if not records:
        raise WindowError("dataset is empty")
    bins = [
        TemporalBin(day, tuple(group))
        for day, group in groupby(records, key=lambda r: utc_day(r.timestamp))
    ]
    # groupby only merges adjacent runs; unsorted input would leave duplicate days
    if any(a.day >= b.day for a, b in zip(bins, bins[1:])):
        raise WindowError("records are not in timestamp order")
    return bins


def window_partition(bins: Sequence[TemporalBin], config: EventConfig) -> EventWindows:
    """Split sorted bins into pre/during/post windows around an event.

    ``pre`` holds up to ``pre_days`` bins immediately before the event and
    ``post`` up to ``post_days`` bins immediately after; both count non-empty
    days. A short pre window is kept but flagged ``truncated_baseline``.
    """
    before = [b for b in bins if b.day < config.during_start]
    during = [b for b in bins if config.during_start <= b.day <= config.during_end]
    after = [b for b in bins if b.day > config.during_end]
    if not during:
        raise WindowError(f"{config.event_name}: no during-event data")
    if not before:
        raise WindowError(f"{config.event_name}: no baseline data")
    pre = before[-config.pre_days :]
    post = after[: config.post_days]
    flags = []
    if len(pre) < config.pre_days:
        flags.append("truncated_baseline")
    if len(post) < config.post_days:
        flags.append("truncated_post")
    return EventWindows(
        pre=tuple(pre),
        during=tuple(during),
        post=tuple(post),
        event_name=config.event_name,
        flags=tuple(flags),
    )


def qualifying(bins: Sequence[TemporalBin], min_bin_size: int = DEFAULT_MIN_BIN_SIZE) -> list[TemporalBin]:
    """Bins with enough records to enter a per-day metric series."""
    return [b for b in bins if len(b) >= min_bin_size]
