"""Access-layer pipeline at the IoT gateway: feature filter and context database."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import UnknownFeatureError
from .flowcore import Packet


@dataclass(frozen=True)
class FeatureRecord:
    feature_id: int
    data_value: float
    source_sink: int


@dataclass(frozen=True)
class FeatureFilter:
    accepted: frozenset[int]


@dataclass(frozen=True)
class ActionValue:
    feature_id: int
    exceeds: bool
    data_value: float
    thres_value: float


@dataclass
class ContextDb:
    """Threshold database that keeps only changed values.

    ``stored`` holds the latest accepted value per feature, ``history`` every
    value that was stored in order, and ``emitted`` the actions produced.
    """

    thres_values: dict[int, float]
    stored: dict[int, float] = field(default_factory=dict)
    history: dict[int, list[float]] = field(default_factory=dict)
    emitted: list[ActionValue] = field(default_factory=list)
    _exceeding: dict[int, bool] = field(default_factory=dict, repr=False)

    @classmethod
    def uniform(cls, n_features: int = 4, threshold: float = 0.5) -> ContextDb:
        return cls({f: threshold for f in range(n_features)})


def filter_features(flt: FeatureFilter, batch: Iterable[FeatureRecord]) -> list[FeatureRecord]:
    return [r for r in batch if r.feature_id in flt.accepted]


def update_context(db: ContextDb, rec: FeatureRecord) -> ActionValue | None:
    """Store ``rec`` if its value changed and decide whether to notify.

    An action is emitted while the value is above threshold and once more
    when it drops back (the exceed flag flips). A repeat of the stored value
    is ignored entirely.
    """
    fid = rec.feature_id
    if fid not in db.thres_values:
        raise UnknownFeatureError(fid)
    if fid in db.stored and db.stored[fid] == rec.data_value:
        return None
    db.stored[fid] = rec.data_value
    db.history.setdefault(fid, []).append(rec.data_value)

    thres = db.thres_values[fid]
    exceeds = rec.data_value > thres
    # the predefined threshold is the initial stored value, which never exceeds itself
    was = db._exceeding.get(fid, False)
    db._exceeding[fid] = exceeds
    if not exceeds and not was:
        return None
    action = ActionValue(fid, exceeds, rec.data_value, thres)
    db.emitted.append(action)
    return action


@dataclass
class Gateway:
    feature_filter: FeatureFilter
    db: ContextDb

    @classmethod
    def default(cls, n_features: int = 4, threshold: float = 0.5) -> Gateway:
        return cls(FeatureFilter(frozenset(range(n_features))), ContextDb.uniform(n_features, threshold))

    def process(self, batch: Sequence[FeatureRecord]) -> list[ActionValue]:
        out = []
        for rec in filter_features(self.feature_filter, batch):
            action = update_context(self.db, rec)
            if action is not None:
                out.append(action)
        return out


def readings_for(delivered: Sequence[Packet], rng: np.random.Generator, n_features: int = 4) -> list[FeatureRecord]:
    """Synthetic sensor readings for delivered packets, in delivery order.

    Feature id is ``src mod n_features``; the reading is uniform on [0, 1]
    rounded to two decimals so repeats actually occur.
    """
    values = np.round(rng.random(len(delivered)), 2)
    return [
        FeatureRecord(p.src % n_features, float(v), p.dst) for p, v in zip(delivered, values)
    ]


ACTION_COLUMNS = ("feature_id", "data_value", "thres_value", "exceeds", "run_seed")


def write_actions_csv(stream: IO[str], actions: Iterable[ActionValue], run_seed: int, header: bool = True) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    if header:
        writer.writerow(ACTION_COLUMNS)
    for a in actions:
        writer.writerow([a.feature_id, repr(a.data_value), repr(a.thres_value), str(a.exceeds).lower(), run_seed])
