"""Two-slice binary dataset built from events and their causal links.

Every row holds 28 YES/NO variables laid out as
``[weather former, traffic former, weather latter, traffic latter]``.
Former variables are named after the event type (``Rain``), latter ones
carry an ``_L`` suffix (``Rain_L``).
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Sequence

import numpy as np

from .errors import DegenerateClassError, SchemaError
from .events import (
    SEVERITY_RANK,
    TRAFFIC_TYPES,
    WEATHER_TYPES,
    EventType,
    GeospatialEntity,
    Kind,
    Severity,
    collapse_severity,
)
from .pairing import CausalLink

YES, NO = 1, 0
LATTER_SUFFIX = "_L"


def variable_name(event_type: EventType, latter: bool) -> str:
    return event_type.value + (LATTER_SUFFIX if latter else "")


WEATHER_FORMER = tuple(variable_name(t, False) for t in WEATHER_TYPES)
TRAFFIC_FORMER = tuple(variable_name(t, False) for t in TRAFFIC_TYPES)
WEATHER_LATTER = tuple(variable_name(t, True) for t in WEATHER_TYPES)
TRAFFIC_LATTER = tuple(variable_name(t, True) for t in TRAFFIC_TYPES)
VARIABLES = WEATHER_FORMER + TRAFFIC_FORMER + WEATHER_LATTER + TRAFFIC_LATTER


@dataclass(frozen=True)
class VariableId:
    event_type: EventType
    latter: bool

    @property
    def group(self) -> Kind:
        return self.event_type.kind

    @property
    def name(self) -> str:
        return variable_name(self.event_type, self.latter)

    @classmethod
    def parse(cls, name: str) -> "VariableId":
        latter = name.endswith(LATTER_SUFFIX)
        base = name[: -len(LATTER_SUFFIX)] if latter else name
        return cls(EventType(base), latter)


@dataclass
class DatasetRow:
    values: dict
    anchor_id: str
    city: str
    severity_annotations: Optional[dict] = None


@dataclass
class Dataset:
    """Rows stored column-wise as a ``uint8`` matrix (1 = YES)."""

    values: np.ndarray
    anchor_ids: list
    cities: list
    mode: str = "binary"
    columns: tuple = VARIABLES
    severities: Optional[list] = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.uint8).reshape(-1, len(self.columns))
        if len(self.anchor_ids) != len(self.values) or len(self.cities) != len(self.values):
            raise ValueError("anchor ids and cities must match the number of rows")
        self._index = {c: i for i, c in enumerate(self.columns)}

    def __len__(self) -> int:
        return len(self.values)

    def col(self, name: str) -> np.ndarray:
        return self.values[:, self._index[name]]

    def column_index(self, name: str) -> int:
        return self._index[name]

    def row(self, i: int) -> DatasetRow:
        values = {c: int(v) for c, v in zip(self.columns, self.values[i])}
        sev = self.severities[i] if self.severities is not None else None
        return DatasetRow(values, self.anchor_ids[i], self.cities[i], sev)

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.values[idx],
            [self.anchor_ids[i] for i in idx],
            [self.cities[i] for i in idx],
            self.mode,
            self.columns,
            None if self.severities is None else [self.severities[i] for i in idx],
        )

    @classmethod
    def empty(cls, mode: str = "binary", columns: tuple = VARIABLES) -> "Dataset":
        return cls(np.zeros((0, len(columns)), np.uint8), [], [], mode, columns,
                   [] if mode == "leveled" else None)

    @classmethod
    def from_rows(cls, rows: Sequence[DatasetRow], mode: str = "binary", columns: tuple = VARIABLES) -> "Dataset":
        if not rows:
            return cls.empty(mode, columns)
        values = np.array([[r.values[c] for c in columns] for r in rows], dtype=np.uint8)
        sev = [r.severity_annotations or {} for r in rows] if mode == "leveled" else None
        return cls(values, [r.anchor_id for r in rows], [r.city for r in rows], mode, columns, sev)


class LinkIndex:
    """Cause and result lists per entity id."""

    def __init__(self, entities: Iterable[GeospatialEntity], links: Iterable[CausalLink]):
        self.by_id = {e.id: e for e in entities}
        self.causes: dict[str, list[GeospatialEntity]] = defaultdict(list)
        self.results: dict[str, list[GeospatialEntity]] = defaultdict(list)
        for link in links:
            cause, effect = self.by_id.get(link.cause_id), self.by_id.get(link.effect_id)
            if cause is None or effect is None:
                continue
            self.causes[effect.id].append(cause)
            self.results[cause.id].append(effect)


def build_row(anchor: GeospatialEntity, links: LinkIndex) -> DatasetRow:
    """Place the anchor, its causes/results and their causes/results on the two slices.

    Traffic anchor: itself on the latter traffic slice, its weather causes on
    latter weather, its traffic causes on former traffic, and the weather
    causes of those on former weather.  Weather anchor: itself on former
    weather, its traffic results on former traffic, and the traffic results of
    those on latter traffic.
    """
    values = dict.fromkeys(VARIABLES, NO)
    sev: dict[str, Severity] = {}

    def put(e: GeospatialEntity, latter: bool) -> None:
        name = variable_name(e.event_type, latter)
        values[name] = YES
        if e.kind is not Kind.WEATHER:
            return
        label = e.severity.label
        if name not in sev or SEVERITY_RANK[label] > SEVERITY_RANK[sev[name]]:
            sev[name] = label

    if anchor.kind is Kind.TRAFFIC:
        put(anchor, latter=True)
        for c in links.causes.get(anchor.id, ()):
            if c.kind is Kind.WEATHER:
                put(c, latter=True)
            else:
                put(c, latter=False)
                for w in links.causes.get(c.id, ()):
                    if w.kind is Kind.WEATHER:
                        put(w, latter=False)
    else:
        put(anchor, latter=False)
        for r in links.results.get(anchor.id, ()):
            if r.kind is Kind.TRAFFIC:
                put(r, latter=False)
                for r2 in links.results.get(r.id, ()):
                    if r2.kind is Kind.TRAFFIC:
                        put(r2, latter=True)
    return DatasetRow(values, anchor.id, anchor.loc.city, sev)


def build_dataset(
    entities: Iterable[GeospatialEntity],
    links: Iterable[CausalLink],
    mode: str = "binary",
    include_weather_anchors: bool = True,
) -> Dataset:
    """One row per anchor entity, ordered by anchor id."""
    if mode not in ("binary", "leveled"):
        raise ValueError(f"unknown dataset mode {mode!r}")
    kept = []
    for e in entities:
        if e.kind is Kind.WEATHER:
            e = collapse_severity(e, mode)
            if e is None:
                continue
        kept.append(e)
    index = LinkIndex(kept, links)
    anchors = sorted(kept, key=lambda e: e.id)
    if not include_weather_anchors:
        anchors = [e for e in anchors if e.kind is Kind.TRAFFIC]
    rows = [build_row(a, index) for a in anchors]
    if mode == "binary":
        for r in rows:
            r.severity_annotations = None
    return Dataset.from_rows(rows, mode)


def partition_by_city(ds: Dataset) -> dict[str, Dataset]:
    groups: dict[str, list[int]] = defaultdict(list)
    for i, city in enumerate(ds.cities):
        groups[city].append(i)
    return {city: ds.take(groups[city]) for city in sorted(groups)}


def class_indices(ds: Dataset, target: str) -> tuple[np.ndarray, np.ndarray]:
    y = ds.col(target)
    return np.flatnonzero(y == YES), np.flatnonzero(y == NO)


def hamming(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Hamming distances between the binary rows of ``a`` and ``b``."""
    a = a.astype(np.int32)
    b = b.astype(np.int32)
    agree = a @ b.T + (1 - a) @ (1 - b).T
    return a.shape[1] - agree


def _chunks(n: int, size: int = 1024):
    for lo in range(0, n, size):
        yield slice(lo, min(n, lo + size))


def tomek_links(ds: Dataset, target: str) -> set[int]:
    """Majority-class rows that form a Tomek link with a minority row.

    Rows i (majority) and j (minority) form a link when no other row is
    strictly closer to either of them than they are to each other, under
    Hamming distance over the non-target variables.  Distances are computed
    between distinct feature patterns, so cost scales with the number of
    unique patterns rather than rows.  With equal class sizes there is no
    majority and nothing is flagged.
    """
    yes, no = class_indices(ds, target)
    if len(yes) == 0 or len(no) == 0:
        raise DegenerateClassError(f"degenerate class distribution for {target}")
    if len(yes) == len(no):
        return set()
    majority_label = YES if len(yes) > len(no) else NO

    t = ds.column_index(target)
    features = np.delete(ds.values, t, axis=1)
    y = ds.values[:, t]
    patterns, inverse, counts = np.unique(features, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    has = np.zeros((len(patterns), 2), dtype=bool)
    has[inverse, y] = True

    # nearest distance seen by a row with each pattern
    nearest = np.zeros(len(patterns), dtype=np.int64)
    for sl in _chunks(len(patterns)):
        d = hamming(patterns[sl], patterns)
        d[np.arange(d.shape[0]), np.arange(sl.start, sl.stop)] = features.shape[1] + 1
        nearest[sl] = d.min(axis=1)
    nearest[counts >= 2] = 0

    minority_label = 1 - majority_label
    minority = np.flatnonzero(has[:, minority_label])
    # identical rows of opposite class sit at distance 0 on both sides
    flagged = has[:, majority_label] & has[:, minority_label]
    lonely = np.flatnonzero(has[:, majority_label] & ~has[:, minority_label] & (counts == 1))
    for sl in _chunks(len(lonely)):
        p = lonely[sl]
        d = hamming(patterns[p], patterns[minority])
        mutual = (d == nearest[p][:, None]) & (d == nearest[minority][None, :])
        flagged[p[mutual.any(axis=1)]] = True
    return {int(i) for i in np.flatnonzero(y == majority_label) if flagged[inverse[i]]}


def balance(ds: Dataset, target: str, seed: int, tomek: bool = False) -> Dataset:
    """Undersample so that both classes of ``target`` have equal size.

    With ``tomek=True`` majority rows in Tomek links are removed first, but
    never so many that the majority ends up smaller than the minority (the
    lowest-index flagged rows go first).  Selected rows keep their original
    relative order.
    """
    yes, no = class_indices(ds, target)
    if len(yes) == 0 or len(no) == 0:
        raise DegenerateClassError(f"degenerate class distribution for {target}")
    if tomek:
        drop = sorted(tomek_links(ds, target))[: abs(len(yes) - len(no))]
        if drop:
            dropped = set(drop)
            keep = np.array([i for i in range(len(ds)) if i not in dropped])
            ds = ds.take(keep)
            yes, no = class_indices(ds, target)
    rng = np.random.default_rng(seed)
    n = min(len(yes), len(no))
    if len(yes) > n:
        yes = rng.choice(yes, size=n, replace=False)
    if len(no) > n:
        no = rng.choice(no, size=n, replace=False)
    return ds.take(np.sort(np.concatenate([yes, no])))


SEVERITY_PREFIX = "Sev:"


def write_dataset(ds: Dataset, stream: IO[str]) -> None:
    sev_cols = list(WEATHER_FORMER + WEATHER_LATTER) if ds.mode == "leveled" else []
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(list(ds.columns) + ["AnchorId", "City"] + [SEVERITY_PREFIX + c for c in sev_cols])
    for i in range(len(ds)):
        cells = ["YES" if v else "NO" for v in ds.values[i]]
        cells += [ds.anchor_ids[i], ds.cities[i]]
        if sev_cols:
            ann = ds.severities[i] or {}
            cells += [ann[c].value if c in ann else "" for c in sev_cols]
        writer.writerow(cells)


def read_dataset(stream: IO[str]) -> Dataset:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("dataset file is empty") from None
    if "AnchorId" not in header or "City" not in header:
        raise SchemaError("dataset header needs AnchorId and City columns")
    a_col, c_col = header.index("AnchorId"), header.index("City")
    var_cols = [i for i, h in enumerate(header) if i not in (a_col, c_col) and not h.startswith(SEVERITY_PREFIX)]
    sev_cols = [i for i, h in enumerate(header) if h.startswith(SEVERITY_PREFIX)]
    columns = tuple(header[i] for i in var_cols)
    mode = "leveled" if sev_cols else "binary"
    values, anchors, cities, sevs = [], [], [], []
    for line, row in enumerate(reader, start=2):
        try:
            values.append([{"YES": 1, "NO": 0}[row[i]] for i in var_cols])
        except (KeyError, IndexError):
            raise SchemaError(f"dataset line {line}: values must be YES or NO") from None
        anchors.append(row[a_col])
        cities.append(row[c_col])
        if sev_cols:
            sevs.append({header[i][len(SEVERITY_PREFIX):]: Severity(row[i]) for i in sev_cols if row[i]})
    arr = np.array(values, dtype=np.uint8).reshape(-1, len(columns))
    return Dataset(arr, anchors, cities, mode, columns, sevs if sev_cols else None)
