"""Weather and traffic event records: taxonomy, CSV ingestion and cleaning.

Raw event logs come as one CSV per kind (weather, traffic).  Rows are parsed
into :class:`GeospatialEntity` values; rows that cannot be parsed are kept in
a rejects report instead of aborting the whole file.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import IO, Iterable, Optional

from .errors import ContractError, SchemaError


class Kind(str, enum.Enum):
    WEATHER = "weather"
    TRAFFIC = "traffic"


class EventType(str, enum.Enum):
    # weather
    SEVERE_COLD = "SevereCold"
    FOG = "Fog"
    HAIL = "Hail"
    RAIN = "Rain"
    SNOW = "Snow"
    STORM = "Storm"
    PRECIPITATION = "Precipitation"
    # traffic
    ACCIDENT = "Accident"
    BROKEN_VEHICLE = "BrokenVehicle"
    CONGESTION = "Congestion"
    CONSTRUCTION = "Construction"
    EVENT = "Event"
    LANE_BLOCKED = "LaneBlocked"
    FLOW_INCIDENT = "FlowIncident"

    @property
    def kind(self) -> Kind:
        return Kind.WEATHER if self in WEATHER_TYPES else Kind.TRAFFIC


WEATHER_TYPES = (
    EventType.SEVERE_COLD,
    EventType.FOG,
    EventType.HAIL,
    EventType.RAIN,
    EventType.SNOW,
    EventType.STORM,
    EventType.PRECIPITATION,
)
TRAFFIC_TYPES = (
    EventType.ACCIDENT,
    EventType.BROKEN_VEHICLE,
    EventType.CONGESTION,
    EventType.CONSTRUCTION,
    EventType.EVENT,
    EventType.LANE_BLOCKED,
    EventType.FLOW_INCIDENT,
)

# Spellings found in the raw logs.  "Cold" is special-cased in _resolve_type.
_TYPE_ALIASES = {
    "broken-vehicle": EventType.BROKEN_VEHICLE,
    "brokenvehicle": EventType.BROKEN_VEHICLE,
    "lane-blocked": EventType.LANE_BLOCKED,
    "laneblocked": EventType.LANE_BLOCKED,
    "flow-incident": EventType.FLOW_INCIDENT,
    "flowincident": EventType.FLOW_INCIDENT,
    "severe-cold": EventType.SEVERE_COLD,
    "severecold": EventType.SEVERE_COLD,
    "wind": EventType.STORM,
}


class Severity(str, enum.Enum):
    LIGHT = "Light"
    MODERATE = "Moderate"
    HEAVY = "Heavy"
    SEVERE = "Severe"
    OTHER = "Other"
    UNK = "UNK"
    # presence marker used once severities are collapsed to binary
    PRESENT = "Present"


SEVERITY_RANK = {
    Severity.UNK: 0,
    Severity.PRESENT: 0,
    Severity.OTHER: 1,
    Severity.LIGHT: 2,
    Severity.MODERATE: 3,
    Severity.HEAVY: 4,
    Severity.SEVERE: 5,
}

# K-means cluster centres of the source weather data, per event type.
# Rain/snow in millimetres, wind (Storm) in km/h, temperature in degrees Celsius.
CLUSTER_CENTERS = {
    EventType.RAIN: (2.5, 7.1, 11.6),
    EventType.SNOW: (0.6, 1.7, 2.5),
    EventType.STORM: (13.2, 36.2, 60.0),
    EventType.SEVERE_COLD: (-23.7,),
}
TEMPERATURE_CENTERS = (-23.7, -8.6, 6.7, 21.3, 35.8)
EXTREME_WIND_KMH = 60.0


@dataclass(frozen=True)
class SeverityLevel:
    label: Severity = Severity.UNK
    numeric_center: Optional[float] = None


@dataclass(frozen=True)
class Location:
    lat: float
    lon: float
    city: str = ""
    state: str = ""
    airport_code: Optional[str] = None
    street: Optional[str] = None
    zipcode: Optional[str] = None


@dataclass(frozen=True)
class TimeInterval:
    start: float
    end: float


@dataclass(frozen=True)
class GeospatialEntity:
    id: str
    kind: Kind
    event_type: EventType
    severity: SeverityLevel
    loc: Location
    time: TimeInterval

    @property
    def start(self) -> float:
        return self.time.start


@dataclass(frozen=True)
class Reject:
    row_number: int
    row: dict
    reason: str


COMMON_COLUMNS = (
    "EventId",
    "Type",
    "Severity",
    "StartTime(UTC)",
    "EndTime(UTC)",
    "LocationLat",
    "LocationLng",
    "AirportCode",
    "City",
    "State",
    "ZipCode",
)
REQUIRED_COLUMNS = {
    Kind.TRAFFIC: COMMON_COLUMNS,
    Kind.WEATHER: (
        "EventId",
        "Type",
        "Severity",
        "StartTime(UTC)",
        "EndTime(UTC)",
        "AirportCode",
        "LocationLat",
        "LocationLng",
        "City",
        "State",
        "ZipCode",
    ),
}
OPTIONAL_COLUMNS = ("Street", "SeverityCenter")


class RowError(ValueError):
    """Raised internally for a single malformed row."""


def parse_timestamp(text: str) -> float:
    """ISO-8601 text to UTC epoch seconds.  Strings without an offset are UTC."""
    text = text.strip()
    if not text:
        raise RowError("missing timestamp")
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise RowError(f"unparseable timestamp {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def format_timestamp(seconds: float) -> str:
    return datetime.fromtimestamp(seconds, tz=timezone.utc).isoformat()


def _parse_coord(text: str, name: str, bound: float) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise RowError(f"unparseable {name} {text!r}") from None
    if not math.isfinite(value) or abs(value) > bound:
        raise RowError(f"{name} out of range: {value}")
    return value


def _resolve_type(label: str, severity: SeverityLevel) -> EventType:
    key = label.strip()
    try:
        return EventType(key)
    except ValueError:
        pass
    low = key.lower()
    if low == "cold":
        # only the severe-cold temperature level enters the dataset
        if severity.label is Severity.SEVERE or severity.numeric_center == TEMPERATURE_CENTERS[0]:
            return EventType.SEVERE_COLD
        raise RowError("non-severe cold not ingested")
    for t in EventType:
        if t.value.lower() == low:
            return t
    if low in _TYPE_ALIASES:
        return _TYPE_ALIASES[low]
    raise RowError(f"unknown event type {label!r}")


def _parse_severity(label: str, center_text: str) -> SeverityLevel:
    try:
        sev = Severity(label.strip())
    except ValueError:
        sev = Severity.UNK
    center = None
    if center_text and center_text.strip():
        try:
            center = float(center_text)
        except ValueError:
            raise RowError(f"unparseable severity center {center_text!r}") from None
    return SeverityLevel(sev, center)


def _check_center(event_type: EventType, severity: SeverityLevel) -> None:
    if severity.numeric_center is None:
        return
    allowed = CLUSTER_CENTERS.get(event_type)
    if allowed is None or severity.numeric_center not in allowed:
        raise RowError(
            f"severity center {severity.numeric_center} is not a cluster center for {event_type.value}"
        )


def _optional(row: dict, column: str) -> Optional[str]:
    value = row.get(column)
    if value is None:
        return None
    value = value.strip()
    return value or None


def parse_row(row: dict, kind: Kind) -> GeospatialEntity:
    event_id = (row.get("EventId") or "").strip()
    if not event_id:
        raise RowError("missing EventId")
    severity = _parse_severity(row.get("Severity") or "", row.get("SeverityCenter") or "")
    event_type = _resolve_type(row.get("Type") or "", severity)
    if event_type.kind is not kind:
        raise RowError(f"event type {event_type.value} is not in the {kind.value} taxonomy")
    if event_type is EventType.SEVERE_COLD and severity.numeric_center is not None:
        if severity.numeric_center not in TEMPERATURE_CENTERS:
            raise RowError(f"severity center {severity.numeric_center} is not a temperature center")
        if severity.numeric_center != TEMPERATURE_CENTERS[0]:
            raise RowError("non-severe cold not ingested")
    else:
        _check_center(event_type, severity)

    start = parse_timestamp(row.get("StartTime(UTC)") or "")
    end = parse_timestamp(row.get("EndTime(UTC)") or "")
    if start > end:
        raise RowError("inverted interval")

    lat = _parse_coord(row.get("LocationLat"), "latitude", 90.0)
    lon = _parse_coord(row.get("LocationLng"), "longitude", 180.0)
    airport = _optional(row, "AirportCode")
    if kind is Kind.WEATHER and airport is None:
        raise RowError("weather event without airport code")
    loc = Location(
        lat=lat,
        lon=lon,
        city=(row.get("City") or "").strip(),
        state=(row.get("State") or "").strip(),
        airport_code=airport,
        street=_optional(row, "Street"),
        zipcode=_optional(row, "ZipCode"),
    )
    return GeospatialEntity(event_id, kind, event_type, severity, loc, TimeInterval(start, end))


def parse_events(source: IO[str] | Iterable[str], kind: Kind | str):
    """Parse an event CSV stream.

    Returns ``(entities, rejects)``.  A missing required column raises
    :class:`SchemaError`; any other problem rejects just the offending row.
    """
    kind = Kind(kind)
    reader = csv.DictReader(source)
    header = reader.fieldnames or []
    missing = [c for c in REQUIRED_COLUMNS[kind] if c not in header]
    if missing:
        raise SchemaError(f"{kind.value} input is missing required columns: {', '.join(missing)}")

    entities, rejects = [], []
    for row in reader:
        try:
            entities.append(parse_row(row, kind))
        except RowError as exc:
            rejects.append(Reject(reader.line_num, dict(row), str(exc)))
    return entities, rejects


def entity_to_row(e: GeospatialEntity) -> dict:
    center = e.severity.numeric_center
    return {
        "EventId": e.id,
        "Type": e.event_type.value,
        "Severity": e.severity.label.value,
        "StartTime(UTC)": format_timestamp(e.time.start),
        "EndTime(UTC)": format_timestamp(e.time.end),
        "LocationLat": repr(e.loc.lat),
        "LocationLng": repr(e.loc.lon),
        "AirportCode": e.loc.airport_code or "",
        "City": e.loc.city,
        "State": e.loc.state,
        "ZipCode": e.loc.zipcode or "",
        "Street": e.loc.street or "",
        "SeverityCenter": "" if center is None else repr(center),
    }


def write_entities(entities: Iterable[GeospatialEntity], stream: IO[str], kind: Kind | str) -> None:
    columns = list(REQUIRED_COLUMNS[Kind(kind)]) + list(OPTIONAL_COLUMNS)
    writer = csv.DictWriter(stream, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for e in entities:
        writer.writerow(entity_to_row(e))


def write_rejects(rejects: Iterable[Reject], stream: IO[str], kind: Kind | str) -> None:
    columns = list(REQUIRED_COLUMNS[Kind(kind)]) + ["RejectReason"]
    writer = csv.DictWriter(
        stream, fieldnames=columns, extrasaction="ignore", lineterminator="\n"
    )
    writer.writeheader()
    for r in rejects:
        writer.writerow({**{c: r.row.get(c, "") for c in columns}, "RejectReason": f"row {r.row_number}: {r.reason}"})


def content_key(e: GeospatialEntity) -> tuple:
    return (e.event_type, e.time.start, e.time.end, e.loc.lat, e.loc.lon)


def deduplicate(entities: Iterable[GeospatialEntity]) -> list[GeospatialEntity]:
    """Drop id duplicates and same-type/same-time/same-place duplicates.

    The first occurrence wins and the input order is kept.
    """
    seen_ids: set[str] = set()
    seen_keys: set[tuple] = set()
    out = []
    for e in entities:
        key = content_key(e)
        if e.id in seen_ids or key in seen_keys:
            continue
        seen_ids.add(e.id)
        seen_keys.add(key)
        out.append(e)
    return out


def collapse_severity(entity: GeospatialEntity, mode: str = "binary") -> Optional[GeospatialEntity]:
    """Project a weather entity onto the binary or leveled representation.

    Returns None when the event does not qualify for its variable at all
    (wind below the extreme-wind cluster).
    """
    if entity.kind is not Kind.WEATHER:
        raise ContractError(f"collapse_severity needs a weather entity, got {entity.kind.value} {entity.id}")
    if mode not in ("binary", "leveled"):
        raise ContractError(f"unknown severity mode {mode!r}")
    center = entity.severity.numeric_center
    if entity.event_type is EventType.STORM and center is not None and center < EXTREME_WIND_KMH:
        return None
    if mode == "leveled":
        return entity
    return replace(entity, severity=SeverityLevel(Severity.PRESENT, None))
