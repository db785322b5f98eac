"""Spatio-temporal pairing of events and causal direction assignment."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import IO, Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import ContractError
from .events import GeospatialEntity, Kind, Location

EARTH_RADIUS_KM = 6371.0
DEFAULT_T_THRESH = 3600.0
DEFAULT_D_THRESH = 10.0

RULE_SAME_KIND = "same-kind-earlier-first"
RULE_WEATHER_TRAFFIC = "weather-causes-traffic"


@dataclass(frozen=True)
class PairingConfig:
    t_thresh: float = DEFAULT_T_THRESH
    d_thresh: float = DEFAULT_D_THRESH
    earth_radius_km: float = EARTH_RADIUS_KM

    def __post_init__(self):
        for name in ("t_thresh", "d_thresh", "earth_radius_km"):
            value = getattr(self, name)
            if not value > 0:
                raise ContractError(f"{name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class CausalLink:
    cause_id: str
    effect_id: str
    rule: str


def haversine_km(a: Location, b: Location, radius_km: float = EARTH_RADIUS_KM) -> float:
    lat1, lon1 = math.radians(a.lat), math.radians(a.lon)
    lat2, lon2 = math.radians(b.lat), math.radians(b.lon)
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    # clamp: rounding can push h a hair above 1 for antipodal points
    return 2 * radius_km * math.asin(math.sqrt(min(1.0, max(0.0, h))))


def temporally_correlated(e1: GeospatialEntity, e2: GeospatialEntity, cfg: PairingConfig) -> bool:
    return abs(e1.time.start - e2.time.start) <= cfg.t_thresh


def spatially_correlated(e1: GeospatialEntity, e2: GeospatialEntity, cfg: PairingConfig) -> bool:
    """Traffic pairs: haversine distance below ``d_thresh``.

    Any pair involving a weather event is collocated when both carry the
    same airport station code.
    """
    if e1.kind is Kind.TRAFFIC and e2.kind is Kind.TRAFFIC:
        return haversine_km(e1.loc, e2.loc, cfg.earth_radius_km) < cfg.d_thresh
    for e in (e1, e2):
        if e.kind is Kind.WEATHER and not e.loc.airport_code:
            raise ContractError(f"weather entity {e.id} has no airport code")
    return e1.loc.airport_code is not None and e1.loc.airport_code == e2.loc.airport_code


def correlated(e1: GeospatialEntity, e2: GeospatialEntity, cfg: PairingConfig) -> bool:
    return e1.id != e2.id and temporally_correlated(e1, e2, cfg) and spatially_correlated(e1, e2, cfg)


def _unit_vectors(entities: Sequence[GeospatialEntity]) -> np.ndarray:
    lat = np.radians([e.loc.lat for e in entities])
    lon = np.radians([e.loc.lon for e in entities])
    return np.column_stack((np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)))


def _ordered(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def find_correlated_pairs(entities: Sequence[GeospatialEntity], cfg: PairingConfig = PairingConfig()) -> list[tuple[str, str]]:
    """All unordered id pairs that are both temporally and spatially correlated.

    Entities are bucketed by ``start // t_thresh`` so candidates only
    come from the same or the next bucket.  Weather-involved candidates are
    further keyed by airport code; traffic candidates come from a KD-tree on
    the unit sphere, over-fetched slightly and then confirmed with the exact
    haversine predicate.  Returns sorted ``(smaller_id, larger_id)`` tuples.
    """
    for e in entities:
        if e.kind is Kind.WEATHER and not e.loc.airport_code:
            raise ContractError(f"weather entity {e.id} has no airport code")

    buckets: dict[int, list[int]] = defaultdict(list)
    for i, e in enumerate(entities):
        buckets[int(e.time.start // cfg.t_thresh)].append(i)

    pairs: set[tuple[str, str]] = set()

    def accept(i: int, j: int) -> None:
        a, b = entities[i], entities[j]
        if a.id != b.id and temporally_correlated(a, b, cfg) and spatially_correlated(a, b, cfg):
            pairs.add(_ordered(a.id, b.id))

    # chord length for the distance threshold, padded against rounding
    angle = min(math.pi, cfg.d_thresh / cfg.earth_radius_km)
    chord = 2 * math.sin(angle / 2) * (1 + 1e-9) + 1e-12

    for b in sorted(buckets):
        here = buckets[b]
        window = here + buckets.get(b + 1, [])
        n_here = len(here)

        # weather-involved pairs share an airport code
        by_code: dict[str, list[int]] = defaultdict(list)
        for pos, i in enumerate(window):
            code = entities[i].loc.airport_code
            if code:
                by_code[code].append(pos)
        for members in by_code.values():
            for x in range(len(members)):
                for y in range(x + 1, len(members)):
                    p, q = members[x], members[y]
                    if p >= n_here and q >= n_here:
                        continue
                    i, j = window[p], window[q]
                    if entities[i].kind is Kind.WEATHER or entities[j].kind is Kind.WEATHER:
                        accept(i, j)

        # traffic-traffic pairs by distance
        traffic_pos = [pos for pos, i in enumerate(window) if entities[i].kind is Kind.TRAFFIC]
        if len(traffic_pos) < 2:
            continue
        pts = _unit_vectors([entities[window[pos]] for pos in traffic_pos])
        tree = cKDTree(pts)
        for x, y in tree.query_pairs(chord, output_type="ndarray"):
            p, q = traffic_pos[x], traffic_pos[y]
            if p >= n_here and q >= n_here:
                continue
            accept(window[p], window[q])

    return sorted(pairs)


def assign_causality(e1: GeospatialEntity, e2: GeospatialEntity) -> Optional[CausalLink]:
    """Direct a correlated pair.

    Same kind: the earlier start is the cause (equal starts: smaller id).
    Mixed kinds: the weather event is the cause only if it started strictly
    earlier; otherwise there is no link.
    """
    if e1.id == e2.id:
        return None
    if e1.kind is e2.kind:
        first, second = sorted((e1, e2), key=lambda e: (e.time.start, e.id))
        return CausalLink(first.id, second.id, RULE_SAME_KIND)
    weather, traffic = (e1, e2) if e1.kind is Kind.WEATHER else (e2, e1)
    if weather.time.start < traffic.time.start:
        return CausalLink(weather.id, traffic.id, RULE_WEATHER_TRAFFIC)
    return None


def causal_links(entities: Sequence[GeospatialEntity], cfg: PairingConfig = PairingConfig()) -> list[CausalLink]:
    by_id = {e.id: e for e in entities}
    links = []
    for a, b in find_correlated_pairs(entities, cfg):
        link = assign_causality(by_id[a], by_id[b])
        if link is not None:
            links.append(link)
    return links


def station_locations(weather: Iterable[GeospatialEntity]) -> dict[str, Location]:
    """First reported location of every airport station."""
    stations: dict[str, Location] = {}
    for e in weather:
        if e.loc.airport_code and e.loc.airport_code not in stations:
            stations[e.loc.airport_code] = e.loc
    return stations


def fill_nearest_station(
    traffic: Sequence[GeospatialEntity],
    stations: dict[str, Location],
    radius_km: float = EARTH_RADIUS_KM,
) -> list[GeospatialEntity]:
    """Give traffic rows without an AirportCode the code of the nearest station."""
    if not stations:
        return list(traffic)
    codes = sorted(stations)
    out = []
    for e in traffic:
        if e.kind is Kind.TRAFFIC and not e.loc.airport_code:
            nearest = min(codes, key=lambda c: (haversine_km(e.loc, stations[c], radius_km), c))
            e = replace(e, loc=replace(e.loc, airport_code=nearest))
        out.append(e)
    return out


def write_links(links: Iterable[CausalLink], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["cause_id", "effect_id", "rule"])
    for link in links:
        writer.writerow([link.cause_id, link.effect_id, link.rule])


def read_links(stream: IO[str]) -> list[CausalLink]:
    reader = csv.DictReader(stream)
    return [CausalLink(r["cause_id"], r["effect_id"], r["rule"]) for r in reader]
