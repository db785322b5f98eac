"""Synthetic data: a planted two-slice model and small raw event logs."""

from __future__ import annotations

from datetime import datetime, timezone

import numpy as np

from .dataset import Dataset
from .events import (
    EventType,
    GeospatialEntity,
    Kind,
    Location,
    Severity,
    SeverityLevel,
    TimeInterval,
)
from .learning import NetworkModel, model_from_tables
from .network import Skeleton, predefined_skeleton

# node -> (parents, {parent values: P(YES)}); a float means no parents.
# Only the former-slice weather roots (which can never receive a parent) have
# moderate probabilities.  Everything else sits near 0 or 1 so that the
# binomial error of any 500-sample configuration stays well inside 0.02,
# even after a spurious parent splits it.
_OR2 = {(0, 0): 0.01, (0, 1): 0.99, (1, 0): 0.99, (1, 1): 0.995}
_COPY = {(0,): 0.01, (1,): 0.99}
PLANTED_CPDS = {
    "SevereCold": 0.05,
    "Fog": 0.15,
    "Hail": 0.02,
    "Rain": 0.30,
    "Snow": 0.10,
    "Storm": 0.05,
    "Precipitation": 0.08,
    "Accident": (("Rain",), _COPY),
    "BrokenVehicle": (("Fog",), _COPY),
    "Congestion": (("Rain", "Snow"), _OR2),
    "Construction": 0.02,
    "Event": 0.01,
    "LaneBlocked": (("Rain",), {(0,): 0.005, (1,): 0.99}),
    "FlowIncident": 0.02,
    "SevereCold_L": 0.01,
    "Fog_L": (("Fog",), _COPY),
    "Hail_L": 0.01,
    "Rain_L": (("Rain",), _COPY),
    "Snow_L": (("Snow",), {(0,): 0.005, (1,): 0.99}),
    "Storm_L": 0.01,
    "Precipitation_L": 0.02,
    "Accident_L": (("Rain_L", "Congestion"), _OR2),
    "BrokenVehicle_L": (("Snow_L",), _COPY),
    "Congestion_L": (("Accident", "Congestion"), _OR2),
    "Construction_L": (("Construction",), _COPY),
    "Event_L": 0.01,
    "LaneBlocked_L": (("Rain_L",), _COPY),
    "FlowIncident_L": 0.02,
}


def planted_edges() -> set:
    edges = set()
    for node, spec in PLANTED_CPDS.items():
        if isinstance(spec, tuple):
            edges.update((p, node) for p in spec[0])
    return edges


def planted_model() -> NetworkModel:
    """The hand-specified generating model; its edges are a subset of the predefined skeleton."""
    full = predefined_skeleton()
    wanted = planted_edges()
    skeleton = Skeleton(full.nodes, tuple(e for e in full.edges if e.key in wanted))
    tables = {}
    for node in skeleton.nodes:
        spec = PLANTED_CPDS[node]
        if not isinstance(spec, tuple):
            tables[node] = spec
            continue
        names, table = spec
        order = skeleton.parents(node)
        perm = [names.index(p) for p in order]
        tables[node] = {tuple(c[i] for i in perm): p for c, p in table.items()}
    return model_from_tables(skeleton, tables, estimator="planted")


def sample(model: NetworkModel, n: int, seed: int = 0, city: str = "SYN") -> Dataset:
    """Ancestral sampling of ``n`` rows."""
    rng = np.random.default_rng(seed)
    cols: dict = {}
    for node in model.skeleton.topological_order():
        parents = model.parents(node)
        p_yes = model.dense_p_yes(node).reshape(-1)
        code = np.zeros(n, dtype=np.int64)
        for p in parents:
            code = (code << 1) | cols[p]
        cols[node] = (rng.random(n) < p_yes[code]).astype(np.int64)
    columns = tuple(model.nodes)
    values = np.column_stack([cols[c] for c in columns]).astype(np.uint8)
    return Dataset(values, [f"r{i:06d}" for i in range(n)], [city] * n, "binary", columns)


def generating_p_yes(model: NetworkModel, node: str, assignment: dict) -> float:
    cpd = model.cpds[node]
    return cpd.p_yes(tuple(assignment[p] for p in cpd.parents))


STATIONS = {
    "AT": ("KATL", "Atlanta", "GA", 33.6407, -84.4277),
    "AU": ("KAUS", "Austin", "TX", 30.1975, -97.6664),
    "CH": ("KCLT", "Charlotte", "NC", 35.2144, -80.9473),
    "DA": ("KDFW", "Dallas", "TX", 32.8998, -97.0403),
}


def synth_events(n_events: int = 200, seed: int = 0, cities=("AT", "AU"), hours: int = 72):
    """Small weather/traffic logs in which accidents follow rain and congestion.

    Returns ``(weather, traffic)`` entity lists.  About a fifth of the events
    are weather reports at the city's airport; traffic events lie within a
    few kilometres of it.
    """
    rng = np.random.default_rng(seed)
    t0 = datetime(2020, 3, 1, tzinfo=timezone.utc).timestamp()
    n_weather = max(1, n_events // 5)
    weather, traffic = [], []
    weather_types = [EventType.RAIN, EventType.SNOW, EventType.FOG, EventType.PRECIPITATION]
    wet_starts: dict = {c: [] for c in cities}
    for i in range(n_weather):
        city = cities[i % len(cities)]
        code, name, state, lat, lon = STATIONS[city]
        et = weather_types[int(rng.choice(len(weather_types), p=[0.6, 0.1, 0.2, 0.1]))]
        start = t0 + float(rng.integers(0, hours)) * 3600
        sev = Severity.LIGHT if rng.random() < 0.5 else Severity.HEAVY
        if et in (EventType.RAIN, EventType.SNOW):
            wet_starts[city].append(start)
        weather.append(GeospatialEntity(
            f"W-{i:04d}", Kind.WEATHER, et, SeverityLevel(sev),
            Location(lat, lon, name, state, code), TimeInterval(start, start + 3600),
        ))
    traffic_types = [EventType.CONGESTION, EventType.ACCIDENT, EventType.CONSTRUCTION,
                     EventType.LANE_BLOCKED, EventType.BROKEN_VEHICLE, EventType.FLOW_INCIDENT]
    for i in range(n_events - n_weather):
        city = cities[i % len(cities)]
        code, name, state, lat, lon = STATIONS[city]
        start = t0 + float(rng.integers(0, hours * 3600))
        wet = any(0 < start - s <= 3600 for s in wet_starts[city])
        p_acc = 0.6 if wet else 0.15
        if rng.random() < p_acc:
            et = EventType.ACCIDENT
        else:
            et = traffic_types[int(rng.choice(len(traffic_types), p=[0.55, 0.0, 0.15, 0.1, 0.1, 0.1]))]
        dlat, dlon = rng.normal(scale=0.02, size=2)
        traffic.append(GeospatialEntity(
            f"T-{i:04d}", Kind.TRAFFIC, et, SeverityLevel(Severity.UNK),
            Location(round(float(lat + dlat), 5), round(float(lon + dlon), 5), name, state, code, zipcode="00000"),
            TimeInterval(start, start + 1800),
        ))
    return weather, traffic

