import sys
from pathlib import Path

import pytest

from trafficbn.events import EventType, GeospatialEntity, Kind, Location, Severity, SeverityLevel, TimeInterval
from trafficbn.learning import model_from_tables
from trafficbn.network import Edge, Skeleton

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"
T0 = 1583020800.0  # 2020-03-01T00:00:00Z


def ent(eid, etype, t=0.0, lat=33.64, lon=-84.43, code="KATL", city="Atlanta", sev=Severity.UNK,
        center=None, dur=1800.0):
    et = EventType(etype)
    return GeospatialEntity(eid, et.kind, et, SeverityLevel(sev, center),
                            Location(lat, lon, city, "GA", code), TimeInterval(T0 + t, T0 + t + dur))


def chain_model():
    """A -> B -> C from the worked inference examples."""
    sk = Skeleton(("A", "B", "C"), (Edge("A", "B"), Edge("B", "C")))
    return model_from_tables(sk, {
        "A": 0.5,
        "B": {(1,): 0.8, (0,): 0.2},
        "C": {(1,): 0.7, (0,): 0.1},
    })


@pytest.fixture
def chain():
    return chain_model()


@pytest.fixture
def data_dir():
    return DATA


def ten_entity_fixture():
    """Ten events with hand-written causal links; rows traced by hand in golden_dataset_10.csv."""
    from trafficbn.pairing import RULE_SAME_KIND as S, RULE_WEATHER_TRAFFIC as W, CausalLink

    atl = dict(code="KATL", city="Atlanta")
    aus = dict(lat=30.19, lon=-97.67, code="KAUS", city="Austin")
    entities = [
        ent("W1", "Rain", t=0, **atl),
        ent("W2", "Snow", t=0, **atl),
        ent("W3", "Fog", t=0, **aus),
        ent("T1", "Congestion", t=600, **atl),
        ent("T2", "Accident", t=1200, **atl),
        ent("T3", "LaneBlocked", t=1800, **atl),
        ent("T4", "Accident", t=1800, **aus),
        ent("T5", "BrokenVehicle", t=900, **aus),
        ent("T6", "Construction", t=50000, **atl),
        ent("T7", "Congestion", t=600, **aus),
    ]
    links = [
        CausalLink("W1", "T2", W), CausalLink("W2", "T1", W), CausalLink("T1", "T2", S),
        CausalLink("T2", "T3", S), CausalLink("W1", "T3", W), CausalLink("W3", "T5", W),
        CausalLink("T5", "T4", S), CausalLink("T7", "T4", S), CausalLink("W3", "T7", W),
    ]
    return entities, links


# (Rain, Congestion, Accident) patterns and their multiplicities, 20 rows in all
TWENTY_ROWS = [((1, 1, 1), 4), ((1, 1, 0), 1), ((1, 0, 1), 2), ((1, 0, 0), 3),
               ((0, 1, 1), 1), ((0, 1, 0), 2), ((0, 0, 1), 1), ((0, 0, 0), 6)]
# ratios counted by hand from TWENTY_ROWS
TWENTY_MLE = {
    "Rain": {(): 10 / 20},
    "Congestion": {(1,): 5 / 10, (0,): 3 / 10},
    "Accident": {(1, 1): 4 / 5, (1, 0): 2 / 5, (0, 1): 1 / 3, (0, 0): 1 / 7},
}
TWENTY_BAYES1 = {
    "Rain": {(): 11 / 22},
    "Congestion": {(1,): 6 / 12, (0,): 4 / 12},
    "Accident": {(1, 1): 5 / 7, (1, 0): 3 / 7, (0, 1): 2 / 5, (0, 0): 2 / 9},
}


def twenty_row_fixture():
    from trafficbn.dataset import Dataset

    cols = ("Rain", "Congestion", "Accident")
    values = [list(p) for p, k in TWENTY_ROWS for _ in range(k)]
    ds = Dataset(values, [f"r{i}" for i in range(20)], ["C"] * 20, columns=cols)
    sk = Skeleton(cols, (Edge("Rain", "Congestion"), Edge("Rain", "Accident"), Edge("Congestion", "Accident")))
    return sk, ds


def random_network(rng, n_nodes, max_parents=3, extreme=False):
    """Random DAG (edges follow a random node order) with random CPD tables.

    Returns ``(model, nodes, parents, p_yes)`` with plain-dict tables for the oracle.
    """
    import itertools

    nodes = [f"V{i}" for i in range(n_nodes)]
    order = list(rng.permutation(nodes))
    parents, edges, p_yes = {}, [], {}
    for i, n in enumerate(order):
        k = int(rng.integers(0, min(i, max_parents) + 1))
        ps = sorted(rng.choice(order[:i], size=k, replace=False).tolist()) if k else []
        parents[n] = ps
        edges += [Edge(p, n) for p in ps]
    sk = Skeleton(tuple(nodes), tuple(edges))
    for n in nodes:
        ps = sk.parents(n)
        parents[n] = ps
        table = {}
        for c in itertools.product((0, 1), repeat=len(ps)):
            p = float(rng.uniform(0.02, 0.98))
            if extreme and rng.random() < 0.2:
                p = float(rng.choice([0.0, 1.0]))
            table[c] = p
        p_yes[n] = table
    return model_from_tables(sk, p_yes), nodes, parents, p_yes


# -- acceptance report -------------------------------------------------------

_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name, budget): acceptance criterion with a runtime budget in seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and report.skipped):
        status = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        _CRITERIA.append((status, mark.args[0], report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, secs in _CRITERIA:
        terminalreporter.write_line(f"{status:4}  {name}  ({secs:.2f} s)")
