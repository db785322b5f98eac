import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ent
from trafficbn.errors import ContractError, SchemaError
from trafficbn.events import (
    REQUIRED_COLUMNS,
    EventType,
    Kind,
    Severity,
    collapse_severity,
    deduplicate,
    parse_events,
    parse_timestamp,
    write_entities,
)

TRAFFIC_HEADER = ",".join(REQUIRED_COLUMNS[Kind.TRAFFIC])
WEATHER_HEADER = ",".join(REQUIRED_COLUMNS[Kind.WEATHER]) + ",SeverityCenter"


def traffic_csv(*rows):
    return io.StringIO("\n".join([TRAFFIC_HEADER, *rows]) + "\n")


def weather_csv(*rows):
    return io.StringIO("\n".join([WEATHER_HEADER, *rows]) + "\n")


ACC = "T-1,Accident,UNK,2020-03-01T10:00:00Z,2020-03-01T10:30:00Z,33.7,-84.4,KATL,Atlanta,GA,30303"


def test_accident_row_becomes_traffic_entity():
    ents, rej = parse_events(traffic_csv(ACC), "traffic")
    assert rej == []
    (e,) = ents
    assert e.kind is Kind.TRAFFIC
    assert e.event_type is EventType.ACCIDENT
    assert e.loc.airport_code == "KATL" and e.loc.zipcode == "30303"
    assert e.time.end - e.time.start == 1800


def test_unknown_type_rejected():
    ents, rej = parse_events(traffic_csv(ACC.replace("Accident", "Tornado")), "traffic")
    assert ents == []
    assert rej[0].reason == "unknown event type 'Tornado'"
    assert rej[0].row_number == 2


def test_inverted_interval_rejected():
    row = "T-1,Accident,UNK,2020-03-01T11:00:00Z,2020-03-01T10:30:00Z,33.7,-84.4,KATL,Atlanta,GA,30303"
    _, rej = parse_events(traffic_csv(row), "traffic")
    assert rej[0].reason == "inverted interval"


def test_bad_coordinates_and_timestamps_are_row_level():
    rows = [
        ACC.replace("33.7", "north"),
        ACC.replace("-84.4", "-200"),
        ACC.replace("2020-03-01T10:00:00Z", "yesterday"),
        ACC.replace("T-1", "T-2"),
    ]
    ents, rej = parse_events(traffic_csv(*rows), "traffic")
    assert [e.id for e in ents] == ["T-2"]
    assert [r.row_number for r in rej] == [2, 3, 4]


def test_missing_column_is_fatal():
    header = TRAFFIC_HEADER.replace(",ZipCode", "")
    with pytest.raises(SchemaError, match="ZipCode"):
        parse_events(io.StringIO(header + "\n"), "traffic")


def test_weather_needs_airport_code():
    row = "W-1,Rain,Light,2020-03-01T10:00:00Z,2020-03-01T11:00:00Z,,33.6,-84.4,Atlanta,GA,,"
    _, rej = parse_events(weather_csv(row), "weather")
    assert rej[0].reason == "weather event without airport code"


def test_taxonomy_mismatch_rejected():
    row = "W-1,Accident,Light,2020-03-01T10:00:00Z,2020-03-01T11:00:00Z,KATL,33.6,-84.4,Atlanta,GA,,"
    _, rej = parse_events(weather_csv(row), "weather")
    assert "not in the weather taxonomy" in rej[0].reason


def test_cold_only_severe_is_kept():
    rows = [
        "W-1,Cold,Severe,2020-03-01T10:00:00Z,2020-03-01T11:00:00Z,KATL,33.6,-84.4,Atlanta,GA,,",
        "W-2,Cold,Light,2020-03-01T10:00:00Z,2020-03-01T11:00:00Z,KATL,33.6,-84.4,Atlanta,GA,,",
        "W-3,Cold,Other,2020-03-01T10:00:00Z,2020-03-01T11:00:00Z,KATL,33.6,-84.4,Atlanta,GA,,-23.7",
    ]
    ents, rej = parse_events(weather_csv(*rows), "weather")
    assert [(e.id, e.event_type) for e in ents] == [("W-1", EventType.SEVERE_COLD), ("W-3", EventType.SEVERE_COLD)]
    assert rej[0].reason == "non-severe cold not ingested"


def test_center_must_be_published_cluster():
    ok = "W-1,Rain,Heavy,2020-03-01T10:00:00Z,2020-03-01T11:00:00Z,KATL,33.6,-84.4,Atlanta,GA,,11.6"
    bad = "W-2,Rain,Heavy,2020-03-01T10:00:00Z,2020-03-01T11:00:00Z,KATL,33.6,-84.4,Atlanta,GA,,9.0"
    ents, rej = parse_events(weather_csv(ok, bad), "weather")
    assert ents[0].severity.numeric_center == 11.6
    assert "cluster center" in rej[0].reason


def test_unknown_severity_label_maps_to_unk():
    ents, _ = parse_events(traffic_csv(ACC.replace(",UNK,", ",Catastrophic,")), "traffic")
    assert ents[0].severity.label is Severity.UNK


def test_timestamps_normalised_to_utc():
    assert parse_timestamp("2020-03-01T05:00:00-05:00") == parse_timestamp("2020-03-01T10:00:00Z")
    assert parse_timestamp("2020-03-01T10:00:00") == parse_timestamp("2020-03-01T10:00:00+00:00")


# -- deduplicate -------------------------------------------------------------

def test_dedup_identical_id():
    a = ent("X", "Accident")
    b = ent("X", "Congestion", t=99)
    assert deduplicate([a, b]) == [a]


def test_dedup_identical_content():
    a = ent("X", "Accident")
    b = ent("Y", "Accident")
    assert deduplicate([a, b]) == [a]


def test_dedup_disjoint_unchanged():
    es = [ent("A", "Accident"), ent("B", "Accident", t=1), ent("C", "Rain")]
    assert deduplicate(es) == es


ids = st.sampled_from(["a", "b", "c", "d"])
types = st.sampled_from(["Accident", "Congestion", "Rain"])
times = st.sampled_from([0.0, 60.0, 120.0])
entities = st.lists(st.builds(lambda i, t, s: ent(i, t, t=s), ids, types, times), max_size=12)


@given(entities)
def test_dedup_idempotent_and_unique(es):
    once = deduplicate(es)
    assert deduplicate(once) == once
    assert len({e.id for e in once}) == len(once)
    # survivors keep input order
    pos = [es.index(e) for e in once]
    assert pos == sorted(pos)


# -- collapse_severity -------------------------------------------------------

def test_collapse_binary_and_leveled():
    rain = ent("W", "Rain", code="KATL", sev=Severity.HEAVY)
    assert collapse_severity(rain, "binary").severity.label is Severity.PRESENT
    assert collapse_severity(rain, "binary").event_type is EventType.RAIN
    assert collapse_severity(rain, "leveled") == rain


def test_collapse_drops_weak_wind():
    weak = ent("W", "Storm", sev=Severity.LIGHT, center=13.2)
    strong = ent("W", "Storm", sev=Severity.SEVERE, center=60.0)
    assert collapse_severity(weak, "binary") is None
    assert collapse_severity(strong, "binary") is not None


def test_collapse_rejects_traffic():
    with pytest.raises(ContractError):
        collapse_severity(ent("T", "Accident"), "binary")


# -- round trip and fuzz -----------------------------------------------------

def test_parse_write_parse_fixed_point(data_dir):
    for kind in ("weather", "traffic"):
        text = (data_dir / f"{kind}.csv").read_text()
        first, rej = parse_events(io.StringIO(text), kind)
        assert rej == []
        buf = io.StringIO()
        write_entities(first, buf, kind)
        second, _ = parse_events(io.StringIO(buf.getvalue()), kind)
        assert second == first
        buf2 = io.StringIO()
        write_entities(second, buf2, kind)
        assert buf2.getvalue() == buf.getvalue()


cell = st.one_of(
    st.sampled_from(["", "x", "Rain", "Accident", "Cold", "Wind", "-1", "91", "33.5", "1e400", "nan",
                     "2020-03-01T10:00:00Z", "2020-03-01T09:00:00+01:00", "Heavy", "KATL", "60.0"]),
    st.text(alphabet=st.characters(blacklist_categories=("Cc", "Cs")), max_size=5),
)


@settings(max_examples=200)
@given(st.lists(st.lists(cell, min_size=13, max_size=13), max_size=6), st.sampled_from(["weather", "traffic"]))
def test_fuzzed_rows_never_produce_invalid_entities(rows, kind):
    import csv

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(list(REQUIRED_COLUMNS[Kind(kind)]) + ["Street", "SeverityCenter"])
    w.writerows(rows)
    buf.seek(0)
    ents, rej = parse_events(buf, kind)
    assert len(ents) + len(rej) == len(rows)
    for e in ents:
        assert e.id
        assert e.time.start <= e.time.end
        assert e.event_type.kind is Kind(kind)
        assert -90 <= e.loc.lat <= 90 and -180 <= e.loc.lon <= 180
        if kind == "weather":
            assert e.loc.airport_code
