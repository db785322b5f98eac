"""Acceptance criteria, one test each, at the stated tolerances and runtime budgets.

A summary with one PASS/FAIL line per criterion is printed at the end of the run.
"""

import functools
import time

import numpy as np
import pytest

from conftest import TWENTY_BAYES1, TWENTY_MLE, random_network, ten_entity_fixture, twenty_row_fixture
from oracles import brute_force_pairs, chi2_closed_form, enum_posterior, exhaustive_tomek, joint_table
from test_dataset import TOMEK_FIXTURES, tomek_ds
from test_pairing import random_entities
from trafficbn.dataset import VARIABLES, Dataset, LinkIndex, build_row, tomek_links
from trafficbn.evaluation import RandomBaseline, SplitSpec, evaluate_baseline, evaluate_model, split
from trafficbn.inference import influence, posterior
from trafficbn.learning import fit_bayes, fit_mle
from trafficbn.network import ContingencyTable2x2, Edge, Skeleton, chi2_test, predefined_skeleton, prune
from trafficbn.pairing import PairingConfig, find_correlated_pairs
from trafficbn.synth import generating_p_yes, planted_edges, planted_model, sample

TARGET = "Accident_L"


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s, budget {self.seconds} s"


@pytest.mark.criterion("chi2 oracle", 1)
def test_chi2_oracle():
    with Budget(1):
        rng = np.random.default_rng(0)
        for _ in range(50):
            t = rng.integers(1, 500, size=(2, 2))
            r = chi2_test(ContingencyTable2x2(t))
            assert abs(r.chi2 - chi2_closed_form(t.tolist())) <= 1e-9 * max(1.0, r.chi2)
        worked = [([[25, 25], [25, 25]], 0.0, 1.0), ([[10, 20], [20, 10]], 6.6667, 0.0098),
                  ([[50, 10], [10, 50]], 53.333, 3e-13)]
        for t, chi2, p in worked:
            r = chi2_test(ContingencyTable2x2(np.array(t)))
            assert abs(r.chi2 - chi2) <= 1e-3 * (10 if chi2 > 50 else 1)
            assert abs(r.p_value - p) <= 1e-3


@pytest.mark.criterion("inference oracle (100 models x 10 queries)", 30)
def test_inference_oracle():
    with Budget(30):
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(2, 13))
            m, nodes, parents, tables = random_network(rng, n, max_parents=4)
            assign, probs, col = joint_table(nodes, parents, tables)
            for _ in range(10):
                target = str(rng.choice(nodes))
                others = [v for v in nodes if v != target]
                k = int(rng.integers(0, len(others) + 1))
                ev = {str(v): int(rng.integers(0, 2)) for v in rng.choice(others, size=k, replace=False)} if k else {}
                mask = np.ones(len(assign), dtype=bool)
                for v, x in ev.items():
                    mask &= assign[:, col[v]] == x
                expected = probs[mask & (assign[:, col[target]] == 1)].sum() / probs[mask].sum()
                worst = max(worst, abs(posterior(m, target, ev).p_yes - expected))
        assert worst <= 1e-9


@pytest.mark.criterion("estimator correctness", 5)
def test_estimator_correctness():
    sk, ds = twenty_row_fixture()
    mle, bayes, tiny = fit_mle(sk, ds), fit_bayes(sk, ds, 1.0), fit_bayes(sk, ds, 1e-9)
    for node, table in TWENTY_MLE.items():
        for config, p in table.items():
            assert mle.cpds[node].p_yes(config) == p
    for node, table in TWENTY_BAYES1.items():
        for config, p in table.items():
            assert abs(bayes.cpds[node].p_yes(config) - p) < 1e-15
    diffs = [abs(mle.cpds[n].p_yes(c) - tiny.cpds[n].p_yes(c)) for n in sk.nodes for c in mle.cpds[n].table]
    assert max(diffs) < 1e-6


def _pair_dataset(a, b):
    return Dataset(np.column_stack([a, b]), [""] * len(a), [""] * len(a), columns=("A", "B"))


PAIR = Skeleton(("A", "B"), (Edge("A", "B"),))


@functools.lru_cache(maxsize=None)
def _calibration_runs():
    """Edge outcomes for 200 independent then 200 phi=0.1 datasets, one seeded stream.

    The dependent pair has marginals 0.5 and P(B=Y | A=Y) = 0.55,
    P(B=Y | A=N) = 0.45, so the population phi is exactly 0.1.
    The seed was fixed before the first run and is not tuned.
    """
    rng = np.random.default_rng(0)
    removed = kept = 0
    for _ in range(200):
        a = (rng.random(2000) < 0.5).astype(np.uint8)
        b = (rng.random(2000) < 0.5).astype(np.uint8)
        removed += not prune(PAIR, _pair_dataset(a, b), alpha=0.05).edges
    for _ in range(200):
        a = (rng.random(2000) < 0.5).astype(np.uint8)
        b = (rng.random(2000) < np.where(a == 1, 0.55, 0.45)).astype(np.uint8)
        kept += len(prune(PAIR, _pair_dataset(a, b), alpha=0.05).edges)
    return removed / 200, kept / 200


@pytest.mark.criterion("pruning calibration: independent pair removed at rate in [0.90, 1.00]", 60)
def test_pruning_calibration_independent():
    with Budget(60):
        removal, _ = _calibration_runs()
    assert 0.90 <= removal <= 1.00, f"removal {removal:.3f}"


@pytest.mark.criterion("pruning calibration: phi=0.1 dependence retained at rate 1.0", 60)
def test_pruning_calibration_planted():
    with Budget(60):
        _, retention = _calibration_runs()
    assert retention == 1.0, f"retention {retention:.3f}"


@pytest.mark.criterion("planted-model end-to-end (50,000 rows)", 120)
def test_planted_end_to_end():
    with Budget(120):
        truth = planted_model()
        ds = sample(truth, 50_000, seed=0)
        train, test = split(ds, SplitSpec(1000, 1000, 0), TARGET)
        pruned = prune(predefined_skeleton(), train, alpha=0.05)
        missing = planted_edges() - pruned.edge_keys()
        assert not missing, f"planted edges pruned away: {sorted(missing)}"

        model = fit_mle(pruned, train)
        checked, off = 0, []
        for node in model.nodes:
            cpd = model.cpds[node]
            for config, p in cpd.table.items():
                if cpd.support[config] >= 500:
                    g = generating_p_yes(truth, node, dict(zip(cpd.parents, config)))
                    checked += 1
                    if abs(p - g) > 0.02:
                        off.append((node, config, p, g))
        assert checked > 0 and not off, off

        bn = evaluate_model(model, test, TARGET)
        rand = evaluate_baseline(RandomBaseline(TARGET, seed=0), test)
        assert bn.weighted_f1 >= rand.weighted_f1 + 0.2, (bn.weighted_f1, rand.weighted_f1)


@pytest.mark.criterion("pairing oracle (1,000 entities)", 10)
def test_pairing_oracle():
    es = random_entities(1000, seed=42, hours=24, spread=0.05)
    with Budget(10):
        got = set(find_correlated_pairs(es, PairingConfig()))
    expected = brute_force_pairs(es, 3600.0, 10.0)
    assert len(expected) > 1000
    assert got == expected


@pytest.mark.criterion("Tomek oracle (3 fixtures)", 5)
def test_tomek_oracle():
    for X, y in TOMEK_FIXTURES:
        ds, full = tomek_ds(X, y)
        feats = np.delete(full, VARIABLES.index(TARGET), axis=1)
        assert tomek_links(ds, TARGET) == exhaustive_tomek(feats, y)


@pytest.mark.criterion("influence coherence on the planted model", 10)
def test_influence_coherence():
    m = planted_model()
    prior = posterior(m, TARGET).p_yes
    factors = [v for v in m.nodes if v != TARGET]
    assert len(factors) == 27
    for f in factors:
        r = influence(m, f, TARGET)
        p_f = posterior(m, f).p_yes
        assert abs(r.p_given_yes * p_f + r.p_given_no * (1 - p_f) - prior) <= 1e-9, f
    # Hail has no path to or common ancestor with the target
    assert abs(influence(m, "Hail", TARGET).delta) < 1e-9


@pytest.mark.criterion("worked accident-row example", 1)
def test_worked_accident_row():
    entities, links = ten_entity_fixture()
    row = build_row(next(e for e in entities if e.id == "T2"), LinkIndex(entities, links))
    expected = {v: 0 for v in VARIABLES}
    expected.update(Accident_L=1, Rain_L=1, Congestion=1, Snow=1)
    assert row.values == expected


@pytest.mark.criterion("qualitative reproduction on the full source data", 0)
@pytest.mark.skip(reason="needs the full multi-gigabyte source dataset; reference constants live in evaluation.REFERENCE_RESULTS")
def test_full_data_reproduction():
    pass
