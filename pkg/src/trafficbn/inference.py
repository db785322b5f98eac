"""Exact inference on a binary network by variable elimination."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .errors import ContractError, ImpossibleEvidenceError
from .learning import NetworkModel

YES, NO = 1, 0
_VALUE = {"YES": YES, "NO": NO, "Y": YES, "N": NO, True: YES, False: NO, 1: YES, 0: NO}


def as_value(v) -> int:
    try:
        return _VALUE[v.upper() if isinstance(v, str) else v]
    except (KeyError, TypeError):
        raise ContractError(f"not a YES/NO value: {v!r}") from None


def label(v: int) -> str:
    return "YES" if v else "NO"


@dataclass(frozen=True)
class PosteriorResult:
    target: str
    p_yes: float
    p_no: float
    evidence: dict


@dataclass(frozen=True)
class InfluenceReport:
    factor: str
    target: str
    p_given_yes: float
    p_given_no: float

    @property
    def delta(self) -> float:
        return self.p_given_yes - self.p_given_no


class Factor:
    __slots__ = ("vars", "table")

    def __init__(self, variables: tuple, table: np.ndarray):
        self.vars = tuple(variables)
        self.table = table

    def reduce(self, evidence: Mapping[str, int]) -> "Factor":
        if not any(v in evidence for v in self.vars):
            return self
        index = tuple(evidence[v] if v in evidence else slice(None) for v in self.vars)
        return Factor(tuple(v for v in self.vars if v not in evidence), self.table[index])


def _aligned(f: Factor, order: tuple) -> np.ndarray:
    """View of ``f.table`` broadcastable against the axes in ``order``."""
    perm = sorted(range(len(f.vars)), key=lambda i: order.index(f.vars[i]))
    t = np.transpose(f.table, perm)
    shape = [2 if v in f.vars else 1 for v in order]
    return t.reshape(shape)


def multiply(factors: list) -> Factor:
    order: list = []
    for f in factors:
        for v in f.vars:
            if v not in order:
                order.append(v)
    order_t = tuple(order)
    result = np.ones((1,) * len(order_t))
    for f in factors:
        result = result * _aligned(f, order_t)
    return Factor(order_t, np.broadcast_to(result, (2,) * len(order_t)))


def sum_out(f: Factor, var: str) -> Factor:
    axis = f.vars.index(var)
    return Factor(f.vars[:axis] + f.vars[axis + 1:], f.table.sum(axis=axis))


def cpd_factor(model: NetworkModel, node: str) -> Factor:
    p_yes = model.dense_p_yes(node)
    table = np.stack([1.0 - p_yes, p_yes], axis=-1)
    return Factor(tuple(model.parents(node)) + (node,), table)


def ancestors(model: NetworkModel, nodes) -> set:
    seen = set()
    stack = list(nodes)
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        stack.extend(model.parents(n))
    return seen


def _min_degree_order(factors: list, eliminate: set) -> list:
    """Greedy min-degree ordering over the interaction graph of ``factors``."""
    adj: dict = {v: set() for v in eliminate}
    for f in factors:
        for v in f.vars:
            if v in adj:
                adj[v].update(u for u in f.vars if u != v)
    order = []
    remaining = set(eliminate)
    while remaining:
        v = min(remaining, key=lambda u: (len(adj[u]), u))
        order.append(v)
        remaining.discard(v)
        nbrs = adj.pop(v)
        for u in nbrs:
            if u in adj:
                adj[u].discard(v)
                adj[u].update(w for w in nbrs if w != u)
    return order


def normalize_evidence(model: NetworkModel, evidence: Optional[Mapping]) -> dict:
    ev = {}
    for k, v in (evidence or {}).items():
        if k not in model.cpds:
            raise ContractError(f"evidence variable {k!r} is not a model node")
        ev[k] = as_value(v)
    return ev


def joint_probability(model: NetworkModel, assignment: Mapping) -> float:
    """Product of every node's CPD entry under a full assignment."""
    missing = [n for n in model.nodes if n not in assignment]
    if missing:
        raise ContractError(f"assignment misses nodes: {', '.join(missing)}")
    values = {n: as_value(assignment[n]) for n in model.nodes}
    p = 1.0
    for n in model.nodes:
        cpd = model.cpds[n]
        p_yes = cpd.p_yes(tuple(values[q] for q in cpd.parents))
        p *= p_yes if values[n] else 1.0 - p_yes
    return p


def query(model: NetworkModel, targets, evidence: Optional[Mapping] = None) -> Factor:
    """Unnormalised factor over ``targets`` with ``evidence`` fixed."""
    targets = tuple(targets)
    ev = normalize_evidence(model, evidence)
    for t in targets:
        if t not in model.cpds:
            raise ContractError(f"unknown target {t!r}")
        if t in ev:
            raise ContractError(f"target {t!r} is also observed")
    # nodes outside the ancestral set of the query sum to one and drop out
    relevant = ancestors(model, set(targets) | set(ev))
    factors = [cpd_factor(model, n).reduce(ev) for n in model.nodes if n in relevant]
    eliminate = relevant - set(targets) - set(ev)
    for var in _min_degree_order(factors, eliminate):
        touching = [f for f in factors if var in f.vars]
        rest = [f for f in factors if var not in f.vars]
        factors = rest + [sum_out(multiply(touching), var)]
    result = multiply(factors)
    perm = [result.vars.index(t) for t in targets]
    return Factor(targets, np.transpose(result.table, perm))


def posterior(model: NetworkModel, target: str, evidence: Optional[Mapping] = None) -> PosteriorResult:
    f = query(model, (target,), evidence)
    total = float(f.table.sum())
    if not total > 0:
        raise ImpossibleEvidenceError(f"evidence {dict(evidence or {})} has zero probability")
    p_yes = float(f.table[YES]) / total
    return PosteriorResult(target, p_yes, 1.0 - p_yes, dict(evidence or {}))


def evidence_probability(model: NetworkModel, evidence: Mapping) -> float:
    ev = normalize_evidence(model, evidence)
    if not ev:
        return 1.0
    relevant = ancestors(model, set(ev))
    factors = [cpd_factor(model, n).reduce(ev) for n in model.nodes if n in relevant]
    for var in _min_degree_order(factors, relevant - set(ev)):
        touching = [f for f in factors if var in f.vars]
        rest = [f for f in factors if var not in f.vars]
        factors = rest + [sum_out(multiply(touching), var)]
    return float(multiply(factors).table)


def predict(model: NetworkModel, evidence: Optional[Mapping], target: str, threshold: float = 0.5) -> tuple[str, float]:
    """``("YES", p)`` when P(target = YES | evidence) reaches ``threshold``."""
    p = posterior(model, target, evidence).p_yes
    return ("YES" if p >= threshold else "NO"), p


def influence(model: NetworkModel, factor: str, target: str) -> InfluenceReport:
    if factor == target:
        raise ContractError("factor and target must differ")
    p1 = posterior(model, target, {factor: YES}).p_yes
    p0 = posterior(model, target, {factor: NO}).p_yes
    return InfluenceReport(factor, target, p1, p0)


def neighbors(model: NetworkModel, node: str) -> list:
    """Parents and children of ``node`` in node order."""
    adj = set(model.parents(node)) | set(model.skeleton.children(node))
    return [n for n in model.nodes if n in adj]


def evidence_from_row(model: NetworkModel, row: Mapping, target: str, scope: str = "all") -> dict:
    """Observed values for every non-target node, or only the target's neighbours."""
    if scope == "all":
        names = [n for n in model.nodes if n != target]
    elif scope == "neighbors":
        names = neighbors(model, target)
    else:
        raise ContractError(f"unknown evidence scope {scope!r}")
    return {n: row[n] for n in names}
