"""Predefined two-slice skeleton and its pruning by marginal chi-squared tests."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .dataset import Dataset, variable_name
from .errors import ContractError
from .events import TRAFFIC_TYPES, WEATHER_TYPES


@dataclass(frozen=True)
class Edge:
    parent: str
    child: str
    chi2: Optional[float] = None
    p_value: Optional[float] = None
    strength_class: Optional[int] = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.parent, self.child)

    @property
    def annotated(self) -> bool:
        return self.chi2 is not None and self.p_value is not None


@dataclass(frozen=True)
class Skeleton:
    nodes: tuple
    edges: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        names = set(self.nodes)
        for e in self.edges:
            if e.parent not in names or e.child not in names:
                raise ContractError(f"edge {e.parent}->{e.child} references an unknown node")

    def parents(self, node: str) -> list[str]:
        return [e.parent for e in self.edges if e.child == node]

    def children(self, node: str) -> list[str]:
        return [e.child for e in self.edges if e.parent == node]

    def edge(self, parent: str, child: str) -> Optional[Edge]:
        for e in self.edges:
            if e.parent == parent and e.child == child:
                return e
        return None

    def edge_keys(self) -> set[tuple[str, str]]:
        return {e.key for e in self.edges}

    def topological_order(self) -> list[str]:
        """Kahn's algorithm; raises ContractError on a cycle."""
        indeg = {n: 0 for n in self.nodes}
        out: dict[str, list[str]] = {n: [] for n in self.nodes}
        for e in self.edges:
            indeg[e.child] += 1
            out[e.parent].append(e.child)
        ready = [n for n in self.nodes if indeg[n] == 0]
        order = []
        while ready:
            n = ready.pop(0)
            order.append(n)
            for c in out[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self.nodes):
            raise ContractError("skeleton contains a cycle")
        return order

    def with_edges(self, edges: Iterable[Edge]) -> "Skeleton":
        return Skeleton(self.nodes, tuple(edges))

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [
                {"parent": e.parent, "child": e.child, "chi2": e.chi2,
                 "p_value": e.p_value, "strength_class": e.strength_class}
                for e in self.edges
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Skeleton":
        return cls(tuple(d["nodes"]), tuple(Edge(**e) for e in d["edges"]))


def predefined_skeleton(weather_types=WEATHER_TYPES, traffic_types=TRAFFIC_TYPES) -> Skeleton:
    """Full bipartite edges for the four slice relations.

    weather -> traffic (former), weather' -> traffic' (latter),
    weather -> weather', traffic -> traffic'.
    """
    wf = [variable_name(t, False) for t in weather_types]
    tf = [variable_name(t, False) for t in traffic_types]
    wl = [variable_name(t, True) for t in weather_types]
    tl = [variable_name(t, True) for t in traffic_types]
    edges = []
    for src, dst in ((wf, tf), (wl, tl), (wf, wl), (tf, tl)):
        edges.extend(Edge(a, b) for a in src for b in dst)
    return Skeleton(tuple(wf + tf + wl + tl), tuple(edges))


@dataclass(frozen=True)
class ContingencyTable2x2:
    """Counts indexed ``[a][b]`` with 0 = NO and 1 = YES."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64).reshape(2, 2)
        if (c < 0).any():
            raise ContractError("contingency counts must be non-negative")
        object.__setattr__(self, "counts", c)

    @property
    def row_margins(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_margins(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class Chi2Result:
    chi2: float
    p_value: float
    df: int = 1
    degenerate: bool = False


def contingency(ds: Dataset, a: str, b: str) -> ContingencyTable2x2:
    if len(ds) == 0:
        raise ContractError("contingency table of an empty dataset")
    x = ds.col(a).astype(np.int64)
    y = ds.col(b).astype(np.int64)
    counts = np.bincount(2 * x + y, minlength=4).reshape(2, 2)
    return ContingencyTable2x2(counts)


def chi2_sf_df1(x: float) -> float:
    """Upper tail of the chi-squared distribution with one degree of freedom."""
    if x <= 0:
        return 1.0
    return math.erfc(math.sqrt(x / 2.0))


def chi2_test(t: ContingencyTable2x2) -> Chi2Result:
    """Uncorrected Pearson chi-squared test of a 2x2 table (df = 1)."""
    n = t.total
    if n <= 0:
        raise ContractError("chi-squared test needs a table with positive total")
    obs = t.counts.astype(float)
    expected = np.outer(t.row_margins, t.col_margins) / n
    degenerate = bool((expected == 0).any())
    mask = expected > 0
    stat = float((((obs - expected) ** 2)[mask] / expected[mask]).sum())
    if degenerate:
        return Chi2Result(0.0, 1.0, 1, True)
    return Chi2Result(stat, chi2_sf_df1(stat), 1, False)


def prune(skeleton: Skeleton, ds: Dataset, alpha: float = 0.05, jobs: int = 1) -> Skeleton:
    """Test every edge with an empty conditioning set; drop the independent ones.

    An edge is removed when its p-value exceeds ``alpha`` or its table is
    degenerate (a zero margin).  Survivors carry their chi2 and p-value.
    """
    if not 0 < alpha <= 1:
        raise ContractError(f"alpha must lie in (0, 1], got {alpha}")
    if len(ds) == 0:
        raise ContractError("cannot prune against an empty dataset")

    def test(e: Edge) -> Chi2Result:
        return chi2_test(contingency(ds, e.parent, e.child))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(test, skeleton.edges))
    else:
        results = [test(e) for e in skeleton.edges]

    kept = [
        replace(e, chi2=r.chi2, p_value=r.p_value)
        for e, r in zip(skeleton.edges, results)
        if not r.degenerate and r.p_value <= alpha
    ]
    return skeleton.with_edges(kept)


def _quantile_init(values: np.ndarray, k: int) -> np.ndarray:
    qs = (np.arange(k) + 0.5) / k
    return np.quantile(values, qs)


def cluster_1d(values: Sequence[float], k: int, max_iter: int = 100) -> np.ndarray:
    """Lloyd iterations on a line, initialised at evenly spaced quantiles.

    Returns class labels ordered by ascending centroid and numbered
    contiguously from 0; empty clusters disappear.
    """
    x = np.asarray(values, dtype=float)
    centroids = _quantile_init(x, k)
    labels = None
    for _ in range(max_iter):
        # argmin picks the lowest-index centroid on ties
        new = np.argmin(np.abs(x[:, None] - centroids[None, :]), axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            members = x[labels == j]
            if len(members):
                centroids[j] = members.mean()
    used = sorted(set(labels.tolist()), key=lambda j: centroids[j])
    remap = {j: rank for rank, j in enumerate(used)}
    return np.array([remap[j] for j in labels], dtype=int)


def group_strengths(edges: Sequence[Edge], k: int = 4) -> list[Edge]:
    """Label each annotated edge with a strength class from 1-D chi2 clustering."""
    edges = list(edges)
    if not edges:
        return []
    if any(not e.annotated for e in edges):
        raise ContractError("edges must carry chi2 values before grouping")
    if k < 1:
        raise ContractError(f"k must be positive, got {k}")
    if len(edges) < k:
        warnings.warn(f"only {len(edges)} edges for {k} strength classes; using k={len(edges)}")
        k = len(edges)
    labels = cluster_1d([e.chi2 for e in edges], k)
    return [replace(e, strength_class=int(c)) for e, c in zip(edges, labels)]
