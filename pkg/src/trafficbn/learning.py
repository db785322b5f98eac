"""CPD estimation over a fixed network structure."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Optional

import numpy as np

from .dataset import Dataset
from .errors import ContractError
from .network import Skeleton

MODEL_FORMAT = "trafficbn-model/1"


@dataclass(frozen=True)
class CPD:
    """P(node = YES | parents) stored sparsely.

    ``table`` and ``support`` are keyed by parent configurations (tuples of
    0/1 in ``parents`` order).  Configurations absent from ``table`` fall
    back to ``default_p_yes`` with support 0.
    """

    node: str
    parents: tuple
    table: dict
    support: dict = field(default_factory=dict)
    default_p_yes: float = 0.5

    def p_yes(self, config: tuple = ()) -> float:
        return self.table.get(tuple(config), self.default_p_yes)

    def distribution(self, config: tuple = ()) -> tuple[float, float]:
        p = self.p_yes(config)
        return p, 1.0 - p

    def is_fallback(self, config: tuple) -> bool:
        return tuple(config) not in self.table

    def dense(self) -> np.ndarray:
        """P(YES) over all parent configurations, shape ``(2,) * len(parents)``."""
        k = len(self.parents)
        arr = np.full(1 << k, self.default_p_yes, dtype=float)
        for config, p in self.table.items():
            arr[_encode(config)] = p
        return arr.reshape((2,) * k) if k else arr.reshape(())


def _encode(config: tuple) -> int:
    code = 0
    for bit in config:
        code = (code << 1) | int(bit)
    return code


def _decode(code: int, k: int) -> tuple:
    return tuple((code >> (k - 1 - i)) & 1 for i in range(k))


@dataclass(frozen=True)
class NetworkModel:
    skeleton: Skeleton
    cpds: dict
    estimator: str = "mle"
    pseudo_count: Optional[float] = None
    metadata: dict = field(default_factory=dict)
    _dense: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for node in self.skeleton.nodes:
            cpd = self.cpds.get(node)
            if cpd is None:
                raise ContractError(f"no CPD for node {node}")
            if list(cpd.parents) != self.skeleton.parents(node):
                raise ContractError(f"CPD parents of {node} differ from the skeleton in-edges")

    @property
    def nodes(self) -> tuple:
        return self.skeleton.nodes

    def parents(self, node: str) -> tuple:
        return self.cpds[node].parents

    def dense_p_yes(self, node: str) -> np.ndarray:
        arr = self._dense.get(node)
        if arr is None:
            arr = self.cpds[node].dense()
            arr.setflags(write=False)
            self._dense[node] = arr
        return arr

    def to_dict(self) -> dict:
        cpds = {}
        for node in self.skeleton.nodes:
            cpd = self.cpds[node]
            cpds[node] = {
                "parents": list(cpd.parents),
                "default_p_yes": cpd.default_p_yes,
                "rows": [
                    {"config": "".join(map(str, c)), "p_yes": cpd.table[c], "support": cpd.support.get(c, 0)}
                    for c in sorted(cpd.table)
                ],
            }
        return {
            "format": MODEL_FORMAT,
            "estimator": self.estimator,
            "pseudo_count": self.pseudo_count,
            "metadata": self.metadata,
            "skeleton": self.skeleton.to_dict(),
            "cpds": cpds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkModel":
        if d.get("format") != MODEL_FORMAT:
            raise ContractError(f"unsupported model format {d.get('format')!r}")
        cpds = {}
        for node, c in d["cpds"].items():
            table, support = {}, {}
            for row in c["rows"]:
                config = tuple(int(ch) for ch in row["config"])
                table[config] = row["p_yes"]
                support[config] = row["support"]
            cpds[node] = CPD(node, tuple(c["parents"]), table, support, c["default_p_yes"])
        return cls(Skeleton.from_dict(d["skeleton"]), cpds, d["estimator"], d["pseudo_count"], d.get("metadata", {}))

    def save(self, stream: IO[str]) -> None:
        json.dump(self.to_dict(), stream, indent=1, sort_keys=True)
        stream.write("\n")

    @classmethod
    def load(cls, stream: IO[str]) -> "NetworkModel":
        return cls.from_dict(json.load(stream))


def count_configs(ds: Dataset, node: str, parents: tuple) -> dict:
    """``{config: (n_yes, n_total)}`` over parent configurations seen in ``ds``."""
    y = ds.col(node).astype(np.int64)
    k = len(parents)
    if k == 0:
        return {(): (int(y.sum()), len(y))} if len(y) else {}
    codes = np.zeros(len(ds), dtype=np.int64)
    for p in parents:
        codes = (codes << 1) | ds.col(p).astype(np.int64)
    uniq, inverse, totals = np.unique(codes, return_inverse=True, return_counts=True)
    yes = np.bincount(inverse.reshape(-1), weights=y, minlength=len(uniq))
    return {_decode(int(c), k): (int(round(n1)), int(n)) for c, n1, n in zip(uniq, yes, totals)}


def _fit(skeleton: Skeleton, ds: Dataset, pseudo_count: float) -> dict:
    if len(ds) == 0:
        raise ContractError("cannot fit CPDs on an empty dataset")
    cpds = {}
    for node in skeleton.nodes:
        parents = tuple(skeleton.parents(node))
        table, support = {}, {}
        for config, (n_yes, n) in count_configs(ds, node, parents).items():
            table[config] = (n_yes + pseudo_count) / (n + 2 * pseudo_count)
            support[config] = n
        cpds[node] = CPD(node, parents, table, support, 0.5)
    return cpds


def fit_mle(skeleton: Skeleton, ds: Dataset, metadata: Optional[dict] = None) -> NetworkModel:
    """Count ratios N(v, pa) / N(pa); unseen configurations fall back to 0.5."""
    return NetworkModel(skeleton, _fit(skeleton, ds, 0.0), "mle", None, dict(metadata or {}))


def fit_bayes(skeleton: Skeleton, ds: Dataset, pseudo_count: float = 1.0, metadata: Optional[dict] = None) -> NetworkModel:
    """Posterior mean under a symmetric Dirichlet(pseudo_count) prior per configuration."""
    if not pseudo_count > 0:
        raise ContractError(f"pseudo_count must be positive, got {pseudo_count}")
    return NetworkModel(skeleton, _fit(skeleton, ds, float(pseudo_count)), "bayes", float(pseudo_count), dict(metadata or {}))


def fit(skeleton: Skeleton, ds: Dataset, estimator: str = "bayes", pseudo_count: float = 1.0,
        metadata: Optional[dict] = None) -> NetworkModel:
    if estimator == "mle":
        return fit_mle(skeleton, ds, metadata)
    if estimator == "bayes":
        return fit_bayes(skeleton, ds, pseudo_count, metadata)
    raise ContractError(f"unknown estimator {estimator!r}")


def model_from_tables(skeleton: Skeleton, tables: dict, estimator: str = "given") -> NetworkModel:
    """Build a model from explicit ``{node: {config: p_yes}}`` tables.

    A bare float stands for a parentless node's P(YES).
    """
    cpds = {}
    for node in skeleton.nodes:
        parents = tuple(skeleton.parents(node))
        spec = tables.get(node, 0.5)
        if not isinstance(spec, dict):
            spec = {(): float(spec)}
        table = {tuple(c): float(p) for c, p in spec.items()}
        cpds[node] = CPD(node, parents, table, {}, 0.5)
    return NetworkModel(skeleton, cpds, estimator)
