"""DOT export of a learned network with chi2-strength line widths."""

from __future__ import annotations

from typing import Mapping, Optional

from .dataset import LATTER_SUFFIX
from .errors import ContractError, NotAnnotatedError
from .network import Skeleton

ABBREVIATIONS = {
    "Accident": "Acci",
    "Congestion": "Cong",
    "FlowIncident": "Flow",
    "Construction": "Cons",
    "LaneBlocked": "Lane",
    "BrokenVehicle": "Bro",
    "Precipitation": "Pre",
}


def ancestor_subgraph(skeleton: Skeleton, sink: str) -> Skeleton:
    """Nodes with a directed path to ``sink`` (plus ``sink``) and the edges among them on such paths."""
    if sink not in skeleton.nodes:
        raise ContractError(f"unknown node {sink!r}")
    keep = {sink}
    frontier = [sink]
    while frontier:
        n = frontier.pop()
        for p in skeleton.parents(n):
            if p not in keep:
                keep.add(p)
                frontier.append(p)
    # every edge between kept nodes lies on a path to the sink: its child reaches the sink
    edges = [e for e in skeleton.edges if e.parent in keep and e.child in keep]
    return Skeleton(tuple(n for n in skeleton.nodes if n in keep), tuple(edges))


def filter_strong(skeleton: Skeleton, min_chi2: float) -> Skeleton:
    if any(not e.annotated for e in skeleton.edges):
        raise NotAnnotatedError("edges carry no chi2 values; prune first")
    edges = [e for e in skeleton.edges if e.chi2 >= min_chi2]
    used = {e.parent for e in edges} | {e.child for e in edges}
    return Skeleton(tuple(n for n in skeleton.nodes if n in used), tuple(edges))


def node_label(name: str, labels: Optional[Mapping[str, str]] = None) -> str:
    labels = ABBREVIATIONS if labels is None else labels
    latter = name.endswith(LATTER_SUFFIX)
    base = name[: -len(LATTER_SUFFIX)] if latter else name
    return labels.get(base, base) + ("'" if latter else "")


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(skeleton: Skeleton, labels: Optional[Mapping[str, str]] = None, name: str = "") -> str:
    """Render a digraph; former and latter nodes go into two ranked clusters.

    Edge ``penwidth`` is ``1 + strength_class`` (class 0 when unassigned).
    Nodes and edges are emitted sorted so output is reproducible.
    """
    head = f"digraph {_quote(name)} " if name else "digraph "
    if not skeleton.nodes:
        return head + "{ }\n"
    former = sorted(n for n in skeleton.nodes if not n.endswith(LATTER_SUFFIX))
    latter = sorted(n for n in skeleton.nodes if n.endswith(LATTER_SUFFIX))
    lines = [head + "{", "  rankdir=LR;", "  node [shape=ellipse];"]
    for cluster, members in (("former", former), ("latter", latter)):
        if not members:
            continue
        lines.append(f"  subgraph cluster_{cluster} {{")
        lines.append(f"    label={_quote(cluster)};")
        lines.append("    rank=same;")
        for n in members:
            lines.append(f"    {_quote(n)} [label={_quote(node_label(n, labels))}];")
        lines.append("  }")
    for e in sorted(skeleton.edges, key=lambda e: (e.parent, e.child)):
        width = 1 + (e.strength_class or 0)
        attrs = [f"penwidth={width}"]
        if e.chi2 is not None:
            attrs.append(f"tooltip={_quote(f'chi2={e.chi2:.6g} p={e.p_value:.3g}')}")
        lines.append(f"  {_quote(e.parent)} -> {_quote(e.child)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
