"""Command-line pipeline: ingest -> pair -> build-dataset -> learn -> predict/evaluate/analyze/visualize.

Every subcommand writes a ``*.manifest.json`` next to its output recording the
inputs (with sha256), the resolved configuration, the seed and library
versions.  Defaults can come from a ``key=value`` config file given with
``--config`` or the ``TRAFFICBN_CONFIG`` environment variable; a key applies
to every subcommand that has that option, ``<subcommand>.<key>`` to one only.
Flags on the command line always win.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import platform
import re
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .dataset import (
    Dataset,
    balance,
    build_dataset,
    partition_by_city,
    read_dataset,
    tomek_links,
    write_dataset,
)
from .errors import (
    ContractError,
    DegenerateClassError,
    InsufficientDataError,
    NotAnnotatedError,
    SchemaError,
    TrafficBNError,
)
from .evaluation import (
    CITY_CODES,
    REFERENCE_RESULTS,
    BNClassifier,
    RandomBaseline,
    SplitSpec,
    evaluate_baseline,
    evaluate_model,
    fit_knn,
    fit_logistic,
    format_table,
    results_json,
    split,
)
from .events import Kind, deduplicate, parse_events, write_entities, write_rejects
from .inference import influence, label, neighbors
from .learning import NetworkModel, fit
from .network import Skeleton, group_strengths, predefined_skeleton, prune
from .pairing import PairingConfig, causal_links, fill_nearest_station, read_links, station_locations, write_links
from .viz import ABBREVIATIONS, ancestor_subgraph, filter_strong, to_dot

CONFIG_ENV = "TRAFFICBN_CONFIG"
EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class UsageError(TrafficBNError):
    """Bad invocation or a missing upstream artifact."""


# -- helpers ---------------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _require(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"missing {what}: {p}")
    return p


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_manifest(out: Path, args, inputs: list, outputs: list) -> Path:
    """Record provenance next to ``out`` (a file or a directory)."""
    out = Path(out)
    target = out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")
    config = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    manifest = {
        "command": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "inputs": {str(p): _sha256(Path(p)) for p in inputs if Path(p).is_file()},
        "outputs": [str(p) for p in outputs],
        "versions": {
            "trafficbn": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    target.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return target


def read_manifest(path: Path) -> dict:
    p = path / "manifest.json" if path.is_dir() else path.with_name(path.name + ".manifest.json")
    if not p.exists():
        return {}
    return json.loads(p.read_text())


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load_entities(directory: Path):
    entities = []
    for kind in (Kind.WEATHER, Kind.TRAFFIC):
        path = _require(directory / f"{kind.value}.csv", f"{kind.value} entities (run ingest first)")
        text = _read_text(path)
        if not text.strip():
            continue
        found, rejects = parse_events(text.splitlines(keepends=True), kind)
        if rejects:
            raise SchemaError(f"{path} holds {len(rejects)} invalid rows; it should come from ingest")
        entities.extend(found)
    return entities


def _load_dataset(path) -> Dataset:
    p = _require(path, "dataset (run build-dataset first)")
    with open(p, newline="") as f:
        return read_dataset(f)


def _load_model(path) -> NetworkModel:
    p = _require(path, "model (run learn first)")
    try:
        with open(p) as f:
            return NetworkModel.load(f)
    except (json.JSONDecodeError, KeyError) as exc:
        raise SchemaError(f"{p} is not a model file: {exc}") from None


def _slug(city: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", city).strip("_") or "unknown"


def _skeleton_for(ds: Dataset) -> Skeleton:
    full = predefined_skeleton()
    cols = set(ds.columns)
    missing = [n for n in full.nodes if n not in cols]
    if missing:
        raise SchemaError(f"dataset lacks variables: {', '.join(missing)}")
    return full


def _learn(ds: Dataset, estimator: str, pseudo_count: float, alpha: float, k: int,
           do_prune: bool, jobs: int, extra_meta: dict) -> NetworkModel:
    skeleton = _skeleton_for(ds)
    if do_prune:
        skeleton = prune(skeleton, ds, alpha=alpha, jobs=jobs)
        skeleton = skeleton.with_edges(group_strengths(skeleton.edges, k))
    meta = {"alpha": alpha if do_prune else None, "k": k, "pruned": do_prune, "rows": len(ds)}
    meta.update(extra_meta)
    return fit(skeleton, ds, estimator, pseudo_count, meta)


def _resolve_city_file(directory: Path, city: str) -> Path:
    for name in (city, CITY_CODES.get(city, city)):
        p = directory / f"city_{_slug(name)}.csv"
        if p.exists():
            return p
    raise UsageError(f"missing per-city dataset for {city} in {directory} (run build-dataset --by-city)")


def _parse_spec(text: str) -> tuple[int, int]:
    try:
        pos, neg = (int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--spec expects POS,NEG, got {text!r}") from None
    if pos < 1 or neg < 1:
        raise UsageError("--spec counts must be positive")
    return pos, neg


def _csv_list(text) -> list:
    if text is None:
        return []
    if isinstance(text, list):
        return text
    return [x.strip() for x in text.split(",") if x.strip()]


# -- subcommands -----------------------------------------------------------

def cmd_ingest(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    parsed = {}
    for kind, src in ((Kind.WEATHER, args.weather), (Kind.TRAFFIC, args.traffic)):
        path = _require(src, f"{kind.value} input")
        text = _read_text(path)
        if not text.strip():
            warnings.warn(f"{path} is empty; 0 {kind.value} entities")
            parsed[kind] = ([], [])
            continue
        parsed[kind] = parse_events(text.splitlines(keepends=True), kind)
    combined = deduplicate(parsed[Kind.WEATHER][0] + parsed[Kind.TRAFFIC][0])
    outputs = []
    for kind in (Kind.WEATHER, Kind.TRAFFIC):
        entities = [e for e in combined if e.kind is kind]
        rejects = parsed[kind][1]
        with open(out / f"{kind.value}.csv", "w", newline="") as f:
            write_entities(entities, f, kind)
        with open(out / f"rejects_{kind.value}.csv", "w", newline="") as f:
            write_rejects(rejects, f, kind)
        outputs += [out / f"{kind.value}.csv", out / f"rejects_{kind.value}.csv"]
        print(f"{kind.value}: {len(entities)} entities, {len(rejects)} rejected")
        if not entities:
            warnings.warn(f"0 {kind.value} entities ingested")
    write_manifest(out, args, [args.weather, args.traffic], outputs)
    return EXIT_OK


def cmd_pair(args) -> int:
    directory = _require(args.entities, "entities directory (run ingest first)")
    entities = _load_entities(directory)
    weather = [e for e in entities if e.kind is Kind.WEATHER]
    traffic = fill_nearest_station([e for e in entities if e.kind is Kind.TRAFFIC], station_locations(weather))
    try:
        cfg = PairingConfig(t_thresh=args.t_thresh, d_thresh=args.d_thresh)
    except ContractError as exc:
        raise UsageError(str(exc)) from None
    links = causal_links(weather + traffic, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        write_links(links, f)
    print(f"{len(links)} causal links from {len(entities)} entities")
    write_manifest(out, args, [directory / "weather.csv", directory / "traffic.csv"], [out])
    return EXIT_OK


def cmd_build_dataset(args) -> int:
    pairs = _require(args.pairs, "pairs file (run pair first)")
    entities_dir = args.entities or read_manifest(pairs).get("config", {}).get("entities")
    if not entities_dir:
        raise UsageError("cannot locate the entities directory; pass --entities")
    entities_dir = _require(entities_dir, "entities directory (run ingest first)")
    entities = _load_entities(entities_dir)
    with open(pairs, newline="") as f:
        try:
            links = read_links(f)
        except KeyError as exc:
            raise SchemaError(f"{pairs} lacks column {exc}") from None
    ds = build_dataset(entities, links, args.mode, include_weather_anchors=not args.exclude_weather_anchors)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = [out / "dataset.csv"]
    with open(outputs[0], "w", newline="") as f:
        write_dataset(ds, f)
    print(f"dataset: {len(ds)} rows")

    def finish(part: Dataset, path: Path, name: str) -> None:
        if args.balance:
            if args.tomek:
                print(f"{name}: {len(tomek_links(part, args.target))} Tomek-link rows")
            part = balance(part, args.target, args.seed, tomek=args.tomek)
        with open(path, "w", newline="") as f:
            write_dataset(part, f)
        outputs.append(path)
        print(f"{name}: {len(part)} rows")

    if args.by_city:
        for city, part in partition_by_city(ds).items():
            try:
                finish(part, out / f"city_{_slug(city)}.csv", city)
            except DegenerateClassError as exc:
                warnings.warn(f"skipping {city}: {exc}")
    elif args.balance:
        finish(ds, out / "dataset_balanced.csv", "balanced")
    write_manifest(out, args, [pairs, entities_dir / "weather.csv", entities_dir / "traffic.csv"], outputs)
    return EXIT_OK


def cmd_learn(args) -> int:
    ds = _load_dataset(args.dataset)
    if len(ds) == 0:
        raise InsufficientDataError(f"{args.dataset} has no rows")
    model = _learn(ds, args.estimator, args.pseudo_count, args.alpha, args.k, not args.no_prune,
                   args.jobs, {"dataset": Path(args.dataset).name})
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as f:
        model.save(f)
    print(f"model: {len(model.skeleton.edges)} edges, estimator {model.estimator}")
    write_manifest(out, args, [args.dataset], [out])
    return EXIT_OK


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    ds = _load_dataset(args.test)
    if args.target not in model.cpds:
        raise UsageError(f"unknown target {args.target!r}")
    clf = BNClassifier(model, args.target, args.threshold, args.scope)
    out = Path(args.out) if args.out else None
    stream = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["AnchorId", "City", "Target", "P_YES", "Predicted", "Actual"])
        for i in range(len(ds)):
            row = dict(zip(ds.columns, (int(v) for v in ds.values[i])))
            p = clf.p_yes(row)
            writer.writerow([ds.anchor_ids[i], ds.cities[i], args.target, f"{p:.6f}",
                             "YES" if p >= args.threshold else "NO", label(row[args.target])])
    finally:
        if out:
            stream.close()
    if out:
        write_manifest(out, args, [args.model, args.test], [out])
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = _load_model(args.model)
    directory = _require(args.dataset, "dataset directory (run build-dataset first)")
    pos, neg = _parse_spec(args.spec)
    meta = model.metadata
    cities = _csv_list(args.cities)
    baselines = _csv_list(args.baselines)
    for b in baselines:
        if b not in ("lr", "knn", "random"):
            raise UsageError(f"unknown baseline {b!r}")
    results: dict = {"BN": {}}
    names = {"lr": "LR", "knn": "KNN", "random": "Random"}
    for b in baselines:
        results[names[b]] = {}
    inputs = [args.model]
    for city in cities:
        path = _resolve_city_file(directory, city)
        inputs.append(path)
        ds = _load_dataset(path)
        train, test = split(ds, SplitSpec(pos, neg, args.seed), args.target)
        # the network is refitted on each city's training rows with the model's settings
        bn = _learn(train, model.estimator if model.estimator in ("mle", "bayes") else "bayes",
                    model.pseudo_count or 1.0, meta.get("alpha") or 0.05, meta.get("k", 4),
                    bool(meta.get("pruned", True)), args.jobs, {"dataset": path.name})
        results["BN"][city] = evaluate_model(bn, test, args.target, args.threshold, args.scope)
        for b in baselines:
            if b == "lr":
                clf = fit_logistic(train, args.target, seed=args.seed)
            elif b == "knn":
                clf = fit_knn(train, args.target, k=args.knn_k)
            else:
                clf = RandomBaseline(args.target, args.seed)
            results[names[b]][city] = evaluate_baseline(clf, test)
    sys.stdout.write(format_table(results, cities))
    if args.reference:
        print("\nreference (full source data):")
        for m, rows in REFERENCE_RESULTS.items():
            for metric, per_city in rows.items():
                print(f"{m:<6} {metric:<8} " + " ".join(f"{per_city.get(c, float('nan')):7.2f}" for c in cities))
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(results_json(results))
        write_manifest(out, args, inputs, [out])
    return EXIT_OK


def cmd_analyze(args) -> int:
    model = _load_model(args.model)
    if args.target not in model.cpds:
        raise UsageError(f"unknown target {args.target!r}")
    factors = _csv_list(args.factors) or neighbors(model, args.target)
    if args.target in factors:
        raise UsageError("a factor cannot be the target itself")
    unknown = [f for f in factors if f not in model.cpds]
    if unknown:
        raise UsageError(f"unknown factors: {', '.join(unknown)}")
    lines = ["factor,p_yes_given_factor_yes,p_yes_given_factor_no,delta"]
    for f in factors:
        r = influence(model, f, args.target)
        lines.append(f"{f},{r.p_given_yes:.6f},{r.p_given_no:.6f},{r.delta:+.6f}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        write_manifest(out, args, [args.model], [out])
    return EXIT_OK


def cmd_visualize(args) -> int:
    model = _load_model(args.model)
    skeleton = model.skeleton
    if any(not e.annotated for e in skeleton.edges):
        raise NotAnnotatedError("model edges carry no chi2 values; prune first (learn without --no-prune)")
    skeleton = skeleton.with_edges(group_strengths(skeleton.edges, args.k))
    flt = args.filter
    if flt == "strong":
        skeleton = filter_strong(skeleton, args.min_chi2)
    elif flt.startswith("to:"):
        skeleton = ancestor_subgraph(skeleton, flt[3:])
    elif flt != "none":
        raise UsageError(f"unknown filter {flt!r}")
    labels = None
    if args.labels:
        labels = dict(ABBREVIATIONS)
        for item in _csv_list(args.labels):
            if "=" not in item:
                raise UsageError(f"--labels expects Name=Label items, got {item!r}")
            k, v = item.split("=", 1)
            labels[k.strip()] = v.strip()
    dot = to_dot(skeleton, labels)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(dot)
        write_manifest(out, args, [args.model], [out])
    else:
        sys.stdout.write(dot)
    return EXIT_OK


def cmd_synth_events(args) -> int:
    from .synth import synth_events

    weather, traffic = synth_events(args.n, args.seed, tuple(_csv_list(args.cities)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "weather.csv", "w", newline="") as f:
        write_entities(weather, f, Kind.WEATHER)
    with open(out / "traffic.csv", "w", newline="") as f:
        write_entities(traffic, f, Kind.TRAFFIC)
    print(f"{len(weather)} weather and {len(traffic)} traffic events")
    write_manifest(out, args, [], [out / "weather.csv", out / "traffic.csv"])
    return EXIT_OK


def cmd_synth_planted(args) -> int:
    from .synth import planted_model, sample

    ds = sample(planted_model(), args.rows, args.seed, city=args.city)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        write_dataset(ds, f)
    print(f"{len(ds)} rows")
    write_manifest(out, args, [], [out])
    return EXIT_OK


# -- argument parsing ------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trafficbn", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help=f"key=value defaults file (default: ${CONFIG_ENV})")
    parser.add_argument("--jobs", type=int, default=1, help="worker cap for parallel stages")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and deduplicate raw event files")
    p.add_argument("--weather", required=True)
    p.add_argument("--traffic", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("pair", help="find correlated pairs and causal links")
    p.add_argument("--entities", required=True)
    p.add_argument("--t-thresh", type=float, default=3600.0, help="seconds")
    p.add_argument("--d-thresh", type=float, default=10.0, help="kilometres")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("build-dataset", help="two-slice rows, optional per-city split and balancing")
    p.add_argument("--pairs", required=True)
    p.add_argument("--entities", help="defaults to the directory recorded by pair")
    p.add_argument("--mode", choices=("binary", "leveled"), default="binary")
    p.add_argument("--by-city", action="store_true")
    p.add_argument("--balance", action="store_true")
    p.add_argument("--tomek", action="store_true", help="drop Tomek-link majority rows before undersampling")
    p.add_argument("--exclude-weather-anchors", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", default="Accident_L")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("learn", help="prune the predefined skeleton and fit CPDs")
    p.add_argument("--dataset", required=True)
    p.add_argument("--estimator", choices=("mle", "bayes"), default="bayes")
    p.add_argument("--pseudo-count", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--k", type=int, default=4, help="edge strength classes")
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("predict", help="posterior and label per test row")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--target", default="Accident_L")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--scope", choices=("all", "neighbors"), default="all")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="per-city comparison against baselines")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True, help="directory written by build-dataset --by-city")
    p.add_argument("--cities", default="AT,AU,CH,DA")
    p.add_argument("--spec", default="1000,1000", help="test YES,NO counts")
    p.add_argument("--baselines", default="lr,knn")
    p.add_argument("--target", default="Accident_L")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--scope", choices=("all", "neighbors"), default="all")
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference", action="store_true", help="also print the published reference table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="single-factor influence on a target")
    p.add_argument("--model", required=True)
    p.add_argument("--target", default="Accident_L")
    p.add_argument("--factors", help="comma list; default: direct neighbours of the target")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("visualize", help="DOT export")
    p.add_argument("--model", required=True)
    p.add_argument("--filter", default="none", help="none | strong | to:<node>")
    p.add_argument("--min-chi2", type=float, default=10000.0)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--labels", help="comma list of Name=Label overriding the abbreviations")
    p.add_argument("--out")
    p.set_defaults(func=cmd_visualize)

    p = sub.add_parser("synth-events", help="write a small synthetic raw event pair")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--cities", default="AT,AU")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_events)

    p = sub.add_parser("synth-planted", help="sample a dataset from the planted two-slice model")
    p.add_argument("--rows", type=int, default=50000)
    p.add_argument("--city", default="SYN")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_planted)
    return parser


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; dashes and underscores are interchangeable."""
    cfg = {}
    for n, line in enumerate(_read_text(Path(path)).splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}


def _apply_config(parser: argparse.ArgumentParser, argv: list, cfg: dict) -> None:
    pre, _ = parser.parse_known_args(argv)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in sub.choices.items():
        if name != pre.command:
            continue
        dests = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, value in cfg.items():
            scope, _, bare = key.rpartition(".")
            if scope and scope.replace("-", "_") != name.replace("-", "_"):
                continue
            action = dests.get(bare)
            if action is None or bare in ("help",):
                continue
            if isinstance(action, argparse._StoreTrueAction):
                if value.lower() not in _TRUE | _FALSE:
                    raise UsageError(f"config {key}: expected a boolean, got {value!r}")
                defaults[bare] = value.lower() in _TRUE
            else:
                # string defaults go through the option's type conversion at parse time
                defaults[bare] = value
                action.required = False
        sp.set_defaults(**defaults)
    if "jobs" in cfg:
        parser.set_defaults(jobs=int(cfg["jobs"]))


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre, _ = parser.parse_known_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        warnings.showwarning = _show_warning
        try:
            config_path = pre.config or os.environ.get(CONFIG_ENV)
            if config_path:
                _apply_config(parser, argv, read_config(config_path))
            try:
                args = parser.parse_args(argv)
            except SystemExit as exc:
                return int(exc.code or 0)
            if args.jobs < 1:
                raise UsageError("--jobs must be at least 1")
            return args.func(args)
        except (UsageError, SchemaError, ContractError, NotAnnotatedError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except TrafficBNError as exc:
            # degenerate classes, impossible evidence, too few rows
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
