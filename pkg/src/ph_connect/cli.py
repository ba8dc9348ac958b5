"""Batch CLI over the two persistence pipelines.

Subcommands mirror the processing stages (synth, embed, rips, graphph,
wdist, stats, classify, barcode) and `pipeline` composes them end to end.
Every output path is deterministic (<subject>/<network>/<stage>.<ext>) and
every artifact is written in a canonical form, so re-running a command
with identical inputs and seed reproduces the output tree byte for byte.

Exit codes: 0 success, 1 validation error, 2 resource-guard abort.

A config file of `key = value` lines may supply any long flag's value
(dashes become underscores); explicit flags win over the config.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytics, barcode, classify, diagrams, distances, embedding, graphs, ingest
from .errors import ResourceGuardError, ValidationError


# ----------------------------------------------------------------------
# config file + flag merging
# ----------------------------------------------------------------------

def load_config(path) -> dict:
    """Parse a minimal key = value file; ints, floats, booleans, and quoted
    strings are coerced, everything else stays a string."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key = value")
            key, _, raw = line.partition("=")
            key = key.strip().replace("-", "_")
            raw = raw.strip()
            if raw.startswith(("'", '"')) and raw.endswith(raw[0]) and len(raw) >= 2:
                value = raw[1:-1]
            elif raw.lower() in ("true", "false"):
                value = raw.lower() == "true"
            else:
                try:
                    value = int(raw)
                except ValueError:
                    try:
                        value = float(raw)
                    except ValueError:
                        value = raw
            out[key] = value
    return out


def opt(args, key, default=None):
    """Flag if given, else config value, else default."""
    v = getattr(args, key, None)
    if v is not None:
        return v
    cfg = getattr(args, "_config", None) or {}
    if key in cfg:
        return cfg[key]
    return default


def _parse_exponent(v) -> float:
    if isinstance(v, str) and v.lower() == "inf":
        return math.inf
    return float(v)


def _parse_essential(v):
    if v is None or v == "drop":
        return ("drop", None)
    if isinstance(v, str) and v.startswith("cap="):
        return ("cap", float(v[4:]))
    raise ValidationError(f"--essential must be 'drop' or 'cap=V', got {v!r}")


def _wasserstein_params(args, default_essential=("drop", None)) -> distances.WassersteinParams:
    essential, cap = _parse_essential(opt(args, "essential"))
    if opt(args, "essential") is None:
        essential, cap = default_essential
    return distances.WassersteinParams(
        p=_parse_exponent(opt(args, "p", 2.0)),
        q=_parse_exponent(opt(args, "q", "inf")),
        essential=essential,
        cap=cap,
    )


def _json_dump(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ----------------------------------------------------------------------
# synth
# ----------------------------------------------------------------------

def cmd_synth(args) -> int:
    out = Path(opt(args, "out", "cohort"))
    cohort = ingest.generate_synthetic_cohort(
        n_per_group=opt(args, "n", 10),
        T=opt(args, "t", 48),
        seed=opt(args, "seed", 0),
        recipe=opt(args, "recipe", "loop_vs_noise"),
    )
    subj_dir = out / "subjects"
    subj_dir.mkdir(parents=True, exist_ok=True)
    for table in cohort.subjects:
        ingest.save_timeseries(table, subj_dir / f"{table.subject_id}.csv")
    ingest.save_manifest(cohort.labels(), out / "manifest.csv")
    ingest.save_atlas(cohort.atlas, out / "atlas.json")
    print(f"wrote {len(cohort.subjects)} subjects under {out}")
    return 0


# ----------------------------------------------------------------------
# embed
# ----------------------------------------------------------------------

def _load_subject(args, input_path) -> ingest.TimeSeriesTable:
    table = ingest.load_timeseries(input_path)
    manifest = opt(args, "manifest")
    if manifest:
        labels = ingest.load_manifest(manifest)
        if table.subject_id in labels:
            table = ingest.TimeSeriesTable(
                channel_names=table.channel_names,
                samples=np.array(table.samples),
                subject_id=table.subject_id,
                group_label=labels[table.subject_id],
            )
    return table


def _maybe_slice(args, table):
    atlas_path = opt(args, "atlas")
    network = opt(args, "network")
    if network:
        atlas = ingest.load_atlas(atlas_path) if atlas_path else ingest.default_atlas()
        return ingest.slice_network(table, atlas, network), network
    return table, "all"


def cmd_embed(args) -> int:
    table = _load_subject(args, opt(args, "input"))
    table, network = _maybe_slice(args, table)
    params = embedding.EmbeddingParams(m=opt(args, "m", 2), tau=opt(args, "tau", 1))
    out = Path(opt(args, "out", "out")) / table.subject_id / network
    out.mkdir(parents=True, exist_ok=True)
    for name in table.channel_names:
        cloud = embedding.sliding_window_embed(
            table.channel(name), params, channel=name,
            normalize=bool(opt(args, "normalize", False)),
        )
        embedding.save_cloud(cloud, out / f"pointcloud_{name}.json")
    print(f"embedded {table.n_channels} channels into {out}")
    return 0


# ----------------------------------------------------------------------
# rips
# ----------------------------------------------------------------------

def cmd_rips(args) -> int:
    from .rips import DEFAULT_SIMPLEX_CAP, DistanceSpec, rips_diagrams

    input_path = Path(opt(args, "input"))
    cloud = embedding.load_cloud(input_path)
    maxdim = opt(args, "maxdim", 2)
    threshold = opt(args, "threshold")
    dspec = DistanceSpec(threshold=float(threshold) if threshold else None)
    dgms = rips_diagrams(cloud, max_dim=maxdim, spec=dspec,
                         simplex_cap=opt(args, "simplex_cap", DEFAULT_SIMPLEX_CAP))
    out = Path(opt(args, "out", "."))
    out.mkdir(parents=True, exist_ok=True)
    stem = input_path.stem
    for dgm in dgms:
        diagrams.save_diagram(dgm, out / f"{stem}_h{dgm.dimension}.json")
    print(f"wrote {len(dgms)} diagrams for {stem} under {out}")
    return 0


# ----------------------------------------------------------------------
# graphph
# ----------------------------------------------------------------------

def cmd_graphph(args) -> int:
    table = _load_subject(args, opt(args, "input"))
    table, network = _maybe_slice(args, table)
    graph = graphs.connectivity_graph(
        table,
        weight_source=opt(args, "weight_source", "marginal"),
        shrinkage=opt(args, "shrinkage"),
    )
    filt = graphs.graph_sublevel_filtration(
        graph,
        transform=opt(args, "transform", "one-minus-w").replace("-", "_"),
        direction=opt(args, "direction", "sublevel"),
    )
    h0, h1 = graphs.graph_persistence(filt)
    out = Path(opt(args, "out", "out")) / table.subject_id / network
    out.mkdir(parents=True, exist_ok=True)
    _json_dump(graphs.graph_to_dict(graph), out / "graph.json")
    diagrams.save_diagram(h0, out / "graph_h0.json")
    diagrams.save_diagram(h1, out / "graph_h1.json")
    print(f"wrote graph and diagrams under {out}")
    return 0


# ----------------------------------------------------------------------
# wdist
# ----------------------------------------------------------------------

def _subject_dirs(run: Path):
    return sorted(p for p in run.iterdir() if p.is_dir())


def cmd_wdist(args) -> int:
    run = Path(opt(args, "run", "out"))
    mode = opt(args, "mode", "roi")
    network = opt(args, "network", "all")
    dim = opt(args, "dim", 1)
    filtration = opt(args, "filtration", "rips" if mode == "roi" else "graph")
    if mode == "roi":
        params = _wasserstein_params(args)
        count = 0
        for subj_dir in _subject_dirs(run):
            net_dir = subj_dir / network
            files = sorted(net_dir.glob(f"rips_*_h{dim}.json"))
            if not files:
                continue
            dgms = {
                f.name[len("rips_"):-len(f"_h{dim}.json")]: diagrams.load_diagram(f)
                for f in files
            }
            matrix = analytics.inter_roi_matrix(dgms, params, network=network,
                                                filtration="rips")
            analytics.save_distance_matrix(
                matrix, net_dir / f"wd_roi_rips_h{dim}.csv"
            )
            count += 1
        if count == 0:
            raise ValidationError(
                f"no rips_*_h{dim}.json diagrams found under {run}/<subject>/{network}"
            )
        print(f"wrote {count} inter-ROI matrices")
        return 0
    if mode == "subject":
        params = _wasserstein_params(args, default_essential=("cap", 1.0))
        dgms = {}
        for subj_dir in _subject_dirs(run):
            f = subj_dir / network / f"{filtration}_h{dim}.json"
            if f.exists():
                dgms[subj_dir.name] = diagrams.load_diagram(f)
        if len(dgms) < 2:
            raise ValidationError(
                f"found {len(dgms)} {filtration}_h{dim}.json diagrams under {run}"
            )
        matrix = analytics.inter_subject_matrix(dgms, params, network=network,
                                                filtration=filtration)
        out_dir = run / "_cohort" / network
        out_dir.mkdir(parents=True, exist_ok=True)
        analytics.save_distance_matrix(
            matrix, out_dir / f"wd_subjects_{filtration}_h{dim}.csv"
        )
        print(f"wrote {out_dir / f'wd_subjects_{filtration}_h{dim}.csv'}")
        return 0
    raise ValidationError(f"unknown mode {mode!r}")


# ----------------------------------------------------------------------
# stats
# ----------------------------------------------------------------------

def _group_pair(args, labels: dict):
    a, b = opt(args, "group_a"), opt(args, "group_b")
    if a and b:
        return a, b
    groups = sorted(set(labels.values()))
    if len(groups) == 2:
        return groups[0], groups[1]
    raise ValidationError(
        f"manifest has groups {groups}; pass --group-a and --group-b"
    )


def cmd_stats(args) -> int:
    matrix = analytics.load_distance_matrix(opt(args, "matrix"))
    labels = ingest.load_manifest(opt(args, "manifest"))
    a, b = _group_pair(args, labels)
    result = analytics.group_distance_test(matrix, labels, a, b)
    payload = {
        "group_a": a, "group_b": b,
        "statistic": result.statistic, "p_value": result.p_value,
        "n1": result.n1, "n2": result.n2, "method": result.method,
        "network": matrix.meta.network, "dimension": matrix.meta.dimension,
        "filtration": matrix.meta.filtration,
    }
    out = opt(args, "out")
    if out:
        _json_dump(payload, out)
    print(json.dumps(payload, sort_keys=True))
    return 0


# ----------------------------------------------------------------------
# classify
# ----------------------------------------------------------------------

def _lifespan_dataset(run: Path, network: str, dim: int, labels: dict,
                      k: int, cap: float) -> classify.Dataset:
    feats = {}
    for subj_dir in _subject_dirs(run):
        f = subj_dir / network / f"graph_h{dim}.json"
        if f.exists():
            feats[subj_dir.name] = analytics.top_k_lifespans(
                diagrams.load_diagram(f), k=k, cap=cap,
                subject_id=subj_dir.name, network=network,
            )
    if not feats:
        raise ValidationError(
            f"no graph_h{dim}.json diagrams under {run}/<subject>/{network}"
        )
    return classify.make_dataset_lifespans(feats, labels)


def _wdroi_dataset(run: Path, network: str, dim: int, labels: dict) -> classify.Dataset:
    mats = {}
    for subj_dir in _subject_dirs(run):
        f = subj_dir / network / f"wd_roi_rips_h{dim}.csv"
        if f.exists():
            mats[subj_dir.name] = analytics.load_distance_matrix(f)
    if not mats:
        raise ValidationError(
            f"no wd_roi_rips_h{dim}.csv matrices under {run}/<subject>/{network}"
        )
    return classify.make_dataset_wd(mats, labels)


def _model_spec(args) -> dict:
    model = opt(args, "model", "knn")
    if model == "knn":
        return {"model": "knn", "k_neighbors": opt(args, "knn_k", 3)}
    if model == "logistic":
        return {"model": "logistic", "l2": opt(args, "l2", 0.01),
                "max_iter": opt(args, "max_iter", 200)}
    raise ValidationError(f"unknown model {model!r}")


def cmd_classify(args) -> int:
    run = Path(opt(args, "run", "out"))
    labels = ingest.load_manifest(opt(args, "manifest"))
    network = opt(args, "network", "all")
    dim = opt(args, "dim", 1)
    features = opt(args, "features", "wdroi")
    if features == "lifespans":
        dataset = _lifespan_dataset(run, network, dim, labels,
                                    k=opt(args, "topk", 10),
                                    cap=opt(args, "cap", 1.0))
    elif features == "wdroi":
        dataset = _wdroi_dataset(run, network, dim, labels)
    else:
        raise ValidationError(f"unknown features {features!r}")
    if opt(args, "select_top"):
        dataset = classify.select_top_features(dataset, n=opt(args, "select_top"))
    protocol = opt(args, "protocol", "holdout")
    protocol = "holdout_80_20" if protocol in ("holdout", "holdout_80_20") else protocol
    report = classify.evaluate(
        dataset, protocol=protocol, model_spec=_model_spec(args),
        seed=opt(args, "seed", 0), folds=opt(args, "folds", 5),
    )
    out = opt(args, "out")
    if out:
        classify.save_report(report, out)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


# ----------------------------------------------------------------------
# barcode
# ----------------------------------------------------------------------

def cmd_barcode(args) -> int:
    dgms = [diagrams.load_diagram(p) for p in args.inputs]
    cap = opt(args, "cap")
    if cap is None:
        deaths = [d for dg in dgms for _, d in dg.pairs if math.isfinite(d)]
        cap = max(deaths) if deaths else 1.0
    out = opt(args, "out", "barcode.svg")
    barcode.save_barcode_svg(dgms, float(cap), out,
                             title=opt(args, "title", ""))
    print(f"wrote {out}")
    return 0


# ----------------------------------------------------------------------
# pipeline
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    input_dir: str
    manifest: str
    atlas: str
    out: str
    seed: int
    m: int = 2
    tau: int = 1
    normalize: bool = False
    maxdim: int = 1
    p: float = 2.0
    q: float = math.inf
    essential: str = "drop"
    cap: float | None = None
    weight_source: str = "marginal"
    transform: str = "one_minus_w"
    direction: str = "sublevel"
    shrinkage: float | None = None
    topk: int = 10
    model: str = "knn"
    knn_k: int = 3
    l2: float = 0.01
    max_iter: int = 200
    folds: int = 5
    protocol: str = "holdout_80_20"
    dim: int = 1
    jobs: int = 1
    save_pointclouds: bool = False

    def __post_init__(self):
        for path in (self.input_dir, self.manifest, self.atlas):
            if not Path(path).exists():
                raise ValidationError(f"path does not exist: {path}")


def _pipeline_config(args) -> PipelineConfig:
    input_dir = opt(args, "input")
    if input_dir is None:
        raise ValidationError("--input cohort directory is required")
    seed = opt(args, "seed")
    if seed is None:
        raise ValidationError("--seed is required for pipeline runs")
    manifest = opt(args, "manifest") or str(Path(input_dir) / "manifest.csv")
    atlas = opt(args, "atlas") or str(Path(input_dir) / "atlas.json")
    essential, cap = _parse_essential(opt(args, "essential", "drop"))
    return PipelineConfig(
        input_dir=str(input_dir),
        manifest=manifest,
        atlas=atlas,
        out=str(opt(args, "out", "run")),
        seed=int(seed),
        m=opt(args, "m", 2),
        tau=opt(args, "tau", 1),
        normalize=bool(opt(args, "normalize", False)),
        maxdim=opt(args, "maxdim", 1),
        p=_parse_exponent(opt(args, "p", 2.0)),
        q=_parse_exponent(opt(args, "q", "inf")),
        essential=essential,
        cap=cap,
        weight_source=opt(args, "weight_source", "marginal"),
        transform=opt(args, "transform", "one-minus-w").replace("-", "_"),
        direction=opt(args, "direction", "sublevel"),
        shrinkage=opt(args, "shrinkage"),
        topk=opt(args, "topk", 10),
        model=opt(args, "model", "knn"),
        knn_k=opt(args, "knn_k", 3),
        l2=opt(args, "l2", 0.01),
        max_iter=opt(args, "max_iter", 200),
        folds=opt(args, "folds", 5),
        protocol=opt(args, "protocol", "holdout_80_20"),
        dim=opt(args, "dim", 1),
        jobs=opt(args, "jobs", os.cpu_count() or 1),
        save_pointclouds=bool(opt(args, "save_pointclouds", False)),
    )


def _subject_stage(task: dict) -> str:
    """Per-subject work unit: embed + Rips diagrams per channel, graph
    diagrams, and inter-ROI matrices, written under out/<sid>/<network>/.

    Module-level so it can cross a process-pool boundary.
    """
    from .rips import DistanceSpec, rips_diagrams

    cfg = task["cfg"]
    table = ingest.load_timeseries(task["csv"], subject_id=task["sid"],
                                   group_label=task["group"])
    atlas = ingest.NetworkAtlas(networks={
        name: tuple(chans) for name, chans in task["networks"].items()
    })
    params = embedding.EmbeddingParams(m=cfg["m"], tau=cfg["tau"])
    wparams = distances.WassersteinParams(
        p=cfg["p"], q=cfg["q"], essential=cfg["essential"], cap=cfg["cap"]
    )
    for network in sorted(atlas.networks):
        view = ingest.slice_network(table, atlas, network)
        net_dir = Path(cfg["out"]) / task["sid"] / network
        net_dir.mkdir(parents=True, exist_ok=True)
        per_dim: dict = {k: {} for k in range(cfg["maxdim"] + 1)}
        for name in view.channel_names:
            cloud = embedding.sliding_window_embed(
                view.channel(name), params, channel=name,
                normalize=cfg["normalize"],
            )
            if cfg["save_pointclouds"]:
                embedding.save_cloud(cloud, net_dir / f"pointcloud_{name}.json")
            for dgm in rips_diagrams(cloud, max_dim=cfg["maxdim"],
                                     spec=DistanceSpec()):
                diagrams.save_diagram(
                    dgm, net_dir / f"rips_{name}_h{dgm.dimension}.json"
                )
                per_dim[dgm.dimension][name] = dgm
        for dim, dgms in sorted(per_dim.items()):
            matrix = analytics.inter_roi_matrix(dgms, wparams, network=network,
                                                filtration="rips")
            analytics.save_distance_matrix(
                matrix, net_dir / f"wd_roi_rips_h{dim}.csv"
            )
        graph = graphs.connectivity_graph(
            view, weight_source=cfg["weight_source"], shrinkage=cfg["shrinkage"]
        )
        filt = graphs.graph_sublevel_filtration(
            graph, transform=cfg["transform"], direction=cfg["direction"]
        )
        h0, h1 = graphs.graph_persistence(filt)
        _json_dump(graphs.graph_to_dict(graph), net_dir / "graph.json")
        diagrams.save_diagram(h0, net_dir / "graph_h0.json")
        diagrams.save_diagram(h1, net_dir / "graph_h1.json")
        barcode.save_barcode_svg(
            [h0, h1], cap=1.0, path=net_dir / "barcode_graph.svg",
            title=f"{task['sid']} / {network}",
        )
    return task["sid"]


def cmd_pipeline(args) -> int:
    cfg = _pipeline_config(args)
    labels = ingest.load_manifest(cfg.manifest)
    atlas = ingest.load_atlas(cfg.atlas)
    subj_dir = Path(cfg.input_dir) / "subjects"
    if not subj_dir.is_dir():
        subj_dir = Path(cfg.input_dir)
    csvs = sorted(subj_dir.glob("*.csv"))
    known = [p for p in csvs if p.stem in labels]
    if not known:
        raise ValidationError(
            f"no subject CSVs matching the manifest under {subj_dir}"
        )
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    cfg_dict = {
        "out": str(out), "m": cfg.m, "tau": cfg.tau, "normalize": cfg.normalize,
        "maxdim": cfg.maxdim, "p": cfg.p, "q": cfg.q,
        "essential": cfg.essential, "cap": cfg.cap,
        "weight_source": cfg.weight_source, "transform": cfg.transform,
        "direction": cfg.direction, "shrinkage": cfg.shrinkage,
        "save_pointclouds": cfg.save_pointclouds,
    }
    tasks = [
        {"cfg": cfg_dict, "csv": str(p), "sid": p.stem,
         "group": labels[p.stem],
         "networks": {k: list(v) for k, v in atlas.networks.items()}}
        for p in known
    ]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_subject_stage, t) for t in tasks]
            for fut in futures:
                fut.result()  # re-raise the first failure in submit order
    else:
        for t in tasks:
            _subject_stage(t)

    # cohort-level aggregation: inter-subject graph distances, group stats,
    # and the two classification reports per network
    graph_params = distances.WassersteinParams(
        p=cfg.p, q=cfg.q, essential="cap",
        cap=cfg.cap if cfg.essential == "cap" else 1.0,
    )
    a, b = _group_pair(args, labels)
    summary: dict = {"networks": {}, "seed": cfg.seed,
                     "groups": [a, b], "model": cfg.model}
    for network in sorted(atlas.networks):
        net_summary: dict = {}
        subject_dgms = {
            p.stem: diagrams.load_diagram(out / p.stem / network / f"graph_h{cfg.dim}.json")
            for p in known
        }
        matrix = analytics.inter_subject_matrix(
            subject_dgms, graph_params, network=network, filtration="graph"
        )
        coh_dir = out / "_cohort" / network
        coh_dir.mkdir(parents=True, exist_ok=True)
        analytics.save_distance_matrix(
            matrix, coh_dir / f"wd_subjects_graph_h{cfg.dim}.csv"
        )
        test = analytics.group_distance_test(matrix, labels, a, b)
        stats_payload = {
            "group_a": a, "group_b": b, "statistic": test.statistic,
            "p_value": test.p_value, "n1": test.n1, "n2": test.n2,
            "method": test.method,
        }
        _json_dump(stats_payload, coh_dir / f"stats_graph_h{cfg.dim}.json")
        net_summary["group_test_p"] = test.p_value

        model_spec = (
            {"model": "knn", "k_neighbors": cfg.knn_k} if cfg.model == "knn"
            else {"model": "logistic", "l2": cfg.l2, "max_iter": cfg.max_iter}
        )
        wd_dataset = _wdroi_dataset(out, network, cfg.dim, labels)
        wd_report = classify.evaluate(wd_dataset, protocol=cfg.protocol,
                                      model_spec=model_spec, seed=cfg.seed,
                                      folds=cfg.folds)
        classify.save_report(wd_report, coh_dir / f"report_wdroi_h{cfg.dim}.json")
        ls_dataset = _lifespan_dataset(out, network, cfg.dim, labels,
                                       k=cfg.topk, cap=graph_params.cap)
        ls_report = classify.evaluate(ls_dataset, protocol=cfg.protocol,
                                      model_spec=model_spec, seed=cfg.seed,
                                      folds=cfg.folds)
        classify.save_report(ls_report, coh_dir / f"report_lifespans_h{cfg.dim}.json")
        net_summary["accuracy_wdroi"] = wd_report.accuracy
        net_summary["accuracy_lifespans"] = ls_report.accuracy
        summary["networks"][network] = net_summary

    _json_dump(summary, out / "report.json")
    print(json.dumps(summary, sort_keys=True))
    return 0


# ----------------------------------------------------------------------
# argument wiring
# ----------------------------------------------------------------------

def _add_common(sub, *names):
    if "input" in names:
        sub.add_argument("--input", "--in", dest="input")
    if "manifest" in names:
        sub.add_argument("--manifest")
    if "atlas" in names:
        sub.add_argument("--atlas")
    if "network" in names:
        sub.add_argument("--network")
    if "out" in names:
        sub.add_argument("--out")
    if "seed" in names:
        sub.add_argument("--seed", type=int)
    if "wparams" in names:
        sub.add_argument("--p")
        sub.add_argument("--q")
        sub.add_argument("--essential")
    if "graph" in names:
        sub.add_argument("--weight-source", dest="weight_source",
                         choices=["marginal", "partial"])
        sub.add_argument("--transform", choices=["one-minus-w", "raw"])
        sub.add_argument("--direction", choices=["sublevel", "superlevel"])
        sub.add_argument("--shrinkage", type=float)
    if "model" in names:
        sub.add_argument("--model", choices=["knn", "logistic"])
        sub.add_argument("--knn-k", dest="knn_k", type=int)
        sub.add_argument("--l2", type=float)
        sub.add_argument("--max-iter", dest="max_iter", type=int)
        sub.add_argument("--folds", type=int)
        sub.add_argument("--protocol", choices=["holdout", "kfold"])
        sub.add_argument("--select-top", dest="select_top", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ph-connect",
        description="Persistent homology pipelines for multi-channel time series",
    )
    parser.add_argument("--config", help="key = value file supplying flag defaults")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("synth", help="generate a synthetic cohort")
    s.add_argument("--recipe", choices=["loop_vs_noise", "cluster_shift"])
    s.add_argument("--n", type=int, help="subjects per group")
    s.add_argument("--t", type=int, help="timepoints per subject")
    _add_common(s, "seed", "out")
    s.set_defaults(func=cmd_synth)

    s = subs.add_parser("embed", help="sliding-window embed each channel")
    _add_common(s, "input", "manifest", "atlas", "network", "out")
    s.add_argument("--m", type=int)
    s.add_argument("--tau", type=int)
    s.add_argument("--normalize", action="store_const", const=True)
    s.set_defaults(func=cmd_embed)

    s = subs.add_parser("rips", help="Rips persistence of a point cloud")
    _add_common(s, "input", "out")
    s.add_argument("--maxdim", type=int)
    s.add_argument("--threshold", type=float)
    s.add_argument("--simplex-cap", dest="simplex_cap", type=int)
    s.set_defaults(func=cmd_rips)

    s = subs.add_parser("graphph", help="correlation graph persistence")
    _add_common(s, "input", "manifest", "atlas", "network", "out", "graph")
    s.set_defaults(func=cmd_graphph)

    s = subs.add_parser("wdist", help="assemble Wasserstein distance matrices")
    s.add_argument("--run", help="run tree produced by earlier stages")
    s.add_argument("--mode", choices=["roi", "subject"])
    s.add_argument("--dim", type=int)
    s.add_argument("--filtration", choices=["rips", "graph"])
    _add_common(s, "network", "wparams")
    s.set_defaults(func=cmd_wdist)

    s = subs.add_parser("stats", help="group test on a distance matrix")
    s.add_argument("--matrix", required=True)
    s.add_argument("--group-a", dest="group_a")
    s.add_argument("--group-b", dest="group_b")
    _add_common(s, "manifest", "out")
    s.set_defaults(func=cmd_stats)

    s = subs.add_parser("classify", help="train/evaluate on topological features")
    s.add_argument("--run")
    s.add_argument("--features", choices=["lifespans", "wdroi"])
    s.add_argument("--dim", type=int)
    s.add_argument("--topk", type=int)
    s.add_argument("--cap", type=float)
    _add_common(s, "manifest", "network", "out", "seed", "model")
    s.set_defaults(func=cmd_classify)

    s = subs.add_parser("barcode", help="render diagrams as an SVG barcode")
    s.add_argument("inputs", nargs="+", help="diagram JSON files")
    s.add_argument("--cap", type=float)
    s.add_argument("--title")
    _add_common(s, "out")
    s.set_defaults(func=cmd_barcode)

    s = subs.add_parser("pipeline", help="run both pipelines end to end")
    _add_common(s, "input", "manifest", "atlas", "out", "seed", "wparams",
                "graph", "model")
    s.add_argument("--m", type=int)
    s.add_argument("--tau", type=int)
    s.add_argument("--normalize", action="store_const", const=True)
    s.add_argument("--maxdim", type=int)
    s.add_argument("--dim", type=int)
    s.add_argument("--topk", type=int)
    s.add_argument("--jobs", type=int)
    s.add_argument("--group-a", dest="group_a")
    s.add_argument("--group-b", dest="group_b")
    s.add_argument("--save-pointclouds", dest="save_pointclouds",
                   action="store_const", const=True)
    s.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._config = load_config(args.config) if args.config else {}
    try:
        return args.func(args)
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
