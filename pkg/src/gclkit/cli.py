"""Command-line interface.

One JSON config file drives everything; experiments are archival, so the
config hash is embedded in every output.  Subcommands:

* ``sim``    compute and cache the similarity matrix;
* ``train``  run a training protocol, write embeddings CSV + report JSONL;
* ``probe``  evaluate an embeddings CSV with the linear probe;
* ``ablate`` run the variant grid, write the mean/std CSV table;
* ``synth``  generate a synthetic block-model dataset on disk.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
Progress goes to standard error; machine-readable results only to files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import data
from .data import SbmSpec, gen_sbm, load_dataset, make_split, read_embeddings, save_dataset
from .errors import ConfigError, NumericalError, ParseError
from .graph import normalized_adjacency
from .pipeline import (
    ExperimentConfig,
    config_from_dict,
    config_hash,
    linear_probe,
    run_ablation,
    train_grace,
    train_graphmlp,
    write_ablation_csv,
)
from .rng import derive_seed
from .similarity import compute_similarity, load_similarity, save_similarity

DATASET_KEYS = {"edges", "features", "labels"}
OUTPUT_KEYS = {"embeddings", "report", "similarity_cache", "ablation_table", "probe_result"}
OUTPUT_DEFAULTS = {
    "embeddings": "embeddings.csv",
    "report": "report.jsonl",
    "similarity_cache": "similarity.bin",
    "ablation_table": "ablation.csv",
    "probe_result": "probe.json",
}
TOP_KEYS = {"dataset", "experiment", "outputs", "seeds"}


def load_config(path):
    """Parse and validate the JSON config; unknown keys are rejected."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = sorted(set(doc) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown configuration key: {unknown[0]}")

    dataset = doc.get("dataset", {})
    if not isinstance(dataset, dict):
        raise ConfigError("dataset: expected an object")
    bad = sorted(set(dataset) - DATASET_KEYS)
    if bad:
        raise ConfigError(f"unknown configuration key: dataset.{bad[0]}")

    outputs = dict(OUTPUT_DEFAULTS)
    for key, value in doc.get("outputs", {}).items():
        if key not in OUTPUT_KEYS:
            raise ConfigError(f"unknown configuration key: outputs.{key}")
        outputs[key] = value

    experiment = config_from_dict(doc.get("experiment", {}))
    seeds = doc.get("seeds", [experiment.seed])
    if not isinstance(seeds, list) or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds: expected a list of integers")
    return {"dataset": dataset, "experiment": experiment, "outputs": outputs, "seeds": seeds}


def _require_dataset(cfg) -> tuple:
    ds = cfg["dataset"]
    for key in ("edges", "features", "labels"):
        if key not in ds:
            raise ConfigError(f"dataset.{key} is required for this command")
        if not Path(ds[key]).exists():
            raise ConfigError(f"dataset.{key}: file not found: {ds[key]}")
    return load_dataset(ds["edges"], ds["features"], ds["labels"])


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_sim(config_path) -> int:
    cfg = load_config(config_path)
    graph, features, _ = _require_dataset(cfg)
    exp: ExperimentConfig = cfg["experiment"]
    a_hat = normalized_adjacency(graph, add_self_loops=False)
    sims = compute_similarity(a_hat, features, exp.similarity)
    cache_hash = _sim_cache_hash(cfg, graph.n)
    save_similarity(cfg["outputs"]["similarity_cache"], sims, cache_hash)
    v = sims.values
    _log(
        f"similarity: n={graph.n} kind={sims.kind} "
        f"min={v.min():.6f} mean={v.mean():.6f} max={v.max():.6f}"
    )
    _log(f"cache written to {cfg['outputs']['similarity_cache']} (hash {cache_hash[:12]})")
    return 0


def _sim_cache_hash(cfg, n: int) -> str:
    from .similarity import similarity_config_hash

    exp: ExperimentConfig = cfg["experiment"]
    base = similarity_config_hash(exp.similarity, n)
    ds = cfg["dataset"]
    payload = f"{base}|{ds.get('edges')}|{ds.get('features')}"
    return hashlib.sha256(payload.encode()).hexdigest()


def cmd_train(config_path) -> int:
    cfg = load_config(config_path)
    graph, features, labels = _require_dataset(cfg)
    exp: ExperimentConfig = cfg["experiment"]
    _log(f"training model={exp.model} variant={exp.variant} seed={exp.seed} (hash {config_hash(exp)[:12]})")
    if exp.model == "grace":
        embeddings, report = train_grace(graph, features, exp, labels=labels)
    else:
        split = make_split(
            graph.n,
            exp.split_ratios,
            labels=labels,
            seed=derive_seed(exp.seed, "split"),
            stratified=exp.stratified_split,
            train_per_class=exp.train_per_class,
        )
        params, report = train_graphmlp(graph, features, labels, split, exp)
        from . import nn

        _, trace = nn.mlp_forward(features, params)
        embeddings = trace.tensors["Z"]
    data.write_embeddings(cfg["outputs"]["embeddings"], embeddings)
    report.write_jsonl(cfg["outputs"]["report"])
    _log(f"accuracy={report.accuracy} wall_clock={report.wall_clock_s:.1f}s")
    _log(f"embeddings -> {cfg['outputs']['embeddings']}, report -> {cfg['outputs']['report']}")
    return 0


def cmd_probe(config_path) -> int:
    cfg = load_config(config_path)
    exp: ExperimentConfig = cfg["experiment"]
    ds = cfg["dataset"]
    if "labels" not in ds:
        raise ConfigError("dataset.labels is required for probe")
    labels = data.read_labels(ds["labels"])
    embeddings = read_embeddings(cfg["outputs"]["embeddings"])
    if embeddings.shape[0] != labels.shape[0]:
        raise ConfigError(
            f"embeddings have {embeddings.shape[0]} rows but labels have {labels.shape[0]}"
        )
    split = make_split(
        labels.shape[0],
        exp.split_ratios,
        labels=labels,
        seed=derive_seed(exp.seed, "split"),
        stratified=exp.stratified_split,
        train_per_class=exp.train_per_class,
    )
    acc = linear_probe(embeddings, labels, split, exp.probe)
    result = {"accuracy": acc, "config_hash": config_hash(exp), "n": int(labels.shape[0])}
    with open(cfg["outputs"]["probe_result"], "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=2)
        fh.write("\n")
    _log(f"probe accuracy={acc:.4f} -> {cfg['outputs']['probe_result']}")
    return 0


def cmd_ablate(config_path) -> int:
    cfg = load_config(config_path)
    graph, features, labels = _require_dataset(cfg)
    exp: ExperimentConfig = cfg["experiment"]
    _log(f"ablation over seeds {cfg['seeds']} (model={exp.model})")
    rows, _reports = run_ablation(graph, features, labels, exp, cfg["seeds"])
    write_ablation_csv(cfg["outputs"]["ablation_table"], rows)
    for row in rows:
        _log(f"  {row.variant:12s} {row.mean_acc:.4f} +/- {row.std_acc:.4f}")
    _log(f"table -> {cfg['outputs']['ablation_table']}")
    return 0


def cmd_synth(spec_path, out_dir) -> int:
    try:
        with open(spec_path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{spec_path}: invalid JSON ({exc})") from exc
    allowed = {"block_sizes", "p_in", "p_out", "feat_dim", "mean_scale", "noise_scale", "seed"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"unknown configuration key: {unknown[0]}")
    if "block_sizes" not in doc:
        raise ConfigError("block_sizes is required")
    spec = SbmSpec(
        block_sizes=tuple(doc["block_sizes"]),
        p_in=doc.get("p_in", 0.1),
        p_out=doc.get("p_out", 0.01),
        feat_dim=doc.get("feat_dim", 16),
        mean_scale=doc.get("mean_scale", 1.0),
        noise_scale=doc.get("noise_scale", 1.0),
        seed=doc.get("seed", 0),
    )
    graph, features, labels = gen_sbm(spec)
    try:
        paths = save_dataset(out_dir, graph, features, labels)
    except OSError as exc:
        raise ConfigError(f"cannot write to {out_dir}: {exc}") from exc
    _log(f"synthetic dataset: n={graph.n} edges={graph.num_edges} classes={len(spec.block_sizes)}")
    for name, path in paths.items():
        _log(f"  {name} -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gclkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sim", "compute and cache the similarity matrix"),
        ("train", "train a model and write embeddings + report"),
        ("probe", "linear-probe an embeddings file"),
        ("ablate", "run the ablation grid and write a CSV table"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to the JSON config file")
    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    p_synth.add_argument("spec", help="path to the block-model spec JSON")
    p_synth.add_argument("out_dir", help="directory for the dataset files")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sim":
            return cmd_sim(args.config)
        if args.command == "train":
            return cmd_train(args.config)
        if args.command == "probe":
            return cmd_probe(args.config)
        if args.command == "ablate":
            return cmd_ablate(args.config)
        if args.command == "synth":
            return cmd_synth(args.spec, args.out_dir)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, ParseError, FileNotFoundError, ValueError) as exc:
        _log(f"error: {exc}")
        return 2
    except NumericalError as exc:
        _log(f"numerical failure: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
