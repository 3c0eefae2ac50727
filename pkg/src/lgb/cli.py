"""Command-line entry point for the bot-detection toolkit.

One subcommand per workflow step: dataset ingestion and synthesis, the
three training stages, evaluation and studies, structure analytics, and
the detection service. Every artifact-producing command writes a
manifest recording the fully resolved configuration, its hash, the seed,
and the input/output paths, so any run can be reproduced from the
manifest alone.

Stage hyperparameters resolve in three layers: built-in defaults, then an
INI config file (one section per stage), then command-line flags.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import torch

from . import analytics, evaluation
from .bundle import DEFAULT_ARCH, ModelBundle, config_hash
from .graph_store import (
    GraphError,
    SocialGraph,
    UserRecord,
    ingest_dataset,
    write_dataset,
)
from .metrics import compute_metrics
from .service import DetectionService, FixtureDataProvider, ServiceError
from .text_pipeline import build_sequence, build_vocabulary, to_ids
from .training import (
    VARIANTS,
    TrainConfig,
    TrainingError,
    finetune_fusion,
    fused_probabilities,
    lm_probabilities,
    prepare_token_ids,
    pretrain_gnn,
    resolve_split,
    run_pipeline,
    sft_language_model,
    write_metrics_log,
)

_STAGE_FACTORY = {"sft": TrainConfig.sft, "pretrain": TrainConfig.pretrain,
                  "finetune": TrainConfig.finetune}
_STAGE_FIELD_TYPES = {
    "learning_rate": float, "weight_decay": float, "max_epochs": int,
    "patience": int, "dropout_rate": float, "seed": int, "batch_size": int,
    "tau": float,
}
_ARCH_FIELD_TYPES = {
    "text_dim": int, "gnn_hidden": int, "gnn_out": int, "max_len": int,
    "use_attention": bool, "gnn_kind": str, "fuse_mode": str,
}


def _parse_floats(raw: str) -> tuple[float, ...]:
    return tuple(float(part) for part in raw.split(",") if part.strip())


def _parse_ints(raw: str) -> tuple[int, ...]:
    return tuple(int(part) for part in raw.split(",") if part.strip())


def _load_ini(path: str | None) -> dict[str, dict[str, str]]:
    if not path:
        return {}
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    return {section: dict(parser[section]) for section in parser.sections()}


def _coerce_stage_value(key: str, raw: str):
    if key == "drop_probs":
        return _parse_floats(raw)
    if key not in _STAGE_FIELD_TYPES:
        raise ValueError(f"unknown training option {key!r}")
    return _STAGE_FIELD_TYPES[key](raw)


def _stage_config(stage: str, ini: dict, args: argparse.Namespace) -> TrainConfig:
    """Defaults, then the INI section for the stage, then flags."""
    overrides: dict = {}
    for key, raw in ini.get(stage, {}).items():
        overrides[key] = _coerce_stage_value(key, raw)
    for key in ("learning_rate", "weight_decay", "max_epochs", "patience",
                "batch_size", "dropout_rate", "tau"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    drop_probs = getattr(args, "drop_probs", None)
    if drop_probs is not None:
        overrides["drop_probs"] = _parse_floats(drop_probs)
    overrides["seed"] = args.seed
    return _STAGE_FACTORY[stage](**overrides)


def _coerce_arch_value(key: str, raw: str):
    if key in ("lm_head_hidden", "fusion_head_hidden"):
        return list(_parse_ints(raw))
    if key not in _ARCH_FIELD_TYPES:
        raise ValueError(f"unknown architecture option {key!r}")
    kind = _ARCH_FIELD_TYPES[key]
    if kind is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return kind(raw)


def _arch_config(ini: dict, args: argparse.Namespace) -> dict:
    arch = dict(DEFAULT_ARCH)
    for key, raw in ini.get("arch", {}).items():
        arch[key] = _coerce_arch_value(key, raw)
    for key in ("text_dim", "gnn_kind", "gnn_hidden", "gnn_out", "fuse_mode",
                "max_len"):
        value = getattr(args, key, None)
        if value is not None:
            arch[key] = value
    return arch


def _resolve_dataset(name: str) -> Path:
    """Literal path first; otherwise look under LGB_DATA_DIR."""
    path = Path(name)
    if path.exists():
        return path
    root = os.environ.get("LGB_DATA_DIR")
    if root and not path.is_absolute():
        candidate = Path(root) / name
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"dataset directory {name!r} not found")


def _load_graph(name: str) -> SocialGraph:
    directory = _resolve_dataset(name)
    return ingest_dataset(directory / "users.jsonl", directory / "edges.jsonl")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_manifest(out_dir: Path, command: str, config: dict, seed: int | None,
                    inputs: dict, outputs: dict, started_at: str) -> Path:
    config = json.loads(json.dumps(config))  # normalize tuples for hashing
    manifest = {
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "inputs": inputs,
        "outputs": outputs,
        "started_at": started_at,
        "finished_at": _now(),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _out_dir(args: argparse.Namespace) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _split_indices(g: SocialGraph, args: argparse.Namespace):
    ratios = _parse_floats(args.split_ratios)
    split = resolve_split(g, ratios, args.seed)
    labels = [g.labels.get(v) for v in g.nodes]
    idx = {name: [g.node_index(v) for v in g.nodes if v in split.of(name)]
           for name in ("train", "val", "test")}
    return split, labels, idx


# ------------------------------------------------------------- command bodies

def _cmd_ingest(args) -> int:
    started = _now()
    g = ingest_dataset(args.users, args.edges)
    out = _out_dir(args)
    write_dataset(g, out / "users.jsonl", out / "edges.jsonl")
    _write_manifest(
        out, "ingest", {"n_nodes": g.n_nodes, "n_edges": g.n_edges,
                        "n_labeled": len(g.labels)},
        seed=None, inputs={"users": str(args.users), "edges": str(args.edges)},
        outputs={"users": str(out / "users.jsonl"),
                 "edges": str(out / "edges.jsonl")},
        started_at=started)
    print(f"ingested {g.n_nodes} accounts, {g.n_edges} edges, "
          f"{len(g.labels)} labels")
    return 0


def _cmd_synth(args) -> int:
    started = _now()
    spec = evaluation.SyntheticSpec(
        n_nodes=args.n_nodes, bot_fraction=args.bot_fraction,
        text_signal=args.text_signal, intra_edge_prob=args.intra_edge_prob,
        inter_edge_prob=args.inter_edge_prob,
        isolated_fraction=args.isolated_fraction, seed=args.seed,
        tweets_per_user=args.tweets_per_user,
        tokens_per_tweet=args.tokens_per_tweet)
    g = evaluation.generate_synthetic(spec)
    out = _out_dir(args)
    write_dataset(g, out / "users.jsonl", out / "edges.jsonl")
    _write_manifest(out, "synth", dataclasses.asdict(spec), seed=args.seed,
                    inputs={},
                    outputs={"users": str(out / "users.jsonl"),
                             "edges": str(out / "edges.jsonl")},
                    started_at=started)
    print(f"generated {g.n_nodes} accounts, {g.n_edges} edges")
    return 0


def _train_common(args, stage: str):
    ini = _load_ini(args.config)
    cfg = _stage_config(stage, ini, args)
    arch = _arch_config(ini, args)
    g = _load_graph(args.dataset)
    return ini, cfg, arch, g


def _cmd_train_sft(args) -> int:
    started = _now()
    ini, cfg, arch, g = _train_common(args, "sft")
    split, labels, idx = _split_indices(g, args)

    seqs = [build_sequence(_record_for(g, v)) for v in g.nodes]
    vocab = build_vocabulary(seqs, min_count=args.vocab_min_count,
                             max_size=args.vocab_max_size)
    torch.manual_seed(cfg.seed)
    bundle = ModelBundle.build(vocab, arch)
    token_ids = [to_ids(s, vocab, int(arch["max_len"])) for s in seqs]
    result = sft_language_model(bundle, token_ids, labels, idx["train"],
                                idx["val"], cfg)
    out = _out_dir(args)
    bundle.save(out / "bundle.pt")
    write_metrics_log(out / "metrics.tsv", result.history)
    _write_manifest(out, "train-sft",
                    {"stage": dataclasses.asdict(cfg), "arch": arch},
                    seed=cfg.seed, inputs={"dataset": str(args.dataset)},
                    outputs={"checkpoint": str(out / "bundle.pt"),
                             "metrics": str(out / "metrics.tsv")},
                    started_at=started)
    print(f"sft finished: best epoch {result.best_epoch}, "
          f"val accuracy {result.best_val_accuracy:.4f}")
    return 0


def _record_for(g: SocialGraph, v: str) -> UserRecord:
    return g.user_records.get(v) or UserRecord(id=v, name=v,
                                               followers_count=0,
                                               following_count=0)


def _cmd_pretrain(args) -> int:
    started = _now()
    ini, cfg, _, g = _train_common(args, "pretrain")
    bundle = ModelBundle.load(args.checkpoint)
    token_ids = prepare_token_ids(g, bundle.vocab,
                                  int(bundle.config.get("max_len", 256)))
    result = pretrain_gnn(bundle, g, token_ids, cfg)
    out = _out_dir(args)
    bundle.save(out / "bundle.pt")
    write_metrics_log(out / "metrics.tsv", result.history)
    _write_manifest(out, "pretrain", {"stage": dataclasses.asdict(cfg)},
                    seed=cfg.seed,
                    inputs={"dataset": str(args.dataset),
                            "checkpoint": str(args.checkpoint)},
                    outputs={"checkpoint": str(out / "bundle.pt"),
                             "metrics": str(out / "metrics.tsv")},
                    started_at=started)
    print(f"pretraining finished after {result.epochs_run} epochs, "
          f"final loss {result.loss_history[-1]:.6f}")
    return 0


def _cmd_finetune(args) -> int:
    started = _now()
    ini, cfg, _, g = _train_common(args, "finetune")
    split, labels, idx = _split_indices(g, args)
    bundle = ModelBundle.load(args.checkpoint)
    token_ids = prepare_token_ids(g, bundle.vocab,
                                  int(bundle.config.get("max_len", 256)))
    result = finetune_fusion(bundle, g, token_ids, labels, idx["train"],
                             idx["val"], cfg)
    out = _out_dir(args)
    bundle.save(out / "bundle.pt")
    write_metrics_log(out / "metrics.tsv", result.history)
    _write_manifest(out, "finetune", {"stage": dataclasses.asdict(cfg)},
                    seed=cfg.seed,
                    inputs={"dataset": str(args.dataset),
                            "checkpoint": str(args.checkpoint)},
                    outputs={"checkpoint": str(out / "bundle.pt"),
                             "metrics": str(out / "metrics.tsv")},
                    started_at=started)
    print(f"finetune finished: best epoch {result.best_epoch}, "
          f"val accuracy {result.best_val_accuracy:.4f}")
    return 0


def _cmd_evaluate(args) -> int:
    started = _now()
    g = _load_graph(args.dataset)
    split, labels, idx = _split_indices(g, args)
    bundle = ModelBundle.load(args.checkpoint)
    token_ids = prepare_token_ids(g, bundle.vocab,
                                  int(bundle.config.get("max_len", 256)))
    if args.probability_path == "lm":
        probs = lm_probabilities(bundle, token_ids)
    else:
        probs = fused_probabilities(bundle, g, token_ids)
    y_test = [labels[i] for i in idx["test"]]
    metrics = compute_metrics(y_test, [float(probs[i, 1]) for i in idx["test"]])
    payload = {
        "accuracy": metrics.accuracy, "f1": metrics.f1, "auc": metrics.auc,
        "n_test": metrics.n, "probability_path": args.probability_path,
        "config_hash": config_hash(dict(bundle.config)), "seed": args.seed,
    }
    out = _out_dir(args)
    (out / "metrics.json").write_text(json.dumps(payload, indent=2) + "\n",
                                      encoding="utf-8")
    _write_manifest(out, "evaluate", payload, seed=args.seed,
                    inputs={"dataset": str(args.dataset),
                            "checkpoint": str(args.checkpoint)},
                    outputs={"metrics": str(out / "metrics.json")},
                    started_at=started)
    print(json.dumps(payload))
    return 0


def _pipeline_kwargs(args):
    ini = _load_ini(args.config)
    return dict(
        arch=_arch_config(ini, args),
        sft_cfg=_stage_config("sft", ini, args),
        pretrain_cfg=_stage_config("pretrain", ini, args),
        finetune_cfg=_stage_config("finetune", ini, args),
        split_ratios=_parse_floats(args.split_ratios),
    )


def _cmd_ablate(args) -> int:
    started = _now()
    g = _load_graph(args.dataset)
    kwargs = _pipeline_kwargs(args)
    seeds = _parse_ints(args.seeds)
    runs = [run_pipeline(g, seed=s, variant=args.variant, **kwargs).test_metrics
            for s in seeds]
    report = evaluation.MetricsReport.from_runs(runs)
    payload = {
        "variant": args.variant,
        "seeds": list(seeds),
        "accuracy": dataclasses.asdict(report.accuracy),
        "f1": dataclasses.asdict(report.f1),
        "auc": dataclasses.asdict(report.auc),
    }
    out = _out_dir(args)
    (out / "metrics.json").write_text(json.dumps(payload, indent=2) + "\n",
                                      encoding="utf-8")
    _write_manifest(out, "ablate",
                    {"variant": args.variant,
                     "pipeline": _manifest_pipeline(kwargs), "seeds": list(seeds)},
                    seed=args.seed, inputs={"dataset": str(args.dataset)},
                    outputs={"metrics": str(out / "metrics.json")},
                    started_at=started)
    print(json.dumps({"variant": args.variant,
                      "accuracy_mean": report.accuracy.mean}))
    return 0


def _manifest_pipeline(kwargs: dict) -> dict:
    return {
        "arch": kwargs["arch"],
        "sft": dataclasses.asdict(kwargs["sft_cfg"]),
        "pretrain": dataclasses.asdict(kwargs["pretrain_cfg"]),
        "finetune": dataclasses.asdict(kwargs["finetune_cfg"]),
        "split_ratios": list(kwargs["split_ratios"]),
    }


def _cmd_robustness(args) -> int:
    started = _now()
    g = _load_graph(args.dataset)
    kwargs = _pipeline_kwargs(args)
    split_ratios = kwargs.pop("split_ratios")
    levels = list(_parse_floats(args.levels))
    seeds = _parse_ints(args.seeds)
    reports = evaluation.run_robustness(
        g, args.mode, levels, seeds=seeds, split_ratios=split_ratios, **kwargs)
    out = _out_dir(args)
    evaluation.write_robustness_report(out / "robustness.tsv", args.mode, reports)
    _write_manifest(out, "robustness",
                    {"mode": args.mode, "levels": levels, "seeds": list(seeds),
                     "pipeline": _manifest_pipeline(
                         dict(kwargs, split_ratios=split_ratios))},
                    seed=args.seed, inputs={"dataset": str(args.dataset)},
                    outputs={"report": str(out / "robustness.tsv")},
                    started_at=started)
    print(f"wrote {out / 'robustness.tsv'}")
    return 0


def _cmd_feedback_study(args) -> int:
    started = _now()
    g = _load_graph(args.dataset)
    bundle = ModelBundle.load(args.checkpoint)
    ini = _load_ini(args.config)
    curve = evaluation.run_feedback_study(
        bundle, g, list(_parse_ints(args.k_values)), seed=args.seed,
        sft_cfg=_stage_config("sft", ini, args),
        pretrain_cfg=_stage_config("pretrain", ini, args),
        finetune_cfg=_stage_config("finetune", ini, args),
        split_ratios=_parse_floats(args.split_ratios))
    out = _out_dir(args)
    evaluation.write_feedback_report(out / "feedback.tsv", curve)
    _write_manifest(out, "feedback-study",
                    {"k_values": sorted(curve), "curve": curve},
                    seed=args.seed,
                    inputs={"dataset": str(args.dataset),
                            "checkpoint": str(args.checkpoint)},
                    outputs={"report": str(out / "feedback.tsv")},
                    started_at=started)
    print(json.dumps({"curve": curve}))
    return 0


def _cmd_analyze(args) -> int:
    started = _now()
    g = _load_graph(args.dataset)
    out = _out_dir(args)
    if args.analysis == "neighbor-distribution":
        hist = analytics.neighbor_distribution(g)
        path = out / "neighbor_distribution.csv"
        analytics.write_neighbor_histogram_csv(path, hist)
        config = {"analysis": args.analysis,
                  "isolated_fraction": float(hist.isolated_fraction)}
    else:
        curve = analytics.bot_probability_by_numcc(g, args.class_filter)
        path = out / "numcc_curve.csv"
        analytics.write_numcc_curve_csv(path, curve)
        config = {"analysis": args.analysis, "class_filter": args.class_filter}
    _write_manifest(out, "analyze", config, seed=None,
                    inputs={"dataset": str(args.dataset)},
                    outputs={"csv": str(path)}, started_at=started)
    print(f"wrote {path}")
    return 0


def build_service(dataset: str, checkpoint: str, risk_threshold: float = 0.5,
                  confidence_floor: float = 0.9) -> DetectionService:
    """Assemble a ready-to-serve detection service from artifacts on disk."""
    g = _load_graph(dataset)
    bundle = ModelBundle.load(checkpoint)
    service = DetectionService(FixtureDataProvider(g),
                               risk_threshold=risk_threshold,
                               confidence_floor=confidence_floor)
    service.deploy(bundle)
    return service


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app
    service = build_service(args.dataset, args.checkpoint,
                            risk_threshold=args.risk_threshold,
                            confidence_floor=args.confidence_floor)
    uvicorn.run(create_app(service), host=args.host, port=args.port)
    return 0


# -------------------------------------------------------------------- parser

def _add_common(p: argparse.ArgumentParser, *, dataset=True, out=True,
                config=True, seed=True) -> None:
    if dataset:
        p.add_argument("--dataset", required=True,
                       help="dataset directory (or name under LGB_DATA_DIR)")
    if out:
        p.add_argument("--out", required=True, help="output directory")
    if config:
        p.add_argument("--config", help="INI config with per-stage sections")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _add_stage_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--dropout-rate", dest="dropout_rate", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--drop-probs", dest="drop_probs",
                   help="edge-drop probabilities, e.g. 0.2,0.4")


def _add_arch_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--text-dim", dest="text_dim", type=int)
    p.add_argument("--gnn-kind", dest="gnn_kind",
                   choices=("gcn", "gin", "gat"))
    p.add_argument("--gnn-hidden", dest="gnn_hidden", type=int)
    p.add_argument("--gnn-out", dest="gnn_out", type=int)
    p.add_argument("--fuse-mode", dest="fuse_mode",
                   choices=("concat", "average", "max", "none"))
    p.add_argument("--max-len", dest="max_len", type=int)


def _add_split_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--split-ratios", dest="split_ratios", default="0.7,0.2,0.1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lgb", description="social-bot detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize a dataset")
    p.add_argument("--users", required=True)
    p.add_argument("--edges", required=True)
    _add_common(p, dataset=False, config=False, seed=False)
    p.set_defaults(handler=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(p, dataset=False, config=False)
    p.add_argument("--n-nodes", dest="n_nodes", type=int, default=200)
    p.add_argument("--bot-fraction", dest="bot_fraction", type=float, default=0.5)
    p.add_argument("--text-signal", dest="text_signal", type=float, default=0.8)
    p.add_argument("--intra-edge-prob", dest="intra_edge_prob", type=float,
                   default=0.05)
    p.add_argument("--inter-edge-prob", dest="inter_edge_prob", type=float,
                   default=0.005)
    p.add_argument("--isolated-fraction", dest="isolated_fraction", type=float,
                   default=0.0)
    p.add_argument("--tweets-per-user", dest="tweets_per_user", type=int,
                   default=3)
    p.add_argument("--tokens-per-tweet", dest="tokens_per_tweet", type=int,
                   default=8)
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("train-sft", help="fine-tune the text encoder")
    _add_common(p)
    _add_stage_flags(p)
    _add_arch_flags(p)
    _add_split_flag(p)
    p.add_argument("--vocab-min-count", dest="vocab_min_count", type=int,
                   default=1)
    p.add_argument("--vocab-max-size", dest="vocab_max_size", type=int,
                   default=50_000)
    p.set_defaults(handler=_cmd_train_sft)

    p = sub.add_parser("pretrain", help="contrastive graph pre-training")
    _add_common(p)
    _add_stage_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(handler=_cmd_pretrain)

    p = sub.add_parser("finetune", help="fusion fine-tuning")
    _add_common(p)
    _add_stage_flags(p)
    _add_split_flag(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(handler=_cmd_finetune)

    p = sub.add_parser("evaluate", help="score a checkpoint on the test split")
    _add_common(p)
    _add_split_flag(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--probability-path", dest="probability_path",
                   choices=("fused", "lm"), default="fused")
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("ablate", help="run one pipeline variant end to end")
    _add_common(p)
    _add_stage_flags(p)
    _add_arch_flags(p)
    _add_split_flag(p)
    p.add_argument("--variant", required=True, choices=VARIANTS)
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.set_defaults(handler=_cmd_ablate)

    p = sub.add_parser("robustness", help="corruption studies")
    _add_common(p)
    _add_stage_flags(p)
    _add_arch_flags(p)
    _add_split_flag(p)
    p.add_argument("--mode", required=True,
                   choices=evaluation.ROBUSTNESS_MODES)
    p.add_argument("--levels", required=True, help="comma-separated levels")
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.set_defaults(handler=_cmd_robustness)

    p = sub.add_parser("feedback-study",
                       help="accuracy vs labeled-examples-per-class curve")
    _add_common(p)
    _add_stage_flags(p)
    _add_split_flag(p)
    p.add_argument("--checkpoint", required=True,
                   help="bundle trained on the source dataset")
    p.add_argument("--k-values", dest="k_values", required=True)
    p.set_defaults(handler=_cmd_feedback_study)

    p = sub.add_parser("analyze", help="structure analytics to CSV")
    p.add_argument("analysis",
                   choices=("neighbor-distribution", "numcc-curve"))
    _add_common(p, config=False, seed=False)
    p.add_argument("--class-filter", dest="class_filter", default="human",
                   choices=analytics.CLASS_FILTERS)
    p.set_defaults(handler=_cmd_analyze)

    p = sub.add_parser("serve", help="run the detection HTTP service")
    _add_common(p, out=False, config=False, seed=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--risk-threshold", dest="risk_threshold", type=float,
                   default=0.5)
    p.add_argument("--confidence-floor", dest="confidence_floor", type=float,
                   default=0.9)
    p.set_defaults(handler=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (GraphError, TrainingError, ServiceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
