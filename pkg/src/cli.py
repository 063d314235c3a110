"""Command-line entry point: parse, align, stats, build, train, evaluate, scenario, plot, synth."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from src.config import DataPaths, ExperimentConfig, Scenario, load_config, log_level_default
from src.corpus import Head
from src.errors import ConfigError, MissingDataError, ScivarError

logger = logging.getLogger(__name__)


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _read(path: str | Path) -> str:
    path = Path(path)
    if not path.exists():
        raise MissingDataError(f"file not found: {path}")
    return path.read_text(encoding="utf-8")


def _data_paths(args) -> DataPaths:
    overrides = {}
    if args.data_root:
        overrides["root"] = Path(args.data_root)
    if getattr(args, "segmenter", None):
        overrides["segmenter"] = args.segmenter
    return DataPaths(**overrides)


def _loaded(args):
    from src.experiments import load_data

    return load_data(Scenario.STATS_REPORT, _data_paths(args))


# --------------------------------------------------------------------------- verbs


def cmd_parse(args) -> int:
    from src.format_io import (
        parse_scierc_with_report,
        parse_scirex_abstracts_with_report,
        parse_semeval_with_report,
        write_unified_file,
    )
    from src.text import get_segmenter

    if args.source == "semeval":
        if not args.relations:
            raise ConfigError("--relations is required for SemEval")
        docs, report = parse_semeval_with_report(_read(args.input), _read(args.relations), get_segmenter(args.segmenter))
    elif args.source == "scierc":
        docs, report = parse_scierc_with_report(_read(args.input))
    else:
        docs, report = parse_scirex_abstracts_with_report(_read(args.input))
    if args.out:
        write_unified_file(args.out, docs)
    _print_json(report.as_dict())
    return 0


def cmd_align(args) -> int:
    from src.format_io import write_unified_file

    overlap = _loaded(args).overlap
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_unified_file(out / "sem_overlapped.jsonl", [p.sem_doc for p in overlap.aligned])
    write_unified_file(out / "sci_overlapped.jsonl", [p.sci_doc for p in overlap.aligned])
    write_unified_file(out / "sem_only.jsonl", overlap.sem_only)
    write_unified_file(out / "sci_only.jsonl", overlap.sci_only)
    pairs = [
        {
            "sem": p.sem_doc.doc_id,
            "sci": p.sci_doc.doc_id,
            "agreements": {a: sum(v.agreement.value == a for v in p.relation_verdicts) for a in ("HIGH", "MEDIUM", "LOW")},
            "dropped_relations": p.dropped_relations,
        }
        for p in overlap.aligned
    ]
    (out / "pairs.json").write_text(json.dumps(pairs, indent=2) + "\n", encoding="utf-8")
    _print_json({"aligned": len(overlap.aligned), "sem_only": len(overlap.sem_only), "sci_only": len(overlap.sci_only)})
    return 0


def cmd_stats(args) -> int:
    from src.alignment import overlap_statistics

    report = overlap_statistics(_loaded(args).overlap.aligned).as_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _print_json(report)
    return 0


def cmd_build(args) -> int:
    from src.dataset_builder import (
        ConflictPolicy,
        HeldOutSet,
        LabelSpace,
        SplitSpec,
        Strategy,
        build_scierc_standard_split,
        build_test_set,
        build_training_set,
        write_built_set,
    )
    from src.experiments import load_data

    spec = SplitSpec(
        strategy=Strategy(args.strategy),
        label_space=LabelSpace(args.label_space),
        conflict_policy=ConflictPolicy(args.policy) if args.policy else None,
        soft_labels=args.soft_labels,
        soft_entities=args.soft_entities,
        data_cap=args.cap,
        seed=args.seed,
    )
    scenario = Scenario.SCIERC_STANDARD_TABLE6 if spec.strategy is Strategy.SCIERC_STANDARD else Scenario.STATS_REPORT
    data = load_data(scenario, _data_paths(args))
    if args.held_out:
        held_out = HeldOutSet(args.held_out)
        if held_out in spec.forbidden_test_sets():
            raise ConfigError(f"{held_out.value} abstracts are training data under {spec.strategy.value}")
        docs = data.overlap.sem_only if held_out is HeldOutSet.SEM else data.overlap.sci_only
        examples = build_test_set(docs, spec.label_space)
    elif spec.strategy is Strategy.SCIERC_STANDARD:
        train, test = build_scierc_standard_split(data.sci_corpus, data.sem_corpus, data.overlap.aligned, data.partition, spec)
        write_built_set(Path(args.out) / "test", test, spec)
        _print_json(write_built_set(Path(args.out) / "train", train, spec).model_dump(mode="json"))
        return 0
    else:
        extras = {
            Strategy.CONCAT_PLUS_SCI: data.overlap.sci_only,
            Strategy.CONCAT_PLUS_SEM: data.overlap.sem_only,
        }.get(spec.strategy)
        examples = build_training_set(data.overlap.aligned, extras, spec)
    manifest = write_built_set(args.out, examples, spec)
    _print_json(manifest.model_dump(mode="json"))
    return 0


def _experiment(args, **extra) -> ExperimentConfig:
    """Config file (optional) plus flag overrides; without either a scenario falls back to STATS_REPORT."""
    overrides: dict = {k: v for k, v in extra.items() if v is not None}
    if getattr(args, "config", None) is None:
        overrides.setdefault("scenario", Scenario.STATS_REPORT.value)
    if getattr(args, "seeds", None):
        overrides["seeds"] = args.seeds
    if getattr(args, "desk_scale", False):
        overrides["desk_scale"] = True
    if getattr(args, "output_dir", None):
        overrides["output_dir"] = args.output_dir
    if args.data_root:
        overrides["data"] = {"root": args.data_root}
    return load_config(getattr(args, "config", None), overrides)


def cmd_train(args) -> int:
    from src.corpus import LabelSchema
    from src.core.trainer import Trainer, build_model, save_checkpoint, seed_everything
    from src.dataset_builder import LabelSpace, head_schemas, read_built_set
    from src.softlabel import Divergence

    config = _experiment(args, scenario=None)
    model_config = config.effective_model()
    examples = read_built_set(args.train_set)
    manifest = json.loads(_read(Path(args.train_set) / "manifest.json"))
    trained = {h for e in examples for h in e.annotations}
    schemas: dict[Head, LabelSchema] = {
        h: s for h, s in head_schemas(LabelSpace(manifest["label_space"])).items() if h in trained
    }
    seed = config.seeds[0]
    seed_everything(seed)
    model = build_model(model_config, schemas)
    divergence = Divergence(args.divergence) if any(e.soft_labels for e in examples) else None
    history = Trainer(model, model_config, divergence, seed=seed).fit(examples, epochs=args.epochs)
    save_checkpoint(model, args.out, model_config, seed)
    _print_json({"checkpoint": str(args.out), "multi": history.multi, "soft": history.soft})
    return 0


def cmd_evaluate(args) -> int:
    from src.core.trainer import load_checkpoint
    from src.dataset_builder import read_built_set
    from src.experiments import evaluate_examples

    model = load_checkpoint(args.checkpoint, args.device)
    examples = read_built_set(args.test_set)
    scored = evaluate_examples(model, examples, args.threshold, typed=not args.untyped, boundaries_only=not args.strict)
    _print_json({task.value: result.to_record() for task, result in scored.items()})
    return 0


def cmd_scenario(args) -> int:
    from src.experiments import run_scenario

    extra = {"scenario": args.scenario} if args.scenario else {}
    if args.no_render:
        extra["render_plots"] = False
    if args.config is None and not args.scenario:
        raise ConfigError("give --config or --scenario")
    config = _experiment(args, **extra)
    result = run_scenario(config)
    _print_json(
        {
            "run_dir": str(result.run_dir),
            "config_hash": config.config_hash(),
            "trained": result.trained,
            "skipped": result.skipped,
            "plots": [str(p) for p in result.plots],
        }
    )
    return 0


def cmd_plot(args) -> int:
    from src.plots import emit_plots

    artifact = json.loads(_read(args.input))
    if isinstance(artifact, dict) and "distribution" in artifact:
        artifact = artifact["distribution"]
    written = emit_plots(artifact, args.kind, args.out, render=not args.no_render)
    _print_json([str(p) for p in written])
    return 0


def cmd_synth(args) -> int:
    from src.synthetic import write_synthetic

    paths = write_synthetic(
        args.out,
        n_overlap=args.overlap,
        n_sem_only=args.sem_only,
        n_sci_only=args.sci_only,
        n_scirex=args.scirex,
        seed=args.seed,
    )
    _print_json({"root": str(paths.root)})
    return 0


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    from src.dataset_builder import ConflictPolicy, HeldOutSet, LabelSpace, Strategy
    from src.plots import PlotKind
    from src.softlabel import Divergence

    parser = argparse.ArgumentParser(prog="scivar", description="Multi-perspective scientific IE toolkit")
    parser.add_argument("--log-level", default=log_level_default(), help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--data-root", help="Root of the corpora (default: $SCIVAR_DATA_ROOT or ./data)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="Parse one release into the unified format")
    p.add_argument("source", choices=["semeval", "scierc", "scirex"])
    p.add_argument("input")
    p.add_argument("--relations", help="SemEval relation file")
    p.add_argument("--segmenter", default="spacy")
    p.add_argument("--out", help="Unified JSONL output")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("align", help="Find overlapped abstracts and write both views")
    p.add_argument("--segmenter")
    p.add_argument("--out", default="aligned")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("stats", help="Overlap statistics")
    p.add_argument("--segmenter")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("build", help="Materialize a training or held-out set")
    p.add_argument("--strategy", choices=[s.value for s in Strategy], required=True)
    p.add_argument("--label-space", choices=[s.value for s in LabelSpace], default=LabelSpace.COMMON_UNTYPED.value)
    p.add_argument("--policy", choices=[c.value for c in ConflictPolicy])
    p.add_argument("--soft-labels", action="store_true")
    p.add_argument("--soft-entities", action="store_true")
    p.add_argument("--cap", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--held-out", choices=[h.value for h in HeldOutSet], help="Build this test set instead")
    p.add_argument("--segmenter")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("train", help="Train on a built set and save a checkpoint")
    p.add_argument("train_set")
    p.add_argument("--config")
    p.add_argument("--divergence", choices=[d.value for d in Divergence], default=Divergence.KL_STANDARD.value)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--desk-scale", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="Score a checkpoint on a built held-out set")
    p.add_argument("checkpoint")
    p.add_argument("test_set")
    p.add_argument("--threshold", type=float, default=0.4)
    p.add_argument("--untyped", action="store_true", help="Ignore entity types in NER")
    p.add_argument("--strict", action="store_true", help="RE also matches argument entity types")
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("scenario", help="Run an experiment scenario end to end")
    p.add_argument("--config")
    p.add_argument("--scenario", choices=[s.value for s in Scenario])
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--output-dir")
    p.add_argument("--desk-scale", action="store_true")
    p.add_argument("--no-render", action="store_true")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("plot", help="Emit plot data (and image) from a JSON artifact")
    p.add_argument("kind", choices=[k.value for k in PlotKind])
    p.add_argument("input")
    p.add_argument("--out", default="plots")
    p.add_argument("--no-render", action="store_true")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("synth", help="Write small synthetic corpora")
    p.add_argument("out")
    p.add_argument("--overlap", type=int, default=6)
    p.add_argument("--sem-only", type=int, default=2)
    p.add_argument("--sci-only", type=int, default=2)
    p.add_argument("--scirex", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s - %(levelname)s - %(name)s - %(message)s",
    )
    try:
        return args.func(args)
    except ScivarError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.debug("Unexpected failure", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
