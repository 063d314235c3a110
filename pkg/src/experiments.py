"""
Scenario runner: loads the corpora, expands a scenario into its variants, trains and evaluates one
model per (variant, seed), persists metrics and emits summaries and plot data.

Run directory layout::

    {output_dir}/{scenario}-{hash12}/
        config.yaml
        manifest.json                 # the only file carrying timestamps
        metrics/{variant}/seed-{s}.json
        summary.json, summary.csv
        plots/
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import pandas as pd

from src.alignment import (
    OverlapResult,
    align_corpora,
    build_cooccurrence_table,
    cooccurrence_matrix,
    overlap_statistics,
    relation_distribution,
)
from src.config import DataPaths, ExperimentConfig, ModelConfig, Scenario
from src.corpus import COMMON_SCI_RELATIONS, COMMON_SEM_RELATIONS, Direction, Document, Head, Perspective, Source
from src.core.model import JointExtractor
from src.core.trainer import Trainer, build_model, seed_everything
from src.dataset_builder import (
    HeldOutSet,
    LabelSpace,
    SplitSpec,
    Strategy,
    TrainingExample,
    build_scierc_standard_split,
    build_test_set,
    build_training_set,
    cap_data_quantity,
    head_schemas,
)
from src.errors import MissingDataError
from src.evaluation import EvalResult, Task, average_over_seeds, average_sets, relabel, score_ner, score_re, score_scirex_cross
from src.format_io import (
    ParseReport,
    load_scierc_partition,
    parse_scierc_with_report,
    parse_scirex_abstracts_with_report,
    parse_semeval_with_report,
)
from src.plots import PlotKind, emit_plots
from src.softlabel import Divergence
from src.text import get_segmenter

logger = logging.getLogger(__name__)

SCIERC_SPLITS = ("train", "dev", "test")
PREDICT_BATCH = 16


# --------------------------------------------------------------------------- data


@dataclass
class LoadedData:
    sem_corpus: list[Document]
    sci_corpus: list[Document]
    overlap: OverlapResult
    reports: dict[str, ParseReport] = field(default_factory=dict)
    partition: dict[str, set[str]] | None = None
    scirex: list[Document] | None = None


def _require(paths: DataPaths, relatives: list[str]) -> list[Path]:
    resolved = [paths.resolve(r) for r in relatives]
    missing = [str(p) for p in resolved if not p.exists()]
    if missing:
        raise MissingDataError(f"missing data files: {', '.join(missing)}")
    return resolved


def required_files(scenario: Scenario, paths: DataPaths) -> list[str]:
    files = [paths.semeval_text, paths.semeval_relations]
    files += [f"{paths.scierc_dir}/{split}.json" for split in SCIERC_SPLITS]
    if scenario is Scenario.SCIREX_TABLE5:
        files += list(paths.scirex_files)
    return files


def _accumulate(total: ParseReport, part: ParseReport) -> None:
    for name in ("entities", "relations", "dropped_relations", "skipped_documents"):
        setattr(total, name, getattr(total, name) + getattr(part, name))
    for reason, n in part.dropped_by_reason.items():
        total.dropped_by_reason[reason] = total.dropped_by_reason.get(reason, 0) + n
    total.warnings += part.warnings


def load_data(scenario: Scenario, paths: DataPaths) -> LoadedData:
    """Parse and align everything a scenario needs; every file is checked before any is read."""
    files = _require(paths, required_files(scenario, paths))
    sem_text, sem_relations, *scierc_files = files[:5]
    sem_corpus, sem_report = parse_semeval_with_report(
        sem_text.read_text(encoding="utf-8"),
        sem_relations.read_text(encoding="utf-8"),
        get_segmenter(paths.segmenter),
    )
    sci_corpus: list[Document] = []
    sci_report = ParseReport(Source.SCIERC)
    for path in scierc_files:
        docs, report = parse_scierc_with_report(path.read_text(encoding="utf-8"))
        sci_corpus += docs
        _accumulate(sci_report, report)
    sci_report.documents = len(sci_corpus)

    data = LoadedData(
        sem_corpus=sem_corpus,
        sci_corpus=sci_corpus,
        overlap=align_corpora(sem_corpus, sci_corpus),
        reports={"SEM": sem_report, "SCI": sci_report},
    )
    if scenario is Scenario.SCIERC_STANDARD_TABLE6:
        data.partition = load_scierc_partition(paths.resolve(paths.scierc_dir))
    if scenario is Scenario.SCIREX_TABLE5:
        data.scirex = []
        scirex_report = ParseReport(Source.SCIREX)
        for path in files[5:]:
            docs, report = parse_scirex_abstracts_with_report(path.read_text(encoding="utf-8"))
            data.scirex += docs
            _accumulate(scirex_report, report)
        scirex_report.documents = len(data.scirex)
        data.reports["SCIREX"] = scirex_report
    return data


# --------------------------------------------------------------------------- variants


@dataclass(frozen=True)
class Variant:
    name: str
    split: SplitSpec
    divergence: Divergence | None = None
    series: str | None = None
    cap: int | None = None
    sci_head_only: bool = False


def _variant(name: str, base: SplitSpec, strategy: Strategy, label_space: LabelSpace, **extra) -> Variant:
    divergence = extra.pop("divergence", None)
    series = extra.pop("series", None)
    sci_head_only = extra.pop("sci_head_only", False)
    update = {"strategy": strategy, "label_space": label_space, "conflict_policy": None, "soft_labels": False, **extra}
    split = base.model_copy(update=update)
    if divergence is None and split.uses_soft_labels:
        raise ValueError(f"{name}: soft-label variants need a divergence")
    return Variant(name, split, divergence, series, split.data_cap, sci_head_only)


def plan_variants(config: ExperimentConfig) -> list[Variant]:
    base, div = config.split, config.divergence
    common, typed = LabelSpace.COMMON_UNTYPED, LabelSpace.FULL_TYPED
    scenario = config.scenario
    if scenario is Scenario.OVERLAP_TABLE3:
        return [
            _variant(s.value.lower(), base, s, common, divergence=div if s is Strategy.MTL_SOFT else None)
            for s in Strategy
            if s is not Strategy.SCIERC_STANDARD
        ]
    if scenario is Scenario.DATA_QUANTITY_FIG2:
        variants = []
        for cap in config.caps:
            variants.append(_variant(f"gold-cap{cap}", base, Strategy.INDEPENDENT_SCI, common, data_cap=cap, series="gold"))
            variants.append(
                _variant(f"variation-cap{cap}", base, Strategy.MTL_SOFT, common, data_cap=cap, divergence=div, series="variation")
            )
        return variants
    if scenario is Scenario.LOSS_ABLATION_TABLE4:
        return [_variant("mtl", base, Strategy.MTL, common)] + [
            _variant(f"mtl_soft-{d.value.lower()}", base, Strategy.MTL_SOFT, common, divergence=d) for d in Divergence
        ]
    if scenario is Scenario.SCIREX_TABLE5:
        return [
            _variant("gold", base, Strategy.INDEPENDENT_SCI, typed),
            _variant("mtl", base, Strategy.MTL, typed),
            _variant("mtl_soft", base, Strategy.MTL_SOFT, typed, divergence=div),
        ]
    if scenario is Scenario.SCIERC_STANDARD_TABLE6:
        return [
            _variant("gold", base, Strategy.SCIERC_STANDARD, typed, sci_head_only=True),
            _variant("mtl", base, Strategy.SCIERC_STANDARD, typed),
            _variant("mtl_soft", base, Strategy.SCIERC_STANDARD, typed, soft_labels=True, divergence=div),
        ]
    return []


# --------------------------------------------------------------------------- evaluation


def _other_direction(head: Head) -> Direction:
    return Direction.SCI_TO_SEM if head is Head.HEAD_1 else Direction.SEM_TO_SCI


def predict_in_batches(model: JointExtractor, sentences, head: Head, threshold: float):
    out = []
    for start in range(0, len(sentences), PREDICT_BATCH):
        out += model.predict(list(sentences[start:start + PREDICT_BATCH]), head, threshold)
    return out


def evaluate_examples(
    model: JointExtractor,
    examples: list[TrainingExample],
    threshold: float,
    typed: bool = True,
    boundaries_only: bool = True,
) -> dict[Task, EvalResult]:
    """Score gold examples (one head each) with the model head of the same perspective, falling back
    to the model's other head with relabeled relations when that head was never trained."""
    if not examples:
        raise MissingDataError("empty test set")
    gold_head = next(iter(examples[0].annotations))
    head = gold_head if gold_head in model.schemas else next(iter(model.heads))
    predictions = predict_in_batches(model, [e.sentence for e in examples], head, threshold)
    if head is not gold_head:
        predictions = [relabel(p, _other_direction(head)) for p in predictions]
    gold = [(e.annotations[gold_head].entities, e.annotations[gold_head].relations) for e in examples]
    return {
        Task.NER: score_ner([p[0] for p in predictions], [g[0] for g in gold], typed=typed),
        Task.RE: score_re(predictions, gold, boundaries_only=boundaries_only),
    }


def evaluate_scirex(model: JointExtractor, docs: list[Document], threshold: float) -> EvalResult:
    sentences = [s for doc in docs for s in doc.sentences]
    predictions = predict_in_batches(model, sentences, Head.HEAD_1, threshold)
    return score_scirex_cross([p[0] for p in predictions], [s.entities for s in sentences])


# --------------------------------------------------------------------------- runs


@dataclass
class RunResult:
    run_dir: Path
    trained: int = 0
    skipped: int = 0
    summary: list[dict] = field(default_factory=list)
    plots: list[Path] = field(default_factory=list)


def run_directory(config: ExperimentConfig) -> Path:
    return Path(config.output_dir) / f"{config.scenario.value.lower()}-{config.config_hash()[:12]}"


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _dump(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


class ScenarioRunner:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.model_config: ModelConfig = config.effective_model()
        self.config_hash = config.config_hash()
        self.run_dir = run_directory(config)
        self._data: LoadedData | None = None

    @property
    def data(self) -> LoadedData:
        if self._data is None:
            self._data = load_data(self.config.scenario, self.config.data)
        return self._data

    def metrics_path(self, variant: Variant, seed: int) -> Path:
        return self.run_dir / "metrics" / variant.name / f"seed-{seed}.json"

    # ------------------------------------------------------------------ sets

    def training_set(self, variant: Variant, seed: int) -> list[TrainingExample] | None:
        spec = variant.split.model_copy(update={"seed": seed, "data_cap": None})
        data = self.data
        if spec.strategy is Strategy.SCIERC_STANDARD:
            train, _ = build_scierc_standard_split(data.sci_corpus, data.sem_corpus, data.overlap.aligned, data.partition, spec)
            if variant.sci_head_only:
                train = [
                    TrainingExample(e.doc_id, e.sentence_index, e.sentence, {Head.HEAD_1: e.annotations[Head.HEAD_1]})
                    for e in train
                    if Head.HEAD_1 in e.annotations
                ]
        else:
            extras = None
            if spec.strategy is Strategy.CONCAT_PLUS_SCI:
                extras = data.overlap.sci_only
            elif spec.strategy is Strategy.CONCAT_PLUS_SEM:
                extras = data.overlap.sem_only
            train = build_training_set(data.overlap.aligned, extras, spec)
        if variant.cap is not None:
            if variant.cap > len(train):
                logger.warning("%s: cap %d exceeds the %d available examples; skipped", variant.name, variant.cap, len(train))
                return None
            train = cap_data_quantity(train, variant.cap, seed)
        return train

    def test_sets(self, variant: Variant) -> dict[str, list]:
        data = self.data
        space = variant.split.label_space
        scenario = self.config.scenario
        if scenario is Scenario.SCIREX_TABLE5:
            return {"SCIREX": data.scirex or []}
        if scenario is Scenario.SCIERC_STANDARD_TABLE6:
            _, test = build_scierc_standard_split(
                data.sci_corpus, data.sem_corpus, data.overlap.aligned, data.partition, variant.split
            )
            return {"SCIERC_TEST": test}
        forbidden = variant.split.forbidden_test_sets()
        sets = {}
        if HeldOutSet.SEM not in forbidden:
            sets["SEM"] = build_test_set(data.overlap.sem_only, space)
        if HeldOutSet.SCI not in forbidden:
            sets["SCI"] = build_test_set(data.overlap.sci_only, space)
        return sets

    # ------------------------------------------------------------------ one seed

    def run_seed(self, variant: Variant, seed: int) -> bool:
        """Train and evaluate one seed; False when its metrics already exist or the cap cannot be met."""
        path = self.metrics_path(variant, seed)
        if path.exists():
            logger.info("%s seed %d already done; skipped", variant.name, seed)
            return False
        train = self.training_set(variant, seed)
        if train is None:
            return False
        tests = self.test_sets(variant)

        seed_everything(seed)
        trained_heads = {h for e in train for h in e.annotations}
        schemas = {h: s for h, s in head_schemas(variant.split.label_space).items() if h in trained_heads}
        model = build_model(self.model_config, schemas)
        trainer = Trainer(model, self.model_config, variant.divergence, seed=seed)
        history = trainer.fit(train, progress=False)

        threshold = self.model_config.relation_threshold
        typed = variant.split.label_space is LabelSpace.FULL_TYPED
        results = []
        for test_name, examples in sorted(tests.items()):
            if not examples:
                logger.warning("%s: test set %s is empty; not scored", variant.name, test_name)
                continue
            if test_name == "SCIREX":
                scored = {Task.NER: evaluate_scirex(model, examples, threshold)}
            else:
                scored = evaluate_examples(model, examples, threshold, typed=typed)
            for task, result in sorted(scored.items(), key=lambda kv: kv[0].value):
                results.append(result.to_record(test_set=test_name))

        payload = {
            "config_hash": self.config_hash,
            "scenario": self.config.scenario.value,
            "variant": variant.name,
            "strategy": variant.split.strategy.value,
            "divergence": variant.divergence.value if variant.divergence else None,
            "cap": variant.cap,
            "seed": seed,
            "train_examples": len(train),
            "loss": {"multi": history.multi[-1], "soft": history.soft[-1]},
            "results": results,
        }
        _write_atomic(path, _dump(payload))
        logger.info("%s seed %d: %s", variant.name, seed, {r["test_set"] + "/" + r["task"]: round(r["f1"], 4) for r in results})
        return True

    # ------------------------------------------------------------------ aggregation

    def summarize(self, variants: list[Variant]) -> list[dict]:
        rows = []
        for variant in variants:
            per_key: dict[tuple[str, str], list[EvalResult]] = {}
            for seed in self.config.seeds:
                path = self.metrics_path(variant, seed)
                if not path.exists():
                    continue
                for r in json.loads(path.read_text(encoding="utf-8"))["results"]:
                    result = EvalResult.from_counts(Task(r["task"]), r["tp"], r["fp"], r["fn"])
                    per_key.setdefault((r["test_set"], r["task"]), []).append(result)
            averaged = {key: average_over_seeds(results) for key, results in per_key.items()}
            for task in Task:
                sem, sci = averaged.get(("SEM", task.value)), averaged.get(("SCI", task.value))
                if sem is not None and sci is not None:
                    averaged[("AVG", task.value)] = average_sets(sem, sci)
            for (test_set, task), result in sorted(averaged.items()):
                rows.append(
                    {
                        "variant": variant.name,
                        "series": variant.series,
                        "cap": variant.cap,
                        "test_set": test_set,
                        "task": task,
                        "precision": result.precision,
                        "recall": result.recall,
                        "f1": result.f1,
                        "seeds": len(per_key.get((test_set, task), ())) or None,
                    }
                )
        return rows

    def quantity_rows(self, summary: list[dict]) -> list[dict]:
        rows = [r for r in summary if r["series"] and r["task"] == Task.RE.value and r["test_set"] == "AVG"]
        return [{"series": r["series"], "cap": r["cap"], "f1": r["f1"]} for r in rows]

    # ------------------------------------------------------------------ stats report

    def stats_report(self, plots_dir: Path) -> tuple[dict, list[Path]]:
        data = self.data
        aligned = data.overlap.aligned
        report = {
            "config_hash": self.config_hash,
            "documents": {"SEM": len(data.sem_corpus), "SCI": len(data.sci_corpus)},
            "overlapped": len(aligned),
            "non_overlapped": {"SEM": len(data.overlap.sem_only), "SCI": len(data.overlap.sci_only)},
            "corpora": {name: r.as_dict() for name, r in sorted(data.reports.items())},
            "overlap": overlap_statistics(aligned).as_dict(),
        }
        matrices = {}
        for perspective, relations in ((Perspective.SCI, COMMON_SCI_RELATIONS), (Perspective.SEM, COMMON_SEM_RELATIONS)):
            table = build_cooccurrence_table(aligned, perspective)
            if not table.total_relations:
                continue
            for relation in relations:
                matrices[f"{perspective.value} {relation}"] = cooccurrence_matrix(table, relation)
        render = self.config.render_plots
        written = emit_plots(relation_distribution(aligned), PlotKind.RELATION_DISTRIBUTION, plots_dir, render)
        if matrices:
            written += emit_plots(matrices, PlotKind.COOCCURRENCE_HEATMAP, plots_dir, render)
        return report, written

    # ------------------------------------------------------------------ entry

    def _write_manifest(self, variants: list[Variant], trained: int) -> None:
        path = self.run_dir / "manifest.json"
        previous = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
        now = datetime.now(timezone.utc).isoformat(timespec="seconds")
        completed = sorted(
            f"{v.name}/seed-{s}" for v in variants for s in self.config.seeds if self.metrics_path(v, s).exists()
        )
        manifest = {
            "scenario": self.config.scenario.value,
            "config_hash": self.config_hash,
            "desk_scale": self.config.desk_scale,
            "variants": [v.name for v in variants],
            "seeds": list(self.config.seeds),
            "completed": completed,
            "created": previous.get("created", now),
            "updated": now if trained or not previous else previous.get("updated", now),
        }
        _write_atomic(path, _dump(manifest))

    def run(self) -> RunResult:
        self.run_dir.mkdir(parents=True, exist_ok=True)
        _write_atomic(self.run_dir / "config.yaml", self.config.to_yaml())
        result = RunResult(self.run_dir)
        plots_dir = self.run_dir / "plots"

        if self.config.scenario is Scenario.STATS_REPORT:
            report_path = self.run_dir / "stats.json"
            if report_path.exists():
                logger.info("Statistics already reported in %s", report_path)
                result.skipped = 1
            else:
                report, result.plots = self.stats_report(plots_dir)
                _write_atomic(report_path, _dump(report))
                result.trained = 1
            self._write_manifest([], result.trained)
            return result

        variants = plan_variants(self.config)
        # fail on missing data before the first model trains
        _ = self.data
        for variant in variants:
            for seed in self.config.seeds:
                if self.run_seed(variant, seed):
                    result.trained += 1
                else:
                    result.skipped += 1
        self._write_manifest(variants, result.trained)

        result.summary = self.summarize(variants)
        if result.summary:
            _write_atomic(self.run_dir / "summary.json", _dump(result.summary))
            pd.DataFrame(result.summary).to_csv(self.run_dir / "summary.csv", index=False)
        if self.config.scenario is Scenario.DATA_QUANTITY_FIG2:
            curve = self.quantity_rows(result.summary)
            if curve:
                result.plots = emit_plots(curve, PlotKind.QUANTITY_CURVE, plots_dir, self.config.render_plots)
        logger.info("Run %s: %d seeds trained, %d skipped", self.run_dir, result.trained, result.skipped)
        return result


def run_scenario(config: ExperimentConfig) -> RunResult:
    return ScenarioRunner(config).run()
