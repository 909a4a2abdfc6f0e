"""
Comandos por etapa: align, extract, sample, train, eval, populate.

Cada comando lee los artefactos de la etapa anterior del directorio de
trabajo, escribe los suyos en ``<workdir>/<etapa>[/<relación>]`` junto con
un manifiesto, y no rehace nada si el manifiesto dice que está al día.
"""
import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from analytics import ReportWriter
from core.align import AlignmentHits, AlignmentTable, MappingRuleSet, compare_pattern_distributions, \
    coverage_stats, match_into_graph
from core.config import PipelineConfig
from core.discourse_graph import DiscourseGraph, graph_statistics, load_discourse_graph
from core.encoders import EmbeddingCache, EncoderConfig, NodeEmbedder
from core.errors import UpstreamMissingError
from core.extract import SubgraphConfig, build_relation_graph, check_temporal_soundness, temporal_rules, \
    write_relation_graph_tsv
from core.inference import PopulationResult, iter_population, rank_tails, sample_for_inspection, write_populated
from core.log import get_logger
from core.manifest import is_up_to_date, write_manifest
from core.metrics import assemble_report, read_baseline, relation_metrics
from core.normalize import Normalizer
from core.rulebook import DEFAULT_RULES_FILE, RuleBook, load_rulebook
from core.sampler import SamplerConfig, compose, read_negatives, write_negatives
from core.scorer import load_params, save_params
from core.seed_kb import load_seed_kb
from core.store import load_snapshot, snapshot_store
from core.trainer import TrainRun, evaluate_link_prediction, train, write_training_log
from entities.relation_graph import RelationGraph
from entities.relations import RelationCategory
from entities.tuples import CommonsenseTuple

log = get_logger("Pipeline")

Pair = Tuple[str, str]


@dataclass
class CommandResult:
    command: str
    relation: Optional[str]
    outputs: Dict[str, str] = field(default_factory=dict)
    up_to_date: bool = False
    summary: dict = field(default_factory=dict)


def rulebook_from_config(cfg: PipelineConfig) -> RuleBook:
    rules = load_rulebook(cfg.rules.file)
    if cfg.rules.xreact_category != RelationCategory.EFFECT_AGENT.value:
        rules = rules.move_relation("xReact", RelationCategory(cfg.rules.xreact_category))
    if not cfg.rules.cause_symmetric:
        rules = rules.without_symmetric(RelationCategory.CAUSE_AGENT.value)
    return rules


def _rules_input(cfg: PipelineConfig) -> Dict[str, str]:
    path = cfg.rules.file or DEFAULT_RULES_FILE
    return {"rules": path} if os.path.exists(path) else {}


def _stage_dir(cfg: PipelineConfig, stage: str, relation: Optional[str] = None) -> str:
    parts = [cfg.paths.workdir, stage] + ([relation] if relation else [])
    return os.path.join(*parts)


def _require(path: str, artifact: str, command: str) -> str:
    if not os.path.exists(path):
        raise UpstreamMissingError(artifact, command)
    return path


def _cached_result(command: str, relation: Optional[str], outdir: str) -> CommandResult:
    summary = {}
    summary_path = os.path.join(outdir, "summary.json")
    if os.path.exists(summary_path):
        with open(summary_path, "r", encoding="utf-8") as f:
            summary = json.load(f)
    log.info(f"{command}{' ' + relation if relation else ''}: up-to-date")
    return CommandResult(command, relation, {}, True, summary)


def _finish(cfg: PipelineConfig, command: str, relation: Optional[str], outdir: str,
            inputs: Dict[str, str], outputs: Dict[str, str], summary: dict) -> CommandResult:
    summary_path = os.path.join(outdir, "summary.json")
    with open(summary_path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
    outputs = dict(outputs, summary=summary_path)
    write_manifest(outdir, command, inputs, outputs, cfg.digest(), relation)
    return CommandResult(command, relation, outputs, False, summary)


# --- align ---------------------------------------------------------------

def _write_alignment(table: AlignmentTable, path: str):
    with open(path, "w", encoding="utf-8") as f:
        for t, hits in table.items():
            f.write(json.dumps({
                "head": t.head, "relation": t.relation, "tail": t.tail, "split": t.split,
                "head_hits": hits.head_hits, "tail_hits": hits.tail_hits,
                "pair_hits": [list(p) for p in hits.pair_hits],
            }, ensure_ascii=False) + "\n")


def read_alignment(path: str) -> AlignmentTable:
    table: AlignmentTable = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            t = CommonsenseTuple(rec["head"], rec["relation"], rec["tail"], rec["split"])
            table[t] = AlignmentHits(rec["head_hits"], rec["tail_hits"], [tuple(p) for p in rec["pair_hits"]])
    return table


def cmd_align(cfg: PipelineConfig) -> CommandResult:
    outdir = _stage_dir(cfg, "align")
    inputs = {"graph": cfg.paths.graph, "seed_kb": cfg.paths.seed_kb, **_rules_input(cfg)}
    if is_up_to_date(outdir, "align", inputs, cfg.digest()):
        return _cached_result("align", None, outdir)
    os.makedirs(outdir, exist_ok=True)
    rules = rulebook_from_config(cfg)
    normalizer = Normalizer(rules)
    graph = load_discourse_graph(cfg.paths.graph, cfg.paths.graph_format, cfg.extract.strict_graph,
                                 rules.discourse_relations, normalizer)
    kb = load_seed_kb(cfg.paths.seed_kb, cfg.paths.kb_format)
    mapping = MappingRuleSet.from_rulebook(rules, first_match_only=cfg.rules.first_match_only)
    table = match_into_graph(kb, graph, mapping, normalizer)
    coverage = coverage_stats(table)

    outputs = {
        "graph_snapshot": os.path.join(outdir, "graph.snapshot"),
        "kb_snapshot": os.path.join(outdir, "kb.snapshot"),
        "alignment": os.path.join(outdir, "alignment.jsonl"),
    }
    snapshot_store(graph, outputs["graph_snapshot"])
    snapshot_store(kb, outputs["kb_snapshot"])
    _write_alignment(table, outputs["alignment"])

    writer = ReportWriter(outdir)
    outputs.update(writer.write_coverage_report(coverage))
    heads = [normalizer.normalize(h) for h in sorted({t.head for t in kb})]
    comparison = compare_pattern_distributions(heads, [graph.nodes[k] for k in sorted(graph.nodes)],
                                               rules.pattern_codes)
    outputs.update(writer.write_pattern_comparison(comparison))
    stats = graph_statistics(graph)
    outputs.update(writer.write_graph_statistics(stats))
    summary = {
        "tuples": len(table),
        "overall_coverage": coverage["overall_coverage"],
        "macro_coverage": coverage["macro_coverage"],
        "graph_nodes": len(graph.nodes),
        "graph_edges": len(graph.edges),
        "graph_avg_degree": stats["avg_degree"],
        "graph_merged": stats["merged"],
        "graph_rejected": stats["rejected"],
    }
    return _finish(cfg, "align", None, outdir, inputs, outputs, summary)


def _load_aligned(cfg: PipelineConfig) -> Tuple[DiscourseGraph, AlignmentTable, Dict[str, str]]:
    outdir = _stage_dir(cfg, "align")
    graph_path = _require(os.path.join(outdir, "graph.snapshot"), "discourse graph snapshot", "align")
    align_path = _require(os.path.join(outdir, "alignment.jsonl"), "alignment table", "align")
    return load_snapshot(graph_path), read_alignment(align_path), {"graph": graph_path, "alignment": align_path}


# --- extract -------------------------------------------------------------

def cmd_extract(cfg: PipelineConfig, relation: str) -> CommandResult:
    outdir = _stage_dir(cfg, "extract", relation)
    align_dir = _stage_dir(cfg, "align")
    inputs = {
        "graph": _require(os.path.join(align_dir, "graph.snapshot"), "discourse graph snapshot", "align"),
        "alignment": _require(os.path.join(align_dir, "alignment.jsonl"), "alignment table", "align"),
    }
    if is_up_to_date(outdir, "extract", inputs, cfg.digest()):
        return _cached_result("extract", relation, outdir)
    graph, table, _ = _load_aligned(cfg)
    rules = rulebook_from_config(cfg)
    normalizer = Normalizer(rules)
    mapping = MappingRuleSet.from_rulebook(rules, first_match_only=cfg.rules.first_match_only)
    rg = build_relation_graph(graph, table, relation, rules, SubgraphConfig(cfg.extract.k),
                              mapping=mapping, normalizer=normalizer)
    rg.check_invariants()
    os.makedirs(outdir, exist_ok=True)
    outputs = {
        "relation_graph": os.path.join(outdir, "relation_graph.snapshot"),
        "relation_graph_tsv": os.path.join(outdir, "relation_graph.tsv"),
    }
    snapshot_store(rg, outputs["relation_graph"])
    write_relation_graph_tsv(rg, outputs["relation_graph_tsv"])
    summary = rg.statistics()
    summary["seed_splits"] = {s: len(rg.seed_pairs(s)) for s in ("train", "dev", "test")}
    return _finish(cfg, "extract", relation, outdir, inputs, outputs, summary)


def _relation_graph_path(cfg: PipelineConfig, relation: str) -> str:
    return os.path.join(_stage_dir(cfg, "extract", relation), "relation_graph.snapshot")


def _load_relation_graph(cfg: PipelineConfig, relation: str) -> RelationGraph:
    return load_snapshot(_require(_relation_graph_path(cfg, relation), f"{relation} relation graph", "extract"))


# --- sample --------------------------------------------------------------

def _sampler_config(cfg: PipelineConfig, seed: int, split: str = "train") -> SamplerConfig:
    s = cfg.sampler
    mix = s.test if split == "test" and s.test is not None else s
    return SamplerConfig(seed=seed, mixture={"O": mix.O, "I": mix.I, "S": mix.S},
                         exclude_candidates=s.exclude_candidates, shuffle_heads=s.shuffle_heads)


def eval_seeds(seed: int) -> Tuple[int, int]:
    """Semillas de dev y test, hijas independientes de ``seed``."""
    dev, test = np.random.SeedSequence(seed).spawn(2)
    return int(dev.generate_state(1)[0]), int(test.generate_state(1)[0])


def cmd_sample(cfg: PipelineConfig, relation: str) -> CommandResult:
    """
    Negativos de train y dev con la mezcla de train, de test con ``sampler.test``
    si existe. Dev y test se balancean con sus positivos y usan semillas hijas
    de ``seeds.eval_negatives``.
    """
    outdir = _stage_dir(cfg, "sample", relation)
    inputs = {relation: _require(_relation_graph_path(cfg, relation), f"{relation} relation graph", "extract")}
    for other in cfg.relations:
        if other != relation and os.path.exists(_relation_graph_path(cfg, other)):
            inputs[other] = _relation_graph_path(cfg, other)
    if is_up_to_date(outdir, "sample", inputs, cfg.digest()):
        return _cached_result("sample", relation, outdir)
    rg_all: Dict[str, RelationGraph] = {rel: load_snapshot(path) for rel, path in sorted(inputs.items())}
    rg = rg_all[relation]
    if len(rg_all) < len(cfg.relations):
        log.warning(f"{relation}: strategy O sees {len(rg_all) - 1} of {len(cfg.relations) - 1} other relations "
                    f"(run extract for the rest)")

    os.makedirs(outdir, exist_ok=True)
    outputs = {}
    counts = {}
    dev_seed, test_seed = eval_seeds(cfg.seeds.eval_negatives)
    plan = [
        ("train", cfg.seeds.sample, cfg.sampler.ratio * len(rg.seed_pairs("train"))),
        ("dev", dev_seed, len(rg.seed_pairs("dev"))),
        ("test", test_seed, len(rg.seed_pairs("test"))),
    ]
    for split, seed, n in plan:
        negatives = compose(_sampler_config(cfg, seed, split), rg, rg_all, n, split)
        path = os.path.join(outdir, f"{split}_negatives.tsv")
        write_negatives(negatives, path)
        outputs[f"{split}_negatives"] = path
        counts[split] = len(negatives)
    return _finish(cfg, "sample", relation, outdir, inputs, outputs, {"negatives": counts})


def _negatives_path(cfg: PipelineConfig, relation: str, split: str) -> str:
    return os.path.join(_stage_dir(cfg, "sample", relation), f"{split}_negatives.tsv")


def _negative_pairs(cfg: PipelineConfig, relation: str, split: str) -> List[Pair]:
    path = _require(_negatives_path(cfg, relation, split), f"{relation} {split} negatives", "sample")
    return [ex.pair for ex in read_negatives(path)]


# --- train ---------------------------------------------------------------

def _encoder_config(cfg: PipelineConfig) -> EncoderConfig:
    e = cfg.encoder
    return EncoderConfig(encoder_id=e.id, dim=e.dim, model_name=e.model_name)


def _embedder(cfg: PipelineConfig) -> NodeEmbedder:
    enc = _encoder_config(cfg)
    cache = None
    if cfg.encoder.cache:
        cache = EmbeddingCache(os.path.join(cfg.paths.workdir, "cache", f"{enc.encoder_id}-{enc.dim}.bin"), enc.dim)
    return NodeEmbedder(enc, cache)


def cmd_train(cfg: PipelineConfig, relation: str) -> CommandResult:
    outdir = _stage_dir(cfg, "train", relation)
    inputs = {
        "relation_graph": _require(_relation_graph_path(cfg, relation), f"{relation} relation graph", "extract"),
    }
    for split in ("train", "dev"):
        inputs[f"{split}_negatives"] = _require(_negatives_path(cfg, relation, split),
                                                f"{relation} {split} negatives", "sample")
    if is_up_to_date(outdir, "train", inputs, cfg.digest()):
        return _cached_result("train", relation, outdir)
    rg = load_snapshot(inputs["relation_graph"])
    run = TrainRun(
        relation=relation,
        seed=cfg.seeds.init,
        train_positives=sorted(rg.seed_pairs("train")),
        train_negatives=_negative_pairs(cfg, relation, "train"),
        dev_positives=sorted(rg.seed_pairs("dev")),
        dev_negatives=_negative_pairs(cfg, relation, "dev"),
        test_positives=sorted(rg.seed_pairs("test")),
        batch_size=cfg.train.batch_size,
        lr=cfg.train.lr,
        max_epochs=cfg.train.max_epochs,
        patience=cfg.train.patience,
        use_sage=cfg.model.use_sage,
        activation=cfg.model.activation,
        neighbor_size=cfg.model.neighbor_size,
        out_dim=cfg.model.out_dim,
        neighbor_seed=cfg.seeds.neighbors,
    )
    embed = _embedder(cfg)
    result = train(rg, run, embed.config, embed)
    if embed.cache is not None:
        embed.cache.flush()
    os.makedirs(outdir, exist_ok=True)
    save_params(result.params, outdir, cfg.digest())
    log_path = os.path.join(outdir, "train.log")
    write_training_log(result, log_path)
    outputs = {
        "params": os.path.join(outdir, "params.npz"),
        "model": os.path.join(outdir, "model.json"),
        "train_log": log_path,
    }
    summary = {"best_epoch": result.best_epoch, "best_dev_accuracy": result.best_dev_accuracy,
               "epochs": len(result.log), "warning": result.warning}
    return _finish(cfg, "train", relation, outdir, inputs, outputs, summary)


def _load_model(cfg: PipelineConfig, relation: str):
    model_dir = _stage_dir(cfg, "train", relation)
    _require(os.path.join(model_dir, "model.json"), f"{relation} model", "train")
    return load_params(model_dir), model_dir


# --- eval ----------------------------------------------------------------

def _existing_head_generation(rg: RelationGraph, params, k: int, embed) -> Dict[str, List[str]]:
    with_candidates = {u for (u, _) in rg.candidate_edges}
    heads = sorted({u for (u, _) in rg.seed_pairs("test")} & with_candidates)
    if not heads:
        heads = sorted({u for (u, _) in rg.seed_positive_edges} & with_candidates)
    return {h: [t for t, _ in rank_tails(h, rg.relation, params, rg, k, embed)] for h in heads}


def cmd_eval(cfg: PipelineConfig, relation: Optional[str] = None) -> CommandResult:
    relations = [relation] if relation else list(cfg.relations)
    inputs: Dict[str, str] = {}
    for rel in relations:
        model_dir = _stage_dir(cfg, "train", rel)
        if relation is None and not os.path.exists(os.path.join(model_dir, "model.json")):
            continue
        inputs[f"{rel}.params"] = _require(os.path.join(model_dir, "params.npz"), f"{rel} model", "train")
        inputs[f"{rel}.relation_graph"] = _require(_relation_graph_path(cfg, rel), f"{rel} relation graph", "extract")
        inputs[f"{rel}.test_negatives"] = _require(_negatives_path(cfg, rel, "test"),
                                                   f"{rel} test negatives", "sample")
    if not inputs:
        raise UpstreamMissingError("trained models", "train")
    if cfg.eval.baseline is not None:
        inputs["baseline"] = cfg.eval.baseline
    outdir = _stage_dir(cfg, "eval", relation or "all")
    if is_up_to_date(outdir, "eval", inputs, cfg.digest()):
        return _cached_result("eval", relation, outdir)
    embed = _embedder(cfg)
    rows = {}
    sizes = {}
    for rel in sorted({k.split(".", 1)[0] for k in inputs if "." in k}):
        params, _ = _load_model(cfg, rel)
        rg = load_snapshot(inputs[f"{rel}.relation_graph"])
        test_pos = sorted(rg.seed_pairs("test"))
        test_neg = _negative_pairs(cfg, rel, "test")
        acc = evaluate_link_prediction(params, test_pos, test_neg, rg, embed) if test_pos else None
        if acc is not None:
            sizes[rel] = len(test_pos) + len(test_neg)
        generated = _existing_head_generation(rg, params, cfg.infer.top_k, embed)
        train_tails = {v for (_, v) in rg.seed_pairs("train")}
        rows[rel] = relation_metrics(acc, generated, train_tails)
    if embed.cache is not None:
        embed.cache.flush()
    baseline = read_baseline(cfg.eval.baseline) if cfg.eval.baseline is not None else None
    report = assemble_report(rows, sizes, baseline)
    outputs = ReportWriter(outdir, charts=False).write_metrics_report(report)
    summary = {"relations": report.relations, "macro": report.macro, "missing": report.missing,
               "significance": {rel: {"z": z, "p": p} for rel, (z, p) in report.significance.items()}}
    return _finish(cfg, "eval", relation, outdir, inputs, outputs, summary)


# --- populate ------------------------------------------------------------

def cmd_populate(cfg: PipelineConfig, relation: str) -> CommandResult:
    model_dir = _stage_dir(cfg, "train", relation)
    inputs = {
        "params": _require(os.path.join(model_dir, "params.npz"), f"{relation} model", "train"),
        "relation_graph": _require(_relation_graph_path(cfg, relation), f"{relation} relation graph", "extract"),
        "graph": _require(os.path.join(_stage_dir(cfg, "align"), "graph.snapshot"), "discourse graph snapshot",
                          "align"),
    }
    outdir = _stage_dir(cfg, "populate", relation)
    if is_up_to_date(outdir, "populate", inputs, cfg.digest()):
        return _cached_result("populate", relation, outdir)
    params, _ = _load_model(cfg, relation)
    rg = load_snapshot(inputs["relation_graph"])
    graph = load_snapshot(inputs["graph"])
    rules = rulebook_from_config(cfg)
    rule = temporal_rules(rules)[rules.category_of(relation)]
    train_pairs = rg.seed_pairs("train")
    workers = 1 if cfg.strict else cfg.infer.workers
    embed = _embedder(cfg)

    result = PopulationResult(relation, cfg.infer.threshold)
    violations = 0

    def checked():
        nonlocal violations
        for item in iter_population(relation, params, rg, cfg.infer.threshold,
                                    {u for (u, _) in train_pairs}, {v for (_, v) in train_pairs},
                                    embed, workers):
            if not check_temporal_soundness(item.tuple.provenance, rule, rules, graph):
                violations += 1
            result.tuples.append(item)
            yield item

    os.makedirs(outdir, exist_ok=True)
    populated = os.path.join(outdir, "populated.jsonl")
    write_populated(checked(), populated)
    result.scored = len(rg.candidate_edges)
    if violations:
        log.warning(f"{relation}: {violations} populated tuples fail the temporal soundness replay")
    inspection = os.path.join(outdir, "inspection.jsonl")
    write_populated(sample_for_inspection(result, cfg.infer.inspect_n, cfg.seeds.inspect), inspection)
    if embed.cache is not None:
        embed.cache.flush()
    summary = {
        "scored": result.scored,
        "populated": len(result),
        "novel_head": sum(t.novel_head for t in result.tuples),
        "novel_tail": sum(t.novel_tail for t in result.tuples),
        "soundness_violations": violations,
    }
    return _finish(cfg, "populate", relation, outdir, inputs, {"populated": populated, "inspection": inspection},
                   summary)


COMMANDS = {
    "align": cmd_align,
    "extract": cmd_extract,
    "sample": cmd_sample,
    "train": cmd_train,
    "eval": cmd_eval,
    "populate": cmd_populate,
}
