"""Agent-only experiment protocol: three conditions over a JSONL dataset.

Conditions:
  zero_shot      one direct translation call per item
  self_refine    translate, then one self-critique-and-revise call
  chorus_agents  route with a fixed instruction, invoke the selected
                 dimension agents, synthesize via the editor; no human steps

Runs are written as directories (config.json, items.jsonl, scores.json)
whose bytes depend only on inputs and seed, never on wall-clock time, so
identical runs are byte-identical and diffable.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Sequence

from ..agents import MalformedResponse, TaskContext, invoke_agent, synthesize
from ..dimensions import JobContext, LanguagePair, all_dimensions
from ..providers import ChatProvider, ChatRequest, Message, ProviderError, RetryPolicy, complete_with_retry
from ..router import route
from ..tm import IoFailure, TmStore
from .bootstrap import paired_bootstrap
from .metrics import bleu_from_stats, bleu_item_stats, meteor_lite, tokenize_for_metric

log = logging.getLogger(__name__)

CHORUS_INSTRUCTION = "produce a publication-quality translation"

CONFIG_FILE = "config.json"
ITEMS_FILE = "items.jsonl"
SCORES_FILE = "scores.json"


class Condition(str, Enum):
    ZERO_SHOT = "zero_shot"
    SELF_REFINE = "self_refine"
    CHORUS_AGENTS = "chorus_agents"


class DatasetError(Exception):
    pass


class BadRecord(DatasetError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"bad dataset record on line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(DatasetError):
    def __init__(self, item_id: str, line_no: int):
        super().__init__(f"duplicate item id {item_id!r} on line {line_no}")
        self.item_id = item_id
        self.line_no = line_no


class FatalItemFailure(Exception):
    """An item produced no text at all; scoring it would skew results."""

    def __init__(self, item_id: str, reason: str):
        super().__init__(f"item {item_id!r} produced no output: {reason}")
        self.item_id = item_id
        self.reason = reason


@dataclass(frozen=True)
class EvalItem:
    item_id: str
    source: str
    reference: str
    language_pair: LanguagePair

    def __post_init__(self):
        if not self.item_id or not self.source or not self.reference:
            raise ValueError("item_id, source, and reference must be non-empty")


def load_dataset(path: str) -> list[EvalItem]:
    """One JSON object per line: id, source, reference, src_lang, tgt_lang."""
    items: list[EvalItem] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            line_no = index + 1
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BadRecord(line_no, f"not valid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise BadRecord(line_no, "record is not a JSON object")
            for key in ("id", "source", "reference", "src_lang", "tgt_lang"):
                value = record.get(key)
                if not isinstance(value, str) or not value.strip():
                    raise BadRecord(line_no, f"missing or empty field {key!r}")
            item_id = record["id"]
            if item_id in seen:
                raise DuplicateId(item_id, line_no)
            seen.add(item_id)
            try:
                pair = LanguagePair(record["src_lang"], record["tgt_lang"])
            except ValueError as exc:
                raise BadRecord(line_no, str(exc)) from exc
            items.append(
                EvalItem(
                    item_id=item_id,
                    source=record["source"],
                    reference=record["reference"],
                    language_pair=pair,
                )
            )
    if not items:
        log.warning("dataset %s is empty", path)
    return items


@dataclass(frozen=True)
class ItemResult:
    item: EvalItem
    hypothesis: str
    provider_calls: int
    error: str = ""


@dataclass(frozen=True)
class ConditionRun:
    condition: Condition
    model_id: str
    seed: int
    results: tuple[ItemResult, ...]
    config: dict = field(default_factory=dict)


def _translation_request(item: EvalItem, model_id: str, temperature: float, tag: str) -> ChatRequest:
    pair = item.language_pair
    return ChatRequest(
        messages=(
            Message("system", "You are a professional translator. Output only the translation."),
            Message(
                "user",
                f"Translate the following {pair.source_lang} text into {pair.target_lang}. "
                f"Reply with the translation only.\n\n{item.source}",
            ),
        ),
        model_id=model_id,
        temperature=temperature,
        tag=tag,
    )


def _critique_request(base: ChatRequest, draft: str) -> ChatRequest:
    labels = "; ".join(d.label for d in all_dimensions())
    return ChatRequest(
        messages=base.messages
        + (
            Message("assistant", draft),
            Message(
                "user",
                "Critique your translation above against these quality dimensions: "
                f"{labels}. Then produce a revised translation that fixes the problems "
                "you found. Reply with the revised translation only.",
            ),
        ),
        model_id=base.model_id,
        temperature=base.temperature,
        tag="self_refine",
    )


def _run_item(
    condition: Condition,
    item: EvalItem,
    provider: ChatProvider,
    tm: TmStore,
    model_id: str,
    temperature: float,
    retry: RetryPolicy | None,
) -> tuple[str, str]:
    """(hypothesis, error). Best-effort text survives mid-item failures;
    an item with no text at all is fatal for the whole run."""
    best = ""
    try:
        if condition is Condition.ZERO_SHOT:
            request = _translation_request(item, model_id, temperature, "zero_shot")
            best = complete_with_retry(provider, request, retry).content.strip()
            return best, ""
        if condition is Condition.SELF_REFINE:
            request = _translation_request(item, model_id, temperature, "self_refine:draft")
            draft = complete_with_retry(provider, request, retry).content.strip()
            best = draft
            revised = complete_with_retry(provider, _critique_request(request, draft), retry).content.strip()
            best = revised or draft
            return best, ""
        ctx = TaskContext(
            source_text=item.source,
            language_pair=item.language_pair,
            job=JobContext(job_id=f"eval:{item.item_id}"),
        )
        decision = route(provider, CHORUS_INSTRUCTION, ctx, tm, retry=retry)
        batch = []
        agent_errors: list[str] = []
        for dim in decision.dimensions:
            try:
                candidate = invoke_agent(provider, dim, ctx, tm, retry=retry)
                batch.append(candidate)
                best = candidate.text
            except (ProviderError, MalformedResponse) as exc:
                agent_errors.append(f"{dim.label}: {exc}")
        if not batch:
            raise FatalItemFailure(item.item_id, "; ".join(agent_errors) or "no candidates")
        final = synthesize(provider, batch, ctx, retry=retry)
        best = final.text
        return best, "; ".join(agent_errors)
    except (ProviderError, MalformedResponse) as exc:
        if best:
            log.warning("item %s degraded to best-effort text: %s", item.item_id, exc)
            return best, str(exc)
        raise FatalItemFailure(item.item_id, str(exc)) from exc


def run_condition(
    condition: Condition,
    items: Sequence[EvalItem],
    provider: ChatProvider,
    tm: TmStore,
    *,
    seed: int = 0,
    model_id: str = "",
    temperature: float = 0.0,
    config: dict | None = None,
    retry: RetryPolicy | None = None,
) -> ConditionRun:
    """Run one condition over the dataset, counting provider calls per item.

    Items are processed and recorded in item_id order so runs with equal
    inputs are equal structures.
    """
    if not items:
        raise ValueError("run_condition needs a non-empty dataset")
    results: list[ItemResult] = []
    for item in sorted(items, key=lambda it: it.item_id):
        calls_before = len(provider.call_log)
        hypothesis, error = _run_item(condition, item, provider, tm, model_id, temperature, retry)
        calls = len(provider.call_log) - calls_before
        results.append(ItemResult(item=item, hypothesis=hypothesis, provider_calls=calls, error=error))
    snapshot = {
        "condition": condition.value,
        "model_id": model_id,
        "seed": seed,
        "temperature": temperature,
    }
    snapshot.update(config or {})
    return ConditionRun(
        condition=condition,
        model_id=model_id,
        seed=seed,
        results=tuple(results),
        config=snapshot,
    )


def _direction(pair: LanguagePair) -> str:
    return str(pair)


def score_run(run: ConditionRun) -> dict:
    """Per-direction and overall BLEU / METEOR-lite over a finished run."""
    by_direction: dict[str, list[ItemResult]] = {}
    for result in run.results:
        by_direction.setdefault(_direction(result.item.language_pair), []).append(result)
    directions = {}
    all_stats = []
    all_meteor = []
    for direction in sorted(by_direction):
        group = by_direction[direction]
        lang = group[0].item.language_pair.target_lang
        hyps = [r.hypothesis for r in group]
        refs = [r.item.reference for r in group]
        stats = [
            bleu_item_stats(tokenize_for_metric(h, lang), tokenize_for_metric(r, lang))
            for h, r in zip(hyps, refs)
        ]
        meteors = [meteor_lite(h, r, lang) for h, r in zip(hyps, refs)]
        all_stats.extend(stats)
        all_meteor.extend(meteors)
        directions[direction] = {
            "bleu": bleu_from_stats(stats),
            "meteor_lite": sum(meteors) / len(meteors),
            "n_items": len(group),
        }
    overall = {
        "bleu": bleu_from_stats(all_stats),
        "meteor_lite": sum(all_meteor) / len(all_meteor),
        "n_items": len(run.results),
    }
    return {"directions": directions, "overall": overall}


def _dump_json(path: str, payload: dict) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def write_run_dir(run: ConditionRun, out_dir: str) -> None:
    """Persist a run: config snapshot, per-item lines, scores. Deterministic bytes."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    _dump_json(os.path.join(out_dir, CONFIG_FILE), run.config)
    try:
        with open(os.path.join(out_dir, ITEMS_FILE), "w", encoding="utf-8") as fh:
            for result in run.results:
                record = {
                    "item_id": result.item.item_id,
                    "source": result.item.source,
                    "reference": result.item.reference,
                    "src_lang": result.item.language_pair.source_lang,
                    "tgt_lang": result.item.language_pair.target_lang,
                    "hypothesis": result.hypothesis,
                    "provider_calls": result.provider_calls,
                    "error": result.error,
                }
                fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    _dump_json(os.path.join(out_dir, SCORES_FILE), score_run(run))


@dataclass(frozen=True)
class LoadedRun:
    path: str
    config: dict
    items: tuple[dict, ...]
    scores: dict

    @property
    def condition_name(self) -> str:
        return self.config.get("condition", os.path.basename(self.path.rstrip("/")) or "unknown")


def load_run_dir(path: str) -> LoadedRun:
    try:
        with open(os.path.join(path, CONFIG_FILE), "r", encoding="utf-8") as fh:
            config = json.load(fh)
        items = []
        with open(os.path.join(path, ITEMS_FILE), "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    items.append(json.loads(line))
        with open(os.path.join(path, SCORES_FILE), "r", encoding="utf-8") as fh:
            scores = json.load(fh)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise IoFailure(f"run dir {path} holds invalid JSON: {exc}") from exc
    return LoadedRun(path=path, config=config, items=tuple(items), scores=scores)


def compare_runs(
    run_a: LoadedRun,
    run_b: LoadedRun,
    metric: str,
    *,
    n_resamples: int = 1000,
    seed: int = 0,
) -> list[dict]:
    """Per-direction paired bootstrap between two runs over the same items."""
    index_a = {record["item_id"]: record for record in run_a.items}
    index_b = {record["item_id"]: record for record in run_b.items}
    if set(index_a) != set(index_b):
        raise ValueError("runs cover different item sets and cannot be paired")
    by_direction: dict[str, list[tuple[str, str, str]]] = {}
    lang_for: dict[str, str] = {}
    for item_id in sorted(index_a):
        a = index_a[item_id]
        b = index_b[item_id]
        if a["reference"] != b["reference"]:
            raise ValueError(f"item {item_id!r} has different references in the two runs")
        direction = f"{a['src_lang']}->{a['tgt_lang']}"
        by_direction.setdefault(direction, []).append((a["hypothesis"], b["hypothesis"], a["reference"]))
        lang_for[direction] = a["tgt_lang"]
    rows = []
    for direction in sorted(by_direction):
        pairs = by_direction[direction]
        outcome = paired_bootstrap(pairs, metric, lang_for[direction], n_resamples=n_resamples, seed=seed)
        rows.append(
            {
                "condition_a": run_a.condition_name,
                "condition_b": run_b.condition_name,
                "direction": direction,
                "metric": metric,
                "delta": outcome.delta,
                "p_value": outcome.p_value,
                "n_resamples": outcome.n_resamples,
                "seed": outcome.seed,
                "n_items": len(pairs),
            }
        )
    return rows


@dataclass(frozen=True)
class MetricReport:
    rows: tuple[dict, ...]
    comparisons: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {"rows": list(self.rows), "comparisons": list(self.comparisons)}


def all_pairwise_comparisons(
    runs: Sequence[LoadedRun],
    *,
    metrics: Sequence[str] = ("bleu", "meteor_lite"),
    n_resamples: int = 1000,
    seed: int = 0,
) -> list[dict]:
    comparisons: list[dict] = []
    for run_a, run_b in combinations(runs, 2):
        for metric in metrics:
            comparisons.extend(compare_runs(run_a, run_b, metric, n_resamples=n_resamples, seed=seed))
    return comparisons


def build_report(runs: Sequence[LoadedRun], comparisons: Sequence[dict], out_dir: str) -> MetricReport:
    """Assemble per-direction score rows plus comparisons; write JSON and Markdown."""
    if not runs:
        raise ValueError("build_report needs at least one run")
    rows = []
    for run in runs:
        for direction in sorted(run.scores.get("directions", {})):
            scores = run.scores["directions"][direction]
            rows.append(
                {
                    "direction": direction,
                    "condition": run.condition_name,
                    "bleu": scores["bleu"],
                    "meteor_lite": scores["meteor_lite"],
                    "n_items": scores["n_items"],
                }
            )
    report = MetricReport(rows=tuple(rows), comparisons=tuple(comparisons))
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    _dump_json(os.path.join(out_dir, "report.json"), report.to_dict())
    try:
        with open(os.path.join(out_dir, "report.md"), "w", encoding="utf-8") as fh:
            fh.write(render_report_markdown(report))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return report


def render_report_markdown(report: MetricReport) -> str:
    lines = ["# Evaluation report", ""]
    directions = sorted({row["direction"] for row in report.rows})
    for direction in directions:
        lines.append(f"## {direction}")
        lines.append("")
        lines.append("| condition | BLEU | METEOR-lite | items |")
        lines.append("|---|---:|---:|---:|")
        for row in report.rows:
            if row["direction"] == direction:
                lines.append(
                    f"| {row['condition']} | {row['bleu']:.4f} | {row['meteor_lite']:.4f} | {row['n_items']} |"
                )
        lines.append("")
        direction_comparisons = [c for c in report.comparisons if c["direction"] == direction]
        if direction_comparisons:
            lines.append("| A | B | metric | delta | p_value | resamples | seed |")
            lines.append("|---|---|---|---:|---:|---:|---:|")
            for c in direction_comparisons:
                lines.append(
                    f"| {c['condition_a']} | {c['condition_b']} | {c['metric']} "
                    f"| {c['delta']:+.4f} | {c['p_value']:.4f} | {c['n_resamples']} | {c['seed']} |"
                )
            lines.append("")
    return "\n".join(lines)
