"""Instruction routing: map a translator's free-text ask onto 1-3 dimensions.

The translator stays in charge: the router only proposes which expert
agents to wake up, and every decision records where it came from
(``llm``, ``fallback``, or ``override``) plus a short rationale. route()
is total. Whatever the model or the transport does, the caller always
gets a usable decision back, worst case from the keyword fallback.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .agents import TaskContext, _base_values, fill, load_template
from .dimensions import QualityDimension, UnknownDimension, dimension_from_label
from .json_utils import iter_json_objects
from .providers import ChatProvider, ChatRequest, Message, RetryPolicy, complete_with_retry
from .tm import RetrievalQuery, TmNamespace, TmStore

log = logging.getLogger(__name__)

MAX_DIMENSIONS = 3
DEFAULT_DIMENSIONS = (QualityDimension.ACCURACY, QualityDimension.FLUENCY)

ORIGIN_LLM = "llm"
ORIGIN_FALLBACK = "fallback"
ORIGIN_OVERRIDE = "override"


@dataclass(frozen=True)
class RoutingDecision:
    """1-3 distinct dimensions in canonical order, plus rationale and origin."""

    dimensions: tuple[QualityDimension, ...]
    rationale: str
    origin: str
    instruction_echo: str = ""

    def __post_init__(self):
        if not isinstance(self.dimensions, tuple):
            object.__setattr__(self, "dimensions", tuple(self.dimensions))
        if not 1 <= len(self.dimensions) <= MAX_DIMENSIONS:
            raise ValueError("a routing decision selects between 1 and 3 dimensions")
        if len(set(self.dimensions)) != len(self.dimensions):
            raise ValueError("routing decision dimensions must be distinct")
        if list(self.dimensions) != sorted(self.dimensions, key=lambda d: d.ordinal):
            raise ValueError("routing decision dimensions must be in canonical order")
        if self.origin not in (ORIGIN_LLM, ORIGIN_FALLBACK, ORIGIN_OVERRIDE):
            raise ValueError(f"unknown routing origin: {self.origin!r}")

    def to_dict(self) -> dict:
        return {
            "dimensions": [d.label for d in self.dimensions],
            "rationale": self.rationale,
            "origin": self.origin,
            "instruction_echo": self.instruction_echo,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoutingDecision":
        return cls(
            dimensions=tuple(dimension_from_label(lbl) for lbl in d["dimensions"]),
            rationale=d.get("rationale", ""),
            origin=d.get("origin", ORIGIN_LLM),
            instruction_echo=d.get("instruction_echo", ""),
        )


def clamp_decision(
    raw_labels: list,
    rationale: str,
    *,
    origin: str = ORIGIN_LLM,
    instruction_echo: str = "",
) -> RoutingDecision:
    """Normalize whatever label list we got into a valid decision.

    Unknown labels are dropped and duplicates collapsed. The first three
    distinct valid labels survive (the model lists by relevance, so
    truncation respects its ranking), then canonical order is imposed on
    the survivors. An empty survivor set falls back to Accuracy + Fluency
    with the rationale marked as defaulted.
    """
    seen: list[QualityDimension] = []
    for label in raw_labels:
        if not isinstance(label, str):
            continue
        try:
            dim = dimension_from_label(label)
        except UnknownDimension:
            continue
        if dim not in seen:
            seen.append(dim)
    seen = seen[:MAX_DIMENSIONS]
    seen.sort(key=lambda d: d.ordinal)
    if not seen:
        seen = list(DEFAULT_DIMENSIONS)
        rationale = (rationale + " (defaulted)").strip()
    return RoutingDecision(
        dimensions=tuple(seen),
        rationale=rationale,
        origin=origin,
        instruction_echo=instruction_echo,
    )


# Keyword table for offline routing. First matching group per dimension wins;
# several groups can fire and each contributes its dimension.
_KEYWORDS: tuple[tuple[QualityDimension, tuple[str, ...]], ...] = (
    (QualityDimension.TERMINOLOGY, ("terminolog", "term", "glossary", "jargon")),
    (QualityDimension.STYLE, ("style", "tone", "formal", "informal", "register", "voice")),
    (QualityDimension.AUDIENCE_APPROPRIATENESS, ("audience", "reader", "layperson", "expert level")),
    (QualityDimension.LOCALE_CONVENTION, ("locale", "date", "number", "unit", "currency", "decimal")),
    (QualityDimension.DESIGN_AND_MARKUP, ("markup", "tag", "format", "layout", "placeholder", "html")),
    (QualityDimension.FLUENCY, ("fluen", "grammar", "natural", "awkward", "readab")),
    (QualityDimension.ACCURACY, ("accura", "meaning", "mistranslat", "omission", "faithful", "literal")),
)


def fallback_route(instruction: str, *, origin: str = ORIGIN_FALLBACK) -> RoutingDecision:
    """Keyword scan over the instruction; no model involved."""
    lowered = instruction.lower()
    hits: list[tuple[QualityDimension, str]] = []
    for dim, needles in _KEYWORDS:
        for needle in needles:
            if needle in lowered:
                hits.append((dim, needle))
                break
    if hits:
        labels = [dim.label for dim, _ in hits]
        words = ", ".join(needle for _, needle in hits)
        return clamp_decision(
            labels,
            f"keyword fallback: matched {words}",
            origin=origin,
            instruction_echo=instruction,
        )
    return clamp_decision([], "keyword fallback: no keywords matched", origin=origin, instruction_echo=instruction)


def render_router_prompt(
    instruction: str,
    ctx: TaskContext,
    *,
    model_id: str = "",
    temperature: float = 0.0,
) -> ChatRequest:
    system, user = load_template("router.txt")
    values = _base_values(ctx)
    values["instruction"] = instruction or "(none given)"
    return ChatRequest(
        messages=(
            Message("system", fill(system, values)),
            Message("user", fill(user, values)),
        ),
        model_id=model_id,
        temperature=temperature,
        tag="router",
    )


def _parse_router_reply(raw: str) -> tuple[list, str] | None:
    for obj in iter_json_objects(raw):
        dims = obj.get("dimensions")
        if isinstance(dims, list) and dims:
            rationale = obj.get("rationale", "")
            if not isinstance(rationale, str):
                rationale = str(rationale)
            return dims, rationale
    return None


def route(
    provider: ChatProvider,
    instruction: str,
    ctx: TaskContext,
    tm: TmStore,
    *,
    retry: RetryPolicy | None = None,
) -> RoutingDecision:
    """Ask the model which dimensions the instruction calls for.

    Total: parse failures get one strict reprompt, and any remaining
    failure (including provider errors) lands in the keyword fallback.
    """
    try:
        entries = tm.retrieve(
            RetrievalQuery(
                query_text=ctx.source_text,
                language_pair=ctx.language_pair,
                namespaces=(TmNamespace.global_ns(), TmNamespace.for_job(ctx.job.job_id)),
            )
        )
        request = render_router_prompt(instruction, replace(ctx, tm_entries=tuple(entries)))
        response = complete_with_retry(provider, request, retry)
        parsed = _parse_router_reply(response.content)
        if parsed is None:
            reminder = ChatRequest(
                messages=request.messages
                + (
                    Message("assistant", response.content),
                    Message(
                        "user",
                        'Your previous reply could not be parsed. Respond with ONLY one JSON object: '
                        '{"dimensions": ["..."], "rationale": "..."}.',
                    ),
                ),
                model_id=request.model_id,
                temperature=request.temperature,
                tag=request.tag,
            )
            second = complete_with_retry(provider, reminder, retry)
            parsed = _parse_router_reply(second.content)
        if parsed is None:
            log.info("router reply unparseable twice; using keyword fallback")
            return fallback_route(instruction)
        labels, rationale = parsed
        return clamp_decision(labels, rationale, origin=ORIGIN_LLM, instruction_echo=instruction)
    except Exception:
        log.warning("router call failed; using keyword fallback", exc_info=True)
        return fallback_route(instruction)
