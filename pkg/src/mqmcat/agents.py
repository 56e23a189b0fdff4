"""Dimension expert agents, targeted revision, and the coordinating editor.

Each agent is one prompted model invocation seen through a single quality
dimension's lens; it returns one candidate translation plus an explanation
and the TM entry ids it relied on. The editor is an eighth agent that
merges several candidates into one. Prompt charters live in
``prompts/*.txt`` as data files, so they are reviewable without touching
code: each file is the system charter, a ``---`` separator line, then the
user body with ``{{placeholder}}`` slots.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources

from .dimensions import JobContext, LanguagePair, QualityDimension
from .json_utils import iter_json_objects
from .providers import ChatProvider, ChatRequest, Message, RetryPolicy, complete_with_retry
from .tm import RetrievalQuery, ScoredEntry, TmNamespace, TmStore
from .util import new_id, now_rfc3339

ROLE_AGENT = "agent"
ROLE_EDITOR = "editor"
ROLE_TRANSLATOR = "translator"

EDITOR_LABEL = "Editor"
TRANSLATOR_LABEL = "Translator"

STRICT_FORMAT_REMINDER = (
    "Your previous reply could not be parsed. Respond again with ONLY a single valid JSON "
    'object, no prose and no code fences: {"translation": "...", "explanation": "...", '
    '"tm_refs": []}. The "translation" value must be non-empty.'
)


class MalformedResponse(Exception):
    """The model produced no usable structured payload."""

    def __init__(self, reason: str):
        super().__init__(f"malformed agent response: {reason}")
        self.reason = reason


@dataclass(frozen=True)
class TaskContext:
    """Everything an agent sees about the segment being worked on."""

    source_text: str
    language_pair: LanguagePair
    job: JobContext
    current_translation: str = ""
    translator_goal: str = ""
    tm_entries: tuple[ScoredEntry, ...] = ()

    def __post_init__(self):
        if not self.source_text:
            raise ValueError("source_text must be non-empty")
        if not isinstance(self.tm_entries, tuple):
            object.__setattr__(self, "tm_entries", tuple(self.tm_entries))


@dataclass(frozen=True)
class TranslationCandidate:
    """One proposed translation with its provenance and revision lineage."""

    candidate_id: str
    text: str
    role: str  # "agent" | "editor" | "translator"
    dimension: QualityDimension | None
    explanation: str
    tm_refs: tuple[str, ...] = ()
    parent_id: str | None = None
    round: int = 0
    created_at: str = ""

    def __post_init__(self):
        if not self.text:
            raise ValueError("candidate text must be non-empty")
        if self.round < 0:
            raise ValueError("round must be non-negative")
        if self.role == ROLE_AGENT and self.dimension is None:
            raise ValueError("agent candidates must carry a dimension")
        if not isinstance(self.tm_refs, tuple):
            object.__setattr__(self, "tm_refs", tuple(self.tm_refs))

    @property
    def role_label(self) -> str:
        if self.dimension is not None:
            return self.dimension.label
        return EDITOR_LABEL if self.role == ROLE_EDITOR else TRANSLATOR_LABEL

    def to_dict(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "text": self.text,
            "role": self.role,
            "dimension": self.dimension.label if self.dimension else None,
            "explanation": self.explanation,
            "tm_refs": list(self.tm_refs),
            "parent_id": self.parent_id,
            "round": self.round,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TranslationCandidate":
        from .dimensions import dimension_from_label

        label = d.get("dimension")
        return cls(
            candidate_id=d["candidate_id"],
            text=d["text"],
            role=d["role"],
            dimension=dimension_from_label(label) if label else None,
            explanation=d.get("explanation", ""),
            tm_refs=tuple(d.get("tm_refs", ())),
            parent_id=d.get("parent_id"),
            round=d.get("round", 0),
            created_at=d.get("created_at", ""),
        )


@dataclass(frozen=True)
class AgentResponseRaw:
    translation: str
    explanation: str
    tm_refs: tuple[str, ...]


_TEMPLATE_FILES = {
    QualityDimension.ACCURACY: "accuracy.txt",
    QualityDimension.TERMINOLOGY: "terminology.txt",
    QualityDimension.FLUENCY: "fluency.txt",
    QualityDimension.STYLE: "style.txt",
    QualityDimension.AUDIENCE_APPROPRIATENESS: "audience_appropriateness.txt",
    QualityDimension.LOCALE_CONVENTION: "locale_convention.txt",
    QualityDimension.DESIGN_AND_MARKUP: "design_and_markup.txt",
}


@lru_cache(maxsize=None)
def load_template(name: str) -> tuple[str, str]:
    """(system, user) sections of a prompt file, split on the --- line."""
    text = resources.files("mqmcat").joinpath("prompts", name).read_text(encoding="utf-8")
    system, sep, user = text.partition("\n---\n")
    if not sep:
        raise ValueError(f"prompt template {name} is missing its --- separator")
    return system.strip(), user.strip()


def fill(template: str, values: dict[str, str]) -> str:
    out = template
    for key, value in values.items():
        out = out.replace("{{" + key + "}}", value)
    return out


def render_tm_block(entries: tuple[ScoredEntry, ...] | list[ScoredEntry]) -> str:
    if not entries:
        return "(no translation memory entries matched)"
    lines = []
    for se in entries:
        e = se.entry
        lines.append(f"[{e.entry_id}] ({e.kind.value}, score {se.score:.2f}) {e.source_text} => {e.target_text}")
    return "\n".join(lines)


def render_job_block(job: JobContext) -> str:
    return (
        f"job {job.job_id}; domain: {job.domain_tag or 'general'}; "
        f"audience: {job.audience_note or 'unspecified'}; visibility: {job.visibility.value}"
    )


def _base_values(ctx: TaskContext) -> dict[str, str]:
    return {
        "source": ctx.source_text,
        "draft": ctx.current_translation or "(none)",
        "goal": ctx.translator_goal or "(none stated)",
        "tm_block": render_tm_block(ctx.tm_entries),
        "job": render_job_block(ctx.job),
    }


def render_agent_prompt(
    dimension: QualityDimension,
    ctx: TaskContext,
    *,
    model_id: str = "",
    temperature: float = 0.0,
) -> ChatRequest:
    """Deterministic prompt for one dimension agent. Same inputs, same bytes."""
    system, user = load_template(_TEMPLATE_FILES[dimension])
    return ChatRequest(
        messages=(
            Message("system", fill(system, _base_values(ctx))),
            Message("user", fill(user, _base_values(ctx))),
        ),
        model_id=model_id,
        temperature=temperature,
        tag=f"agent:{dimension.label}",
    )


def render_editor_prompt(
    candidates: list[TranslationCandidate],
    ctx: TaskContext,
    *,
    model_id: str = "",
    temperature: float = 0.0,
) -> ChatRequest:
    system, user = load_template("editor.txt")
    blocks = []
    for cand in candidates:
        blocks.append(
            f"### {cand.role_label} (round {cand.round})\n"
            f"translation: {cand.text}\n"
            f"notes: {cand.explanation or '(none)'}"
        )
    values = _base_values(ctx)
    values["candidates"] = "\n\n".join(blocks)
    return ChatRequest(
        messages=(
            Message("system", fill(system, values)),
            Message("user", fill(user, values)),
        ),
        model_id=model_id,
        temperature=temperature,
        tag="editor",
    )


def parse_agent_response(raw: str) -> AgentResponseRaw:
    """First JSON object with a non-empty translation wins; prose and fences around it are ignored."""
    for obj in iter_json_objects(raw):
        translation = obj.get("translation")
        if not isinstance(translation, str) or not translation.strip():
            continue
        explanation = obj.get("explanation", "")
        if not isinstance(explanation, str):
            explanation = str(explanation)
        refs = obj.get("tm_refs", [])
        if not isinstance(refs, list):
            refs = []
        return AgentResponseRaw(
            translation=translation.strip(),
            explanation=explanation,
            tm_refs=tuple(str(r) for r in refs),
        )
    return _malformed(raw)


def _malformed(raw: str):
    reason = "no JSON object found" if "{" not in raw else "no object with a non-empty translation"
    raise MalformedResponse(reason)


def _complete_structured(
    provider: ChatProvider, request: ChatRequest, retry: RetryPolicy | None
) -> AgentResponseRaw:
    """Call, parse; on parse failure reprompt once with a strict format reminder."""
    response = complete_with_retry(provider, request, retry)
    try:
        return parse_agent_response(response.content)
    except MalformedResponse:
        reminder = ChatRequest(
            messages=request.messages
            + (Message("assistant", response.content), Message("user", STRICT_FORMAT_REMINDER)),
            model_id=request.model_id,
            temperature=request.temperature,
            max_output_chars=request.max_output_chars,
            tag=request.tag,
        )
        second = complete_with_retry(provider, reminder, retry)
        return parse_agent_response(second.content)


def agent_namespaces(ctx: TaskContext, dimension: QualityDimension | None) -> tuple[TmNamespace, ...]:
    namespaces = [TmNamespace.global_ns(), TmNamespace.for_job(ctx.job.job_id)]
    if dimension is not None:
        namespaces.append(TmNamespace.for_agent(dimension.label))
    return tuple(namespaces)


def _retrieve_for(ctx: TaskContext, dimension: QualityDimension | None, tm: TmStore) -> TaskContext:
    entries = tm.retrieve(
        RetrievalQuery(
            query_text=ctx.source_text,
            language_pair=ctx.language_pair,
            namespaces=agent_namespaces(ctx, dimension),
        )
    )
    return replace(ctx, tm_entries=tuple(entries))


def _filter_refs(refs: tuple[str, ...], offered: tuple[ScoredEntry, ...]) -> tuple[str, ...]:
    offered_ids = {se.entry.entry_id for se in offered}
    return tuple(r for r in refs if r in offered_ids)


def invoke_agent(
    provider: ChatProvider,
    dimension: QualityDimension,
    ctx: TaskContext,
    tm: TmStore,
    *,
    retry: RetryPolicy | None = None,
) -> TranslationCandidate:
    """One independent agent invocation: retrieve TM, prompt, parse, candidate."""
    ctx = _retrieve_for(ctx, dimension, tm)
    request = render_agent_prompt(dimension, ctx)
    parsed = _complete_structured(provider, request, retry)
    return TranslationCandidate(
        candidate_id=new_id(),
        text=parsed.translation,
        role=ROLE_AGENT,
        dimension=dimension,
        explanation=parsed.explanation,
        tm_refs=_filter_refs(parsed.tm_refs, ctx.tm_entries),
        parent_id=None,
        round=0,
        created_at=now_rfc3339(),
    )


def revise_candidate(
    provider: ChatProvider,
    base: TranslationCandidate,
    instruction: str,
    ctx: TaskContext,
    tm: TmStore,
    *,
    retry: RetryPolicy | None = None,
) -> TranslationCandidate:
    """Targeted revision: the agent minimally edits its previous output."""
    if not instruction:
        raise ValueError("revision instruction must be non-empty")
    ctx = _retrieve_for(ctx, base.dimension, tm)
    ctx = replace(ctx, current_translation=base.text)
    if base.dimension is not None:
        request = render_agent_prompt(base.dimension, ctx)
    else:
        request = render_editor_prompt([base], ctx)
    revision_note = (
        "Targeted revision request. The current translation above is your own previous "
        f"output. Revise it minimally to satisfy this instruction: {instruction}\n"
        "Change only what the instruction requires; keep everything else as it is. "
        "Reply in the same JSON format."
    )
    request = ChatRequest(
        messages=request.messages + (Message("user", revision_note),),
        model_id=request.model_id,
        temperature=request.temperature,
        max_output_chars=request.max_output_chars,
        tag=f"revise:{base.role_label}",
    )
    parsed = _complete_structured(provider, request, retry)
    return TranslationCandidate(
        candidate_id=new_id(),
        text=parsed.translation,
        role=base.role,
        dimension=base.dimension,
        explanation=parsed.explanation,
        tm_refs=_filter_refs(parsed.tm_refs, ctx.tm_entries),
        parent_id=base.candidate_id,
        round=base.round + 1,
        created_at=now_rfc3339(),
    )


def candidate_sort_key(cand: TranslationCandidate) -> tuple:
    ordinal = cand.dimension.ordinal if cand.dimension is not None else len(QualityDimension)
    return (ordinal, cand.round, cand.candidate_id)


def synthesize(
    provider: ChatProvider,
    candidates: list[TranslationCandidate],
    ctx: TaskContext,
    *,
    retry: RetryPolicy | None = None,
) -> TranslationCandidate:
    """Editor pass: merge candidates (presented in canonical dimension order) into one."""
    if not candidates:
        raise ValueError("synthesize needs at least one candidate")
    ordered = sorted(candidates, key=candidate_sort_key)
    request = render_editor_prompt(ordered, ctx)
    parsed = _complete_structured(provider, request, retry)
    merged_refs: list[str] = []
    for cand in ordered:
        for ref in cand.tm_refs:
            if ref not in merged_refs:
                merged_refs.append(ref)
    return TranslationCandidate(
        candidate_id=new_id(),
        text=parsed.translation,
        role=ROLE_EDITOR,
        dimension=None,
        explanation=parsed.explanation,
        tm_refs=tuple(merged_refs),
        parent_id=None,
        round=max(c.round for c in ordered),
        created_at=now_rfc3339(),
    )
