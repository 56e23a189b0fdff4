"""MQM quality-dimension taxonomy and the shared job vocabulary.

Every other module leans on this one: the seven dimensions, their canonical
order, and the label parsing used for API payloads, TM namespaces, and
model output.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field


class UnknownDimension(ValueError):
    """A label that does not name any quality dimension."""

    def __init__(self, label: str):
        super().__init__(f"unknown quality dimension: {label!r}")
        self.label = label


class QualityDimension(enum.Enum):
    """The seven quality dimensions, in canonical order.

    ``label`` is the canonical human-readable form used verbatim in API
    payloads, TM records, and prompts. ``ordinal`` defines the total order
    used for deterministic result ordering everywhere.
    """

    ACCURACY = ("Accuracy", 0)
    TERMINOLOGY = ("Terminology", 1)
    FLUENCY = ("Fluency", 2)
    STYLE = ("Style", 3)
    AUDIENCE_APPROPRIATENESS = ("Audience Appropriateness", 4)
    LOCALE_CONVENTION = ("Locale Convention", 5)
    DESIGN_AND_MARKUP = ("Design and Markup", 6)

    def __init__(self, label: str, ordinal: int):
        self.label = label
        self.ordinal = ordinal

    def __lt__(self, other: "QualityDimension") -> bool:
        if not isinstance(other, QualityDimension):
            return NotImplemented
        return self.ordinal < other.ordinal


def _normalize_label(label: str) -> str:
    return " ".join(label.split()).casefold()


_ALIASES = {
    "audience": QualityDimension.AUDIENCE_APPROPRIATENESS,
    "locale": QualityDimension.LOCALE_CONVENTION,
    "design": QualityDimension.DESIGN_AND_MARKUP,
    "markup": QualityDimension.DESIGN_AND_MARKUP,
}

_BY_LABEL = {_normalize_label(d.label): d for d in QualityDimension}
_BY_LABEL.update(_ALIASES)


def all_dimensions() -> list[QualityDimension]:
    """All seven dimensions in canonical order."""
    return sorted(QualityDimension, key=lambda d: d.ordinal)


def dimension_from_label(label: str) -> QualityDimension:
    """Resolve a label (case-insensitive, whitespace-trimmed) or alias.

    Raises UnknownDimension when nothing matches.
    """
    dim = _BY_LABEL.get(_normalize_label(label))
    if dim is None:
        raise UnknownDimension(label)
    return dim


@dataclass(frozen=True)
class LanguagePair:
    """A translation direction, BCP-47-style lowercase codes."""

    source_lang: str
    target_lang: str

    def __post_init__(self):
        for name in ("source_lang", "target_lang"):
            code = getattr(self, name).strip().lower()
            if not code:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, code)
        if self.source_lang == self.target_lang:
            raise ValueError(f"source and target language must differ: {self.source_lang!r}")

    def to_dict(self) -> dict:
        return {"source_lang": self.source_lang, "target_lang": self.target_lang}

    @classmethod
    def from_dict(cls, d: dict) -> "LanguagePair":
        return cls(source_lang=d["source_lang"], target_lang=d["target_lang"])

    def __str__(self) -> str:
        return f"{self.source_lang}->{self.target_lang}"


class Visibility(str, enum.Enum):
    LOW = "low"
    NORMAL = "normal"
    HIGH = "high"


@dataclass(frozen=True)
class JobContext:
    """Per-job context agents see: domain, audience, and how visible the text is."""

    job_id: str
    domain_tag: str = ""
    audience_note: str = ""
    visibility: Visibility = Visibility.NORMAL

    def __post_init__(self):
        if not self.job_id:
            raise ValueError("job_id must be non-empty")

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "domain_tag": self.domain_tag,
            "audience_note": self.audience_note,
            "visibility": self.visibility.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JobContext":
        return cls(
            job_id=d["job_id"],
            domain_tag=d.get("domain_tag", ""),
            audience_note=d.get("audience_note", ""),
            visibility=Visibility(d.get("visibility", "normal")),
        )
