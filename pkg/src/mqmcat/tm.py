"""Namespaced translation memory with trigram-similarity retrieval.

The store holds segment pairs, terminology, style guidance, and conventions
in global / per-job / per-agent namespaces. Persistence is an append-only
UTF-8 file with one JSON object per line; replaced records are appended
tombstone-style and resolved last-write-wins on load, so the file doubles
as an audit trail.

Relevance is character-trigram Dice similarity over normalized text. It is
tokenizer-free on purpose: it behaves the same for whitespace-delimited
scripts and for Chinese/Japanese/Hebrew/Arabic text.
"""
from __future__ import annotations

import enum
import json
import threading
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .dimensions import JobContext, LanguagePair
from .util import new_id, now_rfc3339

DEFAULT_TOP_K = 5
DEFAULT_MIN_SCORE = 0.35


class TmError(Exception):
    pass


class StoreCorrupt(TmError):
    def __init__(self, line_no: int, reason: str = ""):
        super().__init__(f"unparseable TM record at line {line_no}" + (f": {reason}" if reason else ""))
        self.line_no = line_no


class ImmutableEntry(TmError):
    def __init__(self, entry_id: str):
        super().__init__(f"entry {entry_id} is confirmed and cannot be overwritten")
        self.entry_id = entry_id


class IoFailure(TmError):
    pass


class NamespaceKind(str, enum.Enum):
    GLOBAL = "global"
    JOB = "job"
    AGENT = "agent"


@dataclass(frozen=True)
class TmNamespace:
    """Write-serialization unit: (kind, key). Key is empty only for global."""

    kind: NamespaceKind
    key: str = ""

    def __post_init__(self):
        if (self.kind == NamespaceKind.GLOBAL) != (self.key == ""):
            raise ValueError("namespace key must be empty iff kind is global")

    @classmethod
    def global_ns(cls) -> "TmNamespace":
        return cls(NamespaceKind.GLOBAL)

    @classmethod
    def for_job(cls, job_id: str) -> "TmNamespace":
        return cls(NamespaceKind.JOB, job_id)

    @classmethod
    def for_agent(cls, dimension_label: str) -> "TmNamespace":
        return cls(NamespaceKind.AGENT, dimension_label)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "key": self.key}

    @classmethod
    def from_dict(cls, d: dict) -> "TmNamespace":
        if "kind" not in d:
            raise ValueError("namespace needs a kind")
        return cls(kind=NamespaceKind(d["kind"]), key=d.get("key", ""))


class EntryKind(str, enum.Enum):
    SEGMENT_PAIR = "segment_pair"
    TERM = "term"
    STYLE_RULE = "style_rule"
    CONVENTION = "convention"


class Provenance(str, enum.Enum):
    SEEDED = "seeded"
    CONFIRMED = "confirmed"
    AGENT_WRITTEN = "agent_written"


@dataclass(frozen=True)
class TmEntry:
    """One memory record.

    For segment_pair and term, source_text/target_text hold the pairing.
    For style_rule and convention, target_text holds the guidance itself
    and source_text the trigger phrase (possibly empty).
    """

    entry_id: str
    namespace: TmNamespace
    kind: EntryKind
    language_pair: LanguagePair
    source_text: str
    target_text: str
    provenance: Provenance
    created_at: str
    note: str = ""

    def __post_init__(self):
        if not self.entry_id:
            raise ValueError("entry_id must be non-empty")
        if self.kind == EntryKind.SEGMENT_PAIR and (not self.source_text or not self.target_text):
            raise ValueError("segment_pair entries need non-empty source_text and target_text")

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "namespace": self.namespace.to_dict(),
            "kind": self.kind.value,
            "language_pair": self.language_pair.to_dict(),
            "source_text": self.source_text,
            "target_text": self.target_text,
            "provenance": self.provenance.value,
            "created_at": self.created_at,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TmEntry":
        return cls(
            entry_id=d["entry_id"],
            namespace=TmNamespace.from_dict(d["namespace"]),
            kind=EntryKind(d["kind"]),
            language_pair=LanguagePair.from_dict(d["language_pair"]),
            source_text=d["source_text"],
            target_text=d["target_text"],
            provenance=Provenance(d["provenance"]),
            created_at=d["created_at"],
            note=d.get("note", ""),
        )


@dataclass(frozen=True)
class RetrievalQuery:
    """What to look up. namespaces=None searches every namespace (browse mode)."""

    query_text: str
    language_pair: LanguagePair
    namespaces: tuple[TmNamespace, ...] | None = None
    kinds: tuple[EntryKind, ...] | None = None
    top_k: int = DEFAULT_TOP_K
    min_score: float = DEFAULT_MIN_SCORE

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if not 0.0 <= self.min_score <= 1.0:
            raise ValueError("min_score must be in [0, 1]")
        # Accept lists for convenience but store hashable tuples.
        if self.namespaces is not None and not isinstance(self.namespaces, tuple):
            object.__setattr__(self, "namespaces", tuple(self.namespaces))
        if self.kinds is not None and not isinstance(self.kinds, tuple):
            object.__setattr__(self, "kinds", tuple(self.kinds))


@dataclass(frozen=True)
class ScoredEntry:
    entry: TmEntry
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("score must be in [0, 1]")


def _normalize_for_match(text: str) -> str:
    """Lowercase, NFKC-normalize, and collapse whitespace runs (trimming ends)."""
    return " ".join(unicodedata.normalize("NFKC", text).lower().split())


def _trigrams(text: str) -> Counter:
    return Counter(text[i : i + 3] for i in range(len(text) - 2))


def similarity(a: str, b: str) -> float:
    """Dice coefficient over character-trigram multisets of normalized text.

    Texts shorter than three characters have no trigrams and fall back to
    exact match (1.0) or nothing (0.0). Symmetric by construction.
    """
    na, nb = _normalize_for_match(a), _normalize_for_match(b)
    if len(na) < 3 or len(nb) < 3:
        return 1.0 if na == nb else 0.0
    ta, tb = _trigrams(na), _trigrams(nb)
    shared = sum((ta & tb).values())
    return 2.0 * shared / (sum(ta.values()) + sum(tb.values()))


class TmStore:
    """Single-process store owner; many readers, serialized writes.

    All mutation and retrieval happens under one lock, so upserts and
    confirmations are atomic with respect to retrieval.
    """

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._lock = threading.RLock()
        self._entries: dict[str, TmEntry] = {}
        if self._path.exists():
            self._load()

    @property
    def path(self) -> Path:
        return self._path

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def _load(self) -> None:
        try:
            lines = self._path.read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise IoFailure(str(e)) from e
        for line_no, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                entry = TmEntry.from_dict(record)
            except (ValueError, KeyError, TypeError) as e:
                raise StoreCorrupt(line_no, str(e)) from e
            self._entries[entry.entry_id] = entry

    def _append_record(self, entry: TmEntry) -> None:
        try:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            with self._path.open("a", encoding="utf-8") as f:
                f.write(json.dumps(entry.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
        except OSError as e:
            raise IoFailure(str(e)) from e

    def entries(self) -> list[TmEntry]:
        """Current (last-write-wins) entries, insertion-ordered."""
        with self._lock:
            return list(self._entries.values())

    def get(self, entry_id: str) -> TmEntry | None:
        with self._lock:
            return self._entries.get(entry_id)

    def upsert_entry(self, entry: TmEntry) -> str:
        """Insert or replace; confirmed records are immutable once written."""
        with self._lock:
            existing = self._entries.get(entry.entry_id)
            if existing is not None and existing.provenance == Provenance.CONFIRMED:
                raise ImmutableEntry(entry.entry_id)
            self._append_record(entry)
            self._entries[entry.entry_id] = entry
            return entry.entry_id

    def retrieve(self, query: RetrievalQuery) -> list[ScoredEntry]:
        """Score matching entries against query_text; best first.

        Filters by namespace, kind, and language pair, drops scores below
        min_score, sorts by (score desc, entry_id asc), truncates to top_k.
        """
        with self._lock:
            candidates = list(self._entries.values())
        wanted_ns = set(query.namespaces) if query.namespaces is not None else None
        wanted_kinds = set(query.kinds) if query.kinds is not None else None
        scored = []
        for entry in candidates:
            if wanted_ns is not None and entry.namespace not in wanted_ns:
                continue
            if wanted_kinds is not None and entry.kind not in wanted_kinds:
                continue
            if entry.language_pair != query.language_pair:
                continue
            score = similarity(query.query_text, entry.source_text)
            if score < query.min_score:
                continue
            scored.append(ScoredEntry(entry=entry, score=score))
        scored.sort(key=lambda se: (-se.score, se.entry.entry_id))
        return scored[: query.top_k]

    def record_confirmation(
        self, source: str, target: str, pair: LanguagePair, job: JobContext
    ) -> str:
        """Append one confirmed segment pair in the job namespace.

        Confirmations are append-only even for duplicates: accumulated
        decisions are history, and history is never rewritten.
        """
        if not source or not target:
            raise ValueError("confirmation needs non-empty source and target")
        entry = TmEntry(
            entry_id=new_id(),
            namespace=TmNamespace.for_job(job.job_id),
            kind=EntryKind.SEGMENT_PAIR,
            language_pair=pair,
            source_text=source,
            target_text=target,
            provenance=Provenance.CONFIRMED,
            created_at=now_rfc3339(),
            note="confirmed translation decision",
        )
        with self._lock:
            self._append_record(entry)
            self._entries[entry.entry_id] = entry
            return entry.entry_id

    def export_to(self, path: str | Path) -> int:
        """Write the current entries (deduplicated) to a fresh file."""
        out = Path(path)
        with self._lock:
            entries = list(self._entries.values())
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            with out.open("w", encoding="utf-8") as f:
                for entry in entries:
                    f.write(json.dumps(entry.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
        except OSError as e:
            raise IoFailure(str(e)) from e
        return len(entries)

    def import_from(self, path: str | Path) -> int:
        """Upsert every record from another store file. Returns count imported."""
        other = open_store(path)
        count = 0
        for entry in other.entries():
            self.upsert_entry(entry)
            count += 1
        return count


def open_store(path: str | Path) -> TmStore:
    """Open (or lazily create) the store at path."""
    return TmStore(path)
