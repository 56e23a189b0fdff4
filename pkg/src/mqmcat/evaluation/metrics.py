"""Surface translation metrics: corpus BLEU and an exact-match METEOR variant.

Both are pure functions of token lists and bounded in [0, 1]. The METEOR
variant does no stemming or synonymy lookup and is therefore reported as
"METEOR-lite" everywhere. Neural metrics are not implemented; a thin HTTP
client lets an external scoring service plug into the same shape.
"""
from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import httpx

MAX_N = 4
SMOOTHING_EPS = 0.1
METEOR_ALPHA = 0.9
METEOR_GAMMA = 0.5
METEOR_BETA = 3.0

# Languages written without spaces get character-level tokens.
_CHAR_SPLIT_LANGS = {"zh", "ja"}


class LengthMismatch(ValueError):
    """Hypothesis and reference lists must pair up one to one."""


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize_for_metric(text: str, lang: str) -> list[str]:
    """Lowercased NFKC tokens.

    zh/ja (by primary subtag): individual characters, whitespace dropped.
    Everything else: whitespace split, then leading/trailing punctuation
    characters peel off as their own tokens, order preserved.
    """
    normalized = unicodedata.normalize("NFKC", text).lower()
    primary = lang.split("-")[0].strip().lower()
    if primary in _CHAR_SPLIT_LANGS:
        return [ch for ch in normalized if not ch.isspace()]
    tokens: list[str] = []
    for word in normalized.split():
        leading: list[str] = []
        while word and _is_punct(word[0]):
            leading.append(word[0])
            word = word[1:]
        trailing: list[str] = []
        while word and _is_punct(word[-1]):
            trailing.append(word[-1])
            word = word[:-1]
        tokens.extend(leading)
        if word:
            tokens.append(word)
        tokens.extend(reversed(trailing))
    return tokens


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class BleuStats:
    """Per-sentence sufficient statistics; corpus BLEU is a fold over these."""

    matches: tuple[int, ...]
    totals: tuple[int, ...]
    hyp_len: int
    ref_len: int


def bleu_item_stats(hyp_tokens: Sequence[str], ref_tokens: Sequence[str], max_n: int = MAX_N) -> BleuStats:
    matches = []
    totals = []
    for n in range(1, max_n + 1):
        hyp_ngrams = ngram_counts(hyp_tokens, n)
        ref_ngrams = ngram_counts(ref_tokens, n)
        matches.append(sum(min(count, ref_ngrams[gram]) for gram, count in hyp_ngrams.items()))
        totals.append(max(0, len(hyp_tokens) - n + 1))
    return BleuStats(tuple(matches), tuple(totals), len(hyp_tokens), len(ref_tokens))


def bleu_from_stats(stats: Iterable[BleuStats], *, max_n: int = MAX_N, smoothing_eps: float = SMOOTHING_EPS) -> float:
    """Corpus score from summed per-sentence statistics.

    Zero unigram matches force 0. For n >= 2 a zero match count gets
    smoothing_eps as its numerator. Orders where the corpus has no n-grams
    at all (every sentence shorter than n) drop out of the geometric mean
    instead of poisoning it.
    """
    agg_matches = [0] * max_n
    agg_totals = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for st in stats:
        for i in range(max_n):
            agg_matches[i] += st.matches[i]
            agg_totals[i] += st.totals[i]
        hyp_len += st.hyp_len
        ref_len += st.ref_len
    if agg_matches[0] == 0:
        return 0.0
    log_sum = 0.0
    orders = 0
    for i in range(max_n):
        if agg_totals[i] == 0:
            continue
        numerator = float(agg_matches[i]) if agg_matches[i] > 0 else smoothing_eps
        log_sum += math.log(numerator / agg_totals[i])
        orders += 1
    if orders == 0:
        return 0.0
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(log_sum / orders)


def bleu_corpus(
    hypotheses: Sequence[str],
    references: Sequence[str],
    lang: str,
    *,
    max_n: int = MAX_N,
    smoothing_eps: float = SMOOTHING_EPS,
) -> float:
    if len(hypotheses) != len(references):
        raise LengthMismatch(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise LengthMismatch("empty corpus")
    stats = [
        bleu_item_stats(tokenize_for_metric(h, lang), tokenize_for_metric(r, lang), max_n)
        for h, r in zip(hypotheses, references)
    ]
    return bleu_from_stats(stats, max_n=max_n, smoothing_eps=smoothing_eps)


def meteor_lite(
    hypothesis: str,
    reference: str,
    lang: str,
    *,
    alpha: float = METEOR_ALPHA,
    gamma: float = METEOR_GAMMA,
    beta: float = METEOR_BETA,
) -> float:
    """Exact-match METEOR on one sentence pair.

    Greedy left-to-right alignment, each reference token usable once.
    F-mean weighted toward recall, discounted by a fragmentation penalty.
    """
    hyp = tokenize_for_metric(hypothesis, lang)
    ref = tokenize_for_metric(reference, lang)
    if not hyp or not ref:
        return 0.0
    used = [False] * len(ref)
    pairs: list[tuple[int, int]] = []
    for i, token in enumerate(hyp):
        for j, ref_token in enumerate(ref):
            if not used[j] and ref_token == token:
                used[j] = True
                pairs.append((i, j))
                break
    m = len(pairs)
    if m == 0:
        return 0.0
    precision = m / len(hyp)
    recall = m / len(ref)
    f_mean = precision * recall / (alpha * precision + (1.0 - alpha) * recall)
    chunks = 1
    for (i, j), (prev_i, prev_j) in zip(pairs[1:], pairs):
        if i != prev_i + 1 or j != prev_j + 1:
            chunks += 1
    penalty = gamma * (chunks / m) ** beta
    return f_mean * (1.0 - penalty)


def meteor_lite_corpus(hypotheses: Sequence[str], references: Sequence[str], lang: str) -> float:
    """Mean of sentence scores; there is no standard corpus-level METEOR."""
    if len(hypotheses) != len(references):
        raise LengthMismatch(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise LengthMismatch("empty corpus")
    return sum(meteor_lite(h, r, lang) for h, r in zip(hypotheses, references)) / len(hypotheses)


METRIC_NAMES = ("bleu", "meteor_lite")


class MetricUnavailable(Exception):
    """The external scoring service could not produce a score."""


class ExternalMetricClient:
    """Adapter for neural metrics served over local HTTP.

    POSTs {"hypothesis", "reference", "source"} to the endpoint and expects
    {"score": <number>} back. No implementation ships here; anything that
    speaks this shape (a BLEURT or COMET sidecar, say) plugs in.
    """

    def __init__(self, endpoint_url: str, *, timeout_s: float = 30.0, client: httpx.Client | None = None):
        self.endpoint_url = endpoint_url
        self.timeout_s = timeout_s
        self._client = client

    def score(self, hypothesis: str, reference: str, source: str = "") -> float:
        payload = {"hypothesis": hypothesis, "reference": reference, "source": source}
        try:
            if self._client is not None:
                response = self._client.post(self.endpoint_url, json=payload, timeout=self.timeout_s)
            else:
                response = httpx.post(self.endpoint_url, json=payload, timeout=self.timeout_s)
        except httpx.HTTPError as exc:
            raise MetricUnavailable(f"metric service unreachable: {exc}") from exc
        if response.status_code != 200:
            raise MetricUnavailable(f"metric service returned HTTP {response.status_code}")
        try:
            value = response.json()["score"]
        except (ValueError, KeyError) as exc:
            raise MetricUnavailable(f"metric service reply malformed: {exc}") from exc
        if not isinstance(value, (int, float)):
            raise MetricUnavailable(f"metric service score is not numeric: {value!r}")
        return float(value)
