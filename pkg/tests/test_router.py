import pytest
from hypothesis import given, settings, strategies as st

from mqmcat.agents import TaskContext
from mqmcat.dimensions import JobContext, LanguagePair, QualityDimension
from mqmcat.providers import MockProvider, MockRule, MockScript, RetryPolicy, SequenceProvider
from mqmcat.router import (
    DEFAULT_DIMENSIONS,
    RoutingDecision,
    clamp_decision,
    fallback_route,
    route,
)
from mqmcat.tm import open_store

PAIR = LanguagePair("en", "de")

# No backoff sleeps in tests; retry behavior itself is covered in test_providers.
FAST = RetryPolicy(max_attempts=1)


def ctx():
    return TaskContext(source_text="A sentence to translate.", language_pair=PAIR, job=JobContext("j1"))


@pytest.fixture
def tm(tmp_path):
    return open_store(tmp_path / "tm.jsonl")


class TestDecision:
    def test_validates_count_order_distinctness(self):
        with pytest.raises(ValueError):
            RoutingDecision(dimensions=(), rationale="", origin="llm")
        with pytest.raises(ValueError):
            RoutingDecision(
                dimensions=(QualityDimension.STYLE, QualityDimension.ACCURACY),
                rationale="",
                origin="llm",
            )
        with pytest.raises(ValueError):
            RoutingDecision(
                dimensions=(QualityDimension.STYLE, QualityDimension.STYLE),
                rationale="",
                origin="llm",
            )
        with pytest.raises(ValueError):
            RoutingDecision(dimensions=(QualityDimension.STYLE,), rationale="", origin="??")

    def test_round_trip(self):
        decision = RoutingDecision(
            dimensions=(QualityDimension.ACCURACY, QualityDimension.STYLE),
            rationale="both matter",
            origin="llm",
            instruction_echo="make it sing",
        )
        assert RoutingDecision.from_dict(decision.to_dict()) == decision


class TestClamp:
    def test_dedupes_sorts_truncates(self):
        decision = clamp_decision(
            ["Style", "Accuracy", "style", "Fluency", "Terminology"], "raw rationale"
        )
        assert [d.label for d in decision.dimensions] == ["Accuracy", "Fluency", "Style"]

    def test_unknown_labels_dropped(self):
        decision = clamp_decision(["Speed", "Accuracy", 42, None], "r")
        assert decision.dimensions == (QualityDimension.ACCURACY,)

    def test_empty_falls_back_to_default_pair(self):
        decision = clamp_decision([], "nothing usable")
        assert decision.dimensions == DEFAULT_DIMENSIONS
        assert "(defaulted)" in decision.rationale


class TestFallback:
    def test_keyword_hits(self):
        decision = fallback_route("please fix the terminology and keep the tone formal")
        labels = [d.label for d in decision.dimensions]
        assert "Terminology" in labels
        assert "Style" in labels
        assert decision.origin == "fallback"
        assert "keyword" in decision.rationale

    def test_no_keywords_defaults(self):
        decision = fallback_route("zzz qqq")
        assert decision.dimensions == DEFAULT_DIMENSIONS

    def test_caps_at_three(self):
        decision = fallback_route("fix terminology, style, audience, locale, markup, grammar and accuracy")
        assert len(decision.dimensions) == 3


class TestRoute:
    def test_llm_path(self, tm):
        reply = '{"dimensions": ["Fluency", "Accuracy"], "rationale": "flow and meaning"}'
        provider = MockProvider(MockScript(rules=(MockRule("router", reply),)))
        decision = route(provider, "smooth it out", ctx(), tm, retry=FAST)
        assert decision.origin == "llm"
        assert [d.label for d in decision.dimensions] == ["Accuracy", "Fluency"]
        assert decision.rationale == "flow and meaning"
        assert decision.instruction_echo == "smooth it out"

    def test_reprompt_once_then_parse(self, tm):
        provider = SequenceProvider(["not json", '{"dimensions": ["Style"], "rationale": "tone"}'])
        decision = route(provider, "make it formal", ctx(), tm, retry=FAST)
        assert decision.origin == "llm"
        assert decision.dimensions == (QualityDimension.STYLE,)
        assert len(provider.call_log) == 2

    def test_unparseable_twice_falls_back(self, tm):
        provider = SequenceProvider(["nope", "still nope"])
        decision = route(provider, "fix the terminology", ctx(), tm, retry=FAST)
        assert decision.origin == "fallback"
        assert QualityDimension.TERMINOLOGY in decision.dimensions

    def test_provider_failure_falls_back(self, tm):
        provider = MockProvider(MockScript(default_mode="error"))
        decision = route(provider, "watch the dates and numbers", ctx(), tm, retry=FAST)
        assert decision.origin == "fallback"
        assert QualityDimension.LOCALE_CONVENTION in decision.dimensions

    def test_garbage_labels_from_model_still_clamped(self, tm):
        reply = '{"dimensions": ["Speed", "Cost", "Accuracy", "Accuracy", "Style", "Fluency", "Terminology"], "rationale": "??"}'
        provider = MockProvider(MockScript(rules=(MockRule("router", reply),)))
        decision = route(provider, "do everything", ctx(), tm, retry=FAST)
        assert 1 <= len(decision.dimensions) <= 3
        assert list(decision.dimensions) == sorted(decision.dimensions, key=lambda d: d.ordinal)

    @given(st.text(max_size=60))
    @settings(max_examples=80, deadline=None)
    def test_total_for_any_instruction(self, instruction):
        provider = MockProvider(MockScript(default_mode="error"))
        tm = open_store("/tmp/router-prop-tm.jsonl")
        decision = route(provider, instruction, ctx(), tm, retry=FAST)
        assert 1 <= len(decision.dimensions) <= 3
        assert len(set(decision.dimensions)) == len(decision.dimensions)
