import pytest

from mqmcat.agents import (
    MalformedResponse,
    TaskContext,
    TranslationCandidate,
    agent_namespaces,
    candidate_sort_key,
    invoke_agent,
    parse_agent_response,
    render_agent_prompt,
    render_editor_prompt,
    render_tm_block,
    revise_candidate,
    synthesize,
)
from mqmcat.dimensions import JobContext, LanguagePair, QualityDimension, all_dimensions
from mqmcat.providers import MockProvider, MockRule, MockScript, SequenceProvider
from mqmcat.tm import EntryKind, Provenance, TmEntry, TmNamespace, open_store
from mqmcat.util import new_id, now_rfc3339

PAIR = LanguagePair("en", "de")
JOB = JobContext("job1", domain_tag="tech")

AGENT_JSON = '{"translation": "Kandidat", "explanation": "warum", "tm_refs": []}'


def ctx(**kw):
    defaults = dict(source_text="The quick brown fox.", language_pair=PAIR, job=JOB)
    defaults.update(kw)
    return TaskContext(**defaults)


@pytest.fixture
def tm(tmp_path):
    return open_store(tmp_path / "tm.jsonl")


class TestCandidate:
    def test_agent_candidates_need_a_dimension(self):
        with pytest.raises(ValueError):
            TranslationCandidate(candidate_id="c", text="t", role="agent", dimension=None, explanation="")

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            TranslationCandidate(
                candidate_id="c", text="", role="editor", dimension=None, explanation=""
            )

    def test_dict_round_trip(self):
        cand = TranslationCandidate(
            candidate_id="c1",
            text="Der Fuchs.",
            role="agent",
            dimension=QualityDimension.STYLE,
            explanation="why",
            tm_refs=("e1", "e2"),
            parent_id="c0",
            round=2,
            created_at=now_rfc3339(),
        )
        assert TranslationCandidate.from_dict(cand.to_dict()) == cand

    def test_sort_key_orders_canonically_then_round(self):
        agent = lambda dim, rnd: TranslationCandidate(
            candidate_id=f"{dim.name}-{rnd}", text="t", role="agent", dimension=dim, explanation="", round=rnd
        )
        editor = TranslationCandidate(candidate_id="ed", text="t", role="editor", dimension=None, explanation="")
        cands = [editor, agent(QualityDimension.FLUENCY, 1), agent(QualityDimension.ACCURACY, 0), agent(QualityDimension.FLUENCY, 0)]
        ordered = sorted(cands, key=candidate_sort_key)
        assert [c.candidate_id for c in ordered] == ["ACCURACY-0", "FLUENCY-0", "FLUENCY-1", "ed"]


class TestParsing:
    def test_plain_object(self):
        parsed = parse_agent_response(AGENT_JSON)
        assert parsed.translation == "Kandidat"
        assert parsed.explanation == "warum"
        assert parsed.tm_refs == ()

    def test_fenced_with_prose(self):
        raw = "Here you go:\n```json\n" + AGENT_JSON + "\n```\nHope that helps!"
        assert parse_agent_response(raw).translation == "Kandidat"

    def test_first_valid_object_wins(self):
        raw = '{"note": "no translation here"} {"translation": "zwei", "explanation": ""}'
        assert parse_agent_response(raw).translation == "zwei"

    def test_whitespace_translation_is_not_valid(self):
        with pytest.raises(MalformedResponse):
            parse_agent_response('{"translation": "   "}')

    def test_no_json_raises(self):
        with pytest.raises(MalformedResponse):
            parse_agent_response("I think the translation is fine as-is.")

    def test_defaults_for_missing_fields(self):
        parsed = parse_agent_response('{"translation": "x"}')
        assert parsed.explanation == ""
        assert parsed.tm_refs == ()

    def test_non_list_tm_refs_dropped_non_str_items_coerced(self):
        assert parse_agent_response('{"translation": "x", "tm_refs": "e1"}').tm_refs == ()
        assert parse_agent_response('{"translation": "x", "tm_refs": [1, "e2"]}').tm_refs == ("1", "e2")


class TestPromptRendering:
    def test_deterministic(self):
        a = render_agent_prompt(QualityDimension.ACCURACY, ctx())
        b = render_agent_prompt(QualityDimension.ACCURACY, ctx())
        assert a == b

    def test_tag_carries_dimension_label(self):
        request = render_agent_prompt(QualityDimension.LOCALE_CONVENTION, ctx())
        assert request.tag == "agent:Locale Convention"

    def test_source_and_goal_embedded(self):
        request = render_agent_prompt(QualityDimension.STYLE, ctx(translator_goal="sound formal"))
        user = request.messages[1].content
        assert "The quick brown fox." in user
        assert "sound formal" in user

    def test_each_dimension_has_distinct_charter(self):
        systems = {
            dim: render_agent_prompt(dim, ctx()).messages[0].content for dim in all_dimensions()
        }
        assert len(set(systems.values())) == 7
        assert "terminolog" in systems[QualityDimension.TERMINOLOGY].lower()

    def test_tm_block_rendering(self):
        assert render_tm_block(()) == "(no translation memory entries matched)"

    def test_editor_prompt_lists_candidates_in_given_order(self):
        cands = [
            TranslationCandidate(candidate_id="c1", text="eins", role="agent", dimension=QualityDimension.ACCURACY, explanation="a"),
            TranslationCandidate(candidate_id="c2", text="zwei", role="agent", dimension=QualityDimension.STYLE, explanation="b"),
        ]
        request = render_editor_prompt(cands, ctx())
        user = request.messages[1].content
        assert user.index("eins") < user.index("zwei")
        assert request.tag == "editor"


class TestInvokeAgent:
    def test_builds_round_zero_candidate(self, tm):
        provider = MockProvider(MockScript(rules=(MockRule("agent:", AGENT_JSON),)))
        cand = invoke_agent(provider, QualityDimension.FLUENCY, ctx(), tm)
        assert cand.role == "agent"
        assert cand.dimension is QualityDimension.FLUENCY
        assert cand.round == 0
        assert cand.parent_id is None
        assert cand.text == "Kandidat"
        assert len(provider.call_log) == 1

    def test_namespaces_include_agent_own_space(self):
        spaces = agent_namespaces(ctx(), QualityDimension.TERMINOLOGY)
        assert spaces == (
            TmNamespace.global_ns(),
            TmNamespace.for_job("job1"),
            TmNamespace.for_agent("Terminology"),
        )

    def test_cited_refs_filtered_to_offered_entries(self, tm):
        entry = TmEntry(
            entry_id=new_id(),
            namespace=TmNamespace.global_ns(),
            kind=EntryKind.SEGMENT_PAIR,
            language_pair=PAIR,
            source_text="The quick brown fox.",
            target_text="Der flinke braune Fuchs.",
            provenance=Provenance.SEEDED,
            created_at=now_rfc3339(),
        )
        tm.upsert_entry(entry)
        reply = (
            '{"translation": "Der Fuchs.", "explanation": "", '
            f'"tm_refs": ["{entry.entry_id}", "made-up-id"]}}'
        )
        provider = MockProvider(MockScript(rules=(MockRule("agent:", reply),)))
        cand = invoke_agent(provider, QualityDimension.ACCURACY, ctx(), tm)
        assert cand.tm_refs == (entry.entry_id,)

    def test_malformed_then_reprompt_succeeds(self, tm):
        provider = SequenceProvider(["no json at all", AGENT_JSON])
        cand = invoke_agent(provider, QualityDimension.ACCURACY, ctx(), tm)
        assert cand.text == "Kandidat"
        assert len(provider.call_log) == 2
        reminder = provider.call_log[1].request
        assert reminder.messages[-1].role == "user"
        assert "JSON" in reminder.messages[-1].content

    def test_twice_malformed_raises(self, tm):
        provider = SequenceProvider(["garbage", "more garbage"])
        with pytest.raises(MalformedResponse):
            invoke_agent(provider, QualityDimension.ACCURACY, ctx(), tm)
        assert len(provider.call_log) == 2


class TestRevision:
    def base_candidate(self, tm):
        provider = MockProvider(MockScript(rules=(MockRule("agent:", AGENT_JSON),)))
        return invoke_agent(provider, QualityDimension.STYLE, ctx(), tm)

    def test_revision_links_parent_and_bumps_round(self, tm):
        base = self.base_candidate(tm)
        reply = '{"translation": "Sanfter Kandidat", "explanation": "weicher", "tm_refs": []}'
        provider = MockProvider(MockScript(rules=(MockRule("revise:", reply),)))
        revised = revise_candidate(provider, base, "soften the tone", ctx(), tm)
        assert revised.parent_id == base.candidate_id
        assert revised.round == base.round + 1
        assert revised.dimension is base.dimension
        assert revised.role == "agent"
        assert revised.text == "Sanfter Kandidat"

    def test_instruction_appears_in_prompt(self, tm):
        base = self.base_candidate(tm)
        provider = MockProvider(MockScript(rules=(MockRule("revise:", AGENT_JSON),)))
        revise_candidate(provider, base, "use formal pronouns", ctx(), tm)
        sent = provider.call_log[0].request
        assert "use formal pronouns" in sent.messages[-1].content
        assert base.text in "".join(m.content for m in sent.messages)

    def test_empty_instruction_rejected(self, tm):
        base = self.base_candidate(tm)
        provider = MockProvider()
        with pytest.raises(ValueError):
            revise_candidate(provider, base, "", ctx(), tm)


class TestSynthesize:
    def make(self, dim, text, rnd=0, refs=()):
        return TranslationCandidate(
            candidate_id=new_id(), text=text, role="agent", dimension=dim, explanation="", round=rnd, tm_refs=refs
        )

    def test_editor_candidate_shape(self):
        reply = '{"translation": "Endfassung", "explanation": "merged"}'
        provider = MockProvider(MockScript(rules=(MockRule("editor", reply),)))
        cands = [
            self.make(QualityDimension.STYLE, "zwei", rnd=1, refs=("e2",)),
            self.make(QualityDimension.ACCURACY, "eins", refs=("e1", "e2")),
        ]
        merged = synthesize(provider, cands, ctx())
        assert merged.role == "editor"
        assert merged.dimension is None
        assert merged.text == "Endfassung"
        assert merged.round == 1
        assert merged.tm_refs == ("e1", "e2")

    def test_candidates_presented_in_canonical_order(self):
        reply = '{"translation": "x", "explanation": ""}'
        provider = MockProvider(MockScript(rules=(MockRule("editor", reply),)))
        cands = [
            self.make(QualityDimension.LOCALE_CONVENTION, "locale-text"),
            self.make(QualityDimension.ACCURACY, "accuracy-text"),
        ]
        synthesize(provider, cands, ctx())
        user = provider.call_log[0].request.messages[1].content
        assert user.index("accuracy-text") < user.index("locale-text")

    def test_needs_at_least_one_candidate(self):
        with pytest.raises(ValueError):
            synthesize(MockProvider(), [], ctx())


def test_task_context_requires_source():
    with pytest.raises(ValueError):
        TaskContext(source_text="", language_pair=PAIR, job=JOB)
