import pytest
from fastapi.testclient import TestClient

from mqmcat.api import create_app
from mqmcat.providers import MockProvider, MockScript, RetryPolicy
from mqmcat.session import SessionStore
from mqmcat.tm import open_store

from .walker import SCRIPT

FAST = RetryPolicy(max_attempts=1)

CREATE_BODY = {
    "source": "Der Vertrag tritt am ersten Januar in Kraft.",
    "src_lang": "de",
    "tgt_lang": "en",
    "goal": "formal register",
    "job": {"job_id": "job-api", "domain_tag": "legal"},
}


@pytest.fixture
def stores(tmp_path):
    tm = open_store(tmp_path / "tm.jsonl")
    sessions = SessionStore(str(tmp_path / "sessions"))
    return tm, sessions


@pytest.fixture
def client(stores):
    tm, sessions = stores
    app = create_app(MockProvider(SCRIPT), tm, sessions, retry=FAST)
    return TestClient(app, raise_server_exceptions=False)


def make_session(client):
    response = client.post("/sessions", json=CREATE_BODY)
    assert response.status_code == 201
    return response.json()["session_id"]


def drive_to_candidates(client, sid):
    client.post(f"/sessions/{sid}/route", json={"instruction": "check terms", "request_id": "r1"})
    response = client.post(f"/sessions/{sid}/invoke", json={"request_id": "i1"})
    assert response.status_code == 200
    return response.json()["candidates"]


class TestBasics:
    def test_healthz(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.text == "ok"

    def test_create_session(self, client):
        response = client.post("/sessions", json=CREATE_BODY)
        assert response.status_code == 201
        body = response.json()
        assert body["status"] == "drafting"
        assert body["source_text"] == CREATE_BODY["source"]
        assert body["events"][0]["kind"] == "created"

    def test_missing_field_is_malformed_body(self, client):
        response = client.post("/sessions", json={"src_lang": "de", "tgt_lang": "en"})
        assert response.status_code == 400
        assert response.json()["code"] == "malformed_body"

    def test_empty_source_mapped(self, client):
        response = client.post("/sessions", json=dict(CREATE_BODY, source="   "))
        assert response.status_code == 400
        assert response.json()["code"] == "empty_source"

    def test_unknown_session_404(self, client):
        response = client.get("/sessions/nope")
        assert response.status_code == 404
        assert response.json()["code"] == "unknown_session"


class TestFlow:
    def test_full_lifecycle(self, client):
        sid = make_session(client)

        routed = client.post(
            f"/sessions/{sid}/route", json={"instruction": "mind the terminology", "request_id": "r1"}
        )
        assert routed.status_code == 200
        decision = routed.json()["decision"]
        assert decision["dimensions"] == ["Accuracy", "Style"]

        overridden = client.post(
            f"/sessions/{sid}/override", json={"dimensions": ["Style", "Accuracy"], "request_id": "o1"}
        )
        assert overridden.status_code == 200
        assert overridden.json()["decision"]["dimensions"] == ["Accuracy", "Style"]
        assert overridden.json()["decision"]["origin"] == "override"

        invoked = client.post(f"/sessions/{sid}/invoke", json={"request_id": "i1"})
        assert invoked.status_code == 200
        candidates = invoked.json()["candidates"]
        assert len(candidates) == 2
        assert invoked.json()["status"] == "deliberating"

        revised = client.post(
            f"/sessions/{sid}/revise",
            json={"candidate_id": candidates[0]["candidate_id"], "instruction": "shorter", "request_id": "v1"},
        )
        assert revised.status_code == 200
        assert len(revised.json()["candidates"]) == 3

        synthesized = client.post(f"/sessions/{sid}/synthesize", json={"request_id": "s1"})
        assert synthesized.status_code == 200
        final = synthesized.json()["candidates"][-1]
        assert final["role"] == "editor"

        confirmed = client.post(
            f"/sessions/{sid}/confirm",
            json={"candidate_id": final["candidate_id"], "request_id": "c1"},
        )
        assert confirmed.status_code == 200
        assert confirmed.json()["status"] == "confirmed"
        assert confirmed.json()["events"][-1]["payload"]["tm_entry_id"]

        blocked = client.post(
            f"/sessions/{sid}/route", json={"instruction": "again", "request_id": "r2"}
        )
        assert blocked.status_code == 409
        assert blocked.json()["code"] == "session_finalized"

    def test_confirmed_translation_searchable(self, client):
        sid = make_session(client)
        candidates = drive_to_candidates(client, sid)
        client.post(f"/sessions/{sid}/synthesize", json={"request_id": "s1"})
        final = client.get(f"/sessions/{sid}").json()["candidates"][-1]
        client.post(
            f"/sessions/{sid}/confirm",
            json={"candidate_id": final["candidate_id"], "request_id": "c1"},
        )
        found = client.get(
            "/tm/search",
            params={"q": CREATE_BODY["source"], "src": "de", "tgt": "en", "k": 3},
        )
        assert found.status_code == 200
        results = found.json()["results"]
        assert results
        assert results[0]["score"] == pytest.approx(1.0)
        assert results[0]["entry"]["target_text"] == final["text"]

    def test_events_endpoint_gapless(self, client):
        sid = make_session(client)
        drive_to_candidates(client, sid)
        response = client.get(f"/sessions/{sid}/events")
        assert response.status_code == 200
        events = response.json()["events"]
        assert [e["seq"] for e in events] == list(range(len(events)))
        assert events[0]["kind"] == "created"

    def test_sessions_survive_app_restart(self, stores):
        tm, sessions = stores
        first = TestClient(create_app(MockProvider(SCRIPT), tm, sessions, retry=FAST))
        sid = make_session(first)
        drive_to_candidates(first, sid)
        second = TestClient(create_app(MockProvider(SCRIPT), tm, sessions, retry=FAST))
        response = second.get(f"/sessions/{sid}")
        assert response.status_code == 200
        assert response.json()["status"] == "deliberating"


class TestIdempotency:
    def test_invoke_replay_is_byte_identical(self, stores):
        tm, sessions = stores
        provider = MockProvider(SCRIPT)
        client = TestClient(create_app(provider, tm, sessions, retry=FAST))
        sid = make_session(client)
        client.post(f"/sessions/{sid}/route", json={"instruction": "x", "request_id": "r1"})
        calls_before = len(provider.call_log)
        first = client.post(f"/sessions/{sid}/invoke", json={"request_id": "same"})
        calls_after_first = len(provider.call_log)
        replay = client.post(f"/sessions/{sid}/invoke", json={"request_id": "same"})
        assert first.content == replay.content
        assert len(provider.call_log) == calls_after_first
        assert calls_after_first > calls_before

        fresh = client.post(f"/sessions/{sid}/invoke", json={"request_id": "different"})
        assert len(provider.call_log) > calls_after_first
        assert fresh.status_code == 200

    def test_failures_are_not_cached(self, client):
        sid = make_session(client)
        client.post(f"/sessions/{sid}/route", json={"instruction": "x", "request_id": "r1"})
        bad = client.post(
            f"/sessions/{sid}/override", json={"dimensions": ["Speed"], "request_id": "o1"}
        )
        assert bad.status_code == 400
        good = client.post(
            f"/sessions/{sid}/override", json={"dimensions": ["Accuracy"], "request_id": "o1"}
        )
        assert good.status_code == 200

    def test_missing_request_id_is_malformed(self, client):
        sid = make_session(client)
        response = client.post(f"/sessions/{sid}/route", json={"instruction": "x"})
        assert response.status_code == 400
        assert response.json()["code"] == "malformed_body"


class TestErrorMapping:
    def test_override_before_route_conflict(self, client):
        sid = make_session(client)
        response = client.post(
            f"/sessions/{sid}/override", json={"dimensions": ["Accuracy"], "request_id": "o1"}
        )
        assert response.status_code == 409
        assert response.json()["code"] == "no_decision"

    def test_invalid_dimension_set(self, client):
        sid = make_session(client)
        client.post(f"/sessions/{sid}/route", json={"instruction": "x", "request_id": "r1"})
        response = client.post(
            f"/sessions/{sid}/override",
            json={"dimensions": ["Accuracy", "Speed"], "request_id": "o2"},
        )
        assert response.status_code == 400
        assert response.json()["code"] == "invalid_dimension_set"

    def test_revise_unknown_candidate(self, client):
        sid = make_session(client)
        drive_to_candidates(client, sid)
        response = client.post(
            f"/sessions/{sid}/revise",
            json={"candidate_id": "ghost", "instruction": "x", "request_id": "v1"},
        )
        assert response.status_code == 404
        assert response.json()["code"] == "unknown_candidate"

    def test_synthesize_without_candidates(self, client):
        sid = make_session(client)
        response = client.post(f"/sessions/{sid}/synthesize", json={"request_id": "s1"})
        assert response.status_code == 409
        assert response.json()["code"] == "no_candidates"

    def test_all_agents_failing_is_bad_gateway(self, stores):
        tm, sessions = stores
        provider = MockProvider(MockScript(default_mode="error"))
        client = TestClient(create_app(provider, tm, sessions, retry=FAST))
        sid = make_session(client)
        routed = client.post(f"/sessions/{sid}/route", json={"instruction": "x", "request_id": "r1"})
        assert routed.status_code == 200  # falls back to keyword routing
        assert routed.json()["decision"]["origin"] == "fallback"
        response = client.post(f"/sessions/{sid}/invoke", json={"request_id": "i1"})
        assert response.status_code == 502
        assert response.json()["code"] == "all_agents_failed"


class TestTmEndpoints:
    def test_add_and_search(self, client):
        created = client.post(
            "/tm/entries",
            json={
                "namespace": {"kind": "global"},
                "kind": "term",
                "src_lang": "de",
                "tgt_lang": "en",
                "source_text": "Vertrag",
                "target_text": "contract",
                "note": "legal glossary",
            },
        )
        assert created.status_code == 201
        entry_id = created.json()["entry_id"]
        found = client.get("/tm/search", params={"q": "Vertrag", "src": "de", "tgt": "en"})
        assert found.status_code == 200
        results = found.json()["results"]
        assert results[0]["entry"]["entry_id"] == entry_id
        assert results[0]["score"] == pytest.approx(1.0)

    def test_search_requires_query_params(self, client):
        response = client.get("/tm/search", params={"q": "x"})
        assert response.status_code == 400
        assert response.json()["code"] == "malformed_body"

    def test_bad_kind_rejected(self, client):
        response = client.post(
            "/tm/entries",
            json={
                "namespace": {"kind": "global"},
                "kind": "sticker",
                "src_lang": "de",
                "tgt_lang": "en",
                "source_text": "x",
                "target_text": "y",
            },
        )
        assert response.status_code == 400
