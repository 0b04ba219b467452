from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient

from finqa.service import create_app


@pytest.fixture
def client(synth_engine):
    return TestClient(create_app(synth_engine))


class TestAskPipeline:
    def test_refusal_short_circuits_gateway(self, synth_engine):
        before = synth_engine.registry.call_count
        result = synth_engine.ask("Which stocks in NYSE should I invest in?")
        assert result["intent"]["refused"] is True
        assert result["answer"].startswith("I can't provide investment predictions")
        assert "confidence" not in result
        assert result["chunk_ids_used"] == []
        assert synth_engine.registry.call_count == before

    def test_faithful_answer_high_confidence(self, synth_engine):
        result = synth_engine.ask(
            "What was the revenue for region EMEA product phones in Q1-2023?"
        )
        assert result["confidence"] == "High"
        assert result["chunk_ids_used"]
        gold = synth_engine.corpus.by_id()[result["chunk_ids_used"][0]]
        assert gold.sentence in result["answer"]

    def test_hallucinating_backend_low_confidence(self, synth_engine):
        result = synth_engine.ask(
            "What was the revenue for region EMEA product phones in Q1-2023?", "liar"
        )
        assert result["confidence"] == "Low"
        assert result["quality"]["numeric_pass"] is False

    def test_every_ask_recorded_before_reply(self, synth_engine):
        synth_engine.ask("What was the revenue for region APAC product phones in Q1-2023?")
        records = synth_engine.ledger.read_all()
        assert len(records) == 1
        assert records[0]["type"] == "interaction"

    def test_repeatability(self, synth_engine):
        question = "What was the expense for region MEA product tablets in Q2-2023?"
        a = synth_engine.ask(question)
        b = synth_engine.ask(question)
        for key in ("answer", "confidence", "chunk_ids_used", "prompt_hash"):
            assert a[key] == b[key]


class TestHTTPEndpoints:
    def test_health(self, client, synth_engine):
        reply = client.get("/v1/health")
        assert reply.status_code == 200
        doc = reply.json()
        assert doc["status"] == "ok"
        assert doc["corpus_fingerprint"] == synth_engine.corpus.build_fingerprint
        assert doc["chunk_count"] == len(synth_engine.corpus.chunks)

    def test_ask(self, client):
        reply = client.post(
            "/v1/ask",
            json={"question": "What was the revenue for region EMEA product phones in Q1-2023?"},
        )
        assert reply.status_code == 200
        doc = reply.json()
        assert doc["confidence"] == "High"
        assert "prompt" not in doc  # serialized prompt stays in the ledger

    def test_empty_query(self, client):
        reply = client.post("/v1/ask", json={"question": "   "})
        assert reply.status_code == 400
        assert reply.json()["code"] == "EMPTY_QUERY"

    def test_unknown_backend(self, client):
        reply = client.post("/v1/ask", json={"question": "what is revenue", "backend_id": "nope"})
        assert reply.status_code == 400
        assert reply.json()["code"] == "BACKEND_REJECTED"

    def test_feedback_roundtrip(self, client, synth_engine):
        ask = client.post(
            "/v1/ask",
            json={"question": "What was the revenue for region APAC product laptops in Q2-2023?"},
        ).json()
        reply = client.post(
            "/v1/feedback", json={"prompt_hash": ask["prompt_hash"], "rating": 1}
        )
        assert reply.status_code == 204
        ratings = [r for r in synth_engine.ledger.read_all() if r["type"] == "rating"]
        assert len(ratings) == 1

    def test_feedback_unknown_hash(self, client):
        reply = client.post("/v1/feedback", json={"prompt_hash": "nope", "rating": 1})
        assert reply.status_code == 404
        assert reply.json()["code"] == "UNKNOWN_PROMPT_HASH"

    def test_chunks_endpoint(self, client):
        reply = client.get(
            "/v1/chunks", params={"query": "revenue EMEA phones Q1-2023", "k": 3}
        )
        assert reply.status_code == 200
        rows = reply.json()
        assert len(rows) == 3
        assert {"chunk_id", "score", "rank", "sentence"} <= set(rows[0])

    def test_benchmarks_latest_empty(self, client):
        assert client.get("/v1/benchmarks/latest").status_code == 404

    def test_benchmarks_latest_after_run(self, client, synth_engine, tmp_path):
        from finqa.bench import render_report, run_suite, SuiteEntry

        entries = [
            SuiteEntry("What was the revenue for region EMEA product phones in Q1-2023?", "What", ())
        ]
        report = run_suite(synth_engine, entries, ["faithful"], repeats=1)
        render_report(report, synth_engine.benchmark_dir)
        reply = client.get("/v1/benchmarks/latest")
        assert reply.status_code == 200
        assert reply.json()["suite_fingerprint"] == report["suite_fingerprint"]

    def test_concurrent_identical_asks_deterministic(self, client):
        question = "What was the expense for region EMEA product tablets in Q3-2023?"

        def do_ask(_):
            return client.post("/v1/ask", json={"question": question}).json()

        with ThreadPoolExecutor(4) as pool:
            results = list(pool.map(do_ask, range(8)))
        answers = {json.dumps((r["answer"], r["confidence"], r["chunk_ids_used"])) for r in results}
        assert len(answers) == 1
