"""Pipeline orchestration: query -> intent -> rank -> prompt -> LLM -> score.

The Engine owns the immutable shared state (corpus, index, rules,
templates) and the single writer-serialized resource (the feedback
ledger); the FastAPI app is a thin shell over it.
"""
from __future__ import annotations

import hashlib
import json
import time
from datetime import datetime, timezone
from pathlib import Path

from . import gateway as gw
from .corpus import ChunkCorpus, build_corpus_from_files
from .errors import (
    BackendRejected,
    BackendTimeout,
    EmptyQuery,
    FinqaError,
    UnknownBackend,
    UnknownPromptHash,
)
from .intent import DEFAULT_REFUSAL_MESSAGE, classify, load_rules
from .ledger import FeedbackLedger
from .prompt import assemble, load_exemplars, load_persona
from .ranking import build_index, rank
from .scoring import score_response

DEFAULT_K = 8
DEFAULT_TOKEN_BUDGET = 800
DEFAULT_PORT = 8040


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def load_config(path: str | Path) -> dict:
    path = Path(path)
    config = json.loads(path.read_text(encoding="utf-8"))
    config["_base_dir"] = str(path.parent)
    return config


def _resolve(config: dict, key: str) -> str | None:
    value = config.get(key)
    if value is None:
        return None
    base = Path(config.get("_base_dir", "."))
    return str((base / value) if not Path(value).is_absolute() else Path(value))


class Engine:
    def __init__(self, config: dict):
        self.config = config
        corpus_path = _resolve(config, "corpus")
        if corpus_path and Path(corpus_path).exists():
            self.corpus = ChunkCorpus.from_json_file(corpus_path)
        else:
            table = _resolve(config, "table")
            manifest = _resolve(config, "manifest")
            if not (table and manifest):
                raise FinqaError("config needs either a built corpus or table+manifest paths")
            self.corpus = build_corpus_from_files(table, manifest)
        self.index = build_index(self.corpus)
        self.rules = load_rules(_resolve(config, "rules"))
        self.profile = load_persona(_resolve(config, "persona"))
        self.exemplars = load_exemplars(_resolve(config, "exemplars"))
        self.registry = gw.GatewayRegistry.from_config(config.get("backends", []))
        self.default_backend = config.get("default_backend") or (
            self.registry.ids()[0] if self.registry.ids() else None
        )
        self.k = int(config.get("k", DEFAULT_K))
        self.token_budget = int(config.get("token_budget", DEFAULT_TOKEN_BUDGET))
        self.tolerance = float(config.get("tolerance", 0.005))
        self.refusal_message = config.get("refusal_message", DEFAULT_REFUSAL_MESSAGE)
        ledger_path = _resolve(config, "ledger") or str(
            Path(config.get("_base_dir", ".")) / "feedback.jsonl"
        )
        self.ledger = FeedbackLedger(ledger_path)
        self.benchmark_dir = _resolve(config, "benchmark_dir") or str(
            Path(config.get("_base_dir", ".")) / "benchmarks"
        )

    def ask(self, question: str, backend_id: str | None = None) -> dict:
        """Run the full pipeline for one question and record the outcome.

        The record is appended to the ledger before this returns, so a
        reply is never sent for an unrecorded interaction.
        """
        t0 = time.perf_counter()
        if not question or not question.strip():
            raise EmptyQuery("question is empty")
        backend_id = backend_id or self.default_backend
        intent = classify(question, self.rules, self.refusal_message)

        if intent.refused:
            result = {
                "question": question,
                "intent": intent.to_dict(),
                "answer": intent.refusal_message,
                "chunk_ids_used": [],
                "backend_id": backend_id,
                "latency_total_ms": (time.perf_counter() - t0) * 1000.0,
                "latency_llm_ms": 0.0,
                "prompt_hash": hashlib.sha256(f"REFUSAL\n{question}".encode()).hexdigest(),
                "prompt": "",
                "timestamp": _now(),
            }
            self.ledger.record(result)
            return result

        ranked = rank(question, self.index, self.k)
        bundle = assemble(
            question, intent, ranked, self.corpus, self.profile, self.exemplars, self.token_budget
        )
        completion = self.registry.complete(backend_id, bundle.serialized, gw.CompletionParams())
        quality = score_response(question, bundle, completion.text, self.tolerance)
        result = {
            "question": question,
            "intent": intent.to_dict(),
            "answer": completion.text,
            "confidence": quality.confidence,
            "quality": quality.to_dict(),
            "chunk_ids_used": list(bundle.chunk_ids),
            "backend_id": completion.backend_id,
            "latency_total_ms": (time.perf_counter() - t0) * 1000.0,
            "latency_llm_ms": completion.latency_ms,
            "prompt_hash": gw.prompt_hash(bundle.serialized),
            "prompt": bundle.serialized,
            "timestamp": _now(),
        }
        self.ledger.record(result)
        return result

    def latest_benchmark(self) -> dict | None:
        latest = Path(self.benchmark_dir) / "latest.json"
        if latest.exists():
            return json.loads(latest.read_text(encoding="utf-8"))
        return None


def _public_result(record: dict) -> dict:
    return {k: v for k, v in record.items() if k not in ("prompt", "type")}


from pydantic import BaseModel


class AskBody(BaseModel):
    question: str = ""
    backend_id: "str | None" = None


class FeedbackBody(BaseModel):
    prompt_hash: str
    rating: int
    corrected_answer: "str | None" = None


def create_app(engine: Engine):
    from fastapi import FastAPI, Response
    from fastapi.responses import JSONResponse

    app = FastAPI(title="finqa")
    app.state.engine = engine

    def error(code: str, message: str, stage: str, status: int):
        return JSONResponse(
            status_code=status, content={"code": code, "message": message, "stage": stage}
        )

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "corpus_fingerprint": engine.corpus.build_fingerprint,
            "chunk_count": len(engine.corpus.chunks),
        }

    @app.post("/v1/ask")
    def ask(body: AskBody):
        try:
            return _public_result(engine.ask(body.question, body.backend_id))
        except EmptyQuery:
            return error("EMPTY_QUERY", "question is empty", "classify", 400)
        except UnknownBackend as exc:
            return error("BACKEND_REJECTED", str(exc), "complete", 400)
        except BackendTimeout as exc:
            return error("BACKEND_TIMEOUT", str(exc), "complete", 504)
        except BackendRejected as exc:
            return error("BACKEND_REJECTED", str(exc), "complete", 502)
        except FinqaError as exc:
            return error("INTERNAL", str(exc), "pipeline", 500)

    @app.post("/v1/feedback")
    def feedback(body: FeedbackBody):
        try:
            engine.ledger.rate(
                body.prompt_hash, body.rating, body.corrected_answer, timestamp=_now()
            )
        except UnknownPromptHash as exc:
            return error("UNKNOWN_PROMPT_HASH", str(exc), "feedback", 404)
        except ValueError as exc:
            return error("INTERNAL", str(exc), "feedback", 400)
        return Response(status_code=204)

    @app.get("/v1/chunks")
    def chunks(query: str, k: int = 8):
        ranked = rank(query, engine.index, k)
        by_id = engine.corpus.by_id()
        return [
            {**rc.to_dict(), "sentence": by_id[rc.chunk_id].sentence}
            for rc in ranked
        ]

    @app.get("/v1/benchmarks/latest")
    def benchmarks_latest():
        report = engine.latest_benchmark()
        if report is None:
            return error("NOT_FOUND", "no benchmark report yet", "benchmarks", 404)
        return report

    return app


def serve(config: dict, port: int | None = None) -> None:
    import uvicorn

    engine = Engine(config)
    app = create_app(engine)
    uvicorn.run(app, host="127.0.0.1", port=port or int(config.get("port", DEFAULT_PORT)))
