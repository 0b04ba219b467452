from __future__ import annotations

import json
import sys
from decimal import Decimal
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import synth
from finqa.corpus import ChunkCorpus, Measure, TableManifest, build_corpus, build_corpus_from_files
from finqa.service import Engine


@pytest.fixture
def one_dim_corpus() -> ChunkCorpus:
    manifest = TableManifest(("region",), "quarter", (Measure("revenue", "USD", True),))
    rows = [
        {"region": "EMEA", "quarter": "Q3", "revenue": Decimal(100)},
        {"region": "APAC", "quarter": "Q3", "revenue": Decimal(50)},
    ]
    return build_corpus(rows, manifest)


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory) -> Path:
    d = tmp_path_factory.mktemp("synth")
    synth.write_corpus_inputs(d)
    return d


@pytest.fixture(scope="session")
def synth_corpus(synth_dir) -> ChunkCorpus:
    return build_corpus_from_files(synth_dir / "table.csv", synth_dir / "manifest.json")


@pytest.fixture(scope="session")
def synth_suite(synth_corpus) -> list[dict]:
    return synth.make_suite(synth_corpus)


def make_config(dirpath: Path, table: Path, manifest: Path, **overrides) -> Path:
    config = {
        "table": str(table),
        "manifest": str(manifest),
        "backends": [
            {"backend_id": "faithful", "kind": "mock_faithful"},
            {"backend_id": "liar", "kind": "mock_hallucinate", "perturbation": 0.10, "seed": 7},
        ],
        "default_backend": "faithful",
        "ledger": "feedback.jsonl",
        "benchmark_dir": "benchmarks",
    }
    config.update(overrides)
    path = dirpath / "config.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path


@pytest.fixture
def synth_engine(synth_dir, tmp_path) -> Engine:
    from finqa.service import load_config

    config_path = make_config(
        tmp_path, synth_dir / "table.csv", synth_dir / "manifest.json"
    )
    return Engine(load_config(config_path))
