"""Multi-backend benchmark: accuracy, reliability, repeatability, latency.

Repeatability means agreement across repeated runs on the confidence label
and on the multiset of extracted numbers (within scorer tolerance); this
captures decision-relevant stability rather than byte-for-byte text
identity. Reliability is reported as the failed-run rate.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FinqaError, UnknownBackend
from .scoring import extract_numbers

DEFAULT_REPEATS = 3


@dataclass(frozen=True)
class SuiteEntry:
    question: str
    expected_intent: str
    gold_numbers: tuple[float, ...]
    notes: str = ""


def load_suite(path: str | Path) -> list[SuiteEntry]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = [
        SuiteEntry(
            question=e["question"],
            expected_intent=e["expected_intent"],
            gold_numbers=tuple(float(g) for g in e.get("gold_numbers", [])),
            notes=e.get("notes", ""),
        )
        for e in doc
    ]
    if not entries:
        raise FinqaError("query suite is empty")
    questions = [e.question for e in entries]
    if len(set(questions)) != len(questions):
        raise FinqaError("suite questions must be unique")
    return entries


def suite_fingerprint(entries: list[SuiteEntry]) -> str:
    doc = [
        {"question": e.question, "expected_intent": e.expected_intent,
         "gold_numbers": list(e.gold_numbers), "notes": e.notes}
        for e in entries
    ]
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _contains_gold(answer: str, gold: tuple[float, ...], tolerance: float) -> bool:
    if not gold:
        return True
    found = [float(n.value) for n in extract_numbers(answer)]
    return all(
        any(abs(v - g) <= max(1e-9, tolerance * abs(g)) for v in found) for g in gold
    )


def _number_key(answer: str, tolerance: float) -> tuple:
    # Rounded multiset of extracted numbers; tolerance-scale agreement only.
    values = sorted(float(n.value) for n in extract_numbers(answer))
    return tuple(round(v, 6) for v in values)


def _percentile(values: list[float], q: float) -> float:
    if not values:
        return 0.0
    return float(np.percentile(values, q))


def run_suite(
    engine,
    entries: list[SuiteEntry],
    backends: list[str],
    repeats: int = DEFAULT_REPEATS,
) -> dict:
    """Run every entry against every backend `repeats` times.

    Backend errors are recorded as failed runs and count against accuracy
    and repeatability; they never abort the suite.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    for bid in backends:
        engine.registry.get(bid)  # raises UnknownBackend early

    tolerance = engine.tolerance
    per_backend: dict[str, dict] = {}
    for bid in backends:
        latencies: list[float] = []
        histogram = {"Low": 0, "Medium": 0, "High": 0, "Refused": 0}
        failures = 0
        total_runs = 0
        entry_rows = []
        accurate = intent_ok = repeatable = 0
        for entry in entries:
            runs = []
            for _ in range(repeats):
                total_runs += 1
                try:
                    result = engine.ask(entry.question, bid)
                    confidence = (
                        "Refused" if result["intent"]["refused"] else result["confidence"]
                    )
                    histogram[confidence] += 1
                    latencies.append(result["latency_total_ms"])
                    runs.append(
                        {
                            "ok": True,
                            "answer": result["answer"],
                            "confidence": confidence,
                            "intent": result["intent"]["label"],
                            "latency_ms": result["latency_total_ms"],
                        }
                    )
                except FinqaError as exc:
                    failures += 1
                    runs.append({"ok": False, "error": str(exc)})
            ok_runs = [r for r in runs if r["ok"]]
            entry_accurate = len(ok_runs) == repeats and all(
                _contains_gold(r["answer"], entry.gold_numbers, tolerance) for r in ok_runs
            )
            entry_intent = bool(ok_runs) and all(
                r["intent"] == entry.expected_intent for r in ok_runs
            )
            if repeats == 1:
                entry_repeatable = True  # single run trivially agrees
            else:
                entry_repeatable = len(ok_runs) == repeats and (
                    len({r["confidence"] for r in ok_runs}) == 1
                    and len({_number_key(r["answer"], tolerance) for r in ok_runs}) == 1
                )
            accurate += entry_accurate
            intent_ok += entry_intent
            repeatable += entry_repeatable
            entry_rows.append(
                {
                    "question": entry.question,
                    "expected_intent": entry.expected_intent,
                    "gold_numbers": list(entry.gold_numbers),
                    "accurate": entry_accurate,
                    "intent_match": entry_intent,
                    "repeatable": entry_repeatable,
                    "runs": runs,
                }
            )
        n = len(entries)
        per_backend[bid] = {
            "accuracy": accurate / n,
            "intent_accuracy": intent_ok / n,
            "repeatability": repeatable / n,
            "reliability": 1.0 - (failures / total_runs if total_runs else 0.0),
            "latency_p50_ms": _percentile(latencies, 50),
            "latency_p95_ms": _percentile(latencies, 95),
            "confidence_histogram": histogram,
            "failures": failures,
            "entries": entry_rows,
        }

    return {
        "suite_fingerprint": suite_fingerprint(entries),
        "run_count": repeats,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "backends": per_backend,
    }


def determinism_key(report: dict) -> str:
    """Canonical serialization of the deterministic report content.

    Measured wall-clock fields (timestamp, latencies) are excluded; on
    mock backends everything that remains must be identical across runs.
    """

    def strip(obj):
        if isinstance(obj, dict):
            return {
                k: strip(v)
                for k, v in obj.items()
                if k not in ("timestamp", "latency_p50_ms", "latency_p95_ms", "latency_ms")
            }
        if isinstance(obj, list):
            return [strip(v) for v in obj]
        return obj

    return json.dumps(strip(report), sort_keys=True)


def render_report(report: dict, out_dir: str | Path) -> tuple[Path, Path]:
    """Write report.json and a fixed-column report.txt under a timestamped
    directory, and refresh <out_dir>/latest.json."""
    out_dir = Path(out_dir)
    stamp = report["timestamp"].replace(":", "").replace("-", "")
    run_dir = out_dir / stamp
    run_dir.mkdir(parents=True, exist_ok=True)

    json_path = run_dir / "report.json"
    json_path.write_text(json.dumps(report, indent=1), encoding="utf-8")
    (out_dir / "latest.json").write_text(json.dumps(report, indent=1), encoding="utf-8")

    header = (
        f"{'backend':<24}{'accuracy':>10}{'intent':>8}{'repeat':>8}{'reliab':>8}"
        f"{'p50ms':>9}{'p95ms':>9}{'fail':>6}{'Low':>5}{'Med':>5}{'High':>5}"
    )
    lines = [header, "-" * len(header)]
    for bid, stats in report["backends"].items():
        h = stats["confidence_histogram"]
        lines.append(
            f"{bid:<24}{stats['accuracy']:>10.3f}{stats['intent_accuracy']:>8.3f}"
            f"{stats['repeatability']:>8.3f}{stats['reliability']:>8.3f}"
            f"{stats['latency_p50_ms']:>9.2f}{stats['latency_p95_ms']:>9.2f}"
            f"{stats['failures']:>6d}{h['Low']:>5d}{h['Medium']:>5d}{h['High']:>5d}"
        )
    txt_path = run_dir / "report.txt"
    txt_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return json_path, txt_path
