"""Append-only JSON Lines ledger of interactions and ratings.

Every ask is recorded before the reply is sent; ratings never mutate
existing lines, they append superseding records. The curated export
feeds the {prompt, completion} fine-tuning convention.
"""
from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from .errors import LedgerWriteFailure, UnknownPromptHash

CONFIDENCE_ORDER = {"Low": 0, "Medium": 1, "High": 2}


class FeedbackLedger:
    """Single serialized writer; reads re-scan the file (prototype scale)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.touch(exist_ok=True)

    def _append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True, ensure_ascii=False)
        try:
            with self._lock, open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise LedgerWriteFailure(str(exc)) from exc

    def read_all(self) -> list[dict]:
        records = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records

    def record(self, ask_result: dict) -> dict:
        """Append one interaction record; durable before the caller replies."""
        entry = {"type": "interaction", **ask_result}
        self._append(entry)
        return entry

    def known_hashes(self) -> set[str]:
        return {r["prompt_hash"] for r in self.read_all() if "prompt_hash" in r}

    def rate(self, prompt_hash: str, rating: int, corrected_answer: str | None = None,
             timestamp: str = "") -> dict:
        if rating not in (1, -1):
            raise ValueError("rating must be 1 or -1")
        if prompt_hash not in self.known_hashes():
            raise UnknownPromptHash(prompt_hash)
        entry = {
            "type": "rating",
            "prompt_hash": prompt_hash,
            "rating": rating,
            "corrected_answer": corrected_answer,
            "timestamp": timestamp,
        }
        self._append(entry)
        return entry


def export_curated(
    ledger: FeedbackLedger,
    out_path: str | Path,
    min_rating: int = 1,
    min_confidence: str = "Medium",
) -> int:
    """Write the curated {prompt, completion} dataset; returns line count.

    Keeps interactions whose latest rating meets min_rating and whose
    confidence meets min_confidence; refusals are excluded. Deterministic
    order: (timestamp, prompt_hash).
    """
    records = ledger.read_all()
    latest_rating: dict[str, dict] = {}
    for r in records:
        if r.get("type") == "rating":
            latest_rating[r["prompt_hash"]] = r

    min_conf = CONFIDENCE_ORDER[min_confidence]
    selected = []
    for r in records:
        if r.get("type") != "interaction":
            continue
        if r.get("intent", {}).get("refused"):
            continue
        confidence = r.get("confidence")
        if confidence is None or CONFIDENCE_ORDER.get(confidence, -1) < min_conf:
            continue
        rating = latest_rating.get(r["prompt_hash"])
        if rating is None or rating["rating"] < min_rating:
            continue
        completion = rating.get("corrected_answer") or r["answer"]
        selected.append(
            (
                r.get("timestamp", ""),
                r["prompt_hash"],
                {"prompt": r["prompt"], "completion": completion},
            )
        )

    selected.sort(key=lambda t: (t[0], t[1]))
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for _, _, obj in selected:
            fh.write(json.dumps(obj, sort_keys=True, ensure_ascii=False) + "\n")
    return len(selected)
