"""Rule-based query intent classification with a prediction refusal guard.

Intents select the processing recipe downstream (instruction line, exemplar).
Misrouting is a hallucination source, so rules are ordered specific before
generic, and the table is deterministic and auditable rather than learned.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyQuery, InvalidRuleDocument

INTENT_LABELS = (
    "Why",
    "What",
    "How",
    "Where",
    "Trend",
    "Anomaly",
    "WhatIf",
    "Prediction",
)

DEFAULT_REFUSAL_MESSAGE = (
    "I can't provide investment predictions. I can answer questions about "
    "the data I have, such as trends or drivers."
)

DEFAULT_RULES = [
    ("Prediction", 1, ["should i invest", "predict", "forecast", "will the stock", "going to be"]),
    ("WhatIf", 2, ["what if", "suppose", "assuming", "scenario"]),
    ("Anomaly", 3, ["anomaly", "unusual", "outlier", "spike", "drop suddenly"]),
    ("Trend", 4, ["trend", "over time", "trajectory", "growth rate"]),
    ("Why", 5, ["why", "reason", "cause", "driver"]),
    ("How", 6, ["how"]),
    ("Where", 7, ["where", "which region", "which segment"]),
    ("What", 8, ["what"]),
]

FALLBACK_LABEL = "What"


@dataclass(frozen=True)
class IntentRule:
    label: str
    priority: int
    patterns: tuple[str, ...]


@dataclass(frozen=True)
class QueryIntent:
    label: str
    matched_pattern: str | None
    refused: bool
    refusal_message: str | None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "matched_pattern": self.matched_pattern,
            "refused": self.refused,
            "refusal_message": self.refusal_message,
        }


def _validate(rules: list[IntentRule]) -> list[IntentRule]:
    priorities: set[int] = set()
    for rule in rules:
        if rule.label not in INTENT_LABELS:
            raise InvalidRuleDocument(f"unknown intent label {rule.label!r}", entry=rule)
        if not rule.patterns:
            raise InvalidRuleDocument(f"rule for {rule.label!r} has no patterns", entry=rule)
        if rule.priority in priorities:
            raise InvalidRuleDocument(
                f"duplicate priority {rule.priority} (rule for {rule.label!r})", entry=rule
            )
        priorities.add(rule.priority)
    return sorted(rules, key=lambda r: r.priority)


def default_rules() -> list[IntentRule]:
    return _validate([IntentRule(l, p, tuple(pats)) for l, p, pats in DEFAULT_RULES])


def load_rules(path: str | Path | None = None) -> list[IntentRule]:
    """Load the rule table, merging overrides from a JSON document.

    The document is a list of {label, priority?, patterns} entries; each
    entry replaces the default rule for its label. No document yields the
    built-in default table.
    """
    if path is None:
        return default_rules()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidRuleDocument(f"cannot read rules document: {exc}") from exc
    if not isinstance(doc, list):
        raise InvalidRuleDocument("rules document must be a JSON list")

    by_label = {l: IntentRule(l, p, tuple(pats)) for l, p, pats in DEFAULT_RULES}
    for entry in doc:
        label = entry.get("label")
        if label not in INTENT_LABELS:
            raise InvalidRuleDocument(f"unknown intent label {label!r}", entry=entry)
        base = by_label.get(label)
        priority = entry.get("priority", base.priority if base else None)
        if priority is None:
            raise InvalidRuleDocument(f"rule for {label!r} needs a priority", entry=entry)
        patterns = tuple(entry.get("patterns") or ())
        by_label[label] = IntentRule(label, int(priority), patterns)
    return _validate(list(by_label.values()))


def _pattern_matches(pattern: str, query_lower: str) -> bool:
    return re.search(r"\b" + re.escape(pattern) + r"\b", query_lower) is not None


def classify(
    query: str,
    rules: list[IntentRule],
    refusal_message: str = DEFAULT_REFUSAL_MESSAGE,
) -> QueryIntent:
    """First rule (by priority) with a matching pattern wins; no match
    falls back to What. Prediction is the only refusal-bearing label."""
    if not query or not query.strip():
        raise EmptyQuery("query is empty")
    query_lower = query.lower()
    for rule in rules:
        for pattern in rule.patterns:
            if _pattern_matches(pattern, query_lower):
                refused = rule.label == "Prediction"
                return QueryIntent(
                    label=rule.label,
                    matched_pattern=pattern,
                    refused=refused,
                    refusal_message=refusal_message if refused else None,
                )
    return QueryIntent(label=FALLBACK_LABEL, matched_pattern=None, refused=False, refusal_message=None)
