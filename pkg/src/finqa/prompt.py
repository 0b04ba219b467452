"""Four-part prompt assembly: persona, definitions, data chunks, exemplar.

Serialized prompts use fixed section headers so the scorer (and the mock
backends) can parse the exact context a response was conditioned on back
out of the prompt itself.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import ChunkCorpus
from .errors import MissingExemplar, PromptBudgetError, RefusedIntent, UnparseablePrompt
from .intent import QueryIntent
from .ranking import RankedChunk, tokenize

SECTION_HEADERS = ("### Persona", "### Definitions", "### Data", "### Example", "### Question")
NO_DATA_MARKER = "NO DATA AVAILABLE"
NO_DATA_INSTRUCTION = (
    "If the Data section reads NO DATA AVAILABLE, reply that there is insufficient data."
)

DEFAULT_PERSONA = (
    "You are a careful financial analyst assistant. Use only the figures "
    "provided. If the data is insufficient, say so."
)

INSTRUCTION_LINES = {
    "What": "Answer with the exact figures from the Data section; cite them verbatim.",
    "Why": "Explain the drivers using only the Data section; cite figures verbatim.",
    "How": "Explain the method using only the Data section; cite any figures verbatim.",
    "Where": "Identify the segment using only the Data section; cite its figures verbatim.",
    "Trend": "Describe the direction and magnitude of change across periods using only the Data section.",
    "Anomaly": "Point out figures that deviate from the others in the Data section; cite them verbatim.",
    "WhatIf": "Compute the hypothetical from Data section figures; state assumptions.",
}

_DATA_LINE = re.compile(r"^\[([^\]]+)\]\s*(.*)$")


@dataclass(frozen=True)
class PersonaProfile:
    persona_text: str
    definitions: dict[str, str]

    def __post_init__(self):
        if not self.persona_text.strip():
            raise ValueError("persona_text must be non-empty")


@dataclass(frozen=True)
class ExemplarQA:
    intent: str
    question: str
    answer: str


@dataclass(frozen=True)
class PromptBundle:
    intent: str
    persona_section: str
    definitions_section: str
    data_section: str
    exemplar_section: str
    question_section: str
    chunk_ids: tuple[str, ...]
    serialized: str
    token_estimate: int


def load_persona(path: str | Path | None = None) -> PersonaProfile:
    if path is None:
        glossary = json.loads(
            resources.files("finqa.data").joinpath("glossary.json").read_text(encoding="utf-8")
        )
        return PersonaProfile(persona_text=DEFAULT_PERSONA, definitions=glossary)
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return PersonaProfile(
        persona_text=doc.get("persona", DEFAULT_PERSONA),
        definitions=doc.get("definitions", {}),
    )


def load_exemplars(path: str | Path | None = None) -> dict[str, ExemplarQA]:
    if path is None:
        raw = resources.files("finqa.data").joinpath("exemplars.json").read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    return {
        e["intent"]: ExemplarQA(e["intent"], e["question"], e["answer"])
        for e in json.loads(raw)
    }


def token_estimate(text: str) -> int:
    """Provider-agnostic size estimate: whitespace word count x 1.3."""
    return math.ceil(len(text.split()) * 1.3)


def select_definitions(tokens: set[str], glossary: dict[str, str]) -> list[tuple[str, str]]:
    """Definitions whose term tokens all appear in `tokens`, in glossary order."""
    selected = []
    for term, definition in glossary.items():
        term_tokens = tokenize(term)
        if term_tokens and all(t in tokens for t in term_tokens):
            selected.append((term, definition))
    return selected


def _serialize(sections: dict[str, str]) -> str:
    parts = [f"{header}\n{sections[header]}" for header in SECTION_HEADERS]
    return "\n\n".join(parts) + "\n"


def parse_prompt_sections(serialized: str) -> dict[str, str]:
    """Split a serialized prompt back into its five sections."""
    positions = []
    for header in SECTION_HEADERS:
        marker = f"{header}\n"
        idx = serialized.find(marker)
        if idx < 0 or (idx > 0 and serialized[idx - 1] != "\n"):
            raise UnparseablePrompt(f"missing section header {header!r}")
        positions.append(idx)
    if positions != sorted(positions):
        raise UnparseablePrompt("section headers out of order")
    sections = {}
    for i, header in enumerate(SECTION_HEADERS):
        start = positions[i] + len(header) + 1
        end = positions[i + 1] if i + 1 < len(SECTION_HEADERS) else len(serialized)
        sections[header] = serialized[start:end].strip("\n")
    return sections


def parse_data_lines(data_section: str) -> list[tuple[str, str]]:
    """Recover (chunk_id, sentence) pairs; [] when the marker is present."""
    if data_section.strip() == NO_DATA_MARKER:
        return []
    pairs = []
    for line in data_section.splitlines():
        m = _DATA_LINE.match(line.strip())
        if m:
            pairs.append((m.group(1), m.group(2)))
    return pairs


def assemble(
    query: str,
    intent: QueryIntent,
    ranked: list[RankedChunk],
    corpus: ChunkCorpus,
    profile: PersonaProfile,
    exemplars: dict[str, ExemplarQA],
    budget: int,
) -> PromptBundle:
    """Build the prompt, greedily including ranked chunks in rank order
    until the next one would push the token estimate past the budget."""
    if intent.refused:
        raise RefusedIntent("assemble called with a refused intent")
    exemplar = exemplars.get(intent.label)
    if exemplar is None:
        raise MissingExemplar(intent.label)

    by_id = corpus.by_id()
    candidates = [(rc.chunk_id, by_id[rc.chunk_id].sentence) for rc in ranked]

    def build(chunks: list[tuple[str, str]]) -> tuple[dict[str, str], str]:
        if chunks:
            data = "\n".join(f"[{cid}] {sentence}" for cid, sentence in chunks)
        else:
            data = NO_DATA_MARKER
        chunk_tokens: set[str] = set(tokenize(query))
        for _, sentence in chunks:
            chunk_tokens.update(tokenize(sentence))
        defs = select_definitions(chunk_tokens, profile.definitions)
        definitions = "\n".join(f"{term}: {d}" for term, d in defs) if defs else "(none)"
        question_lines = [query, INSTRUCTION_LINES[intent.label]]
        if not chunks:
            question_lines.append(NO_DATA_INSTRUCTION)
        sections = {
            "### Persona": profile.persona_text,
            "### Definitions": definitions,
            "### Data": data,
            "### Example": f"Q: {exemplar.question}\nA: {exemplar.answer}",
            "### Question": "\n".join(question_lines),
        }
        return sections, _serialize(sections)

    sections, serialized = build([])
    if token_estimate(serialized) > budget:
        raise PromptBudgetError(
            f"budget {budget} cannot fit the prompt scaffolding "
            f"({token_estimate(serialized)} tokens)"
        )
    included: list[tuple[str, str]] = []
    for cand in candidates:
        trial_sections, trial_serialized = build(included + [cand])
        if token_estimate(trial_serialized) > budget:
            break
        included.append(cand)
        sections, serialized = trial_sections, trial_serialized

    return PromptBundle(
        intent=intent.label,
        persona_section=sections["### Persona"],
        definitions_section=sections["### Definitions"],
        data_section=sections["### Data"],
        exemplar_section=sections["### Example"],
        question_section=sections["### Question"],
        chunk_ids=tuple(cid for cid, _ in included),
        serialized=serialized,
        token_estimate=token_estimate(serialized),
    )
