"""Response quality scoring: four binary checks and a confidence grade.

Every number in a response must be traceable to the supplied data chunks,
either directly or through a simple derivation (sum, difference, ratio,
percent change) of two chunk values. Numeric failure forces Low confidence;
High requires all four checks.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal

from .errors import UnparseablePrompt
from .prompt import NO_DATA_MARKER, PromptBundle, parse_data_lines, parse_prompt_sections
from .ranking import tokenize

DEFAULT_TOLERANCE = 0.005
CONTEXT_OVERLAP_THRESHOLD = 0.6
CHUNK_NUMBER_CAP = 40
WINDOW = 5
MAX_WINDOW_REPEATS = 2
SENTENCE_TOKEN_RANGE = (3, 60)

# Intents whose answers legitimately cite no figures.
NUMERIC_EXEMPT_INTENTS = {"Why", "How"}

_MONTHS = {
    "january", "february", "march", "april", "may", "june", "july", "august",
    "september", "october", "november", "december",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
}

_SUFFIX_MULTIPLIERS = {
    "k": Decimal(10) ** 3,
    "thousand": Decimal(10) ** 3,
    "m": Decimal(10) ** 6,
    "million": Decimal(10) ** 6,
    "b": Decimal(10) ** 9,
    "bn": Decimal(10) ** 9,
    "billion": Decimal(10) ** 9,
}

_NUMBER = re.compile(
    r"""
    (?P<sign>[-+])?
    (?P<int>\d{1,3}(?:,\d{3})+|\d+)
    (?P<frac>\.\d+)?
    (?P<suffix>[kK]\b|[bB][nN]\b|[mMbB]\b|\s?(?:thousand|million|billion)\b)?
    (?P<pct>%)?
    """,
    re.VERBOSE | re.IGNORECASE,
)

_WORD = re.compile(r"[0-9A-Za-z]+")
_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class ExtractedNumber:
    value: Decimal
    kind: str  # "plain" | "percentage"
    start: int
    end: int
    raw: str


@dataclass
class QualityReport:
    contextual_pass: bool
    numeric_pass: bool
    uniqueness_pass: bool
    grammatical_pass: bool
    confidence: str
    verified_numbers: list[dict] = field(default_factory=list)
    unverified_numbers: list[dict] = field(default_factory=list)
    context_overlap: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "contextual_pass": self.contextual_pass,
            "numeric_pass": self.numeric_pass,
            "uniqueness_pass": self.uniqueness_pass,
            "grammatical_pass": self.grammatical_pass,
            "confidence": self.confidence,
            "verified_numbers": self.verified_numbers,
            "unverified_numbers": self.unverified_numbers,
            "context_overlap": self.context_overlap,
            "detail": self.detail,
        }


def _prev_word(text: str, pos: int) -> str:
    words = _WORD.findall(text[max(0, pos - 24):pos])
    return words[-1].lower() if words else ""


def _next_word(text: str, pos: int) -> str:
    m = _WORD.search(text[pos:pos + 24])
    return m.group(0).lower() if m else ""


def extract_numbers(text: str) -> list[ExtractedNumber]:
    """Left-to-right, non-overlapping numeric literals with magnitude and
    percent suffixes; quarter labels and year-like date parts excluded."""
    out: list[ExtractedNumber] = []
    pos = 0
    while pos < len(text):
        m = _NUMBER.search(text, pos)
        if m is None:
            break
        pos = m.end()
        digit_start = m.start("int")
        int_part = m.group("int").replace(",", "")

        # Sign glued to a preceding token ("Q3-2023") is a separator, not a minus.
        sign = m.group("sign") or ""
        if sign and m.start() > 0 and text[m.start() - 1].isalnum():
            sign = ""

        # Quarter label: the digit in Q1..Q4.
        if (
            int_part in {"1", "2", "3", "4"}
            and not m.group("frac")
            and digit_start > 0
            and text[digit_start - 1] in "qQ"
            and (digit_start < 2 or not text[digit_start - 2].isalnum())
        ):
            continue

        # Date guard: 4-digit years inside period tokens or next to months.
        if (
            len(int_part) == 4
            and not m.group("frac")
            and not m.group("suffix")
            and not m.group("pct")
            and 1900 <= int(int_part) <= 2100
        ):
            before = text[:digit_start]
            after = text[m.end("int"):]
            in_period_token = (
                re.search(r"[Qq][1-4][-/]$", before) is not None
                or re.match(r"[-/][Qq][1-4]", after) is not None
            )
            month_adjacent = (
                _prev_word(text, m.start()) in _MONTHS
                or _next_word(text, m.end()) in _MONTHS
            )
            if in_period_token or month_adjacent:
                continue

        value = Decimal(sign + int_part + (m.group("frac") or ""))
        suffix = (m.group("suffix") or "").strip().lower()
        if suffix:
            value *= _SUFFIX_MULTIPLIERS[suffix]
        kind = "percentage" if m.group("pct") else "plain"
        out.append(
            ExtractedNumber(value=value, kind=kind, start=m.start(), end=m.end(), raw=m.group(0))
        )
    return out


def _close(v: float, c: float, tolerance: float) -> bool:
    return abs(v - c) <= max(1e-9, tolerance * abs(c))


def verify_numbers(
    response_numbers: list[ExtractedNumber],
    chunk_numbers: list[ExtractedNumber],
    tolerance: float = DEFAULT_TOLERANCE,
) -> tuple[list[dict], list[ExtractedNumber], list[str]]:
    """Partition response numbers into verified (with provenance) and
    unverified against chunk values and pairwise derivations thereof."""
    diagnostics: list[str] = []
    cvals = [float(c.value) for c in chunk_numbers]
    direct_only = False
    if len(cvals) > CHUNK_NUMBER_CAP:
        cvals = cvals[:CHUNK_NUMBER_CAP]
        direct_only = True
        diagnostics.append(
            f"chunk numbers capped at {CHUNK_NUMBER_CAP}; derivation checks skipped"
        )

    derivations: list[tuple[float, str]] = []
    if not direct_only:
        for i, ci in enumerate(cvals):
            for j, cj in enumerate(cvals):
                if i == j:
                    continue
                derivations.append((ci + cj, f"{ci} + {cj}"))
                derivations.append((ci - cj, f"{ci} - {cj}"))
                if cj != 0:
                    derivations.append((ci / cj, f"{ci} / {cj}"))
                    derivations.append((100.0 * (ci - cj) / abs(cj), f"100*({ci} - {cj})/|{cj}|"))

    verified: list[dict] = []
    unverified: list[ExtractedNumber] = []
    for num in response_numbers:
        v = float(num.value)
        provenance = None
        for c in cvals:
            if _close(v, c, tolerance):
                provenance = f"chunk value {c}"
                break
        if provenance is None:
            for d, formula in derivations:
                if _close(v, d, tolerance):
                    provenance = f"derived: {formula}"
                    break
        if provenance is None:
            unverified.append(num)
        else:
            verified.append({"value": str(num.value), "raw": num.raw, "provenance": provenance})
    return verified, unverified, diagnostics


def split_sentences(text: str) -> list[str]:
    return [s for s in (_s.strip() for _s in _SENTENCE_SPLIT.split(text)) if s]


def _normalize_sentence(sentence: str) -> str:
    return " ".join(_WORD.findall(sentence.lower()))


def _uniqueness_pass(sentences: list[str]) -> tuple[bool, dict]:
    normalized = [_normalize_sentence(s) for s in sentences]
    seen: set[str] = set()
    for ns in normalized:
        if ns in seen:
            return False, {"duplicate_sentence": ns}
        seen.add(ns)
    # Degenerate-loop check inside each sentence: no 5-token window more
    # than twice within one sentence. (Applying it across sentences would
    # penalize shared template prefixes of legitimately distinct facts.)
    for ns in normalized:
        tokens = ns.split()
        counts: dict[tuple, int] = {}
        for i in range(len(tokens) - WINDOW + 1):
            w = tuple(tokens[i:i + WINDOW])
            counts[w] = counts.get(w, 0) + 1
            if counts[w] > MAX_WINDOW_REPEATS:
                return False, {"repeated_window": " ".join(w)}
    return True, {}


def _grammatical_pass(sentences: list[str]) -> tuple[bool, dict]:
    if not sentences:
        return False, {"reason": "empty response"}
    lo, hi = SENTENCE_TOKEN_RANGE
    for s in sentences:
        if not (s[0].isupper() or s[0].isdigit()):
            return False, {"sentence": s, "reason": "does not start with uppercase or digit"}
        if s[-1] not in ".!?":
            return False, {"sentence": s, "reason": "missing terminal punctuation"}
        words = s.split()
        if not lo <= len(words) <= hi:
            return False, {"sentence": s, "reason": f"length {len(words)} outside [{lo}, {hi}]"}
        tokens = [w.lower() for w in _WORD.findall(s)]
        for a, b in zip(tokens, tokens[1:]):
            if a == b:
                return False, {"sentence": s, "reason": f"duplicated word {a!r}"}
        if s.count("(") != s.count(")") or s.count('"') % 2 != 0:
            return False, {"sentence": s, "reason": "unbalanced brackets or quotes"}
    return True, {}


def _confidence(numeric: bool, others_passing: int) -> str:
    if numeric and others_passing == 3:
        return "High"
    if not numeric or others_passing <= 1:
        return "Low"
    return "Medium"


def score_response(
    question: str,
    prompt: PromptBundle,
    response: str,
    tolerance: float = DEFAULT_TOLERANCE,
) -> QualityReport:
    """Evaluate question, prompt and response together. Pure and
    deterministic; raises UnparseablePrompt if the prompt lost its shape."""
    sections = parse_prompt_sections(prompt.serialized)
    data_section = sections["### Data"]
    data_pairs = parse_data_lines(data_section)
    no_data = data_section.strip() == NO_DATA_MARKER

    chunk_numbers: list[ExtractedNumber] = []
    for _, sentence in data_pairs:
        chunk_numbers.extend(extract_numbers(sentence))

    response_numbers = extract_numbers(response)
    verified, unverified, diagnostics = verify_numbers(response_numbers, chunk_numbers, tolerance)
    if response_numbers:
        numeric = not unverified
    else:
        numeric = no_data or prompt.intent in NUMERIC_EXEMPT_INTENTS

    context_tokens = set(tokenize(question)) | set(tokenize(data_section))
    content = set(tokenize(response))
    overlap = len(content & context_tokens) / len(content) if content else 0.0
    contextual = bool(content) and overlap >= CONTEXT_OVERLAP_THRESHOLD

    sentences = split_sentences(response)
    uniqueness, uniq_detail = _uniqueness_pass(sentences)
    grammatical, gram_detail = _grammatical_pass(sentences)

    others = sum([contextual, uniqueness, grammatical])
    return QualityReport(
        contextual_pass=contextual,
        numeric_pass=numeric,
        uniqueness_pass=uniqueness,
        grammatical_pass=grammatical,
        confidence=_confidence(numeric, others),
        verified_numbers=verified,
        unverified_numbers=[
            {"value": str(n.value), "raw": n.raw, "span": [n.start, n.end]} for n in unverified
        ],
        context_overlap=overlap,
        detail={
            "uniqueness": uniq_detail,
            "grammatical": gram_detail,
            "diagnostics": diagnostics,
            "zero_numbers": not response_numbers,
        },
    )
