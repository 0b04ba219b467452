"""Table ingestion and hierarchical data-chunk generation.

Every table cell becomes a natural-language sentence ("data chunk").
Additive measures additionally get aggregate chunks for every subset of
dimensions aggregated out, so aggregate questions can be answered from
retrieval alone. Values are carried as exact decimals end to end; the
aggregate of a chunk is always the exact sum of the leaves it covers.
"""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from itertools import combinations
from pathlib import Path

from .errors import (
    DuplicateKey,
    EmptyCorpus,
    InvalidManifest,
    MissingColumn,
    UnparseableValue,
)

MAX_DIMENSIONS = 4


@dataclass(frozen=True)
class Measure:
    name: str
    unit: str
    additive: bool


@dataclass(frozen=True)
class TableManifest:
    dimension_columns: tuple[str, ...]
    period_column: str
    measures: tuple[Measure, ...]
    source_path: str = ""

    def __post_init__(self):
        if not self.dimension_columns:
            raise InvalidManifest("at least one dimension column required")
        if not self.measures:
            raise InvalidManifest("at least one measure required")
        if len(self.dimension_columns) > MAX_DIMENSIONS:
            raise InvalidManifest(
                f"at most {MAX_DIMENSIONS} dimensions supported, got {len(self.dimension_columns)}"
            )
        names = [*self.dimension_columns, self.period_column] + [m.name for m in self.measures]
        if len(set(names)) != len(names):
            raise InvalidManifest("dimension, period and measure columns must be disjoint")

    @classmethod
    def from_dict(cls, doc: dict, source_path: str = "") -> "TableManifest":
        measures = tuple(
            Measure(m["name"], m.get("unit", ""), bool(m["additive"]))
            for m in doc["measures"]
        )
        return cls(
            dimension_columns=tuple(doc["dimensions"]),
            period_column=doc["period"],
            measures=measures,
            source_path=source_path or doc.get("source_path", ""),
        )

    @classmethod
    def from_json_file(cls, path: str | Path) -> "TableManifest":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "dimensions": list(self.dimension_columns),
            "period": self.period_column,
            "measures": [
                {"name": m.name, "unit": m.unit, "additive": m.additive}
                for m in self.measures
            ],
            "source_path": self.source_path,
        }


@dataclass(frozen=True)
class DataChunk:
    chunk_id: str
    sentence: str
    period: str
    measure: str
    unit: str
    dimensions: dict[str, str]
    value: Decimal
    level: int

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "sentence": self.sentence,
            "period": self.period,
            "measure": self.measure,
            "unit": self.unit,
            "dimensions": dict(self.dimensions),
            "value": str(self.value),
            "level": self.level,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DataChunk":
        return cls(
            chunk_id=doc["chunk_id"],
            sentence=doc["sentence"],
            period=doc["period"],
            measure=doc["measure"],
            unit=doc["unit"],
            dimensions=dict(doc["dimensions"]),
            value=Decimal(doc["value"]),
            level=int(doc["level"]),
        )


@dataclass(frozen=True)
class ChunkCorpus:
    chunks: tuple[DataChunk, ...]
    manifest: TableManifest
    build_fingerprint: str

    def by_id(self) -> dict[str, DataChunk]:
        return {c.chunk_id: c for c in self.chunks}

    def to_json_file(self, path: str | Path) -> None:
        doc = {
            "build_fingerprint": self.build_fingerprint,
            "manifest": self.manifest.to_dict(),
            "chunks": [c.to_dict() for c in self.chunks],
        }
        Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ChunkCorpus":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            chunks=tuple(DataChunk.from_dict(c) for c in doc["chunks"]),
            manifest=TableManifest.from_dict(doc["manifest"]),
            build_fingerprint=doc["build_fingerprint"],
        )


def render_value(value: Decimal) -> str:
    """Render a decimal with at most 2 fractional digits and no separators.

    The numeric-extraction grammar recovers exactly this text, so corpus
    values with more than 2 fractional digits would break the round trip;
    ingest your data at the precision you want cited.
    """
    q = value.quantize(Decimal("0.01"))
    text = format(q.normalize(), "f")
    # Decimal.normalize renders e.g. 150 as 1.5E+2; format("f") undoes that,
    # but 0 normalizes to "0" cleanly.
    if text.startswith("."):
        text = "0" + text
    elif text.startswith("-."):
        text = "-0" + text[1:]
    return text


def _pluralize(word: str) -> str:
    return word if word.endswith("s") else word + "s"


def chunk_identifier(measure: str, period: str, dimensions: dict[str, str], level: int) -> str:
    dims = ";".join(f"{k}={v}" for k, v in sorted(dimensions.items()))
    return f"{measure}|{period}|{dims}|L{level}"


def leaf_sentence(period: str, measure: str, unit: str, dims: dict[str, str], value: Decimal) -> str:
    pairs = ", ".join(f"{k} {v}" for k, v in dims.items())
    return f"In {period}, the {measure} for {pairs} was {render_value(value)} {unit}."


def aggregate_sentence(
    period: str,
    measure: str,
    unit: str,
    aggregated: list[str],
    remaining: dict[str, str],
    value: Decimal,
) -> str:
    agg = " and ".join(_pluralize(d) for d in aggregated)
    if remaining:
        scope = ", ".join(f"{k} {v}" for k, v in remaining.items())
    else:
        scope = "all segments"
    return (
        f"In {period}, the total {measure} across all {agg} "
        f"for {scope} was {render_value(value)} {unit}."
    )


def ingest_table(source: str | Path, manifest: TableManifest) -> list[dict]:
    """Parse and validate a comma-delimited table against the manifest.

    Returns one record per data row with measure cells parsed to Decimal.
    Row order is preserved.
    """
    source = Path(source)
    with open(source, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in [*manifest.dimension_columns, manifest.period_column] + [
            m.name for m in manifest.measures
        ]:
            if column not in header:
                raise MissingColumn(column)
        records: list[dict] = []
        seen_keys: set[tuple] = set()
        for i, row in enumerate(reader, start=1):
            record: dict = {}
            for column in manifest.dimension_columns:
                record[column] = (row[column] or "").strip()
            record[manifest.period_column] = (row[manifest.period_column] or "").strip()
            for m in manifest.measures:
                raw = (row[m.name] or "").strip()
                try:
                    record[m.name] = Decimal(raw)
                except InvalidOperation:
                    raise UnparseableValue(i, m.name, raw) from None
            key = tuple(record[c] for c in manifest.dimension_columns) + (
                record[manifest.period_column],
            )
            if key in seen_keys:
                raise DuplicateKey(key)
            seen_keys.add(key)
            records.append(record)
    return records


def build_corpus(rows: list[dict], manifest: TableManifest, source_bytes: bytes = b"") -> ChunkCorpus:
    """Emit leaf chunks for every (row, measure) pair plus, for additive
    measures, aggregates over every subset of dimensions aggregated out."""
    if not rows:
        raise EmptyCorpus("zero rows: check the manifest against the source table")

    dims = list(manifest.dimension_columns)
    period_col = manifest.period_column
    chunks: list[DataChunk] = []

    for m in manifest.measures:
        for row in rows:
            dvals = {d: row[d] for d in dims}
            value = row[m.name]
            chunks.append(
                DataChunk(
                    chunk_id=chunk_identifier(m.name, row[period_col], dvals, 0),
                    sentence=leaf_sentence(row[period_col], m.name, m.unit, dvals, value),
                    period=row[period_col],
                    measure=m.name,
                    unit=m.unit,
                    dimensions=dvals,
                    value=value,
                    level=0,
                )
            )
        if not m.additive:
            continue
        for k in range(1, len(dims) + 1):
            for aggregated in combinations(dims, k):
                kept = [d for d in dims if d not in aggregated]
                groups: dict[tuple, Decimal] = {}
                for row in rows:
                    gkey = (row[period_col],) + tuple(row[d] for d in kept)
                    groups[gkey] = groups.get(gkey, Decimal(0)) + row[m.name]
                for gkey, total in groups.items():
                    period = gkey[0]
                    remaining = dict(zip(kept, gkey[1:]))
                    chunks.append(
                        DataChunk(
                            chunk_id=chunk_identifier(m.name, period, remaining, k),
                            sentence=aggregate_sentence(
                                period, m.name, m.unit, list(aggregated), remaining, total
                            ),
                            period=period,
                            measure=m.name,
                            unit=m.unit,
                            dimensions=remaining,
                            value=total,
                            level=k,
                        )
                    )

    chunks.sort(key=lambda c: c.chunk_id)
    fingerprint = hashlib.sha256(
        source_bytes + json.dumps(manifest.to_dict(), sort_keys=True).encode()
    ).hexdigest()
    return ChunkCorpus(chunks=tuple(chunks), manifest=manifest, build_fingerprint=fingerprint)


def build_corpus_from_files(table_path: str | Path, manifest_path: str | Path) -> ChunkCorpus:
    manifest = TableManifest.from_json_file(manifest_path)
    rows = ingest_table(table_path, manifest)
    return build_corpus(rows, manifest, source_bytes=Path(table_path).read_bytes())
