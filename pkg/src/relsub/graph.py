"""Triple store: parse, filter, sample, split and summarize multi-relational data.

Supports two line-oriented TSV inputs: the 5-column ConceptNet assertion dump
(assertion URI, relation, start, end, metadata) and a generic 3-column
head/relation/tail file. All operations are pure: given the same input and
seed they return identical results.
"""

from __future__ import annotations

import json
import random
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .errors import FormatError, ParseError

CONCEPTNET_DUMP = "conceptnet-dump"
GENERIC_TSV = "generic-tsv"
FORMATS = (CONCEPTNET_DUMP, GENERIC_TSV)

EXTERNAL_URL = "/r/ExternalURL"

DEFAULT_SPLIT_RATIOS = (0.75, 0.125, 0.125)


@dataclass(frozen=True)
class TripleRecord:
    """One (head, relation, tail) assertion; `meta` keeps the raw metadata column."""

    head: str
    relation: str
    tail: str
    meta: str = ""


def _iter_lines(stream) -> Iterator[str]:
    for line in stream:
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        yield line.rstrip("\n").rstrip("\r")


def iter_assertions(
    stream: IO | Iterable[str],
    fmt: str = CONCEPTNET_DUMP,
    *,
    skip_bad_lines: bool = False,
    skipped: list[int] | None = None,
) -> Iterator[TripleRecord]:
    """Yield one TripleRecord per well-formed line, in input order.

    With ``skip_bad_lines`` malformed lines are counted into ``skipped``
    (line numbers, 1-based) instead of raising ParseError.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    for lineno, line in enumerate(_iter_lines(stream), start=1):
        try:
            yield _parse_line(line, lineno, fmt)
        except ParseError:
            if not skip_bad_lines:
                raise
            if skipped is not None:
                skipped.append(lineno)


def _parse_line(line: str, lineno: int, fmt: str) -> TripleRecord:
    cols = line.split("\t")
    if fmt == CONCEPTNET_DUMP:
        if len(cols) != 5:
            raise ParseError(lineno, f"expected 5 tab-separated columns, got {len(cols)}")
        _, relation, head, tail, meta = cols
        if not relation or not head or not tail:
            raise ParseError(lineno, "empty relation/start/end column")
        if not relation.startswith("/r/"):
            raise ParseError(lineno, f"relation {relation!r} does not start with /r/")
        return TripleRecord(head=head, relation=relation, tail=tail, meta=meta)
    if len(cols) != 3:
        raise ParseError(lineno, f"expected 3 tab-separated columns, got {len(cols)}")
    head, relation, tail = cols
    if not head or not relation or not tail:
        raise ParseError(lineno, "empty head/relation/tail column")
    return TripleRecord(head=head, relation=relation, tail=tail)


def parse_assertions(
    stream: IO | Iterable[str],
    fmt: str = CONCEPTNET_DUMP,
    *,
    skip_bad_lines: bool = False,
    skipped: list[int] | None = None,
) -> list[TripleRecord]:
    return list(iter_assertions(stream, fmt, skip_bad_lines=skip_bad_lines, skipped=skipped))


def format_lines(triples: Iterable[TripleRecord], fmt: str = GENERIC_TSV) -> Iterator[str]:
    """Serialize triples back to TSV lines; inverse of parsing on the 3 core columns."""
    if fmt == GENERIC_TSV:
        for t in triples:
            yield f"{t.head}\t{t.relation}\t{t.tail}"
        return
    if fmt == CONCEPTNET_DUMP:
        for t in triples:
            assertion = f"/a/[{t.relation}/,{t.head}/,{t.tail}/]"
            meta = t.meta if t.meta else "{}"
            yield f"{assertion}\t{t.relation}\t{t.head}\t{t.tail}\t{meta}"
        return
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def filter_dump_by_assertion_ids(stream: IO | Iterable[str], wanted: set[str]) -> Iterator[str]:
    """Keep only dump lines whose assertion URI (first column) is in ``wanted``."""
    for line in _iter_lines(stream):
        uri = line.split("\t", 1)[0]
        if uri in wanted:
            yield line


def filter_relations(
    triples: Sequence[TripleRecord],
    drop: Iterable[str] = (),
    keep: str | None = None,
) -> list[TripleRecord]:
    """Drop the given relations, then optionally keep a single relation.

    Preserves input order. A ``keep`` relation absent from the (post-drop)
    input yields an empty list and a UserWarning, not an error.
    """
    drop = frozenset(drop)
    out = [t for t in triples if t.relation not in drop]
    if keep is not None:
        out = [t for t in out if t.relation == keep]
        if not out and triples:
            warnings.warn(f"keep relation {keep!r} not present in input", stacklevel=2)
    return out


def sample_triples(triples: Sequence[TripleRecord], n: int, seed: int) -> list[TripleRecord]:
    """Uniform sample without replacement of size min(n, len(triples)).

    Single-pass reservoir sampling (Algorithm R); deterministic per seed.
    """
    if n < 0:
        raise ValueError("sample size must be >= 0")
    rng = random.Random(seed)
    reservoir: list[TripleRecord] = []
    for i, t in enumerate(triples):
        if i < n:
            reservoir.append(t)
        else:
            j = rng.randrange(i + 1)
            if j < n:
                reservoir[j] = t
    return reservoir


def split_triples(
    triples: Sequence[TripleRecord],
    ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS,
    seed: int = 0,
) -> tuple[list[TripleRecord], list[TripleRecord], list[TripleRecord]]:
    """Shuffle and partition into (train, valid, test).

    Valid/test sizes are floor(ratio * n); every remainder triple goes to
    train. Deterministic per seed; the three parts are disjoint and their
    union is the input.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError("ratios must be three positive numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    n = len(triples)
    if n < 3:
        raise ValueError(f"need at least 3 triples to populate all splits, got {n}")
    n_valid = int(ratios[1] * n)
    n_test = int(ratios[2] * n)
    n_train = n - n_valid - n_test
    shuffled = list(triples)
    random.Random(seed).shuffle(shuffled)
    return (
        shuffled[:n_train],
        shuffled[n_train : n_train + n_valid],
        shuffled[n_train + n_valid :],
    )


@dataclass
class GraphStats:
    """Counts over a triple collection (heads/tails/overlap, per-relation)."""

    num_triples: int
    num_entities: int
    num_head_entities: int
    num_tail_entities: int
    head_tail_overlap: int
    per_relation: dict[str, tuple[int, int]]

    def to_dict(self) -> dict:
        return {
            "num_triples": self.num_triples,
            "num_entities": self.num_entities,
            "num_head_entities": self.num_head_entities,
            "num_tail_entities": self.num_tail_entities,
            "head_tail_overlap": self.head_tail_overlap,
            "per_relation": {
                rel: {"num_triples": c, "num_entities": e}
                for rel, (c, e) in sorted(self.per_relation.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def compute_stats(triples: Sequence[TripleRecord]) -> GraphStats:
    heads = {t.head for t in triples}
    tails = {t.tail for t in triples}
    per_relation: dict[str, tuple[int, int]] = {}
    by_rel_entities: dict[str, set[str]] = {}
    by_rel_count: dict[str, int] = {}
    for t in triples:
        by_rel_count[t.relation] = by_rel_count.get(t.relation, 0) + 1
        ents = by_rel_entities.setdefault(t.relation, set())
        ents.add(t.head)
        ents.add(t.tail)
    for rel, count in by_rel_count.items():
        per_relation[rel] = (count, len(by_rel_entities[rel]))
    return GraphStats(
        num_triples=len(triples),
        num_entities=len(heads | tails),
        num_head_entities=len(heads),
        num_tail_entities=len(tails),
        head_tail_overlap=len(heads & tails),
        per_relation=per_relation,
    )


@dataclass
class GraphSample:
    """Ordered triples plus bijective URI <-> dense-id dictionaries.

    Ids are assigned in first-appearance order (head before tail within a
    triple), so rebuilding from the same triples is reproducible.
    """

    triples: list[TripleRecord]
    entity_index: dict[str, int] = field(repr=False)
    relation_index: dict[str, int] = field(repr=False)

    @classmethod
    def from_triples(cls, triples: Iterable[TripleRecord]) -> "GraphSample":
        triples = list(triples)
        entity_index: dict[str, int] = {}
        relation_index: dict[str, int] = {}
        for t in triples:
            if t.head not in entity_index:
                entity_index[t.head] = len(entity_index)
            if t.tail not in entity_index:
                entity_index[t.tail] = len(entity_index)
            if t.relation not in relation_index:
                relation_index[t.relation] = len(relation_index)
        return cls(triples=triples, entity_index=entity_index, relation_index=relation_index)

    @property
    def num_entities(self) -> int:
        return len(self.entity_index)

    @property
    def num_relations(self) -> int:
        return len(self.relation_index)

    def entities_by_id(self) -> list[str]:
        out = [""] * len(self.entity_index)
        for uri, i in self.entity_index.items():
            out[i] = uri
        return out

    def relations_by_id(self) -> list[str]:
        out = [""] * len(self.relation_index)
        for uri, i in self.relation_index.items():
            out[i] = uri
        return out

    def to_id_array(self) -> np.ndarray:
        """(n, 3) int64 array of (head_id, relation_id, tail_id) rows."""
        arr = np.empty((len(self.triples), 3), dtype=np.int64)
        for i, t in enumerate(self.triples):
            arr[i, 0] = self.entity_index[t.head]
            arr[i, 1] = self.relation_index[t.relation]
            arr[i, 2] = self.entity_index[t.tail]
        return arr

    def relation_positions(self, relation: str) -> list[int]:
        """Indices (in triple order) of all triples carrying ``relation``."""
        return [i for i, t in enumerate(self.triples) if t.relation == relation]

    def save(self, directory: str | Path) -> None:
        """Write {triples.tsv, entities.tsv, relations.tsv} to a directory."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "triples.tsv", "w", encoding="utf-8", newline="\n") as f:
            for t in self.triples:
                f.write(f"{t.head}\t{t.relation}\t{t.tail}\t{t.meta}\n")
        with open(directory / "entities.tsv", "w", encoding="utf-8", newline="\n") as f:
            for i, uri in enumerate(self.entities_by_id()):
                f.write(f"{i}\t{uri}\n")
        with open(directory / "relations.tsv", "w", encoding="utf-8", newline="\n") as f:
            for i, uri in enumerate(self.relations_by_id()):
                f.write(f"{i}\t{uri}\n")

    @classmethod
    def load(cls, directory: str | Path) -> "GraphSample":
        directory = Path(directory)
        entity_index = _load_index(directory / "entities.tsv")
        relation_index = _load_index(directory / "relations.tsv")
        triples: list[TripleRecord] = []
        with open(directory / "triples.tsv", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                cols = line.rstrip("\n").split("\t", 3)
                if len(cols) != 4:
                    raise FormatError(f"{directory / 'triples.tsv'}:{lineno}: expected 4 columns")
                head, relation, tail, meta = cols
                triples.append(TripleRecord(head=head, relation=relation, tail=tail, meta=meta))
        sample = cls(triples=triples, entity_index=entity_index, relation_index=relation_index)
        sample._check_coverage()
        return sample

    def _check_coverage(self) -> None:
        for t in self.triples:
            if t.head not in self.entity_index or t.tail not in self.entity_index:
                raise FormatError(f"entity of triple {t} missing from entity index")
            if t.relation not in self.relation_index:
                raise FormatError(f"relation of triple {t} missing from relation index")


def _load_index(path: Path) -> dict[str, int]:
    index: dict[str, int] = {}
    ids: set[int] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            cols = line.rstrip("\n").split("\t")
            if len(cols) != 2:
                raise FormatError(f"{path}:{lineno}: expected 2 columns")
            i = int(cols[0])
            if i in ids or cols[1] in index:
                raise FormatError(f"{path}:{lineno}: duplicate index entry")
            ids.add(i)
            index[cols[1]] = i
    if ids != set(range(len(ids))):
        raise FormatError(f"{path}: ids are not dense 0..{len(ids) - 1}")
    return index
