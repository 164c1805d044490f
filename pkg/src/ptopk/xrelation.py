"""x-Relation data model: x-tuples of mutually exclusive scored alternatives.

Tuples are ordered by descending score, ties broken by ascending ``tuple_id``
(string comparison).  Every probability computed downstream is defined with
respect to that strict order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from itertools import accumulate
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence, Union

import numpy as np

from .errors import ParseError, ValidationError

__all__ = [
    "TupleRecord",
    "XTuple",
    "XRelation",
    "load_xrelation",
    "read_xrelation",
    "dumps_xrelation",
    "prefix_existence",
    "iter_by_score",
    "CSV_HEADER",
    "relation_from_probs",
]

CSV_HEADER = ("xtuple_id", "tuple_id", "score", "prob")
EXCLUSIVITY_SLACK = 1e-12

Source = Union[bytes, str, IO[bytes], IO[str]]


@dataclass(frozen=True)
class TupleRecord:
    tuple_id: str
    xtuple_id: str
    score: float
    prob: float

    def sort_key(self):
        return (-self.score, self.tuple_id)


@dataclass(frozen=True)
class XTuple:
    xtuple_id: str
    alternatives: tuple[TupleRecord, ...]

    @property
    def prob(self) -> float:
        """Existence probability, the sum of the alternatives' probabilities."""
        return sum(t.prob for t in self.alternatives)


def _check_record(t: TupleRecord) -> None:
    if not math.isfinite(t.score):
        raise ValidationError(f"tuple {t.tuple_id!r}: score {t.score!r} is not finite")
    if not (math.isfinite(t.prob) and 0.0 < t.prob <= 1.0):
        raise ValidationError(
            f"tuple {t.tuple_id!r}: probability {t.prob!r} outside (0, 1]"
        )


class XRelation:
    """Validated, immutable collection of x-tuples.

    ``sorted_order`` holds every tuple by descending score; ``x_i`` in the
    usual notation is the prefix ``sorted_order[:i]``.
    """

    def __init__(self, xtuples: Iterable[XTuple]):
        xtuples = tuple(xtuples)
        if not xtuples:
            raise ValidationError("relation has no tuples")
        seen_x: set[str] = set()
        seen_t: set[str] = set()
        for xt in xtuples:
            if xt.xtuple_id in seen_x:
                raise ValidationError(f"duplicate x-tuple id {xt.xtuple_id!r}")
            seen_x.add(xt.xtuple_id)
            if not xt.alternatives:
                raise ValidationError(f"x-tuple {xt.xtuple_id!r} has no alternatives")
            for t in xt.alternatives:
                if t.xtuple_id != xt.xtuple_id:
                    raise ValidationError(
                        f"tuple {t.tuple_id!r} names x-tuple {t.xtuple_id!r} "
                        f"but is listed under {xt.xtuple_id!r}"
                    )
                if t.tuple_id in seen_t:
                    raise ValidationError(f"duplicate tuple id {t.tuple_id!r}")
                seen_t.add(t.tuple_id)
                _check_record(t)
            total = xt.prob
            if total > 1.0 + EXCLUSIVITY_SLACK:
                raise ValidationError(
                    f"x-tuple {xt.xtuple_id!r}: probability sum {total:.12g} > 1"
                )
        self._xtuples = xtuples
        self._by_id = {xt.xtuple_id: xt for xt in xtuples}
        self._sorted = tuple(
            sorted((t for xt in xtuples for t in xt.alternatives), key=TupleRecord.sort_key)
        )

    @classmethod
    def from_rows(cls, rows: Iterable[tuple]) -> "XRelation":
        """Build from ``(xtuple_id, tuple_id, score, prob)`` rows, grouping by x-tuple."""
        groups: dict[str, list[TupleRecord]] = {}
        for xid, tid, score, prob in rows:
            xid, tid = str(xid), str(tid)
            groups.setdefault(xid, []).append(TupleRecord(tid, xid, float(score), float(prob)))
        return cls(XTuple(xid, tuple(alts)) for xid, alts in groups.items())

    @property
    def xtuples(self) -> tuple[XTuple, ...]:
        return self._xtuples

    @property
    def sorted_order(self) -> tuple[TupleRecord, ...]:
        return self._sorted

    @property
    def n(self) -> int:
        return len(self._sorted)

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[TupleRecord]:
        return iter(self._sorted)

    def __eq__(self, other) -> bool:
        if not isinstance(other, XRelation):
            return NotImplemented
        return self._xtuples == other._xtuples

    def __repr__(self) -> str:
        return f"XRelation(n={self.n}, xtuples={len(self._xtuples)})"

    def xtuple(self, xtuple_id: str) -> XTuple:
        return self._by_id[xtuple_id]

    @property
    def is_independent(self) -> bool:
        """True when every x-tuple holds a single alternative."""
        return all(len(xt.alternatives) == 1 for xt in self._xtuples)

    @cached_property
    def _prefix_index(self) -> dict[str, tuple[list[int], list[float]]]:
        positions: dict[str, list[int]] = {}
        probs: dict[str, list[float]] = {}
        for i, t in enumerate(self._sorted):
            positions.setdefault(t.xtuple_id, []).append(i)
            probs.setdefault(t.xtuple_id, []).append(t.prob)
        return {x: (positions[x], list(accumulate(probs[x]))) for x in positions}

    @cached_property
    def scan_arrays(self) -> tuple[np.ndarray, np.ndarray, int]:
        """``(probs, xidx, n_x)`` in score order; x-tuples numbered by first appearance."""
        dense: dict[str, int] = {}
        xidx = np.empty(self.n, dtype=np.int64)
        for i, t in enumerate(self._sorted):
            xidx[i] = dense.setdefault(t.xtuple_id, len(dense))
        probs = np.fromiter((t.prob for t in self._sorted), dtype=np.float64, count=self.n)
        probs.flags.writeable = False
        xidx.flags.writeable = False
        return probs, xidx, len(dense)


def iter_by_score(rel: XRelation) -> Iterator[TupleRecord]:
    return iter(rel.sorted_order)


def prefix_existence(rel: XRelation, xtuple_id: str, i: int) -> float:
    """Pr(tau | X_i): probability mass of ``xtuple_id`` among the first ``i`` tuples."""
    if not 0 <= i <= rel.n:
        raise ValueError(f"prefix length {i} outside [0, {rel.n}]")
    if xtuple_id not in rel._by_id:
        raise KeyError(xtuple_id)
    positions, cumulative = rel._prefix_index[xtuple_id]
    taken = bisect_right(positions, i - 1)
    return cumulative[taken - 1] if taken else 0.0


# -- ingestion ---------------------------------------------------------------


def _as_text(source: Source) -> str:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, str):
        return source
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not UTF-8: {exc}") from None


def _parse_float(value, what: str, where: str) -> float:
    if isinstance(value, bool):
        raise ParseError(f"{where}: {what} {value!r} is not a number")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: {what} {value!r} is not a number") from None


def _rows_from_csv(text: str) -> list[tuple]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise ParseError("empty input: expected header " + ",".join(CSV_HEADER))
    header = [h.strip() for h in header]
    if sorted(header) != sorted(CSV_HEADER):
        raise ParseError(f"line 1: header {header} does not match {list(CSV_HEADER)}")
    col = {name: header.index(name) for name in CSV_HEADER}
    rows = []
    for row in reader:
        lineno = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(CSV_HEADER):
            raise ParseError(f"line {lineno}: expected 4 fields, got {len(row)}")
        where = f"line {lineno}"
        xid = row[col["xtuple_id"]].strip()
        tid = row[col["tuple_id"]].strip()
        if not xid or not tid:
            raise ParseError(f"{where}: empty identifier")
        rows.append((
            xid,
            tid,
            _parse_float(row[col["score"]], "score", where),
            _parse_float(row[col["prob"]], "prob", where),
        ))
    return rows


def _rows_from_json(text: str) -> list[tuple]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, list):
        raise ParseError("JSON root must be an array of x-tuples")
    rows = []
    for n, obj in enumerate(doc):
        where = f"x-tuple #{n}"
        if not isinstance(obj, dict) or "xtuple_id" not in obj or "alternatives" not in obj:
            raise ParseError(f"{where}: expected object with xtuple_id and alternatives")
        alts = obj["alternatives"]
        if not isinstance(alts, list):
            raise ParseError(f"{where}: alternatives must be an array")
        xid = str(obj["xtuple_id"])
        if not alts:
            raise ValidationError(f"x-tuple {xid!r} has no alternatives")
        for m, alt in enumerate(alts):
            awhere = f"{where} alternative #{m}"
            if not isinstance(alt, dict) or not {"tuple_id", "score", "prob"} <= alt.keys():
                raise ParseError(f"{awhere}: expected object with tuple_id, score, prob")
            rows.append((
                xid,
                str(alt["tuple_id"]),
                _parse_float(alt["score"], "score", awhere),
                _parse_float(alt["prob"], "prob", awhere),
            ))
    return rows


def load_xrelation(source: Source, format: str = "csv") -> XRelation:
    """Parse and validate an x-Relation from bytes, text, or a file object."""
    text = _as_text(source)
    if format == "csv":
        rows = _rows_from_csv(text)
    elif format == "json":
        rows = _rows_from_json(text)
    else:
        raise ValueError(f"unknown format {format!r}")
    return XRelation.from_rows(rows)


def read_xrelation(path: Union[str, Path], format: str | None = None) -> XRelation:
    path = Path(path)
    if format is None:
        format = "json" if path.suffix.lower() == ".json" else "csv"
    with open(path, "rb") as fh:
        return load_xrelation(fh, format)


def dumps_xrelation(rel: XRelation, format: str = "csv") -> str:
    """Serialize in x-tuple order; floats use shortest round-trip repr."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for xt in rel.xtuples:
            for t in xt.alternatives:
                writer.writerow((xt.xtuple_id, t.tuple_id, repr(t.score), repr(t.prob)))
        return buf.getvalue()
    if format == "json":
        doc = [
            {
                "xtuple_id": xt.xtuple_id,
                "alternatives": [
                    {"tuple_id": t.tuple_id, "score": t.score, "prob": t.prob}
                    for t in xt.alternatives
                ],
            }
            for xt in rel.xtuples
        ]
        return json.dumps(doc, indent=1) + "\n"
    raise ValueError(f"unknown format {format!r}")


def relation_from_probs(
    probs: Sequence[float],
    groups: Sequence[object] | None = None,
    scores: Sequence[float] | None = None,
) -> XRelation:
    """Convenience builder: tuple ``t{i}`` gets score ``n - i`` unless given."""
    n = len(probs)
    if groups is None:
        groups = [f"x{i + 1}" for i in range(n)]
    if scores is None:
        scores = [float(n - i) for i in range(n)]
    width = len(str(n))
    return XRelation.from_rows(
        (str(g), f"t{i + 1:0{width}d}", s, p)
        for i, (g, s, p) in enumerate(zip(groups, scores, probs))
    )
