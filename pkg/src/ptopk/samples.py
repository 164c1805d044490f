"""Two small hand-checkable relations used in docs, tests and the CLI."""

from __future__ import annotations

from .xrelation import XRelation

__all__ = ["four_tuple_relation", "paired_relation"]


def four_tuple_relation() -> XRelation:
    """Three x-tuples, four tuples, six possible worlds.

    x1 = {t1: 0.3, t3: 0.5}, x2 = {t2: 1.0}, x3 = {t4: 0.8}; scores 100, 90, 80, 70.
    """
    return XRelation.from_rows([
        ("x1", "t1", 100.0, 0.3),
        ("x1", "t3", 80.0, 0.5),
        ("x2", "t2", 90.0, 1.0),
        ("x3", "t4", 70.0, 0.8),
    ])


def paired_relation() -> XRelation:
    """Four x-tuples of two alternatives each; t1..t8 in descending score."""
    pairs = {
        "x1": (("t1", 0.3), ("t4", 0.4)),
        "x2": (("t2", 0.5), ("t8", 0.2)),
        "x3": (("t3", 0.5), ("t6", 0.5)),
        "x4": (("t5", 0.6), ("t7", 0.3)),
    }
    return XRelation.from_rows(
        (xid, tid, float(9 - int(tid[1:])), p)
        for xid, alts in pairs.items()
        for tid, p in alts
    )
