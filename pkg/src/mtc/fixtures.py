"""Canonical small histories, one per isolation anomaly, plus two LWT histories.

The first seven are caught by the preflight screen; the remaining seven are
inter-transactional and only show up as dependency-graph cycles (or, for
lost update, the fork pattern). Values: the initial transaction writes 0.
"""

from __future__ import annotations

import os
from typing import NamedTuple, Optional

from .history import History, Status, Transaction, r, serialize_history, w
from .lwt import LwtOp, insert, rw, serialize_lwt


class Fixture(NamedTuple):
    name: str
    anomaly: str
    history: History
    screen: Optional[str]  # expected screen finding, None if clean
    fails: tuple[str, ...]  # levels the history violates, besides preflight


def _t(tid, session, ops, start, commit, status=Status.COMMITTED):
    if status is Status.ABORTED:
        commit = None
    return Transaction(tid, session, tuple(ops), status, start, commit)


def _fixtures() -> list[Fixture]:
    out = []

    def add(name, anomaly, txns, screen=None, fails=()):
        out.append(Fixture(name, anomaly, History(txns), screen, tuple(fails)))

    add("thin_air_read", "ThinAirRead", [_t(1, "s1", [r("x", 1)], 1, 2)], "ThinAirRead")
    add(
        "aborted_read",
        "AbortedRead",
        [
            _t(1, "s1", [r("x", 0), w("x", 1)], 1, None, Status.ABORTED),
            _t(2, "s2", [r("x", 1)], 2, 4),
        ],
        "AbortedRead",
    )
    add("future_read", "FutureRead", [_t(1, "s1", [r("x", 1), w("x", 1)], 1, 2)], "FutureRead")
    add(
        "not_my_last_write",
        "NotMyLastWrite",
        [_t(1, "s1", [r("x", 0), w("x", 1), w("x", 2), r("x", 1)], 1, 2)],
        "NotMyLastWrite",
    )
    add(
        "not_my_own_write",
        "NotMyOwnWrite",
        [
            _t(1, "s1", [r("x", 0), w("x", 1)], 1, 2),
            _t(2, "s2", [r("x", 1), w("x", 2), r("x", 1)], 3, 4),
        ],
        "NotMyOwnWrite",
    )
    add(
        "intermediate_read",
        "IntermediateRead",
        [
            _t(1, "s1", [r("x", 0), w("x", 1), w("x", 2)], 1, 3),
            _t(2, "s2", [r("x", 1)], 2, 4),
        ],
        "IntermediateRead",
    )
    add(
        "non_repeatable_read",
        "NonRepeatableRead",
        [
            _t(1, "s1", [r("x", 0), w("x", 1)], 2, 3),
            _t(2, "s2", [r("x", 0), r("x", 1)], 1, 4),
        ],
        "NonRepeatableRead",
    )
    add(
        "session_guarantee_violation",
        "SessionGuaranteeViolation",
        [
            _t(1, "s1", [r("x", 0), w("x", 1)], 1, 2),
            _t(2, "s2", [r("x", 1), w("x", 2)], 3, 4),
            _t(3, "s2", [r("x", 1)], 5, 6),
        ],
        fails=("sser", "ser", "si"),
    )
    add(
        "non_monotonic_read",
        "NonMonoRead",
        [
            _t(1, "s1", [r("x", 0), w("x", 1)], 1, 3),
            _t(2, "s2", [r("x", 1), r("y", 0), w("x", 2), w("y", 3)], 4, 6),
            _t(3, "s3", [r("y", 3), r("x", 1)], 5, 8),
        ],
        fails=("sser", "ser", "si"),
    )
    add(
        "fractured_read",
        "FracturedRead",
        [
            _t(1, "s1", [r("x", 0), r("y", 0), w("x", 1), w("y", 2)], 1, 4),
            _t(2, "s2", [r("x", 1), r("y", 0)], 2, 5),
        ],
        fails=("sser", "ser", "si"),
    )
    add(
        "causality_violation",
        "CausalityViolation",
        [
            _t(1, "s1", [r("x", 0), w("x", 1)], 1, 3),
            _t(2, "s2", [r("x", 1), r("y", 0), w("y", 2)], 2, 5),
            _t(3, "s3", [r("y", 2), r("x", 0)], 4, 7),
        ],
        fails=("sser", "ser", "si"),
    )
    add(
        "long_fork",
        "LongFork",
        [
            _t(1, "s1", [r("x", 0), w("x", 1)], 1, 4),
            _t(2, "s2", [r("y", 0), w("y", 2)], 2, 5),
            _t(3, "s3", [r("x", 1), r("y", 0)], 3, 7),
            _t(4, "s4", [r("y", 2), r("x", 0)], 3, 8),
        ],
        fails=("sser", "ser", "si"),
    )
    add(
        "lost_update",
        "LostUpdate",
        [
            _t(1, "s1", [r("x", 0), w("x", 1)], 1, 3),
            _t(2, "s2", [r("x", 0), w("x", 2)], 2, 4),
        ],
        fails=("sser", "ser", "si"),
    )
    add(
        "write_skew",
        "WriteSkew",
        [
            _t(1, "s1", [r("x", 0), r("y", 0), w("x", 1)], 1, 3),
            _t(2, "s2", [r("x", 0), r("y", 0), w("y", 2)], 2, 4),
        ],
        fails=("sser", "ser"),
    )
    return out


ANOMALY_FIXTURES: list[Fixture] = _fixtures()
FIXTURES_BY_NAME = {f.name: f for f in ANOMALY_FIXTURES}

# two readers of T1's x that then write different values to x
FORK_HISTORY = History(
    [
        _t(1, "s1", [r("x", 0), w("x", 1)], 1, 2),
        _t(2, "s2", [r("x", 1), w("x", 2)], 3, 5),
        _t(3, "s3", [r("x", 1), w("x", 3)], 4, 6),
    ]
)

LWT_LINEARIZABLE: list[LwtOp] = [
    insert("x", 0, 0, 1),
    rw("x", 0, 1, 2, 6),
    rw("x", 1, 2, 3, 8),
    rw("x", 2, 3, 7, 10),
]

# rw(x,0,1) starts only after rw(x,1,2) has finished
LWT_NOT_LINEARIZABLE: list[LwtOp] = [
    insert("x", 0, 0, 1),
    rw("x", 0, 1, 5, 7),
    rw("x", 1, 2, 2, 4),
    rw("x", 2, 3, 6, 9),
]

LWT_FIXTURES = {
    "lwt_linearizable": (LWT_LINEARIZABLE, True),
    "lwt_not_linearizable": (LWT_NOT_LINEARIZABLE, False),
}


def emit_fixtures(directory) -> list[str]:
    """Write every fixture under ``directory``; returns the paths written."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, f in enumerate(ANOMALY_FIXTURES, start=1):
        path = os.path.join(directory, f"{i:02d}_{f.name}.jsonl")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(serialize_history(f.history))
        paths.append(path)
    for name, (ops, _) in LWT_FIXTURES.items():
        path = os.path.join(directory, f"{name}.lwt.jsonl")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(serialize_lwt(ops))
        paths.append(path)
    return paths
