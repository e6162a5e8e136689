"""Linear-time linearizability checking for lightweight-transaction histories.

Each successful compare-and-set ``rw(x, expected, new)`` reads the value
some other operation wrote, so with unique values the only candidate
sequential order is the chain that starts at the insert and follows
expected -> new. Real time is then checked with one reverse scan.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Optional, Union

from .checkers import Level, LwtFailure, Verdict
from .history import HistoryError

RW_OP, INSERT = "rw", "ins"


@dataclass(frozen=True)
class LwtOp:
    kind: str  # "rw" or "ins"
    key: str
    new: int
    start: int
    finish: int
    expected: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (RW_OP, INSERT):
            raise ValueError(f"unknown LWT op kind {self.kind!r}")
        if self.kind == RW_OP and self.expected is None:
            raise ValueError("rw op needs an expected value")
        if not self.start < self.finish:
            raise ValueError(f"start {self.start} not before finish {self.finish}")

    def to_json(self) -> dict:
        obj: dict = {"k": self.key, "t": self.kind}
        if self.kind == RW_OP:
            obj["exp"] = self.expected
        obj["new"] = self.new
        obj["start"] = self.start
        obj["finish"] = self.finish
        return obj


def rw(key: str, expected: int, new: int, start: int, finish: int) -> LwtOp:
    return LwtOp(RW_OP, key, new, start, finish, expected)


def insert(key: str, value: int, start: int, finish: int) -> LwtOp:
    return LwtOp(INSERT, key, value, start, finish)


@dataclass(frozen=True)
class LwtHistory:
    key: str
    ops: tuple[LwtOp, ...]


def split_by_object(ops: Iterable[LwtOp]) -> dict[str, LwtHistory]:
    grouped: dict[str, list[LwtOp]] = {}
    for op in ops:
        grouped.setdefault(op.key, []).append(op)
    return {k: LwtHistory(k, tuple(v)) for k, v in sorted(grouped.items())}


def verify_lwt(hx: LwtHistory) -> Verdict:
    """Decide linearizability of a single-object LWT history in O(n)."""
    ops = hx.ops
    if not ops:
        raise ValueError("verify_lwt needs a non-empty history")
    inserts = [i for i, op in enumerate(ops) if op.kind == INSERT]
    if len(inserts) != 1:
        return _fail(hx.key, f"{len(inserts)} inserts (expected exactly one)", None, inserts)

    by_expected: dict[int, list[int]] = {}
    for i, op in enumerate(ops):
        if op.kind == RW_OP:
            by_expected.setdefault(op.expected, []).append(i)

    head = inserts[0]
    chain = [head]
    value = ops[head].new
    remaining = len(ops) - 1
    while remaining:
        cands = by_expected.pop(value, None)
        if cands is None:
            return _fail(hx.key, "chain broken: no operation reads this value", value, ())
        if len(cands) > 1:
            return _fail(hx.key, "several operations read this value", value, cands)
        chain.append(cands[0])
        value = ops[cands[0]].new
        remaining -= 1

    earliest_finish = float("inf")
    for i in reversed(chain):
        op = ops[i]
        if op.start > earliest_finish:
            return _fail(hx.key, "starts after a later chain operation finished", op.new, (i,))
        if op.finish < earliest_finish:
            earliest_finish = op.finish
    return Verdict(Level.LIN, True)


def chain_order(hx: LwtHistory) -> Optional[list[LwtOp]]:
    """The value chain (insert first) if one covers every op, else None."""
    inserts = [op for op in hx.ops if op.kind == INSERT]
    if len(inserts) != 1:
        return None
    nxt = {}
    for op in hx.ops:
        if op.kind == RW_OP:
            if op.expected in nxt:
                return None
            nxt[op.expected] = op
    out = [inserts[0]]
    while len(out) < len(hx.ops):
        op = nxt.pop(out[-1].new, None)
        if op is None:
            return None
        out.append(op)
    return out


def _fail(key, reason, value, ops) -> Verdict:
    return Verdict(Level.LIN, False, LwtFailure(key, reason, value, tuple(ops)))


def verify_all(ops: Iterable[LwtOp]) -> Verdict:
    """Conjunction of per-object verdicts; the first failing key is reported."""
    for hx in split_by_object(ops).values():
        v = verify_lwt(hx)
        if not v.ok:
            return v
    return Verdict(Level.LIN, True)


# ---------------------------------------------------------------------------
# codec


def parse_lwt(data: Union[bytes, str, IO]) -> list[LwtOp]:
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    out = []
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            kind = obj["t"]
            op = LwtOp(
                kind,
                obj["k"],
                int(obj["new"]),
                int(obj["start"]),
                int(obj["finish"]),
                int(obj["exp"]) if kind == RW_OP else None,
            )
        except json.JSONDecodeError as e:
            raise HistoryError(f"invalid JSON: {e.msg}", lineno) from None
        except (KeyError, TypeError, ValueError) as e:
            raise HistoryError(f"bad LWT record: {e}", lineno) from None
        if not op.start < op.finish:
            raise HistoryError(f"start {op.start} not before finish {op.finish}", lineno)
        out.append(op)
    return out


def serialize_lwt(ops: Iterable[LwtOp]) -> str:
    return "".join(json.dumps(op.to_json(), separators=(",", ":")) + "\n" for op in ops)
