"""History data model, JSON-lines codec and well-formedness checks.

A history is a set of transactions grouped into sessions. Transaction 0 is
the synthetic initial transaction which writes value 0 to every key that
appears anywhere in the history; it is synthesized at parse time when the
input does not carry it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, NamedTuple, Optional, Union

INIT_ID = 0
INIT_SESSION = "init"

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class HistoryError(ValueError):
    """Raised for malformed or structurally invalid history input."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Status(str, Enum):
    COMMITTED = "committed"
    ABORTED = "aborted"


class Operation(NamedTuple):
    kind: str  # "r" or "w"
    key: str
    value: int

    @property
    def is_read(self) -> bool:
        return self.kind == "r"

    @property
    def is_write(self) -> bool:
        return self.kind == "w"

    def __str__(self) -> str:
        return f"{self.kind}({self.key},{self.value})"


def r(key: str, value: int) -> Operation:
    return Operation("r", key, value)


def w(key: str, value: int) -> Operation:
    return Operation("w", key, value)


@dataclass(frozen=True)
class Transaction:
    id: int
    session: str
    ops: tuple[Operation, ...]
    status: Status = Status.COMMITTED
    start: Optional[int] = None
    commit: Optional[int] = None

    @property
    def committed(self) -> bool:
        return self.status is Status.COMMITTED

    def external_reads(self) -> dict[str, tuple[int, int]]:
        """First read of each key issued before any own write of that key.

        Maps key -> (value, op index).
        """
        out: dict[str, tuple[int, int]] = {}
        written: set[str] = set()
        for i, op in enumerate(self.ops):
            if op.kind == "r":
                if op.key not in written and op.key not in out:
                    out[op.key] = (op.value, i)
            else:
                written.add(op.key)
        return out

    def final_writes(self) -> dict[str, int]:
        """Last value written to each key."""
        out: dict[str, int] = {}
        for op in self.ops:
            if op.kind == "w":
                out[op.key] = op.value
        return out

    def write_keys(self) -> set[str]:
        return {op.key for op in self.ops if op.kind == "w"}


@dataclass
class ValidationReport:
    mt_violations: list[tuple[int, str]] = field(default_factory=list)
    int_violations: list[tuple[int, int, str]] = field(default_factory=list)
    unique_write_violations: list[tuple[str, int, tuple[int, int]]] = field(
        default_factory=list
    )

    def __bool__(self) -> bool:
        return bool(
            self.mt_violations or self.int_violations or self.unique_write_violations
        )

    @property
    def ok(self) -> bool:
        return not self

    def merged(self, other: "ValidationReport") -> "ValidationReport":
        return ValidationReport(
            self.mt_violations + other.mt_violations,
            self.int_violations + other.int_violations,
            self.unique_write_violations + other.unique_write_violations,
        )

    def to_json(self) -> dict:
        return {
            "mt": [{"txn": t, "reason": why} for t, why in self.mt_violations],
            "int": [
                {"txn": t, "op": i, "reason": why} for t, i, why in self.int_violations
            ],
            "unique": [
                {"key": k, "value": v, "txns": list(pair)}
                for k, v, pair in self.unique_write_violations
            ],
        }


class History:
    """Transactions, session lists and the initial transaction.

    ``txns`` preserves input order; session lists hold committed
    transactions only (aborted ones are kept for screening but never take
    part in SO, RT or dependency graphs).
    """

    def __init__(
        self,
        txns: Iterable[Transaction],
        init_id: int = INIT_ID,
    ):
        self.txns: dict[int, Transaction] = {}
        for t in txns:
            if t.id in self.txns:
                raise HistoryError(f"duplicate transaction id {t.id}")
            self.txns[t.id] = t
        self.init_id = init_id
        if init_id not in self.txns:
            self.txns = {init_id: self._make_init(self.txns.values()), **self.txns}
        self.sessions: dict[str, list[int]] = {}
        for t in self.txns.values():
            if t.id == init_id or not t.committed:
                continue
            self.sessions.setdefault(t.session, []).append(t.id)

    @staticmethod
    def _make_init(txns: Iterable[Transaction]) -> Transaction:
        keys = sorted({op.key for t in txns for op in t.ops})
        return Transaction(
            id=INIT_ID,
            session=INIT_SESSION,
            ops=tuple(Operation("w", k, 0) for k in keys),
            status=Status.COMMITTED,
            start=0,
            commit=0,
        )

    @property
    def init(self) -> Transaction:
        return self.txns[self.init_id]

    def committed(self) -> list[Transaction]:
        return [t for t in self.txns.values() if t.committed]

    def keys(self) -> list[str]:
        return sorted({op.key for t in self.txns.values() for op in t.ops})

    def __len__(self) -> int:
        return len(self.txns)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, History):
            return NotImplemented
        return (
            self.init_id == other.init_id
            and self.txns == other.txns
            and self.sessions == other.sessions
        )

    def __repr__(self) -> str:
        return f"History({len(self.txns)} txns, {len(self.sessions)} sessions)"

    def session_order(self) -> set[tuple[int, int]]:
        """The full SO relation, including the init fan-out."""
        so = set()
        for tid in self.txns:
            if tid != self.init_id and self.txns[tid].committed:
                so.add((self.init_id, tid))
        for ids in self.sessions.values():
            for i, a in enumerate(ids):
                for b in ids[i + 1 :]:
                    so.add((a, b))
        return so

    def has_timestamps(self) -> bool:
        return all(
            t.start is not None and t.commit is not None for t in self.committed()
        )


# ---------------------------------------------------------------------------
# codec

_KINDS = {"r", "w"}


def _int64(v, line: int, what: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise HistoryError(f"{what} must be an integer, got {v!r}", line)
    if not INT64_MIN <= v <= INT64_MAX:
        raise HistoryError(f"{what} out of 64-bit range: {v}", line)
    return v


def _decode_txn(obj, line: int) -> Transaction:
    if not isinstance(obj, dict):
        raise HistoryError("expected a JSON object", line)
    try:
        tid = obj["id"]
        session = obj["session"]
        raw_ops = obj["ops"]
    except KeyError as e:
        raise HistoryError(f"missing field {e.args[0]!r}", line) from None
    if isinstance(tid, bool) or not isinstance(tid, int) or tid < 0:
        raise HistoryError(f"id must be a non-negative integer, got {tid!r}", line)
    if not isinstance(session, str):
        raise HistoryError("session must be a string", line)
    status_raw = obj.get("status", "committed")
    try:
        status = Status(status_raw)
    except ValueError:
        raise HistoryError(f"unknown status {status_raw!r}", line) from None
    if not isinstance(raw_ops, list):
        raise HistoryError("ops must be a list", line)
    ops = []
    for raw in raw_ops:
        if not isinstance(raw, dict):
            raise HistoryError("op must be an object", line)
        kind = raw.get("t")
        if kind not in _KINDS:
            raise HistoryError(f"op type must be 'r' or 'w', got {kind!r}", line)
        key = raw.get("k")
        if not isinstance(key, str):
            raise HistoryError("op key must be a string", line)
        ops.append(Operation(kind, key, _int64(raw.get("v"), line, "op value")))
    start = obj.get("start")
    commit = obj.get("commit")
    if start is not None:
        start = _int64(start, line, "start")
    if commit is not None:
        commit = _int64(commit, line, "commit")
    if start is not None and commit is not None and not start < commit:
        if not (tid == INIT_ID and start == commit == 0):
            raise HistoryError(f"txn {tid}: start {start} not before commit {commit}", line)
    return Transaction(tid, session, tuple(ops), status, start, commit)


def parse_history(data: Union[bytes, str, IO]) -> History:
    """Parse a JSON-lines history. Blank lines are ignored."""
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    txns = []
    seen: set[int] = set()
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise HistoryError(f"invalid JSON: {e.msg}", lineno) from None
        t = _decode_txn(obj, lineno)
        if t.id in seen:
            raise HistoryError(f"duplicate transaction id {t.id}", lineno)
        seen.add(t.id)
        txns.append(t)
    return History(txns)


def encode_txn(t: Transaction) -> str:
    obj: dict = {"id": t.id, "session": t.session, "status": t.status.value}
    if t.start is not None:
        obj["start"] = t.start
    if t.commit is not None:
        obj["commit"] = t.commit
    obj["ops"] = [{"t": op.kind, "k": op.key, "v": op.value} for op in t.ops]
    return json.dumps(obj, separators=(",", ":"))


def serialize_history(h: History) -> str:
    """Inverse of :func:`parse_history`.

    The initial transaction is omitted when it matches what the parser
    would synthesize.
    """
    others = [t for t in h.txns.values() if t.id != h.init_id]
    lines = []
    if h.init_id != INIT_ID or h.init != History._make_init(others):
        lines.append(encode_txn(h.init))
    lines.extend(encode_txn(t) for t in others)
    return "".join(line + "\n" for line in lines)


def load_history(path) -> History:
    with open(path, "rb") as f:
        return parse_history(f.read())


def dump_history(h: History, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(serialize_history(h))


# ---------------------------------------------------------------------------
# validation


def writer_index(h: History) -> dict[tuple[str, int], list[tuple[int, int]]]:
    """(key, value) -> [(txn id, op index)] for every write in the history."""
    idx: dict[tuple[str, int], list[tuple[int, int]]] = {}
    for t in h.txns.values():
        for i, op in enumerate(t.ops):
            if op.kind == "w":
                idx.setdefault((op.key, op.value), []).append((t.id, i))
    return idx


def write_txns(h: History) -> dict[str, list[int]]:
    """WriteTx_x over committed transactions, init included."""
    out: dict[str, list[int]] = {}
    for t in h.txns.values():
        if not t.committed:
            continue
        for k in sorted(t.write_keys()):
            out.setdefault(k, []).append(t.id)
    return out


def validate_mt(h: History) -> ValidationReport:
    """Check operation-count bounds, read-before-write and unique values."""
    rep = ValidationReport()
    for t in h.txns.values():
        if t.id == h.init_id:
            continue
        n_reads = sum(1 for op in t.ops if op.kind == "r")
        n_writes = len(t.ops) - n_reads
        if not 1 <= n_reads <= 2:
            rep.mt_violations.append((t.id, f"{n_reads} reads (expected 1-2)"))
        if n_writes > 2:
            rep.mt_violations.append((t.id, f"{n_writes} writes (expected at most 2)"))
        read_keys: set[str] = set()
        for i, op in enumerate(t.ops):
            if op.kind == "r":
                read_keys.add(op.key)
            elif op.key not in read_keys:
                rep.mt_violations.append(
                    (t.id, f"write to {op.key!r} at op {i} not preceded by a read")
                )
    for (key, value), writers in writer_index(h).items():
        tids = sorted({tid for tid, _ in writers})
        if len(writers) > 1:
            if len(tids) == 1:
                rep.unique_write_violations.append((key, value, (tids[0], tids[0])))
            for a, b in zip(tids, tids[1:]):
                rep.unique_write_violations.append((key, value, (a, b)))
    rep.unique_write_violations.sort()
    return rep


class IntKind(str, Enum):
    FUTURE_READ = "FutureRead"
    NOT_MY_LAST_WRITE = "NotMyLastWrite"
    NOT_MY_OWN_WRITE = "NotMyOwnWrite"
    NON_REPEATABLE_READ = "NonRepeatableRead"


def classify_reads(t: Transaction) -> list[tuple[int, IntKind]]:
    """Intra-transactional read violations of one transaction."""
    out = []
    ops = t.ops
    for i, op in enumerate(ops):
        if op.kind != "r":
            continue
        prev = None
        own_writes_before = []
        for j in range(i - 1, -1, -1):
            if ops[j].key == op.key:
                if prev is None:
                    prev = ops[j]
                if ops[j].kind == "w":
                    own_writes_before.append(ops[j].value)
        later_write = any(
            o.kind == "w" and o.key == op.key and o.value == op.value
            for o in ops[i + 1 :]
        )
        if prev is not None and prev.value == op.value:
            continue
        if later_write:
            out.append((i, IntKind.FUTURE_READ))
        elif prev is None:
            continue
        elif own_writes_before:
            if op.value in own_writes_before:
                out.append((i, IntKind.NOT_MY_LAST_WRITE))
            else:
                out.append((i, IntKind.NOT_MY_OWN_WRITE))
        else:
            out.append((i, IntKind.NON_REPEATABLE_READ))
    return out


def check_int(h: History) -> ValidationReport:
    """INT axiom: each read returns the latest preceding own read/write value.

    A read whose value only matches a later write of the same transaction is
    reported as well, since no execution can produce it.
    """
    rep = ValidationReport()
    for t in h.txns.values():
        for i, kind in classify_reads(t):
            rep.int_violations.append((t.id, i, kind.value))
    return rep


def real_time_edges(h: History) -> set[tuple[int, int]]:
    """All (a, b) with commit(a) < start(b) over committed transactions."""
    txns = h.committed()
    for t in txns:
        if t.start is None or t.commit is None:
            raise HistoryError(f"txn {t.id} has no timestamps; real-time order needs them")
    return {(a.id, b.id) for a in txns for b in txns if a.commit < b.start}
