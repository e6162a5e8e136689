"""Deterministic in-memory multi-version store used to produce histories.

Sessions are interleaved one event at a time (begin, each operation,
commit) by a seeded scheduler, and a logical clock stamps every event, so a
run is fully reproducible from its seed. Snapshot isolation uses
begin-snapshot reads with first-committer-wins; serializable mode
additionally aborts a transaction if anything it read was overwritten after
its snapshot. Fault modes deliberately break these rules.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .history import History, Operation, Status, Transaction
from .workload import TxnTemplate, ValueBinder


class Isolation(str, Enum):
    SERIALIZABLE = "ser"
    SNAPSHOT = "si"


class Fault(str, Enum):
    LOST_UPDATE = "lost-update"  # no write-conflict detection
    LONG_FORK = "long-fork"  # read-only txns see other-parity keys from a lagging replica
    WRITE_SKEW_LEAK = "write-skew-leak"  # serializable mode skips read validation
    ABORTED_READ_LEAK = "aborted-read-leak"  # aborted writes stay visible
    STALE_READ = "stale-read"  # read-only txns get a snapshot that lags real time


@dataclass(frozen=True)
class StoreConfig:
    isolation: Isolation = Isolation.SNAPSHOT
    fault: Optional[Fault] = None
    scheduler_seed: int = 0
    retries: int = 3
    lag: int = 32
    client_abort_prob: float = 0.05


class _Attempt:
    __slots__ = ("template", "tries", "tid", "start", "snap", "pc", "ops", "buf", "reads")

    def __init__(self, template: TxnTemplate, tries: int):
        self.template = template
        self.tries = tries
        self.pc = -1
        self.ops: list[Operation] = []
        self.buf: dict[str, int] = {}
        self.reads: dict[str, int] = {}  # key -> snapshot used for it


class SimStore:
    def __init__(self, cfg: StoreConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.scheduler_seed)
        self.clock = 1
        self._ts: dict[str, list[int]] = {}
        self._vals: dict[str, list[int]] = {}
        self.binder = ValueBinder()
        self.records: list[Transaction] = []
        self._next_id = 1

    def _read(self, key: str, snap: int) -> int:
        ts = self._ts.get(key)
        if ts is None:
            return 0
        return self._vals[key][bisect_right(ts, snap) - 1]

    def _latest(self, key: str) -> int:
        ts = self._ts.get(key)
        return ts[-1] if ts else 0

    def _install(self, buf: dict[str, int], at: int) -> None:
        for key, value in buf.items():
            if key not in self._ts:
                self._ts[key] = [0]
                self._vals[key] = [0]
            self._ts[key].append(at)
            self._vals[key].append(value)

    def run(self, workload: Iterable[TxnTemplate]) -> History:
        queues: dict[int, deque] = {}
        for t in workload:
            queues.setdefault(t.session, deque()).append(t)
        live = sorted(queues)
        current: dict[int, Optional[_Attempt]] = {s: None for s in live}
        last_commit = {s: 0 for s in live}
        while live:
            i = self.rng.randrange(len(live))
            s = live[i]
            a = current[s]
            if a is None:
                a = current[s] = _Attempt(queues[s].popleft(), 0)
            if a.pc < 0:
                self._begin(a, last_commit[s])
            elif a.pc < len(a.template.ops):
                self._step(a, s)
            else:
                if self._commit(a, s):
                    last_commit[s] = self.clock
                    current[s] = None
                elif a.tries < self.cfg.retries:
                    current[s] = _Attempt(a.template, a.tries + 1)
                else:
                    current[s] = None
                if current[s] is None and not queues[s]:
                    live.pop(i)
            self.clock += 1
        self.records.sort(key=lambda t: t.id)
        return History(self.records)

    def _begin(self, a: _Attempt, floor: int) -> None:
        a.tid = self._next_id
        self._next_id += 1
        a.start = self.clock
        a.snap = self.clock
        if self.cfg.fault is Fault.STALE_READ and a.template.writes == 0:
            a.snap = max(self.clock - self.cfg.lag, floor)
        a.pc = 0

    def _step(self, a: _Attempt, session: int) -> None:
        kind, key = a.template.ops[a.pc]
        a.pc += 1
        if kind == "w":
            value = self.binder.next(session)
            a.buf[key] = value
            a.ops.append(Operation("w", key, value))
            return
        if key in a.buf:
            a.ops.append(Operation("r", key, a.buf[key]))
            return
        snap = a.snap
        if (
            self.cfg.fault is Fault.LONG_FORK
            and a.template.writes == 0
            and sum(key.encode()) % 2 != session % 2
        ):
            # the lagging replica does not honour session guarantees
            snap = max(self.clock - self.cfg.lag, 0)
        a.reads.setdefault(key, snap)
        a.ops.append(Operation("r", key, self._read(key, snap)))

    def _conflicts(self, a: _Attempt) -> bool:
        fault = self.cfg.fault
        if fault is not Fault.LOST_UPDATE:
            for key in a.buf:
                if self._latest(key) > a.snap:
                    return True
        if self.cfg.isolation is Isolation.SERIALIZABLE:
            if fault is Fault.WRITE_SKEW_LEAK:
                return False
            if fault in (Fault.LONG_FORK, Fault.STALE_READ) and not a.buf:
                return False
            for key, snap in a.reads.items():
                if fault is Fault.LOST_UPDATE and key in a.buf:
                    continue
                if self._latest(key) > snap:
                    return True
        return False

    def _commit(self, a: _Attempt, session: int) -> bool:
        abort = self._conflicts(a)
        if (
            not abort
            and self.cfg.fault is Fault.ABORTED_READ_LEAK
            and a.buf
            and self.rng.random() < self.cfg.client_abort_prob
        ):
            abort = True
        name = f"s{session}"
        if abort:
            self.records.append(
                Transaction(a.tid, name, tuple(a.ops), Status.ABORTED, a.start, None)
            )
            if self.cfg.fault is Fault.ABORTED_READ_LEAK:
                self._install(a.buf, self.clock)
            return False
        self._install(a.buf, self.clock)
        self.records.append(
            Transaction(a.tid, name, tuple(a.ops), Status.COMMITTED, a.start, self.clock)
        )
        return True


def execute(workload: Iterable[TxnTemplate], cfg: StoreConfig) -> History:
    return SimStore(cfg).run(workload)


def abort_stats(h: History) -> dict:
    committed = sum(1 for t in h.txns.values() if t.committed and t.id != h.init_id)
    aborted = sum(1 for t in h.txns.values() if not t.committed)
    total = committed + aborted
    return {
        "committed": committed,
        "aborted": aborted,
        "rate": aborted / total if total else 0.0,
    }
