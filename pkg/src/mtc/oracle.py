"""Brute-force reference checkers for small histories.

These enumerate every candidate write-write order (and, for LWT histories,
every permutation) straight from the definitions. They share no code with
the fast checkers beyond the history model, so the two can be compared.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Optional

from .history import History, real_time_edges
from .lwt import INSERT, LwtHistory


class OracleRefused(Exception):
    """The instance is outside the oracle's budget. Not a verdict."""


@dataclass(frozen=True)
class OracleBudget:
    max_txns: int = 8
    max_permutations: int = 2_000_000
    timeout_ms: int = 60_000


DEFAULT_BUDGET = OracleBudget()


def _acyclic(nodes, edges) -> bool:
    """Kahn's algorithm."""
    indeg = {v: 0 for v in nodes}
    adj: dict = {v: [] for v in nodes}
    for a, b in edges:
        adj[a].append(b)
        indeg[b] += 1
    queue = [v for v, d in indeg.items() if d == 0]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for w in adj[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    return seen == len(indeg)


def _compose_opt(left: set, right: set) -> set:
    """left ; right?  ==  left | (left ; right)."""
    by_src: dict = {}
    for a, b in right:
        by_src.setdefault(a, []).append(b)
    out = set(left)
    for a, b in left:
        for c in by_src.get(b, ()):
            out.add((a, c))
    return out


class _Search:
    def __init__(self, h: History, mode: str, budget: OracleBudget):
        committed = h.committed()
        if len(committed) - 1 > budget.max_txns:
            raise OracleRefused(
                f"{len(committed) - 1} committed transactions exceed budget {budget.max_txns}"
            )
        self.mode = mode
        self.budget = budget
        self.deadline = time.monotonic() + budget.timeout_ms / 1000
        self.visited = 0
        self.nodes = [t.id for t in committed]
        init = h.init_id

        self.fixed: set = set(h.session_order())
        if mode == "sser":
            self.fixed |= real_time_edges(h)

        last_write = {}
        for t in committed:
            for op in t.ops:
                if op.kind == "w":
                    last_write[(op.key, t.id)] = op.value
        writer_of = {(k, v): tid for (k, tid), v in last_write.items()}

        # WR per key: reader -> writer, from first reads issued before own writes
        self.wr: dict[str, set] = {}
        self.writers: dict[str, list[int]] = {}
        for t in committed:
            own: set = set()
            seen_keys: set = set()
            for op in t.ops:
                if op.kind == "w":
                    own.add(op.key)
                    if t.id not in self.writers.setdefault(op.key, []):
                        self.writers[op.key].append(t.id)
                elif op.key not in own and op.key not in seen_keys:
                    seen_keys.add(op.key)
                    src = writer_of.get((op.key, op.value))
                    if src is None or src == t.id:
                        raise ValueError(
                            f"txn {t.id} reads {op.key}={op.value} with no committed writer"
                        )
                    self.wr.setdefault(op.key, set()).add((src, t.id))
        self.keys = sorted(self.writers)
        for k in self.keys:
            ws = self.writers[k]
            ws.remove(init)
            self.writers[k] = [init] + sorted(ws)

    def _key_edges(self, key: str, order: tuple) -> tuple[set, set]:
        pos = {t: i for i, t in enumerate(order)}
        ww = {(a, b) for a in order for b in order if pos[a] < pos[b]}
        rw = set()
        for src, reader in self.wr.get(key, ()):
            for b in order:
                if pos[b] > pos[src] and b != reader:
                    rw.add((reader, b))
        return ww, rw

    def _ok(self, dep: set, rw: set) -> bool:
        if self.mode == "si":
            return _acyclic(self.nodes, _compose_opt(dep, rw))
        return _acyclic(self.nodes, dep | rw)

    def run(self) -> bool:
        base = set(self.fixed)
        for k in self.keys:
            base |= self.wr.get(k, set())
        return self._assign(0, base, set())

    def _assign(self, i: int, dep: set, rw: set) -> bool:
        if not self._ok(dep, rw):
            return False
        if i == len(self.keys):
            return True
        key = self.keys[i]
        init, *rest = self.writers[key]
        # the initial transaction precedes everyone in SO, so any order that
        # puts it later is immediately cyclic
        for perm in itertools.permutations(rest):
            self.visited += 1
            if self.visited > self.budget.max_permutations:
                raise OracleRefused("permutation budget exhausted")
            if self.visited % 1024 == 0 and time.monotonic() > self.deadline:
                raise OracleRefused("oracle timed out")
            ww, krw = self._key_edges(key, (init,) + perm)
            if self._assign(i + 1, dep | ww, rw | krw):
                return True
        return False


def oracle_ser(h: History, with_rt: bool = False, budget: OracleBudget = DEFAULT_BUDGET) -> bool:
    """Does some WW assignment give an acyclic (RT |) SO | WR | WW | RW graph?"""
    return _Search(h, "sser" if with_rt else "ser", budget).run()


def oracle_sser(h: History, budget: OracleBudget = DEFAULT_BUDGET) -> bool:
    return oracle_ser(h, with_rt=True, budget=budget)


def oracle_si(h: History, budget: OracleBudget = DEFAULT_BUDGET) -> bool:
    """Does some WW assignment make (SO | WR | WW) ; RW? acyclic?"""
    return _Search(h, "si", budget).run()


def oracle_lin(hx: LwtHistory, budget: OracleBudget = DEFAULT_BUDGET) -> bool:
    """Search all permutations respecting real time and register semantics."""
    ops = list(hx.ops)
    if len(ops) > budget.max_txns:
        raise OracleRefused(f"{len(ops)} operations exceed budget {budget.max_txns}")
    n = len(ops)
    preds = [
        {j for j in range(n) if ops[j].finish < ops[i].start} for i in range(n)
    ]
    deadline = time.monotonic() + budget.timeout_ms / 1000
    steps = 0

    def extend(placed: list, done: set, state: Optional[int]) -> bool:
        nonlocal steps
        steps += 1
        if steps > budget.max_permutations:
            raise OracleRefused("permutation budget exhausted")
        if steps % 1024 == 0 and time.monotonic() > deadline:
            raise OracleRefused("oracle timed out")
        if len(placed) == n:
            return True
        for i in range(n):
            if i in done or not preds[i] <= done:
                continue
            op = ops[i]
            if op.kind == INSERT:
                if state is not None:
                    continue
            elif state is None or op.expected != state:
                continue
            done.add(i)
            placed.append(i)
            if extend(placed, done, op.new):
                return True
            placed.pop()
            done.discard(i)
        return False

    return extend([], set(), None)
