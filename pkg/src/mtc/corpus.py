"""Seeded random small histories for differential testing against the oracle.

Histories come from a toy execution: transactions run in a random order and
each reads from a snapshot that lags a random number of transactions behind,
so the corpus mixes serial, SI-like and broken executions. Half the
histories drop writes that would lose a concurrent update, which is what
first-committer-wins would have forced. Occasionally a
read is redirected to an arbitrary writer of the key. Every history passes
the preflight screen by construction.
"""

from __future__ import annotations

import random
from typing import Optional

from .history import History, Operation, Transaction
from .lwt import LwtHistory, insert, rw
from .workload import MT_SHAPES


def random_mt_history(
    rng: random.Random, max_txns: int = 8, max_keys: int = 3, max_sessions: int = 3
) -> History:
    n = rng.randint(1, max_txns)
    keys = [f"k{i}" for i in range(rng.randint(1, max_keys))]
    n_sessions = rng.randint(1, max_sessions)
    lag = rng.choice((0, 0, 1, 2, 3, n))
    redirect = rng.random() < 0.3
    first_committer_wins = rng.random() < 0.5

    shapes = MT_SHAPES if len(keys) > 1 else ("R", "RW")
    templates = []
    for _ in range(n):
        shape = rng.choice(shapes)
        ks = rng.sample(keys, shape.count("R"))
        ops = [("r", k) for k in ks]
        if shape.count("W") == 1:
            ops.append(("w", rng.choice(ks)))
        elif shape.count("W") == 2:
            ops.extend(("w", k) for k in ks)
        templates.append(ops)

    # state[i] = committed values after the first i transactions
    state = [{k: 0 for k in keys}]
    counter = 0
    bodies: list[list[Operation]] = []
    snaps = []
    for i, tmpl in enumerate(templates):
        snap = rng.randint(max(0, i - lag), i)
        snaps.append(snap)
        ops = []
        nxt = dict(state[-1])
        for kind, k in tmpl:
            if kind == "r":
                ops.append(Operation("r", k, state[snap][k]))
            elif first_committer_wins and state[snap][k] != state[-1][k]:
                # concurrent overwrite since the snapshot: drop this write
                continue
            else:
                counter += 1
                ops.append(Operation("w", k, counter))
                nxt[k] = counter
        bodies.append(ops)
        state.append(nxt)

    if redirect:
        writers = {}
        for i, ops in enumerate(bodies):
            for op in ops:
                if op.kind == "w":
                    writers.setdefault(op.key, []).append((i, op.value))
        i = rng.randrange(n)
        reads = [j for j, op in enumerate(bodies[i]) if op.kind == "r"]
        j = rng.choice(reads)
        key = bodies[i][j].key
        choices = [0] + [v for t, v in writers.get(key, ()) if t != i]
        bodies[i][j] = Operation("r", key, rng.choice(choices))

    sessions = [rng.randrange(n_sessions) + 1 for _ in range(n)]
    starts, commits = [], []
    for i in range(n):
        start = 10 * snaps[i] + rng.randint(1, 9)
        commit = max(start + 1, 10 * i + rng.randint(5, 14))
        starts.append(start)
        commits.append(commit)
    last: dict[int, int] = {}
    for i in range(n):
        s = sessions[i]
        if s in last and starts[i] <= commits[last[s]]:
            starts[i] = commits[last[s]] + 1
            commits[i] = max(commits[i], starts[i] + rng.randint(1, 5))
        last[s] = i
    txns = [
        Transaction(i + 1, f"s{sessions[i]}", tuple(bodies[i]), start=starts[i], commit=commits[i])
        for i in range(n)
    ]
    return History(txns)


def random_lwt_history(rng: random.Random, max_ops: int = 8, key: str = "x") -> LwtHistory:
    """A mostly-valid value chain with randomized intervals and rare defects."""
    n = rng.randint(1, max_ops)
    values = rng.sample(range(1, 1000), n)
    ops = []
    spread = rng.choice((2, 5, 10, 20))
    for pos in range(n):
        centre = 10 * pos
        start = centre - rng.randint(0, spread)
        finish = max(start + 1, centre + rng.randint(1, spread))
        if pos == 0:
            ops.append(insert(key, values[0], start, finish))
        else:
            ops.append(rw(key, values[pos - 1], values[pos], start, finish))
    defect = rng.random()
    if n > 1 and defect < 0.05:
        # second insert
        i = rng.randrange(1, n)
        ops[i] = insert(key, ops[i].new, ops[i].start, ops[i].finish)
    elif n > 1 and defect < 0.10:
        # two operations claim the same predecessor value
        i, j = rng.sample(range(1, n), 2) if n > 2 else (1, 1)
        if i != j:
            ops[j] = rw(key, ops[i].expected, ops[j].new, ops[j].start, ops[j].finish)
    elif defect < 0.13:
        # no insert at all
        ops[0] = rw(key, 0, ops[0].new, ops[0].start, ops[0].finish)
    rng.shuffle(ops)
    return LwtHistory(key, tuple(ops))


def corpus(seed: int, count: int, **kw) -> list[History]:
    rng = random.Random(seed)
    return [random_mt_history(rng, **kw) for _ in range(count)]


def lwt_corpus(seed: int, count: int, max_ops: int = 8) -> list[LwtHistory]:
    rng = random.Random(seed)
    return [random_lwt_history(rng, max_ops) for _ in range(count)]


def describe(h: History) -> Optional[str]:
    """One-line summary used in assertion messages."""
    return "; ".join(
        f"T{t.id}@{t.session}[{t.start},{t.commit}]:" + " ".join(map(str, t.ops))
        for t in h.txns.values()
        if t.id != h.init_id
    )
