"""Dependency-graph construction for mini-transaction histories.

Unique written values pin down WR exactly, and because every MT write is
preceded by a read of the same key, WW is inferred from WR: a reader that
also writes the key must come right after the writer it read from. RW then
follows from WR and WW. The per-key transitive closure of WW is optional;
skipping it preserves acyclicity of both the plain graph and the SI-induced
graph while keeping the edge count linear.

Real-time edges are not materialized. They are held as a start-sorted index
so that cycle search can route through a chain of time nodes in
O(n log n) instead of walking n^2 pairs.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Iterator, NamedTuple, Optional

from .history import History, HistoryError

RT, SO, WR, WW, RW = "RT", "SO", "WR", "WW", "RW"
KINDS = (RT, SO, WR, WW, RW)


class EdgeLabel(NamedTuple):
    kind: str
    key: Optional[str] = None

    def __str__(self) -> str:
        return self.kind if self.key is None else f"{self.kind}({self.key})"

    @classmethod
    def parse(cls, text: str) -> "EdgeLabel":
        if "(" in text:
            kind, rest = text.split("(", 1)
            return cls(kind, rest[:-1])
        return cls(text)


class Edge(NamedTuple):
    src: int
    dst: int
    label: EdgeLabel

    def to_json(self) -> dict:
        return {"from": self.src, "to": self.dst, "label": str(self.label)}


@dataclass(frozen=True)
class ForkInstance:
    writer: int
    readers: tuple[int, int]
    key: str

    def to_json(self) -> dict:
        return {
            "type": "fork",
            "writer": self.writer,
            "readers": list(self.readers),
            "key": self.key,
        }


class GraphError(RuntimeError):
    """Raised when a history that should have been screened is not consistent."""


_SO_LABEL = EdgeLabel(SO)
_RT_LABEL = EdgeLabel(RT)


class RealTimeIndex:
    """Implicit RT relation: a -> b iff commit(a) < start(b)."""

    def __init__(self, txns):
        order = sorted(txns, key=lambda t: (t.start, t.id))
        self.ids = [t.id for t in order]
        self.starts = [t.start for t in order]
        self.commit = {t.id: t.commit for t in txns}
        self.start = {t.id: t.start for t in txns}

    def first_after(self, tid: int) -> int:
        """Index into ``ids`` of the first transaction starting after tid commits."""
        return bisect_right(self.starts, self.commit[tid])

    def successors(self, tid: int) -> list[int]:
        return self.ids[self.first_after(tid) :]

    def __len__(self) -> int:
        return sum(len(self.ids) - self.first_after(t) for t in self.ids)


class DependencyGraph:
    def __init__(self, vertices: Iterable[int], closed: bool = False):
        self.vertices: list[int] = list(vertices)
        self.closed = closed
        self.rt: Optional[RealTimeIndex] = None
        self._succ: dict[int, list[tuple[int, EdgeLabel]]] = {v: [] for v in self.vertices}
        self._edges: set[tuple[int, int, EdgeLabel]] = set()

    def add_edge(self, src: int, dst: int, label: EdgeLabel) -> bool:
        e = (src, dst, label)
        if e in self._edges:
            return False
        self._edges.add(e)
        self._succ[src].append((dst, label))
        return True

    def has_edge(self, src: int, dst: int, label: EdgeLabel) -> bool:
        if label.kind == RT:
            return self.rt is not None and self.rt.commit[src] < self.rt.start[dst]
        return (src, dst, label) in self._edges

    def successors(self, v: int) -> list[tuple[int, EdgeLabel]]:
        """Explicit (non-RT) out-edges of ``v`` in insertion order."""
        return self._succ[v]

    def edges(self, include_rt: bool = False) -> Iterator[Edge]:
        for v in self.vertices:
            for dst, label in self._succ[v]:
                yield Edge(v, dst, label)
        if include_rt and self.rt is not None:
            for v in self.rt.ids:
                for dst in self.rt.successors(v):
                    yield Edge(v, dst, _RT_LABEL)

    def edge_set(self, include_rt: bool = False) -> set[Edge]:
        return set(self.edges(include_rt))

    def edges_of(self, kind: str, key: Optional[str] = None) -> list[Edge]:
        return [
            e
            for e in self.edges(include_rt=kind == RT)
            if e.label.kind == kind and (key is None or e.label.key == key)
        ]

    def in_degree(self, v: int, kind: str) -> int:
        return sum(1 for e in self.edges() if e.dst == v and e.label.kind == kind)

    def __len__(self) -> int:
        return len(self._edges)


def _label_cache() -> Callable[[str, str], EdgeLabel]:
    cache: dict[tuple[str, str], EdgeLabel] = {}

    def get(kind: str, key: str) -> EdgeLabel:
        lab = cache.get((kind, key))
        if lab is None:
            lab = cache[(kind, key)] = EdgeLabel(kind, key)
        return lab

    return get


def _last_writers(h: History) -> dict[tuple[str, int], int]:
    out = {}
    for t in h.txns.values():
        if t.committed:
            for k, v in t.final_writes().items():
                out[(k, v)] = t.id
    return out


def cons_dep(h: History, with_rt: bool = False, close: bool = False) -> DependencyGraph:
    """Build the dependency graph of a screened MT history.

    With ``close`` set, WW(x) is replaced by its transitive closure before
    RW edges are derived; otherwise only the inferred WW edges are used.
    """
    committed = h.committed()
    g = DependencyGraph((t.id for t in committed), closed=close)
    label = _label_cache()
    if with_rt:
        missing = [t.id for t in committed if t.start is None or t.commit is None]
        if missing:
            raise HistoryError(f"real-time order needs timestamps; txn {missing[0]} has none")
        g.rt = RealTimeIndex(committed)

    for ids in h.sessions.values():
        g.add_edge(h.init_id, ids[0], _SO_LABEL)
        for a, b in zip(ids, ids[1:]):
            g.add_edge(a, b, _SO_LABEL)

    writers = _last_writers(h)
    wr_out: dict[tuple[str, int], list[int]] = {}
    ww_out: dict[tuple[str, int], list[int]] = {}
    for t in committed:
        if t.id == h.init_id:
            continue
        wkeys = t.write_keys()
        for key, (value, _) in t.external_reads().items():
            src = writers.get((key, value))
            if src is None or src == t.id:
                raise GraphError(f"txn {t.id} reads {key}={value} with no committed writer")
            if g.add_edge(src, t.id, label(WR, key)):
                wr_out.setdefault((key, src), []).append(t.id)
            if key in wkeys and g.add_edge(src, t.id, label(WW, key)):
                ww_out.setdefault((key, src), []).append(t.id)

    if close:
        _close_ww(g, ww_out, label)

    for (key, src), readers in wr_out.items():
        nexts = ww_out.get((key, src))
        if not nexts:
            continue
        lab = label(RW, key)
        for reader in readers:
            for nxt in nexts:
                if reader != nxt:
                    g.add_edge(reader, nxt, lab)
    return g


def _close_ww(g: DependencyGraph, ww_out: dict, label) -> None:
    by_key: dict[str, dict[int, list[int]]] = {}
    for (key, src), dsts in ww_out.items():
        by_key.setdefault(key, {})[src] = list(dsts)
    for key, adj in by_key.items():
        lab = label(WW, key)
        for src in list(adj):
            seen: set[int] = set()
            stack = list(adj[src])
            while stack:
                v = stack.pop()
                if v in seen:
                    continue
                seen.add(v)
                stack.extend(adj.get(v, ()))
            for dst in sorted(seen):
                if g.add_edge(src, dst, lab):
                    ww_out.setdefault((key, src), []).append(dst)


def detect_fork(h: History) -> list[ForkInstance]:
    """All writer/key groups with two readers that then write different values."""
    writers = _last_writers(h)
    groups: dict[tuple[int, str], list[tuple[int, int]]] = {}
    for t in h.txns.values():
        if not t.committed or t.id == h.init_id:
            continue
        finals = t.final_writes()
        for key, (value, _) in t.external_reads().items():
            if key not in finals:
                continue
            src = writers.get((key, value))
            if src is None or src == t.id:
                continue
            groups.setdefault((src, key), []).append((t.id, finals[key]))
    out = []
    for (src, key), readers in groups.items():
        if len(readers) < 2:
            continue
        readers.sort()
        for i, (a, va) in enumerate(readers):
            for b, vb in readers[i + 1 :]:
                if va != vb:
                    out.append(ForkInstance(src, (a, b), key))
    out.sort(key=lambda f: (f.writer, f.key, f.readers))
    return out


# ---------------------------------------------------------------------------
# cycle search


def _search(roots: Iterable[Hashable], succ: Callable) -> Optional[list]:
    """Iterative DFS; returns the payloads along the first closed walk found.

    ``succ(v)`` yields ``(w, payload)`` pairs.
    """
    color: dict = {}
    for root in roots:
        if root in color:
            continue
        color[root] = 1
        pos = {root: 0}
        stack = [(root, iter(succ(root)))]
        incoming: list = [None]
        while stack:
            v, it = stack[-1]
            for w, payload in it:
                c = color.get(w)
                if c is None:
                    color[w] = 1
                    pos[w] = len(stack)
                    stack.append((w, iter(succ(w))))
                    incoming.append(payload)
                    break
                if c == 1:
                    return incoming[pos[w] + 1 :] + [payload]
            else:
                color[v] = 2
                del pos[v]
                stack.pop()
                incoming.pop()
    return None


def _rt_successors(g: DependencyGraph) -> Callable:
    """Successor function over real vertices plus a chain of time nodes.

    Time node i (encoded as ``("t", i)``) stands for "every transaction that
    starts no earlier than the i-th start"; a vertex links to the first time
    node after its commit, so reachability through the chain is exactly RT.
    """
    rt = g.rt
    n = len(rt.ids)

    def succ(v):
        if type(v) is tuple:
            i = v[1]
            yield rt.ids[i], ("rt-end", rt.ids[i])
            if i + 1 < n:
                yield ("t", i + 1), None
        else:
            j = rt.first_after(v)
            if j < n:
                yield ("t", j), ("rt-start", v)

    return succ


def _flatten(payloads: list) -> list[Edge]:
    # rotate so the walk starts outside an RT chain segment
    k = next(
        (i for i, p in enumerate(payloads) if p is not None and p[0] != "rt-end"),
        0,
    )
    payloads = payloads[k:] + payloads[:k]
    out: list[Edge] = []
    rt_src = None
    for p in payloads:
        if p is None:
            continue
        if p[0] == "rt-start":
            rt_src = p[1]
        elif p[0] == "rt-end":
            out.append(Edge(rt_src, p[1], _RT_LABEL))
        else:
            out.extend(p)
    return out


def find_cycle(
    g: DependencyGraph, edge_filter: Optional[Callable[[EdgeLabel], bool]] = None
) -> Optional[list[Edge]]:
    """Some cycle among the edges accepted by ``edge_filter`` (all by default).

    RT edges take part only when the graph carries a real-time index and the
    filter accepts ``EdgeLabel("RT")``. Deterministic for a given graph.
    """
    keep = edge_filter or (lambda lab: True)
    use_rt = g.rt is not None and keep(_RT_LABEL)
    succ_cache = g._succ
    rt_succ = _rt_successors(g) if use_rt else None

    def succ(v):
        if type(v) is tuple:
            yield from rt_succ(v)
            return
        for w, lab in succ_cache[v]:
            if keep(lab):
                yield w, (Edge(v, w, lab),)
        if rt_succ is not None:
            yield from rt_succ(v)

    found = _search(g.vertices, succ)
    return None if found is None else _flatten(found)


def find_si_cycle(g: DependencyGraph) -> Optional[list[Edge]]:
    """Cycle in the induced graph (SO | WR | WW) ; RW? without building it.

    Each composed step is a non-RW edge optionally followed by one RW edge;
    the returned walk lists the underlying edges.
    """
    adj = g._succ

    def succ(u):
        for w, lab in adj[u]:
            if lab.kind == RW or lab.kind == RT:
                continue
            first = Edge(u, w, lab)
            yield w, (first,)
            for z, lab2 in adj[w]:
                if lab2.kind == RW:
                    yield z, (first, Edge(w, z, lab2))

    found = _search(g.vertices, succ)
    return None if found is None else _flatten(found)


def is_closed_walk(edges: list[Edge], g: Optional[DependencyGraph] = None) -> bool:
    if not edges:
        return False
    for a, b in zip(edges, edges[1:] + edges[:1]):
        if a.dst != b.src:
            return False
    if g is not None:
        return all(g.has_edge(*e) for e in edges)
    return True


def dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(edges: Iterable[Edge], name: str = "G") -> str:
    lines = [f"digraph {name} {{"]
    for e in edges:
        lines.append(f"  T{e.src} -> T{e.dst} [label={dot_quote(str(e.label))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
