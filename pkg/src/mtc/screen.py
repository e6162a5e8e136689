"""Preflight screen for anomalies that make dependency graphs meaningless.

Seven anomaly kinds are caught here before any graph is built: reads of
values nobody wrote, reads of aborted or intermediate writes, and the four
program-order (intra-transactional) anomalies.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .history import History, classify_reads, writer_index


class AnomalyKind(str, Enum):
    THIN_AIR_READ = "ThinAirRead"
    ABORTED_READ = "AbortedRead"
    FUTURE_READ = "FutureRead"
    NOT_MY_LAST_WRITE = "NotMyLastWrite"
    NOT_MY_OWN_WRITE = "NotMyOwnWrite"
    INTERMEDIATE_READ = "IntermediateRead"
    NON_REPEATABLE_READ = "NonRepeatableRead"


@dataclass(frozen=True)
class AnomalyInstance:
    kind: AnomalyKind
    txns: tuple[int, ...]
    key: str
    value: int
    ops: tuple[int, ...]  # op indices, aligned with txns

    def to_json(self) -> dict:
        return {
            "type": "anomaly",
            "kind": self.kind.value,
            "txns": list(self.txns),
            "key": self.key,
            "value": self.value,
            "ops": list(self.ops),
        }


def screen(h: History) -> list[AnomalyInstance]:
    """Return every preflight anomaly in ``h``, ordered by reader then op."""
    writers = writer_index(h)
    found: list[AnomalyInstance] = []
    for t in h.txns.values():
        if not t.committed or t.id == h.init_id:
            continue
        local = dict(classify_reads(t))
        for i, kind in sorted(local.items()):
            op = t.ops[i]
            found.append(AnomalyInstance(AnomalyKind(kind.value), (t.id,), op.key, op.value, (i,)))
        for key, (value, i) in t.external_reads().items():
            if i in local:
                continue
            hits = [(wid, j) for wid, j in writers.get((key, value), ()) if wid != t.id]
            if not hits:
                found.append(AnomalyInstance(AnomalyKind.THIN_AIR_READ, (t.id,), key, value, (i,)))
                continue
            wid, j = hits[0]
            writer = h.txns[wid]
            if not writer.committed:
                kind = AnomalyKind.ABORTED_READ
            elif writer.final_writes()[key] != value:
                kind = AnomalyKind.INTERMEDIATE_READ
            else:
                continue
            found.append(AnomalyInstance(kind, (t.id, wid), key, value, (i, j)))
    found.sort(key=lambda a: (a.txns[0], a.ops[0]))
    return found


def verify_instance(h: History, a: AnomalyInstance) -> bool:
    """Re-check an anomaly against the raw history from its evidence alone."""
    reader = h.txns.get(a.txns[0])
    if reader is None:
        return False
    op = reader.ops[a.ops[0]]
    if op.kind != "r" or op.key != a.key or op.value != a.value:
        return False
    if a.kind in (AnomalyKind.ABORTED_READ, AnomalyKind.INTERMEDIATE_READ):
        writer = h.txns.get(a.txns[1])
        if writer is None:
            return False
        wop = writer.ops[a.ops[1]]
        if wop.kind != "w" or wop.key != a.key or wop.value != a.value:
            return False
        if a.kind is AnomalyKind.ABORTED_READ:
            return not writer.committed
        return writer.committed and writer.final_writes()[a.key] != a.value
    if a.kind is AnomalyKind.THIN_AIR_READ:
        return not any(
            wid != reader.id for wid, _ in writer_index(h).get((a.key, a.value), ())
        )
    return dict(classify_reads(reader)).get(a.ops[0]) == a.kind.value
