"""Isolation checkers for MT histories: SSER, SER and SI.

All three share the same pipeline: the preflight screen, then a dependency
graph without WW transitive closure, then an acyclicity test. SSER adds
real-time edges; SI first looks for the fork pattern and then tests the
induced graph (SO | WR | WW) ; RW? instead of the plain graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .depgraph import (
    Edge,
    ForkInstance,
    cons_dep,
    detect_fork,
    find_cycle,
    find_si_cycle,
)
from .history import History, HistoryError, ValidationReport, validate_mt
from .screen import AnomalyInstance, screen


class Level(str, Enum):
    SSER = "sser"
    SER = "ser"
    SI = "si"
    LIN = "lin"


class NotMTHistory(HistoryError):
    def __init__(self, report: ValidationReport):
        self.report = report
        first = (report.mt_violations or report.unique_write_violations)[0]
        super().__init__(f"not a mini-transaction history: {first}")


@dataclass(frozen=True)
class Cycle:
    edges: tuple[Edge, ...]

    def to_json(self) -> dict:
        return {"type": "cycle", "edges": [e.to_json() for e in self.edges]}


@dataclass(frozen=True)
class LwtFailure:
    key: str
    reason: str
    value: Optional[int] = None
    ops: tuple[int, ...] = ()

    def to_json(self) -> dict:
        out = {"type": "lwt", "key": self.key, "reason": self.reason}
        if self.value is not None:
            out["value"] = self.value
        out["ops"] = list(self.ops)
        return out


Counterexample = Union[Cycle, ForkInstance, AnomalyInstance, LwtFailure]


@dataclass(frozen=True)
class Verdict:
    level: Level
    ok: bool
    counterexample: Optional[Counterexample] = None

    def __post_init__(self):
        if not self.ok and self.counterexample is None:
            raise ValueError("a failing verdict needs a counterexample")

    def to_json(self) -> dict:
        out: dict = {"level": self.level.value, "ok": self.ok}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample.to_json()
        return out


def preflight(h: History) -> list[AnomalyInstance]:
    """Structural validation followed by the anomaly screen.

    Raises :class:`NotMTHistory` when ``h`` breaks the MT shape rules or
    reuses a written value; returns the screen findings otherwise.
    """
    rep = validate_mt(h)
    if rep.mt_violations or rep.unique_write_violations:
        raise NotMTHistory(rep)
    return screen(h)


def _from_cycle(level: Level, cycle) -> Verdict:
    if cycle is None:
        return Verdict(level, True)
    return Verdict(level, False, Cycle(tuple(cycle)))


def check_sser(h: History, *, screened: bool = False) -> Verdict:
    if not h.has_timestamps():
        raise HistoryError("strict serializability needs start/commit timestamps")
    if not screened:
        found = preflight(h)
        if found:
            return Verdict(Level.SSER, False, found[0])
    g = cons_dep(h, with_rt=True)
    return _from_cycle(Level.SSER, find_cycle(g))


def check_ser(h: History, *, screened: bool = False) -> Verdict:
    if not screened:
        found = preflight(h)
        if found:
            return Verdict(Level.SER, False, found[0])
    g = cons_dep(h)
    return _from_cycle(Level.SER, find_cycle(g))


def check_si(h: History, *, screened: bool = False) -> Verdict:
    if not screened:
        found = preflight(h)
        if found:
            return Verdict(Level.SI, False, found[0])
    forks = detect_fork(h)
    if forks:
        return Verdict(Level.SI, False, forks[0])
    g = cons_dep(h)
    return _from_cycle(Level.SI, find_si_cycle(g))


_CHECKS = {Level.SSER: check_sser, Level.SER: check_ser, Level.SI: check_si}


def check(h: History, level: Union[Level, str]) -> Verdict:
    level = Level(level)
    if level is Level.LIN:
        raise ValueError("linearizability is checked on LWT histories; see mtc.lwt")
    return _CHECKS[level](h)
