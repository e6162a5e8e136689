"""Parametric MT and GT workload generation.

Templates carry keys only; read values and concrete write values are bound
when the store executes them. Write values come from a per-session counter
packed with the session number, which keeps them unique across a run.
"""

from __future__ import annotations

import json
import math
import random
from bisect import bisect_left
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Iterator, Optional, Sequence

MT_SHAPES = ("R", "RR", "RW", "RRW", "RRWW")
GT_MIX = (("read-only", 0.2), ("write-only", 0.4), ("rmw", 0.4))

COUNTER_BITS = 32


@dataclass(frozen=True)
class Distribution:
    name: str = "uniform"
    theta: float = 0.99  # zipfian skew
    hot_fraction: float = 0.2
    hot_prob: float = 0.8
    lam: float = 0.1  # exponential decay per rank

    @classmethod
    def parse(cls, text: str) -> "Distribution":
        """``uniform``, ``zipfian[:theta]``, ``hotspot[:frac:prob]``, ``exponential[:lambda]``."""
        name, *args = text.split(":")
        try:
            vals = [float(a) for a in args]
        except ValueError:
            raise ValueError(f"bad distribution parameters in {text!r}") from None
        if name == "uniform" and not vals:
            return cls("uniform")
        if name == "zipfian" and len(vals) <= 1:
            return cls("zipfian", theta=vals[0] if vals else 0.99)
        if name == "hotspot" and len(vals) in (0, 2):
            return cls("hotspot", hot_fraction=vals[0], hot_prob=vals[1]) if vals else cls("hotspot")
        if name == "exponential" and len(vals) <= 1:
            return cls("exponential", lam=vals[0] if vals else 0.1)
        raise ValueError(f"unknown distribution {text!r}")

    def __str__(self) -> str:
        if self.name == "zipfian":
            return f"zipfian:{self.theta:g}"
        if self.name == "hotspot":
            return f"hotspot:{self.hot_fraction:g}:{self.hot_prob:g}"
        if self.name == "exponential":
            return f"exponential:{self.lam:g}"
        return "uniform"

    def pmf(self, n: int) -> list[float]:
        """Probability of each key rank 0..n-1."""
        if self.name == "uniform":
            weights = [1.0] * n
        elif self.name == "zipfian":
            weights = [1.0 / (i + 1) ** self.theta for i in range(n)]
        elif self.name == "hotspot":
            hot = max(1, min(n, round(self.hot_fraction * n)))
            cold = n - hot
            if cold == 0:
                weights = [1.0] * n
            else:
                weights = [self.hot_prob / hot] * hot + [(1 - self.hot_prob) / cold] * cold
        elif self.name == "exponential":
            weights = [math.exp(-self.lam * i) for i in range(n)]
        else:
            raise ValueError(f"unknown distribution {self.name!r}")
        total = sum(weights)
        return [x / total for x in weights]


class KeySampler:
    """Inverse-CDF sampling over key ranks."""

    def __init__(self, dist: Distribution, n: int, rng: random.Random):
        self.n = n
        self.rng = rng
        self.cdf = list(accumulate(dist.pmf(n)))
        self.cdf[-1] = 1.0

    def draw(self) -> int:
        return min(bisect_left(self.cdf, self.rng.random()), self.n - 1)

    def draw_distinct(self, k: int) -> list[int]:
        k = min(k, self.n)
        out: list[int] = []
        while len(out) < k:
            x = self.draw()
            if x not in out:
                out.append(x)
        return out


@dataclass(frozen=True)
class WorkloadConfig:
    sessions: int = 4
    txns: int = 100  # total, spread uniformly over sessions
    objects: int = 10
    distribution: Distribution = field(default_factory=Distribution)
    mode: str = "mt"
    gt_ops: int = 20
    seed: int = 0
    shape_weights: Optional[Sequence[float]] = None

    def __post_init__(self):
        for name in ("sessions", "txns", "objects", "gt_ops"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.mode not in ("mt", "gt"):
            raise ValueError(f"mode must be 'mt' or 'gt', got {self.mode!r}")
        d = self.distribution
        if not (0 <= d.hot_fraction <= 1 and 0 <= d.hot_prob <= 1):
            raise ValueError("hotspot parameters must lie in [0, 1]")
        if self.shape_weights is not None and len(self.shape_weights) != len(MT_SHAPES):
            raise ValueError(f"shape_weights needs {len(MT_SHAPES)} entries")


@dataclass(frozen=True)
class TxnTemplate:
    session: int
    ops: tuple[tuple[str, str], ...]  # (kind, key)

    @property
    def writes(self) -> int:
        return sum(1 for kind, _ in self.ops if kind == "w")

    def to_json(self) -> dict:
        return {"session": self.session, "ops": [{"t": t, "k": k} for t, k in self.ops]}

    @classmethod
    def from_json(cls, obj: dict) -> "TxnTemplate":
        return cls(int(obj["session"]), tuple((o["t"], o["k"]) for o in obj["ops"]))


def key_name(i: int) -> str:
    return f"k{i}"


def _mt_template(shape: str, keys: KeySampler, rng: random.Random) -> tuple:
    n_reads = shape.count("R")
    ks = [key_name(i) for i in keys.draw_distinct(n_reads)]
    ops = [("r", k) for k in ks]
    n_writes = shape.count("W")
    if n_writes == 1:
        ops.append(("w", rng.choice(ks)))
    elif n_writes == 2:
        ops.extend(("w", k) for k in ks)
    return tuple(ops)


def _gt_template(n_ops: int, keys: KeySampler, rng: random.Random) -> tuple:
    u = rng.random()
    if u < GT_MIX[0][1]:
        return tuple(("r", key_name(i)) for i in keys.draw_distinct(n_ops))
    if u < GT_MIX[0][1] + GT_MIX[1][1]:
        return tuple(("w", key_name(i)) for i in keys.draw_distinct(n_ops))
    ks = [key_name(i) for i in keys.draw_distinct(max(1, n_ops // 2))]
    return tuple(op for k in ks for op in (("r", k), ("w", k)))


def generate(cfg: WorkloadConfig) -> Iterator[TxnTemplate]:
    """Deterministic template stream; session i gets txns i, i+S, i+2S, ..."""
    rng = random.Random(cfg.seed)
    keys = KeySampler(cfg.distribution, cfg.objects, rng)
    shapes = list(MT_SHAPES)
    # single-key workloads cannot host two distinct reads
    if cfg.objects == 1:
        shapes = ["R", "RW"]
    weights = None
    if cfg.shape_weights is not None:
        weights = [w for s, w in zip(MT_SHAPES, cfg.shape_weights) if s in shapes]
    for n in range(cfg.txns):
        session = n % cfg.sessions + 1
        if cfg.mode == "mt":
            shape = rng.choices(shapes, weights)[0] if weights else rng.choice(shapes)
            ops = _mt_template(shape, keys, rng)
        else:
            ops = _gt_template(cfg.gt_ops, keys, rng)
        yield TxnTemplate(session, ops)


def bind_value(session: int, counter: int) -> int:
    """Globally unique write value for the ``counter``-th write of ``session``."""
    if not 0 < counter < 2**COUNTER_BITS:
        raise OverflowError(f"write counter {counter} out of range for session {session}")
    if not 0 < session < 2 ** (63 - COUNTER_BITS):
        raise OverflowError(f"session number {session} out of range")
    return (session << COUNTER_BITS) | counter


class ValueBinder:
    """Per-session monotone counters handing out write values."""

    def __init__(self):
        self.counters: dict[int, int] = {}

    def next(self, session: int) -> int:
        c = self.counters.get(session, 0) + 1
        self.counters[session] = c
        return bind_value(session, c)


def bind_values(t: TxnTemplate, session: int, binder: ValueBinder) -> list[tuple[str, str, Optional[int]]]:
    """Concrete ops for a template: writes get fresh values, reads stay open."""
    return [(kind, k, binder.next(session) if kind == "w" else None) for kind, k in t.ops]


def dump_workload(templates, f) -> None:
    for t in templates:
        f.write(json.dumps(t.to_json(), separators=(",", ":")) + "\n")


def load_workload(f) -> list[TxnTemplate]:
    return [TxnTemplate.from_json(json.loads(line)) for line in f if line.strip()]
