"""Command-line entry point: ``mtc <subcommand> ...``.

Exit codes: 0 when everything checked is fine, 1 when a violation or
anomaly was found, 2 for usage errors, unreadable input, or an oracle that
refused an instance as too large.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

from . import report as report_mod
from .checkers import Cycle, Level, LwtFailure, NotMTHistory, Verdict, check, preflight
from .depgraph import ForkInstance, dot_quote, to_dot
from .fixtures import ANOMALY_FIXTURES, LWT_FIXTURES, emit_fixtures
from .history import HistoryError, load_history, serialize_history
from .lwt import parse_lwt, split_by_object, verify_all
from .oracle import OracleBudget, OracleRefused, oracle_lin, oracle_ser, oracle_si
from .screen import AnomalyInstance
from .store import Fault, Isolation, StoreConfig, abort_stats, execute
from .workload import Distribution, WorkloadConfig, dump_workload, generate, load_workload

OK, VIOLATION, INPUT_ERROR = 0, 1, 2


def _seed(args) -> int:
    env = os.environ.get("MTC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise HistoryError(f"MTC_SEED must be an integer, got {env!r}") from None
    return args.seed


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            yield f


def _json(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _workload_config(args) -> WorkloadConfig:
    return WorkloadConfig(
        sessions=args.sessions,
        txns=args.txns,
        objects=args.objects,
        distribution=Distribution.parse(args.dist),
        mode=args.mode,
        gt_ops=args.gt_ops,
        seed=_seed(args),
    )


# ---------------------------------------------------------------------------
# generate / run


def cmd_generate(args) -> int:
    templates = generate(_workload_config(args))
    with _output(args.output) as f:
        dump_workload(templates, f)
    return OK


def cmd_run(args) -> int:
    if args.workload:
        with open(args.workload, encoding="utf-8") as f:
            templates = load_workload(f)
    else:
        templates = list(generate(_workload_config(args)))
    cfg = StoreConfig(
        isolation=Isolation(args.isolation),
        fault=Fault(args.fault) if args.fault else None,
        scheduler_seed=_seed(args),
        retries=args.retries,
        lag=args.lag,
    )
    h = execute(templates, cfg)
    with _output(args.output) as f:
        f.write(serialize_history(h))
    if args.output not in (None, "-"):
        print(_json(abort_stats(h)))
    return OK


# ---------------------------------------------------------------------------
# screen


def cmd_screen(args) -> int:
    code = OK
    for path in args.files:
        found = preflight(load_history(path))
        for a in found:
            rec = a.to_json()
            if len(args.files) > 1:
                rec = {"file": path, **rec}
            print(_json(rec))
        if found:
            code = VIOLATION
    return code


# ---------------------------------------------------------------------------
# check


def verdict_dot(v: Verdict, name: str = "verdict") -> str:
    """Render a verdict's counterexample as a DOT digraph."""
    cx = v.counterexample
    if isinstance(cx, Cycle):
        return to_dot(cx.edges, name)
    lines = [f"digraph {name} {{"]
    if isinstance(cx, ForkInstance):
        for r in cx.readers:
            lines.append(f"  T{cx.writer} -> T{r} [label={dot_quote(f'WR({cx.key})')}];")
    elif isinstance(cx, AnomalyInstance):
        for t in cx.txns:
            lines.append(f"  T{t} [label={dot_quote(f'T{t}: {cx.kind.value}')}];")
    elif isinstance(cx, LwtFailure):
        for i in cx.ops:
            lines.append(f"  op{i} [label={dot_quote(f'op{i}: {cx.reason}')}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def verdict_text(v: Verdict) -> str:
    if v.ok:
        return f"{v.level.value}: ok"
    cx = v.counterexample
    if isinstance(cx, Cycle):
        detail = "cycle " + " ".join(f"T{e.src}-{e.label}->T{e.dst}" for e in cx.edges)
    elif isinstance(cx, ForkInstance):
        readers = ",".join(f"T{r}" for r in cx.readers)
        detail = f"fork writer=T{cx.writer} readers={readers} key={cx.key}"
    elif isinstance(cx, AnomalyInstance):
        detail = f"{cx.kind.value} txns={','.join(f'T{t}' for t in cx.txns)} key={cx.key}"
    else:
        detail = f"lwt key={cx.key} {cx.reason}"
    return f"{v.level.value}: VIOLATION {detail}"


def _verdict_for(path: str, level: Level) -> Verdict:
    if level is Level.LIN:
        with open(path, "rb") as f:
            return verify_all(parse_lwt(f))
    return check(load_history(path), level)


def _check_one(path: str, level: str, fmt: str, index: int, tag: bool):
    """Worker body; returns (exit code, stdout text, stderr text)."""
    try:
        v = _verdict_for(path, Level(level))
    except (HistoryError, OSError) as e:
        return INPUT_ERROR, "", f"{path}: {e}\n"
    if fmt == "dot":
        out = verdict_dot(v, f"G{index}")
    elif fmt == "text":
        out = (f"{path}: " if tag else "") + verdict_text(v) + "\n"
    else:
        rec = v.to_json()
        if tag:
            rec = {"file": path, **rec}
        out = _json(rec) + "\n"
    return (OK if v.ok else VIOLATION), out, ""


def cmd_check(args) -> int:
    tag = len(args.files) > 1
    jobs = [(p, args.level, args.format, i, tag) for i, p in enumerate(args.files, start=1)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_check_one, *zip(*jobs)))
    else:
        results = [_check_one(*j) for j in jobs]
    code = OK
    for rc, out, err in results:
        sys.stdout.write(out)
        sys.stderr.write(err)
        code = max(code, rc)
    return code


# ---------------------------------------------------------------------------
# oracle


def _oracle_verdict(path: str, level: Level, budget: OracleBudget) -> bool:
    if level is Level.LIN:
        with open(path, "rb") as f:
            objects = split_by_object(parse_lwt(f))
        return all(oracle_lin(hx, budget) for hx in objects.values())
    h = load_history(path)
    # anomalies leave no dependency graph to search, so they are violations
    if preflight(h):
        return False
    if level is Level.SI:
        return oracle_si(h, budget)
    return oracle_ser(h, with_rt=level is Level.SSER, budget=budget)


def cmd_oracle(args) -> int:
    level = Level(args.level)
    budget = OracleBudget(max_txns=args.max_txns, timeout_ms=args.timeout_ms)
    tag = len(args.files) > 1
    code = OK
    for path in args.files:
        try:
            ok = _oracle_verdict(path, level, budget)
        except OracleRefused as e:
            print(f"{path}: oracle refused: {e}", file=sys.stderr)
            code = INPUT_ERROR
            continue
        if args.format == "text":
            print((f"{path}: " if tag else "") + f"{level.value}: {'ok' if ok else 'VIOLATION'}")
        else:
            rec = {"level": level.value, "ok": ok}
            print(_json({"file": path, **rec} if tag else rec))
        if not ok:
            code = max(code, VIOLATION)
    return code


# ---------------------------------------------------------------------------
# fixtures / report


def cmd_fixtures(args) -> int:
    if args.emit_all:
        for path in emit_fixtures(args.emit_all):
            print(path)
    else:
        for f in ANOMALY_FIXTURES:
            print(f"{f.name}\t{f.anomaly}")
        for name in LWT_FIXTURES:
            print(f"{name}\tLWT")
    return OK


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_report(args) -> int:
    seed = _seed(args)
    if args.experiment == "abort-rates":
        report_mod.abort_rates(
            args.out,
            sessions=args.sessions,
            objects=args.objects,
            distribution=Distribution.parse(args.dist),
            txns=args.txns,
            gt_ops=args.gt_ops,
            seeds=args.seeds,
            seed=seed,
        )
        names = ("abort_rates.csv", "abort_rates.png")
    else:
        report_mod.scaling(
            args.out, sizes=args.sizes, sser_sizes=args.sser_sizes, seed=seed, repeats=args.repeats
        )
        names = ("scaling.csv", "scaling.png")
    for n in names:
        print(os.path.join(args.out, n))
    return OK


# ---------------------------------------------------------------------------
# parser


def _add_workload_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sessions", type=int, default=4)
    p.add_argument("--txns", type=int, default=100, help="total transactions over all sessions")
    p.add_argument("--objects", type=int, default=10)
    p.add_argument("--dist", default="uniform", help="uniform | zipfian[:theta] | hotspot[:frac:prob] | exponential[:lambda]")
    p.add_argument("--mode", choices=("mt", "gt"), default="mt")
    p.add_argument("--gt-ops", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtc", description="Isolation checking for mini-transaction histories.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a workload of transaction templates")
    _add_workload_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="generate (or load) a workload and execute it on the simulated store")
    _add_workload_flags(p)
    p.add_argument("--workload", help="template file from `generate` instead of generating")
    p.add_argument("--isolation", choices=[i.value for i in Isolation], default="si")
    p.add_argument("--fault", choices=[f.value for f in Fault])
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--lag", type=int, default=32, help="snapshot lag for stale-read and long-fork")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("screen", help="report intra-transactional and read anomalies")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("check", help="check histories against an isolation level")
    p.add_argument("--level", choices=[lv.value for lv in Level], required=True)
    p.add_argument("--format", choices=("json", "text", "dot"), default="json")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("oracle", help="brute-force reference check for small histories")
    p.add_argument("--level", choices=[lv.value for lv in Level], required=True)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--max-txns", type=int, default=OracleBudget.max_txns)
    p.add_argument("--timeout-ms", type=int, default=OracleBudget.timeout_ms)
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("fixtures", help="list or write the canonical anomaly histories")
    p.add_argument("--emit-all", metavar="DIR")
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("report", help="run an experiment and write CSV plus a figure")
    rsub = p.add_subparsers(dest="experiment", required=True)
    r = rsub.add_parser("abort-rates", help="MT vs GT abort rates in the simulator")
    r.add_argument("--out", required=True)
    r.add_argument("--sessions", type=_int_list, default=[2, 4, 8, 16])
    r.add_argument("--objects", type=int, default=100)
    r.add_argument("--dist", default="zipfian")
    r.add_argument("--txns", type=int, default=400)
    r.add_argument("--gt-ops", type=int, default=20)
    r.add_argument("--seeds", type=int, default=20)
    r.add_argument("--seed", type=int, default=0)
    r = rsub.add_parser("scaling", help="checker time vs history size (timings are not reproducible)")
    r.add_argument("--out", required=True)
    r.add_argument("--sizes", type=_int_list, default=[12500, 25000, 50000, 100000])
    r.add_argument("--sser-sizes", type=_int_list, default=[1000, 2000, 4000])
    r.add_argument("--repeats", type=int, default=3)
    r.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except NotMTHistory as e:
        print(f"error: {e}", file=sys.stderr)
        return INPUT_ERROR
    except (HistoryError, ValueError, OSError, OverflowError) as e:
        print(f"error: {e}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
