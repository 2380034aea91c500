"""Operator command line: solve, reschedule, replay, serve.

Exit codes: 0 success, 1 usage or interaction problems, 2 invalid input,
3 infeasible.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .formats import ParseError, parse_instance
from .intent import parse_answer
from .logic import TriState
from .model import Instance, InvalidInstanceError, Schedule
from .pipeline import RescheduleResult, dispatch
from .service import parse_request_document, schedule_to_document, BadRequestError
from .solver import solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3

_STATUS_EXIT = {
    "ok": EXIT_OK,
    "invalid-request": EXIT_INVALID,
    "infeasible": EXIT_INFEASIBLE,
    "interaction-timeout": EXIT_USAGE,
    "solver-timeout": EXIT_USAGE,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 by default; usage errors are 1 here
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_instance(path: str, fmt: str) -> Instance:
    if fmt == "auto":
        fmt = "psplib-sm" if path.endswith(".sm") else "native"
    text = Path(path).read_text()
    return parse_instance(text, fmt)


def _print_schedule(inst: Instance, sched: Schedule) -> None:
    print("task  start  finish")
    for j in inst.real_tasks:
        print(f"{j:>4}  {sched.starts[j]:>5}  {sched.starts[j] + inst.durations[j]:>6}")
    print(f"makespan: {sched.makespan}")


def _cmd_solve(args) -> int:
    inst = _load_instance(args.file, args.format)
    result = solve(inst)
    if result.status != "optimal":
        print(f"solve ended with status {result.status}", file=sys.stderr)
        return EXIT_INFEASIBLE if result.status == "infeasible" else EXIT_USAGE
    if args.json:
        print(json.dumps(schedule_to_document(result.schedule), indent=2))
    else:
        _print_schedule(inst, result.schedule)
    return EXIT_OK


def _parse_resource_args(pairs: list[str]) -> dict[str, int]:
    resources: dict[str, int] = {}
    for pair in pairs:
        if "=" not in pair:
            raise BadRequestError(f"--resource takes R=AMOUNT, got {pair!r}")
        key, _, value = pair.partition("=")
        resources[key.strip()] = int(value)
    return resources


def _interactive_responder(symbol: int, question: str, wait: float) -> str:
    print(question)
    answer = input("?[1, 0]:")
    if parse_answer(answer) is None:
        print(f"Invalid answer: {answer}")
        print()
    return answer


def _report(result: RescheduleResult, inst: Instance, as_json: bool, show_transcript: bool) -> int:
    if as_json:
        print(json.dumps(result.to_dict(), indent=2))
        return _STATUS_EXIT[result.status]
    if show_transcript and result.explanation.transcript:
        print(result.explanation.transcript, end="")
        print()
    print(f"status: {result.status}")
    print(result.explanation.render_text(), end="")
    if result.schedule is not None:
        _print_schedule(inst, result.schedule)
    return _STATUS_EXIT[result.status]


def _cmd_reschedule(args) -> int:
    inst = _load_instance(args.file, args.format)
    baseline = solve(inst)
    if baseline.status != "optimal":
        print(f"baseline solve ended with status {baseline.status}", file=sys.stderr)
        return EXIT_INFEASIBLE if baseline.status == "infeasible" else EXIT_USAGE

    doc = {
        "task": args.task,
        "desired_start": args.time,
        "desired_resources": _parse_resource_args(args.resource),
        "delta": args.scope,
        "rho": args.precedence,
        "eta": args.scope,
        "theta": args.precedence,
    }
    req = parse_request_document(doc)

    if args.interactive:
        responder = _interactive_responder
    else:
        def responder(symbol, question, wait):
            raise RuntimeError("no interactive channel")

    result = dispatch(inst, baseline.schedule, req, responder)
    if result.status == "interaction-timeout" and not args.interactive:
        print(
            "the request is ambiguous; pass --scope/--precedence or rerun with --interactive",
            file=sys.stderr,
        )
        return EXIT_USAGE
    return _report(result, inst, args.json, show_transcript=not args.interactive)


def _cmd_replay(args) -> int:
    doc = json.loads(Path(args.file).read_text())
    if isinstance(doc.get("instance"), str):
        inst = _load_instance(doc["instance"], doc.get("format", "auto"))
    else:
        inst = parse_instance(json.dumps(doc["instance"]), "native")
    baseline = solve(inst)
    if baseline.status != "optimal":
        print(f"baseline solve ended with status {baseline.status}", file=sys.stderr)
        return EXIT_INFEASIBLE if baseline.status == "infeasible" else EXIT_USAGE
    req = parse_request_document(doc["request"])
    answers = iter(doc.get("answers", []))

    def responder(symbol, question, wait):
        return next(answers)

    result = dispatch(inst, baseline.schedule, req, responder)
    return _report(result, inst, args.json, show_transcript=True)


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    data_dir = args.data_dir or os.environ.get("VERTISCHED_DATA_DIR", "./vertisched-data")
    app = create_app(data_dir, expiry=args.expiry, time_limit=args.time_limit)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vertisched", description="Intent-driven vertiport rescheduling")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve an instance file and print the baseline")
    p_solve.add_argument("file")
    p_solve.add_argument("--format", choices=("auto", "native", "psplib-sm"), default="auto")
    p_solve.add_argument("--json", action="store_true")
    p_solve.set_defaults(func=_cmd_solve)

    p_re = sub.add_parser("reschedule", help="reschedule one task of an instance file")
    p_re.add_argument("file")
    p_re.add_argument("--format", choices=("auto", "native", "psplib-sm"), default="auto")
    p_re.add_argument("--task", type=int, required=True)
    p_re.add_argument("--time", type=int, default=None, help="desired start time")
    p_re.add_argument(
        "--resource", action="append", default=[], metavar="R=AMOUNT", help="desired resource amount"
    )
    p_re.add_argument("--scope", type=int, choices=(0, 1), default=None)
    p_re.add_argument("--precedence", type=int, choices=(0, 1), default=None)
    p_re.add_argument("--interactive", action="store_true")
    p_re.add_argument("--json", action="store_true")
    p_re.set_defaults(func=_cmd_reschedule)

    p_replay = sub.add_parser("replay", help="replay a recorded dialogue script")
    p_replay.add_argument("file")
    p_replay.add_argument("--json", action="store_true")
    p_replay.set_defaults(func=_cmd_replay)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=int(os.environ.get("VERTISCHED_PORT", "8000")))
    p_serve.add_argument("--data-dir", default=None)
    p_serve.add_argument("--expiry", type=float, default=float(os.environ.get("VERTISCHED_EXPIRY", "60")))
    p_serve.add_argument("--time-limit", type=float, default=300.0)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"cannot read {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, InvalidInstanceError, BadRequestError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except StopIteration:
        print("replay script ran out of answers", file=sys.stderr)
        return EXIT_INVALID
    except KeyboardInterrupt:
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
