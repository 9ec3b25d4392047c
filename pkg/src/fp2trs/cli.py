"""Command line interface: a thin client over the service layer's handlers.
By default requests are executed in process; with --server they are sent to a
running fp2trs service over HTTP.

Exit codes: 0 success, 1 user error, 2 pipeline inapplicability,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys

from . import service, trs_io
from .errors import (
    AmbiguityError,
    FormatConstraintError,
    Fp2TrsError,
    FuelExhaustedError,
    HeadVariablePresentError,
    ParseError,
    TypeInferenceError,
    UncoveredHeadVariableError,
)

EXIT_OK = 0
EXIT_USER = 1
EXIT_PIPELINE = 2
EXIT_INTERNAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fp2trs",
        description="Compile higher-order functional programs (.fp) into "
        "first-order term rewrite systems with reflected runtime complexity.",
    )
    parser.add_argument(
        "--server",
        metavar="URL",
        help="send the request to a running fp2trs service instead of "
        "executing in process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_compile = sub.add_parser("compile", help="compile a .fp file to a TRS")
    p_compile.add_argument("file")
    p_compile.add_argument("-o", "--output", help="output file (default: stdout)")
    p_compile.add_argument("--strategy", default="default",
                           help="'default', 'none', or custom:<expr>")
    p_compile.add_argument("--format", default=trs_io.CLASSIC_TRS,
                           choices=list(trs_io.FORMATS))
    p_compile.add_argument("--dump", action="append", default=[], metavar="STAGE",
                           help="print an intermediate stage (repeatable); "
                           "use --list-stages to see names")
    p_compile.add_argument("--list-stages", action="store_true")
    p_compile.add_argument("--pass", dest="single_pass", metavar="NAME",
                           help="apply one named transformation to the "
                           "defunctionalized system and print it")

    p_eval = sub.add_parser("eval", help="run the step-counting oracle")
    p_eval.add_argument("file")
    p_eval.add_argument("--input", action="append", default=[], metavar="TERM",
                        help="data term per program parameter, e.g. '1::2::[]'")
    p_eval.add_argument("--count-steps", action="store_true")
    p_eval.add_argument("--stage", default="defunctionalized")
    p_eval.add_argument("--oracle", default="atrs", choices=["atrs", "pcf"])

    p_check = sub.add_parser("check", help="run the invariant suite")
    p_check.add_argument("file")
    p_check.add_argument("--inputs", default="lists:0..8", metavar="SPEC",
                         help="input generator, e.g. lists:0..8")

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    return parser


def _read_source(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def _parse_sizes(spec: str) -> range:
    if ":" in spec:
        kind, _, spec = spec.partition(":")
        if kind != "lists":
            raise ParseError(f"unsupported input spec kind {kind!r}")
    lo, sep, hi = spec.partition("..")
    if not sep:
        raise ParseError(f"bad input spec {spec!r}, expected lists:LO..HI")
    return range(int(lo), int(hi) + 1)


def _remote(server: str, endpoint: str, payload: dict) -> dict:
    import httpx

    response = httpx.post(f"{server.rstrip('/')}{endpoint}", json=payload, timeout=600.0)
    if response.status_code == 400:
        raise ParseError(response.json().get("detail", response.text))
    if response.status_code == 422:
        raise HeadVariablePresentError(response.json().get("detail", response.text))
    response.raise_for_status()
    return response.json()


def cmd_compile(args) -> int:
    source = _read_source(args.file)
    if args.single_pass:
        from . import pipeline

        comp = pipeline.compile_source(source, "none")
        result = pipeline.run_single_pass(comp.defunctionalized, args.single_pass)
        if result is None:
            print(f"pass {args.single_pass} is inapplicable", file=sys.stderr)
            return EXIT_PIPELINE
        sys.stdout.write(trs_io.emit(result, trs_io.INTERNAL_DEBUG))
        return EXIT_OK

    req = service.CompileRequest(
        source=source,
        strategy=args.strategy,
        format=args.format,
        dump_stages=list(args.dump),
    )
    if args.server:
        data = _remote(args.server, "/compile", req.model_dump())
        resp = service.CompileResponse(**data)
    else:
        resp = service.handle_compile(req)

    if args.list_stages:
        for name in resp.stage_names:
            print(name)
        return EXIT_OK
    for key, text in resp.dumps.items():
        sys.stdout.write(f"== {key} ==\n{text}\n")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(resp.output)
    else:
        sys.stdout.write(resp.output)
    return EXIT_OK


def cmd_eval(args) -> int:
    source = _read_source(args.file)
    req = service.EvalRequest(
        source=source,
        inputs=list(args.input),
        stage=args.stage,
        count_steps=True,
        oracle=args.oracle,
    )
    if args.server:
        data = _remote(args.server, "/eval", req.model_dump())
        resp = service.EvalResponse(**data)
    else:
        resp = service.handle_eval(req)
    print(resp.result)
    if args.count_steps:
        print(f"steps: {resp.steps}")
    return EXIT_OK


def cmd_check(args) -> int:
    source = _read_source(args.file)
    sizes = _parse_sizes(args.inputs)
    req = service.CheckRequest(source=source, max_size=sizes.stop - 1)
    if args.server:
        data = _remote(args.server, "/check", req.model_dump())
        resp = service.CheckResponse(**data)
    else:
        resp = service.handle_check(req)
    width = max(len(r.name) for r in resp.rows)
    for row in resp.rows:
        status = "PASS" if row.passed else "FAIL"
        print(f"{row.name.ljust(width)}  {status}  {row.detail}")
    return EXIT_OK if resp.ok else EXIT_INTERNAL


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run(service.app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "compile": cmd_compile,
        "eval": cmd_eval,
        "check": cmd_check,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except (ParseError, TypeInferenceError, FormatConstraintError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except (
        HeadVariablePresentError,
        UncoveredHeadVariableError,
        AmbiguityError,
        FuelExhaustedError,
    ) as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except Fp2TrsError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
