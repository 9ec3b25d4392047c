"""HTTP service wrapping the pipeline: compile source programs to rewrite
systems, evaluate the step-counting oracle at any stage, and run the
invariant check suite. The pipeline is pure and every value immutable, so
concurrent requests are safe."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import checks, pcf, pipeline, terms, trs_io
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


class CompileRequest(BaseModel):
    source: str
    strategy: str = "default"
    format: str = trs_io.CLASSIC_TRS
    dump_stages: list[str] = Field(default_factory=list)


class CompileResponse(BaseModel):
    output: str
    rule_count: int
    stage_names: list[str]
    dumps: dict[str, str] = Field(default_factory=dict)


class EvalRequest(BaseModel):
    source: str
    inputs: list[str]
    stage: str = pipeline.DEFUNC_STAGE
    count_steps: bool = True
    oracle: str = "atrs"  # "atrs" | "pcf"


class EvalResponse(BaseModel):
    result: str
    steps: int | None = None


class CheckRequest(BaseModel):
    source: str
    max_size: int = 8


class CheckRowModel(BaseModel):
    name: str
    passed: bool
    detail: str


class CheckResponse(BaseModel):
    ok: bool
    rows: list[CheckRowModel]


app = FastAPI(
    title="fp2trs",
    description=(
        "Compiles higher-order functional programs into first-order term "
        "rewrite systems whose runtime complexity reflects the original "
        "program's."
    ),
)

_USER_ERRORS = (ParseError, TypeInferenceError, FormatConstraintError, ValueError)
_PIPELINE_ERRORS = (
    HeadVariablePresentError,
    UncoveredHeadVariableError,
    AmbiguityError,
    FuelExhaustedError,
)


def _guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except _USER_ERRORS as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except _PIPELINE_ERRORS as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except Fp2TrsError as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc


def handle_compile(req: CompileRequest) -> CompileResponse:
    comp = pipeline.compile_source(req.source, req.strategy)
    output = trs_io.emit(comp.final, req.format)
    dumps = {}
    for key in req.dump_stages:
        if key == "grammar":
            from . import cfa, checks

            analyzed = checks.cfa_input_stage(comp)
            dumps[key] = cfa.format_grammar(cfa.build_grammar(analyzed))
        else:
            dumps[key] = trs_io.emit(comp.stage(key), trs_io.INTERNAL_DEBUG)
    return CompileResponse(
        output=output,
        rule_count=len(comp.final.rules),
        stage_names=comp.stage_names(),
        dumps=dumps,
    )


def handle_eval(req: EvalRequest) -> EvalResponse:
    comp = pipeline.compile_source(
        req.source, "none" if req.stage in ("defunctionalized", "defunc") else "default"
    )
    inputs = [pcf.parse_data_term(t, comp.program.con_table) for t in req.inputs]
    if req.oracle == "pcf":
        value, steps = pipeline.evaluate_source_pcf(comp, inputs)
    else:
        value, steps = pipeline.evaluate(comp, inputs, req.stage)
    return EvalResponse(
        result=terms.format_term(value),
        steps=steps if req.count_steps else None,
    )


def handle_check(req: CheckRequest) -> CheckResponse:
    rows = checks.run_all_checks(req.source, range(0, req.max_size + 1))
    return CheckResponse(
        ok=all(r.passed for r in rows),
        rows=[CheckRowModel(name=r.name, passed=r.passed, detail=r.detail) for r in rows],
    )


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/compile", response_model=CompileResponse)
def compile_endpoint(req: CompileRequest) -> CompileResponse:
    return _guard(handle_compile, req)


@app.post("/eval", response_model=EvalResponse)
def eval_endpoint(req: EvalRequest) -> EvalResponse:
    return _guard(handle_eval, req)


@app.post("/check", response_model=CheckResponse)
def check_endpoint(req: CheckRequest) -> CheckResponse:
    return _guard(handle_check, req)
