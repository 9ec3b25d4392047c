"""Glue binding the whole pipeline: source text in, staged rewrite systems
out. Shared by the CLI, the HTTP service, and the invariant checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import defunc, pcf, strategy, terms, transforms
from .errors import Fp2TrsError

DEFUNC_STAGE = "defunctionalized"
FINAL_STAGE = "final"


@dataclass
class Compilation:
    source: str
    program: pcf.Program
    typed: pcf.TypedProgram
    defunctionalized: terms.Atrs
    stages: list[tuple[str, terms.Atrs]]
    final: terms.Atrs

    def stage_names(self) -> list[str]:
        return [DEFUNC_STAGE] + [name for name, _ in self.stages] + [FINAL_STAGE]

    def stage(self, key: str) -> terms.Atrs:
        if key in (DEFUNC_STAGE, "defunc"):
            return self.defunctionalized
        if key == FINAL_STAGE:
            return self.final
        for name, atrs in self.stages:
            if name == key or name.split("-", 1)[-1] == key:
                return atrs
        matches = [atrs for name, atrs in self.stages if key in name]
        if matches:
            return matches[-1]
        raise Fp2TrsError(
            f"unknown stage {key!r}; available: {', '.join(self.stage_names())}"
        )


def compile_source(source: str, strategy_spec: str = "default") -> Compilation:
    program = pcf.parse_program(source)
    typed = pcf.infer_types(program)
    atrs = defunc.defunctionalize(typed)

    if strategy_spec in ("none", "defunc-only"):
        return Compilation(source, program, typed, atrs, [], atrs)
    if strategy_spec == "default":
        strat = strategy.default_strategy()
    elif strategy_spec.startswith("custom:"):
        strat = strategy.parse_strategy(strategy_spec[len("custom:"):])
    else:
        strat = strategy.parse_strategy(strategy_spec)

    recorder = strategy.StageRecorder()
    final, _ = strat.run(atrs, recorder)
    return Compilation(source, program, typed, atrs, recorder.stages, final)


def run_single_pass(atrs: terms.Atrs, pass_name: str) -> Optional[terms.Atrs]:
    """One named transformation, for --pass debugging; None if inapplicable."""
    if pass_name not in strategy.PRIMS:
        raise Fp2TrsError(
            f"unknown pass {pass_name!r}; known: {', '.join(sorted(strategy.PRIMS))}"
        )
    result, applied = strategy.PRIMS[pass_name]().run(atrs, None)
    return result if applied else None


def evaluate(
    comp: Compilation,
    inputs: list[terms.Term],
    stage: str = DEFUNC_STAGE,
    fuel: int = terms.DEFAULT_FUEL,
) -> tuple[terms.Term, int]:
    """Normalize main(inputs) at a pipeline stage; returns (result, steps).
    Data terms are unaffected by uncurrying, so inputs transfer unchanged."""
    atrs = comp.stage(stage)
    main = atrs.signature[atrs.main.name]
    start = terms.Fun(main, tuple(inputs))
    trace = terms.normalize(atrs, start, fuel)
    return trace.normal_form, trace.length


def evaluate_source_pcf(
    comp: Compilation, inputs: list[terms.Term], fuel: int = terms.DEFAULT_FUEL
) -> tuple[terms.Term, int]:
    return pcf.pcf_eval(comp.program, inputs, fuel)
