"""Invariant suite run by `check`: step-wise simulation against the source
evaluator, per-stage semantic preservation and step relations, tree-grammar
safety on oracle traces, and non-ambiguity of every stage."""

from __future__ import annotations

from dataclasses import dataclass

from . import cfa, pcf, pipeline, terms, transforms
from .errors import Fp2TrsError


@dataclass
class CheckRow:
    name: str
    passed: bool
    detail: str

    def formatted(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail}"


def generate_inputs(comp: pipeline.Compilation, sizes) -> list[list[terms.Term]]:
    """One input vector per size: lists of small naturals of that length.
    The corpus programs all take a single list argument."""
    out = []
    for n in sizes:
        values = [(3 * i + n) % 4 for i in range(n)]
        out.append([pcf.nat_list(values) for _ in comp.program.params])
    return out


def check_simulation(comp, input_vectors) -> CheckRow:
    for inputs in input_vectors:
        value, steps = pipeline.evaluate_source_pcf(comp, inputs)
        nf, length = pipeline.evaluate(comp, inputs, pipeline.DEFUNC_STAGE)
        if steps != length or value != nf:
            return CheckRow(
                "simulation",
                False,
                f"pcf ({steps} steps, {value!r}) vs atrs ({length} steps, {nf!r})",
            )
    return CheckRow(
        "simulation",
        True,
        f"pcf step count equals defunctionalized step count on {len(input_vectors)} inputs",
    )


def _stage_list(comp):
    return [(pipeline.DEFUNC_STAGE, comp.defunctionalized)] + list(comp.stages)


def check_stage_semantics(comp, input_vectors) -> CheckRow:
    stages = _stage_list(comp)
    for inputs in input_vectors:
        reference, _ = pipeline.evaluate(comp, inputs, pipeline.DEFUNC_STAGE)
        for name, atrs in stages:
            main = atrs.signature[atrs.main.name]
            trace = terms.normalize(atrs, terms.Fun(main, tuple(inputs)))
            if trace.normal_form != reference:
                return CheckRow(
                    "stage-semantics",
                    False,
                    f"{name} result {trace.normal_form!r} differs from {reference!r}",
                )
    return CheckRow(
        "stage-semantics",
        True,
        f"all {len(stages)} stages agree on {len(input_vectors)} inputs",
    )


def check_stage_steps(comp, input_vectors) -> CheckRow:
    """Inline passes satisfy len_before <= 2 * len_after + 2; dead code
    elimination, cfa, and uncurrying preserve step counts exactly."""
    stages = _stage_list(comp)
    for inputs in input_vectors:
        lengths = []
        for name, atrs in stages:
            main = atrs.signature[atrs.main.name]
            trace = terms.normalize(atrs, terms.Fun(main, tuple(inputs)))
            lengths.append((name, trace.length))
        for (prev_name, before), (name, after) in zip(lengths, lengths[1:]):
            short = name.split("-", 1)[-1]
            if short.startswith("inline("):
                if before > 2 * after + 2:
                    return CheckRow(
                        "stage-steps",
                        False,
                        f"{name}: {before} > 2*{after}+2 after {prev_name}",
                    )
            else:
                if before != after:
                    return CheckRow(
                        "stage-steps",
                        False,
                        f"{name}: expected exact step preservation, {before} -> {after}",
                    )
    return CheckRow(
        "stage-steps",
        True,
        f"step relations hold across {len(stages)} stages on {len(input_vectors)} inputs",
    )


def cfa_input_stage(comp) -> terms.Atrs:
    """The system the control flow analysis ran on (the state before the
    first cfa application), or the defunctionalized system if cfa never ran."""
    previous = comp.defunctionalized
    for name, atrs in comp.stages:
        if name.split("-", 1)[-1] == "cfa":
            return previous
        previous = atrs
    return comp.defunctionalized


def check_grammar_safety(comp, input_vectors) -> CheckRow:
    analyzed = cfa_input_stage(comp)
    g = cfa.build_grammar(analyzed)
    dead = cfa.dead_rules(g, analyzed)
    main = analyzed.signature[analyzed.main.name]
    memo: dict = {}
    checked = 0
    for inputs in input_vectors:
        trace = terms.normalize(analyzed, terms.Fun(main, tuple(inputs)))
        for step in trace.steps:
            if step.rule_index in dead:
                return CheckRow(
                    "grammar-safety",
                    False,
                    f"rule {step.rule_index} fired but was classified dead",
                )
            rule = analyzed.rules[step.rule_index]
            for x in terms.term_vars(rule.lhs):
                value = step.subst[x]
                if not cfa.generates(g, cfa.var_nt(x, rule.index), value, memo):
                    return CheckRow(
                        "grammar-safety",
                        False,
                        f"{x}_{rule.index} does not generate {value!r}",
                    )
                checked += 1
    return CheckRow(
        "grammar-safety", True, f"{checked} substitution bindings all generated"
    )


def check_non_ambiguity(comp) -> CheckRow:
    for name, atrs in _stage_list(comp):
        ok, overlaps = terms.check_non_ambiguous(atrs)
        if not ok:
            return CheckRow(
                "non-ambiguity", False, f"{name} has overlapping rules {overlaps}"
            )
    return CheckRow("non-ambiguity", True, "every stage is non-ambiguous")


def run_all_checks(source: str, sizes=range(0, 9)) -> list[CheckRow]:
    comp = pipeline.compile_source(source)
    vectors = generate_inputs(comp, sizes)
    rows = [
        check_simulation(comp, vectors),
        check_stage_semantics(comp, vectors),
        check_stage_steps(comp, vectors),
        check_grammar_safety(comp, vectors),
        check_non_ambiguity(comp),
    ]
    return rows
