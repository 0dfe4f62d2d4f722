"""Decidable correctness predicates over (input state, term, outcome).

A predicate is a tiny total expression language: integer comparisons,
Boolean connectives, arithmetic over the input state's variables, the
evaluated outcome (`out` for a value result, `(out x)` for one variable
of a state result), and the candidate's syntactic size `(term-size)`.
Every predicate terminates on every input by construction, so the
verification step of a synthesis query never adds undecidability of its
own.

Outcome atoms are partial: when the run faulted, returned the dummy
value, or produced the wrong kind of result for the atom (asking `out`
of a state, or `(out x)` of a number), the atom is undefined and any
comparison touching it is false.  Fuel exhaustion never reaches a
predicate — engines decide how to treat it before consulting the spec.
"""

from __future__ import annotations

from dataclasses import dataclass

from .semantics import BoolValue, EvalOutcome, StateOut, Value
from .terms import (
    ParseError,
    State,
    Term,
    VarUniverse,
    _read_sexps,
    is_variable_name,
    term_size,
)


class SpecError(ValueError):
    pass


_COMPARISONS = {"=", "<", "<=", ">", ">="}
_CONNECTIVES = {"and", "or", "not"}
_ARITHMETIC = {"+", "-", "*"}


@dataclass(frozen=True)
class Predicate:
    """Parsed specification formula; evaluate with holds()."""

    ast: object
    text: str

    def holds(self, sigma: State, f: Term, outcome: EvalOutcome) -> bool:
        return bool(_eval_formula(self.ast, sigma, f, outcome))

    def variables(self) -> frozenset[str]:
        names: set[str] = set()
        _collect_vars(self.ast, names)
        return frozenset(names)

    def __str__(self) -> str:
        return self.text


def parse_predicate(text: str) -> Predicate:
    try:
        sexps = _read_sexps(text)
    except ParseError as e:
        raise SpecError(f"bad spec syntax: {e}") from e
    if len(sexps) != 1:
        raise SpecError(f"expected one spec formula, found {len(sexps)}")
    ast = _check_formula(sexps[0])
    return Predicate(ast, text.strip())


def predicate_from_sexp(sexp: object) -> Predicate:
    ast = _check_formula(sexp)
    return Predicate(ast, _render(sexp))


# --------------------------------------------------------------------------
# Static checks (arity, known heads) so holds() can assume shape


def _check_formula(sexp: object) -> object:
    if isinstance(sexp, str):
        if sexp in ("true", "false"):
            return sexp
        raise SpecError(f"expected a formula, got atom {sexp!r}")
    items = list(sexp)
    if not items or not isinstance(items[0], str):
        raise SpecError(f"expected a formula, got {_render(sexp)}")
    head = items[0]
    if head in _COMPARISONS:
        if len(items) != 3:
            raise SpecError(f"({head} ...) takes exactly two arguments")
        return [head, _check_term(items[1]), _check_term(items[2])]
    if head == "not":
        if len(items) != 2:
            raise SpecError("(not ...) takes exactly one argument")
        return [head, _check_formula(items[1])]
    if head in ("and", "or"):
        if len(items) < 2:
            raise SpecError(f"({head} ...) needs at least one argument")
        return [head] + [_check_formula(x) for x in items[1:]]
    raise SpecError(f"unknown formula head {head!r}")


def _check_term(sexp: object) -> object:
    if isinstance(sexp, str):
        if sexp in ("out", "true", "false") or is_variable_name(sexp):
            return sexp
        try:
            return int(sexp)
        except ValueError:
            raise SpecError(f"unknown spec atom {sexp!r}") from None
    items = list(sexp)
    if not items or not isinstance(items[0], str):
        raise SpecError(f"expected a value expression, got {_render(sexp)}")
    head = items[0]
    if head == "out":
        if len(items) != 2 or not isinstance(items[1], str) or not is_variable_name(
            items[1]
        ):
            raise SpecError("(out ...) takes exactly one variable name")
        return ["out", items[1]]
    if head == "term-size":
        if len(items) != 1:
            raise SpecError("(term-size) takes no arguments")
        return ["term-size"]
    if head in _ARITHMETIC:
        if head == "-" and len(items) != 3:
            raise SpecError("(- ...) takes exactly two arguments")
        if len(items) < 3:
            raise SpecError(f"({head} ...) needs at least two arguments")
        return [head] + [_check_term(x) for x in items[1:]]
    raise SpecError(f"unknown value expression head {head!r}")


def _collect_vars(ast: object, names: set[str]) -> None:
    if isinstance(ast, str):
        if ast not in ("out", "true", "false") and is_variable_name(ast):
            names.add(ast)
        return
    if isinstance(ast, int):
        return
    items = list(ast)
    if items and items[0] == "out":
        names.add(items[1])
        return
    for x in items[1:]:
        _collect_vars(x, names)


def _render(sexp: object) -> str:
    if isinstance(sexp, str):
        return sexp
    return "(" + " ".join(_render(x) for x in sexp) + ")"


# --------------------------------------------------------------------------
# Evaluation


def _eval_formula(ast: object, sigma: State, f: Term, out: EvalOutcome) -> bool:
    if ast == "true":
        return True
    if ast == "false":
        return False
    head = ast[0]
    if head == "and":
        return all(_eval_formula(x, sigma, f, out) for x in ast[1:])
    if head == "or":
        return any(_eval_formula(x, sigma, f, out) for x in ast[1:])
    if head == "not":
        return not _eval_formula(ast[1], sigma, f, out)
    lhs = _eval_term(ast[1], sigma, f, out)
    rhs = _eval_term(ast[2], sigma, f, out)
    if lhs is None or rhs is None:
        return False
    if isinstance(lhs, bool) != isinstance(rhs, bool):
        return False
    if head == "=":
        return lhs == rhs
    if isinstance(lhs, bool):
        return False  # ordered comparisons are for numbers only
    if head == "<":
        return lhs < rhs
    if head == "<=":
        return lhs <= rhs
    if head == ">":
        return lhs > rhs
    return lhs >= rhs


def _eval_term(ast, sigma: State, f: Term, out: EvalOutcome):
    if isinstance(ast, int):
        return ast
    if isinstance(ast, str):
        if ast == "true":
            return True
        if ast == "false":
            return False
        if ast == "out":
            if isinstance(out, Value):
                return out.value
            if isinstance(out, BoolValue):
                return out.value
            return None
        if ast in sigma.universe:
            return sigma.get(ast)
        return None
    head = ast[0]
    if head == "out":
        if isinstance(out, StateOut) and ast[1] in out.state.universe:
            return out.state.get(ast[1])
        return None
    if head == "term-size":
        return term_size(f)
    args = [_eval_term(x, sigma, f, out) for x in ast[1:]]
    if any(a is None or isinstance(a, bool) for a in args):
        return None
    if head == "+":
        return sum(args)
    if head == "-":
        return args[0] - args[1]
    total = 1
    for a in args:
        total *= a
    return total
