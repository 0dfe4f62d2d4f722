"""Search engines that look for grammar terms meeting a predicate.

A synthesis problem pairs a tree grammar with an input domain and a
predicate over (input state, candidate term, evaluation outcome).  The
engines here are deliberately small and honest about what they can
decide:

* :func:`synthesize_loop_free` exhaustively scans a loop-free grammar in
  size order.  Every evaluation terminates, so every verdict is
  definite.

* :func:`synthesize_pbe` handles grammars with loops by interleaving
  candidates with doubling fuel budgets (round ``r`` tries the first
  ``2**r`` candidates at fuel ``2**r``), so one diverging candidate
  never blocks a later solution.

* :func:`cegis` alternates example-based synthesis with whole-domain
  verification, growing the example set by one counterexample per
  round.

``Unrealizable`` is only ever reported with an exhaustion certificate
over a *finite* grammar language; searches over infinite languages end
in ``BudgetExhausted`` no matter how hopeless the predicate looks,
because no finite scan can rule out a larger solution.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence, Union

from .grammar import (
    Rtg,
    enumerate_terms,
    language_finite,
    max_term_size,
    member,
    parse_grammar,
)
from .semantics import (
    FUEL_EXHAUSTED,
    BoolValue,
    EvalOutcome,
    Fault,
    StateOut,
    Value,
    eval_term,
    _trunc_div,
)
from .spec_lang import Predicate, SpecError, predicate_from_sexp
from .terms import (
    Sort,
    State,
    Term,
    VarUniverse,
    _read_sexps,
    op_info,
    term_size,
    to_prefix,
    variables_of,
)

__all__ = [
    "SynthesisError",
    "Mode",
    "Finite",
    "BoundedBox",
    "Domain",
    "SynthesisProblem",
    "SearchStats",
    "Realized",
    "Unrealizable",
    "BudgetExhausted",
    "SynthesisResult",
    "Verified",
    "CounterexampleFound",
    "Unknown",
    "VerifyResult",
    "CegisState",
    "verify",
    "synthesize_pbe",
    "synthesize_loop_free",
    "cegis",
    "example_assignment_problem",
    "largest_constant",
    "HierarchyClass",
    "CLASSIFY_VARIANTS",
    "classify",
    "parse_problem",
    "load_problem",
]

DEFAULT_FUEL_CAP = 2 ** 16
_SCAN_CAP = 20_000
_FALLBACK_SIZE_CAP = 64
_FALLBACK_WORK_CAP = 500_000


class SynthesisError(ValueError):
    """A synthesis problem or engine call is malformed."""


class Mode(Enum):
    """How divergence interacts with the predicate.

    ``TOTAL`` demands an actual outcome for every domain state.
    ``PARTIAL`` asks the predicate to hold only on runs that finish;
    a run that exhausts its fuel counts as vacuously fine at that fuel.
    """

    TOTAL = "total"
    PARTIAL = "partial"


# ---------------------------------------------------------------------------
# Input domains


@dataclass(frozen=True)
class Finite:
    """An explicit, duplicate-free, non-empty list of input states."""

    examples: tuple[State, ...]

    def __post_init__(self) -> None:
        if not self.examples:
            raise SynthesisError("a finite domain needs at least one state")
        first = self.examples[0].universe
        for sigma in self.examples:
            if sigma.universe != first:
                raise SynthesisError("domain states use different universes")
        if len(set(self.examples)) != len(self.examples):
            raise SynthesisError("duplicate state in finite domain")

    @property
    def universe(self) -> VarUniverse:
        return self.examples[0].universe

    def states(self) -> Iterator[State]:
        yield from self.examples

    def __contains__(self, sigma: State) -> bool:
        return sigma in self.examples

    def size(self) -> int:
        return len(self.examples)


@dataclass(frozen=True)
class BoundedBox:
    """Every state whose variables lie in closed per-variable intervals.

    ``bounds`` holds one ``(name, lo, hi)`` triple per universe
    variable, in universe order; iteration enumerates the box in
    odometer order (last variable fastest).
    """

    universe: VarUniverse
    bounds: tuple[tuple[str, int, int], ...]

    def __post_init__(self) -> None:
        names = [b[0] for b in self.bounds]
        if names != list(self.universe):
            raise SynthesisError(
                "box bounds must list every universe variable once, in order; "
                f"expected {list(self.universe)}, got {names}")
        for name, lo, hi in self.bounds:
            if lo > hi:
                raise SynthesisError(f"empty interval for {name}: [{lo}, {hi}]")

    def states(self) -> Iterator[State]:
        ranges = [range(lo, hi + 1) for _, lo, hi in self.bounds]
        for values in itertools.product(*ranges):
            yield State(self.universe, tuple(values))

    def __contains__(self, sigma: State) -> bool:
        if sigma.universe != self.universe:
            return False
        return all(lo <= sigma.get(name) <= hi for name, lo, hi in self.bounds)

    def size(self) -> int:
        n = 1
        for _, lo, hi in self.bounds:
            n *= hi - lo + 1
        return n


Domain = Union[Finite, BoundedBox]


@dataclass(frozen=True)
class SynthesisProblem:
    """A grammar to search, a domain to satisfy, and the predicate to meet."""

    grammar: Rtg
    domain: Domain
    spec: Predicate
    mode: Mode = Mode.TOTAL

    def __post_init__(self) -> None:
        if self.domain.universe != self.grammar.universe:
            raise SynthesisError(
                "domain universe does not match the grammar universe")
        extra = self.spec.variables() - set(self.universe)
        if extra:
            raise SynthesisError(
                f"predicate mentions variables outside the universe: "
                f"{sorted(extra)}")

    @property
    def universe(self) -> VarUniverse:
        return self.grammar.universe


# ---------------------------------------------------------------------------
# Results


@dataclass
class SearchStats:
    """Work counters; ``fuel_limit`` is the largest fuel any run used."""

    candidates: int = 0
    evaluations: int = 0
    rounds: int = 0
    fuel_limit: int = 0


@dataclass(frozen=True)
class Realized:
    """A term satisfying the predicate on the whole (sub)domain."""

    term: Term
    stats: SearchStats


@dataclass(frozen=True)
class Unrealizable:
    """No term of the grammar works — backed by finite-language exhaustion."""

    proof: str
    stats: SearchStats


@dataclass(frozen=True)
class BudgetExhausted:
    """The search ran out of size, fuel, or rounds without a verdict."""

    reason: str
    stats: SearchStats


SynthesisResult = Union[Realized, Unrealizable, BudgetExhausted]


@dataclass(frozen=True)
class Verified:
    """The candidate met the predicate on every domain state."""


@dataclass(frozen=True)
class CounterexampleFound:
    """The earliest domain state (in iteration order) that refutes it."""

    state: State


@dataclass(frozen=True)
class Unknown:
    """No refutation, but some run hit the fuel limit (total mode only)."""


VerifyResult = Union[Verified, CounterexampleFound, Unknown]


@dataclass(frozen=True)
class CegisState:
    """Trace of a refinement run: examples seen, rounds played."""

    examples: tuple[State, ...]
    candidate: Term | None
    history: tuple[tuple[Term, State | None], ...]


# ---------------------------------------------------------------------------
# Verification


def _check_one(f: Term, problem: SynthesisProblem, sigma: State,
               fuel: int) -> bool | None:
    """Predicate verdict for one state: True/False, or None for fuel-out."""
    out = eval_term(f, sigma, fuel)
    if out is FUEL_EXHAUSTED:
        return True if problem.mode is Mode.PARTIAL else None
    return problem.spec.holds(sigma, f, out)


def verify(f: Term, problem: SynthesisProblem, fuel: int) -> VerifyResult:
    """Check ``f`` against every state of the problem's domain.

    States are visited in the domain's canonical order and the first
    refuting state is reported.  A fuel-out under ``Mode.TOTAL`` makes
    the overall answer ``Unknown`` unless a later state gives a definite
    refutation; under ``Mode.PARTIAL`` fuel-outs satisfy the predicate
    vacuously at this fuel.
    """
    if not member(problem.grammar, f):
        raise SynthesisError("candidate is not generated by the grammar")
    saw_unknown = False
    for sigma in problem.domain.states():
        verdict = _check_one(f, problem, sigma, fuel)
        if verdict is None:
            saw_unknown = True
        elif not verdict:
            return CounterexampleFound(sigma)
    return Unknown() if saw_unknown else Verified()


# ---------------------------------------------------------------------------
# Exhaustive scan for loop-free grammars


def _grammar_has_op(g: Rtg, op: str) -> bool:
    return any(p.op == op
               for nt in g.nonterminals
               for p in g.productions(nt))


def _exhausted_verdict(problem: SynthesisProblem, size_budget: int,
                       stats: SearchStats, checked: str) -> SynthesisResult:
    """Verdict after every candidate within the budget failed."""
    if language_finite(problem.grammar):
        biggest = max_term_size(problem.grammar)
        if biggest <= size_budget:
            return Unrealizable(
                f"the grammar generates only terms of size <= {biggest}; "
                f"{checked}", stats)
    return BudgetExhausted(
        f"no term of size <= {size_budget} satisfies the predicate; larger "
        "terms remain unexplored", stats)


def synthesize_loop_free(problem: SynthesisProblem,
                         size_budget: int) -> SynthesisResult:
    """Size-ordered exhaustive search over a grammar without loops.

    Loop-free terms finish within ``term_size + 1`` fuel, so every
    candidate gets a definite verdict and the first hit is a smallest
    solution.  Works for any domain; a box domain is fully enumerated.
    """
    if _grammar_has_op(problem.grammar, "while"):
        raise SynthesisError(
            "grammar contains `while`; use synthesize_pbe, which interleaves "
            "fuel budgets")
    stats = SearchStats()
    states = tuple(problem.domain.states())
    for f in enumerate_terms(problem.grammar, size_budget):
        stats.candidates += 1
        fuel = term_size(f) + 1
        stats.fuel_limit = max(stats.fuel_limit, fuel)
        ok = True
        for sigma in states:
            stats.evaluations += 1
            verdict = _check_one(f, problem, sigma, fuel)
            assert verdict is not None, "loop-free evaluation ran out of fuel"
            if not verdict:
                ok = False
                break
        if ok:
            return Realized(f, stats)
    return _exhausted_verdict(problem, size_budget, stats,
                              "all were checked and none satisfies the "
                              "predicate")


# ---------------------------------------------------------------------------
# Dovetailed search for grammars with loops


def synthesize_pbe(problem: SynthesisProblem, size_budget: int,
                   fuel_cap: int = DEFAULT_FUEL_CAP) -> SynthesisResult:
    """Example-based search that survives diverging candidates.

    Round ``r`` runs the first ``2**r`` candidates (size order, then
    print order) with fuel ``2**r``; a candidate whose runs all finish
    and all satisfy the predicate is returned immediately, so a
    diverging early candidate cannot block a later solution.  Candidates
    refuted at some fuel stay refuted (more fuel never changes a
    definite outcome) and are skipped in later rounds.
    """
    if not isinstance(problem.domain, Finite):
        raise SynthesisError("example-based search needs a Finite domain")
    stats = SearchStats()
    examples = problem.domain.examples
    gen = enumerate_terms(problem.grammar, size_budget)
    pool: list[Term] = []
    gen_done = False
    refuted: set[int] = set()
    r = 0
    while True:
        fuel = 2 ** r
        stats.rounds = r + 1
        stats.fuel_limit = max(stats.fuel_limit, min(fuel, fuel_cap))
        want = 2 ** r
        while len(pool) < want and not gen_done:
            nxt = next(gen, None)
            if nxt is None:
                gen_done = True
            else:
                pool.append(nxt)
                stats.candidates += 1
        for i, f in enumerate(pool[:want]):
            if i in refuted:
                continue
            ok = True
            for sigma in examples:
                stats.evaluations += 1
                verdict = _check_one(f, problem, sigma, min(fuel, fuel_cap))
                if verdict is None:
                    ok = None
                elif not verdict:
                    ok = False
                    break
            if ok is True:
                return Realized(f, stats)
            if ok is False:
                refuted.add(i)
        if gen_done and len(refuted) == len(pool):
            return _exhausted_verdict(
                problem, size_budget, stats,
                "all were checked and none satisfies the predicate")
        if gen_done and want >= len(pool) and fuel >= fuel_cap:
            return BudgetExhausted(
                f"candidates remain inconclusive at the fuel cap {fuel_cap}",
                stats)
        r += 1


# ---------------------------------------------------------------------------
# Behavioral-signature search (used by the cegis fast path)
#
# On a fixed example set, a term's relevant behavior is one outcome per
# example.  The enumerator below builds terms bottom-up, keeps only the
# first (smallest, then print-order) term per behavior, and composes
# behaviors algebraically instead of re-running the interpreter.  The
# algebra assumes statement writes never feed later reads (true for the
# write-only-output grammars this fast path targets); every term pulled
# out of it is re-verified with the real interpreter before use, so a
# wrong signature can only cause a miss, never a wrong answer.

_FAULTED = object()  # per-example marker: this run faults


class _ClassEnumerator:
    def __init__(self, g: Rtg, examples: Sequence[State],
                 skip_ops: frozenset[str] = frozenset()):
        self.g = g
        self.examples = tuple(examples)
        self.skip_ops = skip_ops | {"while", "nop", "null"}
        # pool[nt] = list of (size, term, sig); seen[nt] = known signatures
        self.pool: dict[str, list[tuple[int, Term, object]]] = {
            nt: [] for nt in g.nonterminals}
        self.seen: dict[str, set[object]] = {nt: set() for nt in g.nonterminals}
        self.size = 0
        self.work = 0

    # -- signature algebra --------------------------------------------------

    def _values(self, sig: object) -> tuple | None:
        """Per-example integer view of an expression-like signature."""
        kind = sig[0]
        if kind == "e":
            return sig[1]
        if kind == "v":
            name = sig[1]
            return tuple(sigma.get(name) for sigma in self.examples)
        return None

    def _leaf_sig(self, op: str) -> object | None:
        k = len(self.examples)
        if op == "0":
            return ("e", (0,) * k)
        if op == "1":
            return ("e", (1,) * k)
        if op == "true":
            return ("b", (True,) * k)
        if op == "false":
            return ("b", (False,) * k)
        if op_info(op).sort is Sort.VAR:
            return ("v", op)
        return None

    def _compose(self, op: str, child_sigs: tuple[object, ...]) -> object | None:
        if op in ("+", "-", "*", "/"):
            va, vb = self._values(child_sigs[0]), self._values(child_sigs[1])
            if va is None or vb is None:
                return None
            out = []
            for a, b in zip(va, vb):
                if a is _FAULTED or b is _FAULTED:
                    out.append(_FAULTED)
                elif op == "+":
                    out.append(a + b)
                elif op == "-":
                    out.append(a - b)
                elif op == "*":
                    out.append(a * b)
                elif b == 0:
                    out.append(_FAULTED)
                else:
                    out.append(_trunc_div(a, b))
            return ("e", tuple(out))
        if op in ("<", "="):
            va, vb = self._values(child_sigs[0]), self._values(child_sigs[1])
            if va is None or vb is None:
                return None
            out = [
                _FAULTED if a is _FAULTED or b is _FAULTED
                else (a < b if op == "<" else a == b)
                for a, b in zip(va, vb)]
            return ("b", tuple(out))
        if op == "not":
            (sig,) = child_sigs
            if sig[0] != "b":
                return None
            return ("b", tuple(_FAULTED if x is _FAULTED else not x
                               for x in sig[1]))
        if op == "and":
            sa, sb = child_sigs
            if sa[0] != "b" or sb[0] != "b":
                return None
            out = [
                _FAULTED if a is _FAULTED or b is _FAULTED else (a and b)
                for a, b in zip(sa[1], sb[1])]
            return ("b", tuple(out))
        if op == ":=":
            target_sig, value_sig = child_sigs
            if target_sig[0] != "v":
                return None
            values = self._values(value_sig)
            if values is None:
                return None
            name = target_sig[1]
            return ("s", tuple(
                _FAULTED if v is _FAULTED else frozenset({(name, v)})
                for v in values))
        if op == "seq":
            sa, sb = child_sigs
            if sa[0] != "s" or sb[0] != "s":
                return None
            out = []
            for a, b in zip(sa[1], sb[1]):
                if a is _FAULTED or b is _FAULTED:
                    out.append(_FAULTED)
                else:
                    merged = dict(a)
                    merged.update(dict(b))
                    out.append(frozenset(merged.items()))
            return ("s", tuple(out))
        if op == "if":
            guard_sig, body_sig = child_sigs
            if guard_sig[0] != "b" or body_sig[0] != "s":
                return None
            out = []
            for cond, body in zip(guard_sig[1], body_sig[1]):
                if cond is _FAULTED:
                    out.append(_FAULTED)
                elif cond:
                    out.append(body)
                else:
                    out.append(frozenset())
            return ("s", tuple(out))
        return None

    def outcome_at(self, sig: object, i: int) -> EvalOutcome:
        """The evaluation outcome this signature predicts on example i."""
        kind, entries = sig[0], None
        if kind == "v":
            return Value(self.examples[i].get(sig[1]))
        entries = sig[1]
        entry = entries[i]
        if entry is _FAULTED:
            return Fault()
        if kind == "e":
            return Value(entry)
        if kind == "b":
            return BoolValue(entry)
        sigma = self.examples[i]
        for name, value in sorted(entry):
            sigma = sigma.set(name, value)
        return StateOut(sigma)

    # -- growing ------------------------------------------------------------

    def grow_to(self, size_cap: int, work_cap: int) -> bool:
        """Materialize classes up to ``size_cap``; False if work ran out."""
        while self.size < size_cap:
            if self.work > work_cap:
                return False
            s = self.size + 1
            fresh: dict[str, list[tuple[Term, object]]] = {}
            for nt in self.g.nonterminals:
                found: list[tuple[Term, object]] = []
                for prod in self.g.productions(nt):
                    if prod.op in self.skip_ops:
                        continue
                    arity = len(prod.operands)
                    if arity == 0:
                        if s == 1:
                            sig = self._leaf_sig(prod.op)
                            if sig is not None:
                                found.append((Term(prod.op), sig))
                        continue
                    budget = s - 1
                    if arity == 1:
                        for sz, t0, sig0 in self.pool[prod.operands[0]]:
                            if sz != budget:
                                continue
                            self.work += 1
                            sig = self._compose(prod.op, (sig0,))
                            if sig is not None:
                                found.append((Term(prod.op, (t0,)), sig))
                    elif arity == 2:
                        left_nt, right_nt = prod.operands
                        for sz0, t0, sig0 in self.pool[left_nt]:
                            rest = budget - sz0
                            if rest < 1:
                                continue
                            for sz1, t1, sig1 in self.pool[right_nt]:
                                if sz1 != rest:
                                    continue
                                self.work += 1
                                sig = self._compose(prod.op, (sig0, sig1))
                                if sig is not None:
                                    found.append(
                                        (Term(prod.op, (t0, t1)), sig))
                fresh[nt] = found
            for nt, found in fresh.items():
                for t, sig in sorted(found, key=lambda pair: to_prefix(pair[0])):
                    if sig not in self.seen[nt]:
                        self.seen[nt].add(sig)
                        self.pool[nt].append((s, t, sig))
            self.size = s
        return True

    def reps(self, nt: str) -> list[tuple[int, Term, object]]:
        return self.pool[nt]


def _identity_satisfies(problem: SynthesisProblem, sigma: State,
                        placeholder: Term) -> bool:
    """Does leaving the state untouched already meet the predicate?"""
    return problem.spec.holds(sigma, placeholder, StateOut(sigma))


def _decision_list_pbe(problem: SynthesisProblem, size_budget: int,
                       stats: SearchStats) -> Realized | None:
    """One guarded block per example, chained by sequencing.

    Needs the start symbol to offer ``seq(S, S)`` and ``if G then B``
    productions.  For each example that the untouched state does not
    already satisfy, find a small statement correct on that example
    alone plus a guard true on that example and false on the others,
    then chain ``if guard then statement`` blocks.  Signatures steer the
    search; the assembled candidate is re-verified with the real
    interpreter and the whole attempt returns None if anything is out of
    reach.
    """
    g = problem.grammar
    examples = tuple(problem.domain.states())
    start_prods = g.productions(g.start)
    seq_ok = any(p.op == "seq" and p.operands == (g.start, g.start)
                 for p in start_prods)
    if_prods = [p for p in start_prods if p.op == "if"]
    if not seq_ok or not if_prods:
        return None
    guard_nt, body_nt = if_prods[0].operands

    enum = _ClassEnumerator(g, examples, skip_ops=frozenset({"if"}))
    placeholder = Term("1")

    needed = [i for i, sigma in enumerate(examples)
              if not _identity_satisfies(problem, sigma, placeholder)]
    if not needed:
        return None

    bodies: dict[int, Term] = {}
    guards: dict[int, Term] = {}
    size_cap = min(size_budget, _FALLBACK_SIZE_CAP)

    def one_hot(sig: object, i: int) -> bool:
        if sig[0] != "b":
            return False
        return all((x is not _FAULTED) and x == (j == i)
                   for j, x in enumerate(sig[1]))

    body_cursor = guard_cursor = 0
    for target in range(1, size_cap + 1):
        if not enum.grow_to(target, _FALLBACK_WORK_CAP):
            return None
        body_pool = enum.reps(body_nt)
        while body_cursor < len(body_pool):
            _, t, sig = body_pool[body_cursor]
            body_cursor += 1
            if sig[0] != "s":
                continue
            for i in needed:
                if i in bodies:
                    continue
                stats.evaluations += 1
                if problem.spec.holds(examples[i], t,
                                      enum.outcome_at(sig, i)):
                    bodies[i] = t
        guard_pool = enum.reps(guard_nt)
        while guard_cursor < len(guard_pool):
            _, t, sig = guard_pool[guard_cursor]
            guard_cursor += 1
            for i in needed:
                if i not in guards and one_hot(sig, i):
                    guards[i] = t
        if all(i in bodies and i in guards for i in needed):
            break
    else:
        return None
    if not all(i in bodies and i in guards for i in needed):
        return None

    blocks = [Term("if", (guards[i], bodies[i])) for i in needed]
    candidate = blocks[-1]
    for block in reversed(blocks[:-1]):
        candidate = Term("seq", (block, candidate))
    stats.candidates += 1
    if term_size(candidate) > size_budget:
        return None
    if not member(g, candidate):
        return None
    fuel = term_size(candidate) + 1
    for sigma in examples:
        stats.evaluations += 1
        if not _check_one(candidate, problem, sigma, fuel):
            return None
    stats.fuel_limit = max(stats.fuel_limit, fuel)
    return Realized(candidate, stats)


def _capped_scan(problem: SynthesisProblem, size_budget: int, cap: int,
                 stats: SearchStats) -> SynthesisResult | None:
    """Loop-free exhaustive scan that gives up after ``cap`` candidates.

    Returns None when the cap was hit before the language (restricted to
    the budget) was exhausted — i.e. no verdict either way.
    """
    states = tuple(problem.domain.states())
    count = 0
    for f in enumerate_terms(problem.grammar, size_budget):
        count += 1
        if count > cap:
            return None
        stats.candidates += 1
        fuel = term_size(f) + 1
        stats.fuel_limit = max(stats.fuel_limit, fuel)
        ok = True
        for sigma in states:
            stats.evaluations += 1
            if not _check_one(f, problem, sigma, fuel):
                ok = False
                break
        if ok:
            return Realized(f, stats)
    return _exhausted_verdict(problem, size_budget, stats,
                              "all were checked and none satisfies the "
                              "predicate")


# ---------------------------------------------------------------------------
# CEGIS


def _pbe_step(problem: SynthesisProblem, examples: tuple[State, ...],
              size_budget: int, fuel: int, engine: str) -> SynthesisResult:
    """Synthesize against the current example set."""
    if not examples:
        # Zero examples: any term of the language is vacuously correct.
        stats = SearchStats()
        for f in enumerate_terms(problem.grammar, size_budget):
            stats.candidates += 1
            return Realized(f, stats)
        return _exhausted_verdict(problem, size_budget, stats,
                                  "the language has no term within the budget")
    sub = SynthesisProblem(problem.grammar, Finite(examples), problem.spec,
                           problem.mode)
    loop_free = not _grammar_has_op(problem.grammar, "while")
    if engine == "dovetail" or not loop_free:
        return synthesize_pbe(sub, size_budget, fuel_cap=fuel)
    stats = SearchStats()
    result = _capped_scan(sub, size_budget, _SCAN_CAP, stats)
    if result is not None:
        return result
    fallback = _decision_list_pbe(sub, size_budget, stats)
    if fallback is not None:
        return fallback
    return BudgetExhausted(
        f"scanned the first {_SCAN_CAP} candidates and the guarded-block "
        "fallback found nothing within the size budget", stats)


def cegis(problem: SynthesisProblem, seed_examples: Sequence[State],
          round_budget: int, size_budget: int, fuel: int,
          engine: str = "auto") -> tuple[SynthesisResult, CegisState]:
    """Counterexample-guided refinement.

    Each round synthesizes a candidate correct on the current examples,
    then verifies it on the full domain; the earliest counterexample is
    added to the examples and the loop repeats.  Stops with ``Realized``
    on full verification, propagates ``Unrealizable`` from the example
    step (a term correct on the domain would also be correct on the
    examples, which are all domain states), and otherwise reports
    ``BudgetExhausted``.  The returned state records one
    ``(candidate, counterexample)`` pair per completed round, with
    ``None`` in place of a counterexample only when verification was
    inconclusive.

    ``engine`` picks the example-step strategy: ``"dovetail"`` always
    interleaves fuel budgets; ``"auto"`` uses a capped exhaustive scan
    plus a guarded-block fallback when the grammar is loop-free.
    """
    if engine not in ("auto", "dovetail"):
        raise SynthesisError(f"unknown engine {engine!r}")
    examples: list[State] = []
    for sigma in seed_examples:
        if sigma not in problem.domain:
            raise SynthesisError(
                f"seed example {sigma} lies outside the domain")
        if sigma not in examples:
            examples.append(sigma)
    history: list[tuple[Term, State | None]] = []
    stats = SearchStats()
    candidate: Term | None = None

    def state() -> CegisState:
        return CegisState(tuple(examples), candidate, tuple(history))

    for round_no in range(round_budget):
        stats.rounds = round_no + 1
        step = _pbe_step(problem, tuple(examples), size_budget, fuel, engine)
        stats.candidates += step.stats.candidates
        stats.evaluations += step.stats.evaluations
        stats.fuel_limit = max(stats.fuel_limit, step.stats.fuel_limit)
        if isinstance(step, Unrealizable):
            return Unrealizable(step.proof, stats), state()
        if isinstance(step, BudgetExhausted):
            return BudgetExhausted(
                f"round {round_no + 1} example step: {step.reason}",
                stats), state()
        candidate = step.term
        verdict = verify(candidate, problem, fuel)
        stats.evaluations += _domain_size_or(problem.domain, 0)
        stats.fuel_limit = max(stats.fuel_limit, fuel)
        if isinstance(verdict, Verified):
            history.append((candidate, None))
            return Realized(candidate, stats), state()
        if isinstance(verdict, Unknown):
            history.append((candidate, None))
            return BudgetExhausted(
                f"round {round_no + 1}: verification inconclusive at fuel "
                f"{fuel}", stats), state()
        cex = verdict.state
        assert cex not in examples, "counterexample repeats a known example"
        history.append((candidate, cex))
        examples.append(cex)
    return BudgetExhausted(
        f"no convergence within {round_budget} rounds", stats), state()


def _domain_size_or(domain: Domain, default: int) -> int:
    try:
        return domain.size()
    except (OverflowError, MemoryError):  # pragma: no cover
        return default


# ---------------------------------------------------------------------------
# Worked problems and analysis helpers


def example_assignment_problem(bound: int) -> SynthesisProblem:
    """Copy-the-hidden-input problem that defeats example-driven search.

    The grammar can assign sums of constants to ``x``, guard on
    ``e == y``, and sequence blocks — but it cannot read ``y`` into an
    expression.  The predicate asks for ``out.x = y`` (with ``y``
    untouched) over the box ``x = 0, y in [0, bound]``.  Any candidate
    built from finitely many constants is refuted by setting ``y`` one
    past its largest constant, so refinement loops add guarded blocks
    forever without converging.
    """
    if bound < 1:
        raise SynthesisError("bound must be at least 1")
    universe = VarUniverse.of("x", "y")
    grammar = parse_grammar("""
        (grammar (vars x y) (start S)
          (rule S (:= X E))
          (rule S (if B S))
          (rule S (seq S S))
          (rule B (= E Y))
          (rule X x)
          (rule Y y)
          (rule E 0)
          (rule E 1)
          (rule E (+ E E)))
    """)
    domain = BoundedBox(universe, (("x", 0, 0), ("y", 0, bound)))
    spec = predicate_from_sexp(
        ["and", ["=", ["out", "x"], "y"], ["=", ["out", "y"], "y"]])
    return SynthesisProblem(grammar, domain, spec, Mode.TOTAL)


def largest_constant(t: Term) -> int | None:
    """Largest value among constant (variable-free) integer subterms.

    Returns None when no subterm is a constant integer expression
    (faulting constants such as division by zero are skipped).
    """
    best: int | None = None
    for sub in t.walk():
        if sub.sort is not Sort.EXPR or variables_of(sub):
            continue
        value = _const_value(sub)
        if value is not None and (best is None or value > best):
            best = value
    return best


def _const_value(t: Term) -> int | None:
    if t.op == "0":
        return 0
    if t.op == "1":
        return 1
    values = [_const_value(c) for c in t.children]
    if any(v is None for v in values):
        return None
    a, b = values
    if t.op == "+":
        return a + b
    if t.op == "-":
        return a - b
    if t.op == "*":
        return a * b
    if t.op == "/":
        return None if b == 0 else _trunc_div(a, b)
    return None


# ---------------------------------------------------------------------------
# Difficulty classification


@dataclass(frozen=True)
class HierarchyClass:
    """Where a problem family sits in the arithmetical hierarchy."""

    variant: str
    label: str
    note: str


CLASSIFY_VARIANTS = (
    "general",
    "finite-examples",
    "loop-free",
    "partial-correctness",
    "generalization",
    "spec-sigma",
)

_CLASSIFY_TABLE = {
    "general": (
        "Σ3-complete",
        "full language, loops included: a solution must exist, work on "
        "every input, and witness termination on each"),
    "finite-examples": (
        "Σ1-complete",
        "finitely many inputs: a correct candidate can be confirmed by "
        "running it on each example"),
    "loop-free": (
        "Σ2-complete",
        "no loops, so every run terminates and checking one input is "
        "decidable; only the candidate and input quantifiers remain"),
    "partial-correctness": (
        "in Σ2",
        "the predicate need hold only on terminating runs, which removes "
        "the termination witness from the requirement"),
    "generalization": (
        "Σ2-complete",
        "whether a candidate correct on the examples stays correct on the "
        "whole domain"),
}


def classify(variant: str, n: int | None = None) -> HierarchyClass:
    """Difficulty label for a synthesis-problem family.

    ``variant`` is one of :data:`CLASSIFY_VARIANTS`; ``spec-sigma``
    additionally needs ``n``, the quantifier depth of the specification
    language, and classifies synthesis against such specifications.
    """
    if variant in _CLASSIFY_TABLE:
        if n is not None:
            raise SynthesisError(f"variant {variant!r} does not take n")
        label, note = _CLASSIFY_TABLE[variant]
        return HierarchyClass(variant, label, note)
    if variant == "spec-sigma":
        if n is None or n < 0:
            raise SynthesisError(
                "variant 'spec-sigma' needs a quantifier depth n >= 0")
        return HierarchyClass(
            variant, f"in Σ{n + 3}",
            f"specifications with {n} quantifier alternations push the "
            "difficulty up by the same amount")
    raise SynthesisError(
        f"unknown variant {variant!r}; choose from "
        f"{', '.join(CLASSIFY_VARIANTS)}")


# ---------------------------------------------------------------------------
# Problem files


def parse_problem(text: str, grammar_loader=None) -> SynthesisProblem:
    """Parse a problem description.

    Format::

        (problem
          (grammar-file g.rtg)
          (mode total)
          (domain (finite (state x 3)))
          (spec (= out 5)))

    ``domain`` is either ``(finite (state NAME VALUE ...) ...)`` or
    ``(box (NAME LO HI) ...)``.  ``grammar_loader`` maps the grammar
    file name to its text; it defaults to reading the file relative to
    the current directory.
    """
    sexps = _read_sexps(text)
    if len(sexps) != 1 or not isinstance(sexps[0], list) \
            or not sexps[0] or sexps[0][0] != "problem":
        raise SynthesisError("expected a single (problem ...) form")
    sections: dict[str, list] = {}
    for part in sexps[0][1:]:
        if not isinstance(part, list) or not part \
                or not isinstance(part[0], str):
            raise SynthesisError(f"bad problem section: {part!r}")
        if part[0] in sections:
            raise SynthesisError(f"duplicate section ({part[0]} ...)")
        sections[part[0]] = part[1:]
    missing = {"grammar-file", "mode", "domain", "spec"} - set(sections)
    if missing:
        raise SynthesisError(f"missing problem sections: {sorted(missing)}")

    grammar_section = sections["grammar-file"]
    if len(grammar_section) != 1 or not isinstance(grammar_section[0], str):
        raise SynthesisError("(grammar-file ...) takes one file name")
    if grammar_loader is None:
        def grammar_loader(name: str) -> str:
            with open(name, encoding="utf-8") as handle:
                return handle.read()
    grammar = parse_grammar(grammar_loader(grammar_section[0]))

    mode_section = sections["mode"]
    if len(mode_section) != 1 or mode_section[0] not in ("total", "partial"):
        raise SynthesisError("(mode ...) takes 'total' or 'partial'")
    mode = Mode(mode_section[0])

    domain = _parse_domain(sections["domain"], grammar.universe)
    try:
        spec = predicate_from_sexp(_single(sections["spec"], "spec"))
    except SpecError as err:
        raise SynthesisError(f"bad spec: {err}") from err
    return SynthesisProblem(grammar, domain, spec, mode)


def _single(section: list, name: str) -> object:
    if len(section) != 1:
        raise SynthesisError(f"({name} ...) takes exactly one form")
    return section[0]


def _parse_domain(section: list, universe: VarUniverse) -> Domain:
    form = _single(section, "domain")
    if not isinstance(form, list) or not form:
        raise SynthesisError("domain must be (finite ...) or (box ...)")
    head, rest = form[0], form[1:]
    if head == "finite":
        states = []
        for entry in rest:
            if not isinstance(entry, list) or not entry \
                    or entry[0] != "state" or len(entry) % 2 == 0:
                raise SynthesisError(
                    f"expected (state NAME VALUE ...), got {entry!r}")
            assignment: dict[str, int] = {}
            pairs = entry[1:]
            for name, raw in zip(pairs[::2], pairs[1::2]):
                assignment[name] = _parse_int(raw)
            states.append(State.of(universe, assignment))
        return Finite(tuple(states))
    if head == "box":
        by_name: dict[str, tuple[int, int]] = {}
        for entry in rest:
            if not isinstance(entry, list) or len(entry) != 3 \
                    or not isinstance(entry[0], str):
                raise SynthesisError(f"expected (NAME LO HI), got {entry!r}")
            name = entry[0]
            if name in by_name:
                raise SynthesisError(f"duplicate box interval for {name}")
            by_name[name] = (_parse_int(entry[1]), _parse_int(entry[2]))
        missing = set(universe) - set(by_name)
        if missing:
            raise SynthesisError(
                f"box is missing intervals for: {sorted(missing)}")
        extra = set(by_name) - set(universe)
        if extra:
            raise SynthesisError(
                f"box lists unknown variables: {sorted(extra)}")
        bounds = tuple((name,) + by_name[name] for name in universe)
        return BoundedBox(universe, bounds)
    raise SynthesisError(f"unknown domain kind {head!r}")


def _parse_int(raw: object) -> int:
    if isinstance(raw, str):
        try:
            return int(raw, 10)
        except ValueError:
            pass
    raise SynthesisError(f"expected an integer, got {raw!r}")


def load_problem(path: str) -> SynthesisProblem:
    """Read a problem file; the grammar file is resolved next to it."""
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    base = os.path.dirname(os.path.abspath(path))

    def loader(name: str) -> str:
        with open(os.path.join(base, name), encoding="utf-8") as handle:
            return handle.read()

    return parse_problem(text, loader)
