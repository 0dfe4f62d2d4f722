"""Per-node evaluation evidence trees and their local validation.

A value tree mirrors the shape of a syntax tree and stores, at every
node, the evidence of what that node did during evaluation: one entry
per activation.  Expression, Boolean, variable, and padding nodes carry
plain values (the dummy value for activations that never really ran).
Statement nodes carry state runs: a non-loop statement's run is the
pair (input state, output state); a loop's run is its whole iteration
trace.  Because a node under a loop is activated once per iteration,
payloads are sequences of such entries, outer order chronological.

The point of the representation is locality: a node's evidence can be
checked against its operator and its direct children's evidence alone,
plus the input state at the leaves.  `validate` runs exactly these
local checks and accepts if and only if the tree is the one produced by
instrumented evaluation, so the tree doubles as a checkable certificate
that running the program on the recorded input yields the recorded
output.

Alignment conventions, fixed here and relied on by the checks:

* A statement's run always has length 2 except at loops, where the run
  is the trace t0..tk (k iterations, possibly k = 0).
* Children of a loop: for each loop activation with trace length k+1,
  the guard contributes k+1 consecutive entries (true at t0..t(k-1),
  false at tk) and the body contributes k consecutive runs, the i-th
  going from t(i-1) to t(i).  A zero-iteration activation therefore
  contributes nothing to the body, which may end up with an empty
  payload.
* A skipped subtree (padding slot, or the body of an `if` whose guard
  came out false) records dummy evidence: value nodes one dummy entry,
  non-loop statements the run (dummy, dummy), loops the run (dummy,).
* The target variable of an assignment records its value in the input
  state of each activation, i.e. the value it held before the write.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .codec import (
    CodecError,
    EncodedTree,
    encode_seq,
    decode_seq,
    encode_state,
    decode_state,
    int_to_nat,
    nat_to_int,
    list_to_nat,
    nat_to_list,
    nat_to_seq,
    pair,
    seq_to_nat,
    unpair,
)
from .semantics import (
    FUEL_EXHAUSTED,
    Budget,
    Fault,
    FuelExhausted,
    _FaultSignal,
    _OutOfFuel,
    _run,
)
from .terms import EMPTY, EmptyState, Sort, State, Term, VarUniverse

ValueEntry = Union[int, bool, EmptyState]
StateEntry = Union[State, EmptyState]


class ValueTreeError(ValueError):
    pass


@dataclass(frozen=True)
class ValuePayload:
    """Evidence at a value-sorted node: one value per activation."""

    entries: tuple[ValueEntry, ...]

    @property
    def kind(self) -> str:
        return "Val" if len(self.entries) == 1 else "ValSeq"


@dataclass(frozen=True)
class StatePayload:
    """Evidence at a statement node: one state run per activation."""

    runs: tuple[tuple[StateEntry, ...], ...]

    def __post_init__(self) -> None:
        if any(len(r) == 0 for r in self.runs):
            raise ValueTreeError("state runs must be non-empty")

    @property
    def kind(self) -> str:
        if len(self.runs) == 1 and len(self.runs[0]) == 2:
            return "StatePair"
        return "NestedSeq"


NodePayload = Union[ValuePayload, StatePayload]


def Val(v: ValueEntry) -> ValuePayload:
    return ValuePayload((v,))


def ValSeq(vs: Iterable[ValueEntry]) -> ValuePayload:
    return ValuePayload(tuple(vs))


def StatePair(a: StateEntry, b: StateEntry) -> StatePayload:
    return StatePayload(((a, b),))


def NestedSeq(runs: Iterable[Iterable[StateEntry]]) -> StatePayload:
    return StatePayload(tuple(tuple(r) for r in runs))


@dataclass(frozen=True)
class VNode:
    payload: NodePayload
    children: tuple["VNode", ...] = ()


@dataclass(frozen=True)
class ValueTree:
    """Evidence for one evaluation: the input state plus per-node payloads."""

    input: State
    root: VNode

    def node_at(self, index: int) -> VNode:
        """Node by heap index (children of i at 2i+1, 2i+2)."""
        path = []
        while index:
            path.append((index - 1) % 2)
            index = (index - 1) // 2
        node = self.root
        for step in reversed(path):
            node = node.children[step]
        return node

    def with_payload(self, index: int, payload: NodePayload) -> "ValueTree":
        """Copy of the tree with one node's payload replaced."""

        def rebuild(node: VNode, i: int) -> VNode:
            if i == index:
                return VNode(payload, node.children)
            lo = 2 * i + 1
            if index < lo or not node.children:
                return node
            kids = tuple(rebuild(c, lo + j) for j, c in enumerate(node.children))
            return VNode(node.payload, kids)

        return ValueTree(self.input, rebuild(self.root, 0))

    def root_output(self) -> Union[ValueEntry, StateEntry]:
        p = self.root.payload
        if isinstance(p, ValuePayload):
            return p.entries[0]
        return p.runs[0][-1]


# --------------------------------------------------------------------------
# Building by instrumented evaluation


class _Collector:
    __slots__ = ("values", "runs")

    def __init__(self) -> None:
        self.values: dict[int, list] = {}
        self.runs: dict[int, list] = {}

    def on_value(self, path: int, value: ValueEntry) -> None:
        self.values.setdefault(path, []).append(value)

    def on_run(self, path: int, run: tuple) -> None:
        self.runs.setdefault(path, []).append(run)


def build_value_tree(
    f: Term, sigma: State, fuel: int
) -> Union[ValueTree, Fault, FuelExhausted]:
    """The unique validating evidence tree, via instrumented evaluation.

    Fuel accounting matches eval exactly, so this returns FuelExhausted
    precisely when eval does; faults are likewise passed through.
    """
    collector = _Collector()
    try:
        _run(f, sigma, Budget(fuel), collector, 0)
    except _OutOfFuel:
        return FUEL_EXHAUSTED
    except _FaultSignal as fault:
        return Fault(fault.reason)

    def assemble(node: Term, path: int) -> VNode:
        kids = tuple(
            assemble(c, 2 * path + j + 1) for j, c in enumerate(node.children)
        )
        if node.sort is Sort.STMT:
            payload: NodePayload = StatePayload(tuple(collector.runs.get(path, [])))
        else:
            payload = ValuePayload(tuple(collector.values.get(path, [])))
        return VNode(payload, kids)

    return ValueTree(sigma, assemble(f, 0))


# --------------------------------------------------------------------------
# Local checks

_LITERALS = {"0": 0, "1": 1, "true": True, "false": False}


def _value_equal(a, b) -> bool:
    if a is EMPTY or b is EMPTY:
        return a is b
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    return a == b


def _expect_value(p: NodePayload, what: str) -> ValuePayload:
    if not isinstance(p, ValuePayload):
        raise ValueTreeError(f"{what} payload must hold values, got {p.kind}")
    return p


def _expect_state(p: NodePayload, what: str) -> StatePayload:
    if not isinstance(p, StatePayload):
        raise ValueTreeError(f"{what} payload must hold state runs, got {p.kind}")
    return p


def check_leaf(
    op: str,
    payload: NodePayload,
    inputs: Union[State, EmptyState, Sequence[Union[State, EmptyState]]],
) -> bool:
    """Entry-by-entry check of a nullary node against its input states."""
    p = _expect_value(payload, f"leaf {op!r}")
    if isinstance(inputs, (State, EmptyState)):
        inputs = [inputs]
    if len(p.entries) != len(inputs):
        return False
    for entry, sigma in zip(p.entries, inputs):
        if op == "null":
            if entry is not EMPTY:
                return False
        elif sigma is EMPTY:
            if entry is not EMPTY:
                return False
        elif op in _LITERALS:
            if not _value_equal(entry, _LITERALS[op]):
                return False
        else:  # variable
            if not _value_equal(entry, sigma.get(op)):
                return False
    return True


def _pure_op(op: str, a, b):
    """Value of a strict binary operator, None when undefined (fault)."""
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            return None
        q = abs(a) // abs(b)
        return -q if (a < 0) != (b < 0) else q
    if op == "<":
        return a < b
    if op == "=":
        return a == b
    if op == "and":
        return a and b
    raise ValueTreeError(f"unknown binary operator {op!r}")


def check_node(
    op: str,
    parent: NodePayload,
    left: NodePayload | None,
    right: NodePayload | None,
    *,
    inputs: Sequence[Union[State, EmptyState]] | None = None,
    target: str | None = None,
) -> bool:
    """Local consistency of a parent payload with its children's payloads.

    `inputs` is needed for widened nullary operators (their own value is
    read off the input, not off the padding children); `target` names
    the variable written by an assignment.
    """
    from .terms import op_info

    arity = op_info(op).arity

    if op in ("nop", "null") or op_info(op).sort in (Sort.EXPR, Sort.VAR, Sort.BOOL):
        p = _expect_value(parent, f"node {op!r}")
        n = len(p.entries)
        pads: list[ValuePayload] = []
        reals: list[ValuePayload] = []
        for i, child in enumerate((left, right)):
            if child is None:
                continue
            c = _expect_value(child, f"child of {op!r}")
            (reals if i < arity else pads).append(c)
        # padding slots: one dummy entry per parent activation
        for c in pads:
            if len(c.entries) != n or any(e is not EMPTY for e in c.entries):
                return False
        if op == "nop" or op == "null":
            if any(len(c.entries) != n for c in reals):
                return False
            return all(e is EMPTY for e in p.entries)
        if arity == 0:
            # widened literal or variable: value comes from the input state
            if inputs is None:
                raise ValueTreeError(f"check of widened {op!r} needs input states")
            return check_leaf(op, parent, list(inputs))
        if any(len(c.entries) != n for c in reals):
            return False
        if op == "not":
            (c,) = reals
            for pe, ce in zip(p.entries, c.entries):
                want = EMPTY if ce is EMPTY else not ce
                if not _value_equal(pe, want):
                    return False
            return True
        a, b = reals
        for pe, ae, be in zip(p.entries, a.entries, b.entries):
            if ae is EMPTY or be is EMPTY:
                want = EMPTY
            else:
                want = _pure_op(op, ae, be)
                if want is None:  # fault: no value certifies this activation
                    return False
            if not _value_equal(pe, want):
                return False
        return True

    # statements
    p = _expect_state(parent, f"node {op!r}")
    runs = p.runs
    if op == ":=":
        if target is None:
            raise ValueTreeError("assignment check needs the target variable")
        reads = _expect_value(left, "assignment target")
        rhs = _expect_value(right, "assignment value")
        if len(reads.entries) != len(runs) or len(rhs.entries) != len(runs):
            return False
        for run, read, v in zip(runs, reads.entries, rhs.entries):
            if len(run) != 2:
                return False
            src, dst = run
            if src is EMPTY:
                if dst is not EMPTY or read is not EMPTY or v is not EMPTY:
                    return False
            elif v is EMPTY or isinstance(v, bool):
                return False
            elif dst != src.set(target, v) or not _value_equal(read, src.get(target)):
                return False
        return True
    if op == "seq":
        s1 = _expect_state(left, "first statement of a sequence")
        s2 = _expect_state(right, "second statement of a sequence")
        if len(s1.runs) != len(runs) or len(s2.runs) != len(runs):
            return False
        for run, r1, r2 in zip(runs, s1.runs, s2.runs):
            if len(run) != 2:
                return False
            if not _state_equal(r1[0], run[0]):
                return False
            if not _state_equal(r1[-1], r2[0]):
                return False
            if not _state_equal(r2[-1], run[1]):
                return False
        return True
    if op == "if":
        guard = _expect_value(left, "branch guard")
        body = _expect_state(right, "branch body")
        if len(guard.entries) != len(runs) or len(body.runs) != len(runs):
            return False
        for run, g, brun in zip(runs, guard.entries, body.runs):
            if len(run) != 2:
                return False
            src, dst = run
            if g is EMPTY:
                if src is not EMPTY or dst is not EMPTY:
                    return False
                if any(s is not EMPTY for s in brun):
                    return False
            elif not isinstance(g, bool):
                return False
            elif g:
                if not (_state_equal(brun[0], src) and _state_equal(brun[-1], dst)):
                    return False
            else:
                if not _state_equal(dst, src):
                    return False
                if any(s is not EMPTY for s in brun):
                    return False
        return True
    if op == "while":
        guard = _expect_value(left, "loop guard")
        body = _expect_state(right, "loop body")
        gi = 0
        bi = 0
        for run in runs:
            k = len(run) - 1
            if run[0] is EMPTY:
                # skipped activation: (dummy,) with one dummy guard entry
                if k != 0:
                    return False
                if gi >= len(guard.entries) or guard.entries[gi] is not EMPTY:
                    return False
                gi += 1
                continue
            if any(s is EMPTY for s in run):
                return False
            for step in range(k):
                if gi >= len(guard.entries) or guard.entries[gi] is not True:
                    return False
                gi += 1
                if bi >= len(body.runs):
                    return False
                brun = body.runs[bi]
                bi += 1
                if not (
                    _state_equal(brun[0], run[step])
                    and _state_equal(brun[-1], run[step + 1])
                ):
                    return False
            if gi >= len(guard.entries) or guard.entries[gi] is not False:
                return False
            gi += 1
        return gi == len(guard.entries) and bi == len(body.runs)
    raise ValueTreeError(f"unknown statement operator {op!r}")


def _state_equal(a: StateEntry, b: StateEntry) -> bool:
    if a is EMPTY or b is EMPTY:
        return a is b
    return a == b


# --------------------------------------------------------------------------
# Whole-tree validation


def _check_shape(f: Term, v: VNode) -> None:
    if len(f.children) != len(v.children):
        raise ValueTreeError("evidence tree does not match the term's shape")
    want_state = f.sort is Sort.STMT
    if want_state != isinstance(v.payload, StatePayload):
        raise ValueTreeError(
            f"payload kind mismatch at {f.op!r}: "
            f"{'state runs' if want_state else 'values'} expected"
        )
    for fc, vc in zip(f.children, v.children):
        _check_shape(fc, vc)


def validate_report(f: Term, sigma: State, v: ValueTree) -> tuple[bool, int | None]:
    """Run all local checks; on failure also report the first bad node.

    Failure order is post-order (children before parents, left before
    right), so the report names the deepest, leftmost inconsistency.
    """
    _check_shape(f, v.root)
    verdicts: dict[int, bool] = {}

    def visit(node: Term, vn: VNode, path: int, inputs) -> None:
        """Check one node locally; `inputs` lists the per-activation input
        states of value nodes and is None for statements, whose runs carry
        their own states."""
        ok = True
        payload = vn.payload
        if node.sort is Sort.STMT:
            runs = payload.runs  # type: ignore[union-attr]
            if path == 0:
                ok = len(runs) == 1 and _state_equal(runs[0][0], sigma)
            if node.op == ":=":
                ok = ok and check_node(
                    node.op,
                    payload,
                    vn.children[0].payload,
                    vn.children[1].payload,
                    target=node.children[0].op,
                )
                per_act = [r[0] for r in runs]
                visit(node.children[0], vn.children[0], 2 * path + 1, per_act)
                visit(node.children[1], vn.children[1], 2 * path + 2, per_act)
            elif node.op == "seq":
                ok = ok and check_node(
                    node.op, payload, vn.children[0].payload, vn.children[1].payload
                )
                visit(node.children[0], vn.children[0], 2 * path + 1, None)
                visit(node.children[1], vn.children[1], 2 * path + 2, None)
            elif node.op == "if":
                ok = ok and check_node(
                    node.op, payload, vn.children[0].payload, vn.children[1].payload
                )
                per_act = [r[0] for r in runs]
                visit(node.children[0], vn.children[0], 2 * path + 1, per_act)
                visit(node.children[1], vn.children[1], 2 * path + 2, None)
            elif node.op == "while":
                ok = ok and check_node(
                    node.op, payload, vn.children[0].payload, vn.children[1].payload
                )
                guard_inputs = [s for run in runs for s in run]
                visit(node.children[0], vn.children[0], 2 * path + 1, guard_inputs)
                visit(node.children[1], vn.children[1], 2 * path + 2, None)
            else:
                raise ValueTreeError(f"unknown statement operator {node.op!r}")
        else:
            if path == 0:
                ok = len(payload.entries) == 1  # type: ignore[union-attr]
            if not node.children:
                ok = ok and check_leaf(node.op, payload, list(inputs))
            else:
                ok = ok and check_node(
                    node.op,
                    payload,
                    vn.children[0].payload,
                    vn.children[1].payload if len(vn.children) > 1 else None,
                    inputs=list(inputs),
                )
                for j, (fc, vc) in enumerate(zip(node.children, vn.children)):
                    visit(fc, vc, 2 * path + j + 1, list(inputs))
        verdicts[path] = ok

    visit(f, v.root, 0, None if f.sort is Sort.STMT else [sigma])

    def postorder(node: Term, path: int):
        for j, c in enumerate(node.children):
            yield from postorder(c, 2 * path + j + 1)
        yield path

    for path in postorder(f, 0):
        if not verdicts.get(path, True):
            return False, path
    return True, None


def validate(f: Term, sigma: State, v: ValueTree) -> bool:
    ok, _ = validate_report(f, sigma, v)
    return ok


# --------------------------------------------------------------------------
# Certificate codec: one natural number cell per node, heap order.
#
# Value cells use the pure-pairing list codec so ordinary evaluation
# evidence stays small.  Statement cells pack each activation's state
# run; the multi-run form compresses the flattened states and the run
# lengths as two beta-coded sequences paired together.  Cell 0 is
# reserved for the lone dummy value.

def _value_code(entry: ValueEntry) -> int:
    if entry is EMPTY:
        return 0
    if isinstance(entry, bool):
        return 1 + int(entry)
    return 1 + int_to_nat(entry)


def _decode_entry(code: int, sort: Sort) -> ValueEntry:
    if code == 0:
        return EMPTY
    if sort is Sort.NULL:
        raise CodecError("padding cells may only hold the dummy code")
    if sort is Sort.BOOL:
        if code in (1, 2):
            return code == 2
        raise CodecError(f"Boolean cell code {code} out of range")
    return nat_to_int(code - 1)


def payload_cell(p: NodePayload) -> int:
    """Serialize one payload to a natural number."""
    if isinstance(p, ValuePayload):
        if p.entries == (EMPTY,):
            return 0
        return 1 + list_to_nat([_value_code(e) for e in p.entries])
    if not p.runs:
        return 1
    if len(p.runs) == 1 and len(p.runs[0]) == 2:
        src, dst = p.runs[0]
        return 2 + 2 * pair(encode_state(src), encode_state(dst))
    flat = [encode_state(s) for run in p.runs for s in run]
    lens = [len(run) for run in p.runs]
    return 3 + 2 * pair(seq_to_nat(flat), seq_to_nat(lens))


def decode_payload_cell(
    cell: int, sort: Sort, universe: VarUniverse
) -> NodePayload:
    """Invert payload_cell for a node of the given sort."""
    if cell < 0:
        raise CodecError("payload cells are naturals")
    if sort is not Sort.STMT:
        if cell == 0:
            return ValuePayload((EMPTY,))
        codes = nat_to_list(cell - 1)
        if codes == [0]:
            raise CodecError("non-canonical dummy cell")
        return ValuePayload(tuple(_decode_entry(c, sort) for c in codes))
    if cell == 0:
        raise CodecError("statement cells start at 1")
    if cell == 1:
        return StatePayload(())
    m = cell - 2
    if m % 2 == 0:
        src_code, dst_code = unpair(m // 2)
        run = (decode_state(src_code, universe), decode_state(dst_code, universe))
        return StatePayload((run,))
    flat_nat, lens_nat = unpair(m // 2)
    if flat_nat == 0 or lens_nat == 0:
        raise CodecError("empty component in a multi-run cell")
    flat = nat_to_seq(flat_nat)
    lens = nat_to_seq(lens_nat)
    if any(l < 1 for l in lens) or sum(lens) != len(flat):
        raise CodecError("run lengths do not partition the state sequence")
    if len(lens) == 1 and lens[0] == 2:
        raise CodecError("non-canonical single-transition cell")
    runs, pos = [], 0
    for l in lens:
        runs.append(tuple(decode_state(c, universe) for c in flat[pos : pos + l]))
        pos += l
    return StatePayload(tuple(runs))


def _vnode_height(v: VNode) -> int:
    if not v.children:
        return 0
    return 1 + max(_vnode_height(c) for c in v.children)


def encode_value_tree(v: ValueTree) -> EncodedTree:
    """Heap-order payload cells compressed into one integer triple.

    Slots without a node (the tree need not be perfectly shaped) hold
    0; the decoder never reads them because it walks the term's shape.
    Evidence for loops over non-trivial states produces cells too large
    for the factorial compression of the final sequence — the codec is
    exact, not compact — and then this raises a CodecError.
    """
    h = _vnode_height(v.root)
    cells = [0] * (2 ** (h + 1) - 1)

    def fill(node: VNode, i: int) -> None:
        cells[i] = payload_cell(node.payload)
        for j, c in enumerate(node.children):
            fill(c, 2 * i + j + 1)

    fill(v.root, 0)
    return EncodedTree(encode_seq(cells), h)


def decode_value_tree(
    e: EncodedTree, f: Term, sigma: State, universe: VarUniverse
) -> ValueTree:
    """Rebuild the evidence tree for f from its encoded cells."""
    from .terms import term_height

    if term_height(f) != e.height:
        raise CodecError(
            f"certificate encodes height {e.height}, term has {term_height(f)}"
        )
    cells = decode_seq(e.seq)

    def build(node: Term, i: int) -> VNode:
        payload = decode_payload_cell(cells[i], node.sort, universe)
        kids = tuple(build(c, 2 * i + j + 1) for j, c in enumerate(node.children))
        return VNode(payload, kids)

    return ValueTree(sigma, build(f, 0))
