"""Shared helpers: fixture paths and a seeded terminating-loop generator."""

from __future__ import annotations

import pathlib
import random

import pytest

from impsynth.terms import State, Term, VarUniverse

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures() -> pathlib.Path:
    return FIXTURES


UNIVERSE_XY = VarUniverse.of("x", "y")


def numeral(n: int) -> Term:
    """n >= 0 as the surface sugar: a left chain of 1 (+ 1)*."""
    if n == 0:
        return Term("0")
    acc = Term("1")
    for _ in range(n - 1):
        acc = Term("+", (acc, Term("1")))
    return acc


def random_loop(rng: random.Random) -> tuple[Term, Term, State]:
    """A guard, a body, and a start state for a loop that always finishes.

    The guard is ``x < k`` with k <= 5; the body is a small random
    statement that always increments ``x`` by at least one (extra
    blocks may write ``y`` or hide behind branches), so the loop runs
    at most k iterations from any start with x <= k.
    """
    k = rng.randint(1, 5)
    guard = Term("<", (Term("x"), numeral(k)))

    def increment() -> Term:
        step = rng.randint(1, 2)
        return Term(":=", (Term("x"), Term("+", (Term("x"), numeral(step)))))

    def side_block() -> Term:
        kind = rng.randrange(3)
        if kind == 0:
            rhs = rng.choice(
                [numeral(rng.randint(0, 3)),
                 Term("+", (Term("y"), Term("1"))),
                 Term("+", (Term("x"), Term("y")))])
            return Term(":=", (Term("y"), rhs))
        if kind == 1:
            cond = rng.choice(
                [Term("<", (Term("y"), numeral(rng.randint(0, 4)))),
                 Term("=", (Term("x"), numeral(rng.randint(0, 4))))])
            return Term("if", (cond, side_block() if rng.random() < 0.3
                               else increment()))
        return increment()

    blocks = [side_block() for _ in range(rng.randint(0, 2))]
    blocks.insert(rng.randint(0, len(blocks)), increment())
    body = blocks[-1]
    for block in reversed(blocks[:-1]):
        body = Term("seq", (block, body))

    sigma = State.of(UNIVERSE_XY,
                     {"x": rng.randint(0, k), "y": rng.randint(0, 3)})
    return guard, body, sigma
