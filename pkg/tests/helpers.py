"""Random expression / system generators shared by the property tests."""
import random

import sympy as sp
from hypothesis import strategies as st

from claw import symexpr as sx
from claw.symmetry import OdeSystem

A, B = sp.symbols("a b")
STATES = [sx.u(1), sx.u(2), sx.u(3)]
LEAVES = [sx.T, *STATES, A, B]


def random_expression(rng: random.Random, depth: int = 3, states=STATES, with_exp=True):
    """Jet-order-0 expression in (t, u, a, b) whose denominators stay positive on [0.5, 2]."""
    leaves = [sx.T, *states, A, B]
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.3:
            return sp.Integer(rng.randint(-3, 3))
        return rng.choice(leaves)
    op = rng.choice(["add", "add", "mul", "mul", "pow", "div", "exp"] if with_exp else ["add", "mul", "pow", "div"])
    sub = lambda: random_expression(rng, depth - 1, states, with_exp)
    if op == "add":
        return sub() + sub()
    if op == "mul":
        return sub() * sub()
    if op == "pow":
        return sub() ** rng.randint(0, 3)
    if op == "div":
        # a sum of positive symbols and a positive constant never vanishes on the sample box
        den = sp.Add(*rng.sample(leaves, 2)) + rng.randint(1, 2)
        return sub() / den ** rng.randint(1, 2)
    arg = rng.randint(-2, 2) * sx.T * rng.choice([A, B, 1]) + rng.choice([0, A, -B])
    return sp.exp(arg) * sub()


@st.composite
def expressions(draw, depth=3, with_exp=True):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_expression(random.Random(seed), depth, with_exp=with_exp)


def homogeneous_system(rng: random.Random, m: int = 3) -> OdeSystem:
    """Random system whose right-hand sides are homogeneous of degree 1 in u."""
    us = [sx.u(k) for k in range(1, m + 1)]
    f = []
    for _ in range(m):
        terms = [rng.randint(-3, 3) * rng.choice([A, B, 1]) * rng.choice(us) for _ in range(2)]
        i, j, k = (rng.choice(us) for _ in range(3))
        terms.append(rng.randint(1, 3) * A * i * j / (k + rng.choice(us)))
        if rng.random() < 0.5:
            terms.append(sx.T * B * rng.choice(us))
        f.append(sp.Add(*terms))
    return OdeSystem(tuple(f), params=(A, B), name="homogeneous")


def autonomous_system(rng: random.Random, m: int = 3) -> OdeSystem:
    us = [sx.u(k) for k in range(1, m + 1)]
    f = [random_expression(rng, 2, us, with_exp=False) for _ in range(m)]
    f = [e.xreplace({sx.T: A}) for e in f]
    return OdeSystem(tuple(f), params=(A, B), name="autonomous")


def random_point(rng: random.Random, symbols, low=0.5, high=2.0):
    return {s: rng.uniform(low, high) for s in symbols}
