import math

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from deductive_rd.datalog import Fact, Program, Rule, Atom
from deductive_rd.generators import gen_example

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

HB_THIRD = -(1 / 3) * math.log2(1 / 3) - (2 / 3) * math.log2(2 / 3)


@pytest.fixture
def ex_min():
    return gen_example("EX_MIN")


@pytest.fixture
def ex_depth():
    return gen_example("EX_DEPTH")


@pytest.fixture
def ex_order():
    return gen_example("EX_ORDER")


@pytest.fixture
def ex_conf():
    return gen_example("EX_CONF")


@pytest.fixture
def ex_restrict():
    return gen_example("EX_RESTRICT")


def facts(*names):
    return [Fact(n) for n in names]


@st.composite
def horn_programs(draw, max_atoms=6, max_rules=8, max_body=3):
    """Random propositional Horn program with its atom list."""
    n = draw(st.integers(2, max_atoms))
    atoms = [f"x{i}" for i in range(n)]
    rules = []
    for _ in range(draw(st.integers(0, max_rules))):
        head = draw(st.sampled_from(atoms))
        body = draw(st.lists(st.sampled_from(atoms), min_size=1, max_size=max_body, unique=True))
        rules.append(Rule(Atom(head), tuple(Atom(b) for b in body)))
    return Program.from_parts(rules), atoms


@st.composite
def program_and_base(draw, **kw):
    program, atoms = draw(horn_programs(**kw))
    base = draw(st.sets(st.sampled_from(atoms)))
    return program, atoms, frozenset(Fact(a) for a in base)


@st.composite
def sources(draw, recon=None, **kw):
    """Random propositional source; ``recon`` defaults to a drawn mode."""
    from deductive_rd.source import DeductiveSource

    program, atoms = draw(horn_programs(**kw))
    stored = draw(st.lists(st.sampled_from(atoms), min_size=1, unique=True))
    mode = recon or draw(st.sampled_from(["stored", "closure"]))
    return DeductiveSource.build(program, [Fact(a) for a in stored], recon=mode)
