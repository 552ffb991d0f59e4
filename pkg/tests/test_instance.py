import pytest
from hypothesis import given

from deductive_rd.datalog import Fact
from deductive_rd.generators import gen_example, gen_tag_seeded
from deductive_rd.instance import InstanceFormatError, dump, dumps, load, loads

from conftest import sources

MIN_TEXT = """\
% a comment
[rules]
c :- a, b.
[stored]
a. p=0.5
b. p=0.25
c. p=0.25
[reconstruction]
closure
"""


def same(x, y):
    return (x.program, x.stored, x.probs, x.recon) == (y.program, y.stored, y.probs, y.recon)


def test_loads_basic():
    src = loads(MIN_TEXT)
    assert src.stored == (Fact("a"), Fact("b"), Fact("c"))
    assert src.probs == (0.5, 0.25, 0.25)
    assert set(src.recon) == src.cn


def test_defaults():
    src = loads("[stored]\na.\nb.\n")
    assert src.probs == (0.5, 0.5)
    assert src.recon == src.stored


def test_explicit_reconstruction():
    src = gen_example("EX_MIN").with_recon([Fact("a"), Fact("c")])
    text = dumps(src)
    assert text.split("[reconstruction]\n")[1] == "a.\nc.\n"
    assert same(loads(text), src)
    # S_O plus r is exactly the closure of the confusable example
    assert dumps(gen_example("EX_CONF")).endswith("[reconstruction]\nclosure\n")


@pytest.mark.parametrize("name", ["EX_ORDER", "EX_MIN", "EX_DEPTH", "EX_CONF", "EX_RESTRICT"])
def test_round_trip_examples(name):
    src = gen_example(name)
    again = loads(dumps(src))
    assert same(src, again)
    assert dumps(again) == dumps(src)


def test_round_trip_random_probs(tmp_path):
    src = gen_tag_seeded(3, 2, seed=8, probs="random", shuffle=True)
    path = tmp_path / "inst.dlg"
    dump(src, path, meta={"family": "tag_seeded", "seed": 8})
    assert path.read_text().startswith("% family=tag_seeded\n% seed=8\n")
    assert same(load(path), src)


@given(sources())
def test_round_trip_property(src):
    assert same(loads(dumps(src)), src)


@pytest.mark.parametrize(
    "text,line",
    [
        ("a.\n[stored]\na.\n", 1),
        ("[stored]\na.\n[stored]\nb.\n", 3),
        ("[facts]\na.\n", 1),
        ("[stored]\na. p=half\n", 2),
        ("[stored]\nq(X).\n", 2),
        ("[stored]\na :- b.\n", 2),
        ("[stored]\na.\n[reconstruction]\nb :- a.\n", 4),
    ],
)
def test_format_errors_with_lines(text, line):
    with pytest.raises(InstanceFormatError) as err:
        loads(text)
    assert err.value.line == line
    assert str(err.value).startswith(f"line {line}:")


@pytest.mark.parametrize(
    "text",
    [
        "[rules]\nc :- a.\n",
        "[stored]\na. p=0.5\nb.\n",
        "[stored]\na. p=0.7\nb. p=0.7\n",
        "[rules]\nc :- \n[stored]\na.\n",
    ],
)
def test_format_errors(text):
    with pytest.raises(InstanceFormatError):
        loads(text)
