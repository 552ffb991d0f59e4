"""Deterministic instance families.

* worked examples (``EX_ORDER``, ``EX_MIN``, ``EX_DEPTH``, ``EX_CONF``, ``EX_RESTRICT``)
* tag-seeded chains, whose core zero-distortion sets are disjoint by construction
* EDB/IDB supply-chain stores with a materialization level ``mu``

Randomness comes only from ``numpy.random.Generator(Philox(seed))``; there is
no global RNG state, so a (family, params, seed) triple always yields the same
instance file byte for byte.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .datalog import Fact, Program, parse_program
from .source import DeductiveSource, extract_core

EXAMPLES = ("EX_ORDER", "EX_MIN", "EX_DEPTH", "EX_CONF", "EX_RESTRICT")


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def _facts(*names: str) -> list[Fact]:
    return [Fact(n) for n in names]


def gen_example(name: str) -> DeductiveSource:
    """One of the small worked examples, with the uniform source."""
    key = name.upper()
    if key == "EX_ORDER":
        prog = parse_program("p :- q.\nq :- p.")
        return DeductiveSource.build(prog, _facts("p", "q", "r"))
    if key == "EX_MIN":
        prog = parse_program("c :- a, b.")
        return DeductiveSource.build(prog, _facts("a", "b", "c"))
    if key == "EX_DEPTH":
        prog = parse_program("c :- a.\nd :- c.\nf :- b.\ne :- f.")
        return DeductiveSource.build(prog, _facts("a", "b", "d", "e"))
    if key == "EX_CONF":
        prog = parse_program("r :- a1, a2.\na1 :- b, r.\na2 :- b, r.")
        stored = _facts("a1", "a2", "b")
        return DeductiveSource.build(prog, stored, recon=[*stored, Fact("r")])
    if key == "EX_RESTRICT":
        return DeductiveSource.build(Program.from_parts(), _facts("a", "b"))
    raise ValueError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")


def gen_pairwise_witnesses(k: int = 3) -> DeductiveSource:
    """``k`` core atoms where every pair, and no larger group, shares a reconstruction.

    For ``i < j`` the auxiliary atom ``w_i_j`` is derived from ``a_i, a_j`` and
    restores either of them from the other, so ``R(a_i) = {a_i} | {w_i_j : j != i}``.
    With ``k >= 3`` the sets meet pairwise but have no common point.
    """
    if k < 2:
        raise ValueError("need at least two core atoms")
    names = [f"a{i + 1}" for i in range(k)]
    lines, witnesses = [], []
    for i in range(k):
        for j in range(i + 1, k):
            w = f"w{i + 1}_{j + 1}"
            witnesses.append(Fact(w))
            lines += [
                f"{w} :- {names[i]}, {names[j]}.",
                f"{names[i]} :- {w}, {names[j]}.",
                f"{names[j]} :- {w}, {names[i]}.",
            ]
    stored = _facts(*names)
    return DeductiveSource.build(parse_program("\n".join(lines)), stored, recon=[*stored, *witnesses])


# ---------------------------------------------------------------------------
# tag-seeded chains


def gen_tag_seeded(
    k: int,
    depth: int,
    seed: int = 0,
    stored_fraction: float = 1.0,
    branches: int = 0,
    probs: str = "uniform",
    recon: str = "stored",
    shuffle: bool = False,
) -> DeductiveSource:
    """``k`` tags ``t1..tk`` with chains ``lvl{j+1}(X) :- lvl{j}(X)`` of length ``depth``.

    Every ``lvl0(t)`` is stored and heads no rule, so it is the only
    zero-distortion reconstruction of itself and the core is ``{lvl0(t)}``.
    ``stored_fraction`` keeps a seeded fraction of the chain facts;
    ``branches`` adds side rules ``side{b}(X) :- lvl{j}(X)`` at seeded levels; ``probs`` is ``"uniform"`` or ``"random"`` (Dirichlet).
    """
    if k < 1 or depth < 1:
        raise ValueError("need k >= 1 and depth >= 1")
    if not 0.0 <= stored_fraction <= 1.0:
        raise ValueError("stored_fraction must lie in [0, 1]")
    g = rng(seed)
    lines = [f"lvl{j + 1}(X) :- lvl{j}(X)." for j in range(depth)]
    for b in range(branches):
        lines.append(f"side{b}(X) :- lvl{int(g.integers(0, depth + 1))}(X).")
    program = parse_program("\n".join(lines))
    tags = [f"t{i + 1}" for i in range(k)]
    stored = [Fact("lvl0", (t,)) for t in tags]
    chain = [Fact(f"lvl{j}", (t,)) for t in tags for j in range(1, depth + 1)]
    if stored_fraction < 1.0:
        n_keep = math.ceil(stored_fraction * len(chain))
        keep = sorted(g.choice(len(chain), size=n_keep, replace=False)) if n_keep else []
        chain = [chain[i] for i in keep]
    stored += chain
    if shuffle:
        stored = [stored[i] for i in g.permutation(len(stored))]
    if probs == "uniform":
        p = None
    elif probs == "random":
        p = g.dirichlet(np.ones(len(stored)))
        p = (p / p.sum()).tolist()
    else:
        raise ValueError(f"unknown probability profile {probs!r}")
    return DeductiveSource.build(program, stored, p, recon=recon)


# ---------------------------------------------------------------------------
# supply-chain stores

SUPPLY_CHAIN_RULES = """\
reachable(X,Y) :- connected(X,Y).
reachable(X,Z) :- reachable(X,Y), connected(Y,Z).
available(I,L) :- produces(S,I), supplies(S,L).
available(I,L) :- produces(S,I), supplies(S,L0), reachable(L0,L).
"""

EDB_PREDICATES = frozenset({"connected", "supplies", "produces"})


@dataclass(frozen=True)
class SupplyChain:
    source: DeductiveSource
    edb: tuple[Fact, ...]
    idb: tuple[Fact, ...]  # full derivable IDB, sorted
    materialized: tuple[Fact, ...]


def _supply_edb(L: int, S: int, I: int, density: float, g: np.random.Generator) -> list[Fact]:
    locs = [f"l{i}" for i in range(L)]
    sups = [f"s{i}" for i in range(S)]
    items = [f"i{i}" for i in range(I)]
    edb = []
    for x in locs:
        for y in locs:
            if x != y and g.random() < density:
                edb.append(Fact("connected", (x, y)))
    for s in sups:
        # every supplier serves one location and produces one item at least
        served = {int(g.integers(L))} | {j for j in range(L) if g.random() < density}
        edb.extend(Fact("supplies", (s, locs[j])) for j in sorted(served))
        made = {int(g.integers(I))} | {j for j in range(I) if g.random() < density}
        edb.extend(Fact("produces", (s, items[j])) for j in sorted(made))
    return edb


def supply_chain(L: int, S: int, I: int, density: float, mu: float, seed: int = 0) -> SupplyChain:
    """Supply-chain store with its EDB/IDB split exposed."""
    if min(L, S, I) < 1:
        raise ValueError("L, S and I must be positive")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must lie in (0, 1]")
    if not 0.0 <= mu <= 1.0:
        raise ValueError("mu must lie in [0, 1]")
    program = parse_program(SUPPLY_CHAIN_RULES)
    edb = _supply_edb(L, S, I, density, rng(seed))
    probe = DeductiveSource.build(program, edb)
    idb = tuple(sorted(f for f in probe.cn if f.predicate not in EDB_PREDICATES))
    n_mat = math.ceil(mu * len(idb))
    materialized = idb[:n_mat]
    stored = [*edb, *materialized]
    source = DeductiveSource.build(program, stored)
    return SupplyChain(source, tuple(edb), idb, materialized)


def gen_supply_chain(L: int, S: int, I: int, density: float, mu: float, seed: int = 0) -> DeductiveSource:
    """EDB facts first, then the first ``ceil(mu * |IDB|)`` derivable IDB facts in sorted order."""
    return supply_chain(L, S, I, density, mu, seed).source


def compression_ratios(n_core: int, n_stored: int) -> tuple[float, float]:
    """``(R_sem(0) / R(0; d_H), log|A| / log|S_O|)`` for the uniform source."""
    if n_core < 1 or n_stored < n_core:
        raise ValueError("need 1 <= |A| <= |S_O|")
    if n_stored == 1:
        return 1.0, 1.0
    log_ratio = math.log2(n_core) / math.log2(n_stored)
    return n_core / n_stored * log_ratio, log_ratio


@dataclass(frozen=True)
class SweepRow:
    mu: float
    n_redundant: int
    n_stored: int
    rate_ratio: float
    log_ratio: float


def materialization_sweep(
    spec: "GeneratorSpec", mus: Sequence[float] = (0.0, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0)
) -> list[SweepRow]:
    if spec.family != "supply_chain":
        raise ValueError("materialization sweep needs a supply_chain spec")
    rows = []
    for mu in mus:
        params = {**spec.params, "mu": mu}
        source = gen_supply_chain(seed=spec.seed, **params)
        n_core = len(extract_core(source).core)
        n = len(source.stored)
        rows.append(SweepRow(mu, n - n_core, n, *compression_ratios(n_core, n)))
    return rows


# ---------------------------------------------------------------------------
# random propositional programs (property tests)


def gen_random_propositional(
    n_atoms: int, n_rules: int, n_stored: int, seed: int = 0, max_body: int = 2, recon: str = "stored"
) -> DeductiveSource:
    """Random Horn program over ``x0..x{n-1}`` with a random stored subset and Dirichlet source."""
    g = rng(seed)
    atoms = [f"x{i}" for i in range(n_atoms)]
    lines = []
    for _ in range(n_rules):
        head = int(g.integers(n_atoms))
        others = [i for i in range(n_atoms) if i != head]
        size = int(g.integers(1, min(max_body, len(others)) + 1)) if others else 0
        if not size:
            continue
        body = sorted(g.choice(others, size=size, replace=False))
        lines.append(f"{atoms[head]} :- {', '.join(atoms[int(b)] for b in body)}.")
    program = parse_program("\n".join(lines))
    idx = g.choice(n_atoms, size=min(n_stored, n_atoms), replace=False)
    stored = [Fact(atoms[int(i)]) for i in idx]
    p = g.dirichlet(np.ones(len(stored)))
    return DeductiveSource.build(program, stored, (p / p.sum()).tolist(), recon=recon, extra_constants=[Fact(a) for a in atoms])


# ---------------------------------------------------------------------------
# specs


FAMILIES = ("example", "tag_seeded", "supply_chain")
_PARAM_TYPES = {
    "name": str, "k": int, "depth": int, "stored_fraction": float, "branches": int,
    "probs": str, "recon": str, "shuffle": lambda v: str(v).lower() in ("1", "true", "yes"),
    "L": int, "S": int, "I": int, "density": float, "mu": float,
}
DEFAULT_SUPPLY_CHAIN = {"L": 12, "S": 6, "I": 5, "density": 0.15, "mu": 0.1}
# 200 locations; about 1.8k EDB facts and 42k derivable ones
LARGE_SUPPLY_CHAIN = {"L": 200, "S": 20, "I": 10, "density": 0.038, "mu": 0.1}


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "GeneratorSpec":
        family, seed, params = None, 0, {}
        for key, value in pairs:
            key = key.strip()
            value = value.strip()
            if key == "family":
                family = value
            elif key == "seed":
                seed = int(value)
            elif key in _PARAM_TYPES:
                params[key] = _PARAM_TYPES[key](value)
            else:
                raise ValueError(f"unknown generator parameter {key!r}")
        if family is None:
            raise ValueError("generator spec needs a family")
        if family == "supply_chain":
            params = {**DEFAULT_SUPPLY_CHAIN, **params}
        return cls(family, seed, params)

    @classmethod
    def parse(cls, text: str) -> "GeneratorSpec":
        """``key=value`` lines; ``#`` and ``%`` start comments."""
        pairs = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].split("%", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"expected key=value, got {line!r}")
            pairs.append(tuple(line.split("=", 1)))
        return cls.from_pairs(pairs)

    def meta(self) -> dict[str, object]:
        return {"family": self.family, "seed": self.seed, **self.params}

    def build(self) -> DeductiveSource:
        if self.family == "example":
            return gen_example(self.params.get("name", "EX_MIN"))
        if self.family == "tag_seeded":
            p = dict(self.params)
            return gen_tag_seeded(p.pop("k", 2), p.pop("depth", 1), seed=self.seed, **p)
        return gen_supply_chain(seed=self.seed, **self.params)
