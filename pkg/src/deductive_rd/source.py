"""Deductive sources and their core / redundant decomposition.

A :class:`DeductiveSource` fixes a program, an ordered list of stored facts
(the list order is the canonical scan order), a probability per stored fact
and a reconstruction alphabet.  From it we extract the irredundant core by
ordered deletion, the order-free essential set, and the family of depth-bounded
cores together with the maximum intrinsic derivation depth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .datalog import (
    DEFAULT_UNIVERSE_CAP,
    Fact,
    Program,
    Reasoner,
    Universe,
    active_universe,
    derivation_depth,
    iterate_rounds,
)

PROB_TOL = 1e-9


class SourceError(ValueError):
    pass


@dataclass(frozen=True)
class DeductiveSource:
    program: Program
    stored: tuple[Fact, ...]
    probs: tuple[float, ...]
    recon: tuple[Fact, ...]
    universe: Universe
    reasoner: Reasoner = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if len(set(self.stored)) != len(self.stored):
            raise SourceError("stored facts must be distinct")
        if len(self.probs) != len(self.stored):
            raise SourceError("one probability per stored fact is required")
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < 0) or (len(p) and abs(p.sum() - 1.0) > PROB_TOL):
            raise SourceError("probabilities must be nonnegative and sum to 1")
        if not self.recon:
            raise SourceError("reconstruction alphabet must be nonempty")
        outside = [f for f in (*self.stored, *self.recon) if f not in self.universe]
        if outside:
            raise SourceError(f"facts outside the universe: {', '.join(map(str, outside[:5]))}")
        if self.reasoner is None:
            object.__setattr__(self, "reasoner", Reasoner(self.program))

    @classmethod
    def build(
        cls,
        program: Program,
        stored: Sequence[Fact],
        probs: Sequence[float] | None = None,
        recon: str | Iterable[Fact] = "stored",
        extra_constants: Iterable[Fact] = (),
        cap: int = DEFAULT_UNIVERSE_CAP,
    ) -> "DeductiveSource":
        """Assemble a source.

        ``recon`` is ``"stored"`` (the stored facts), ``"closure"`` (``Cn(S_O)``)
        or an explicit iterable of facts.  ``probs`` defaults to uniform.
        """
        stored = tuple(stored)
        if probs is None:
            probs = [1.0 / len(stored)] * len(stored) if stored else []
        explicit = () if isinstance(recon, str) else tuple(dict.fromkeys(recon))
        universe = active_universe(program, (*stored, *explicit, *extra_constants), cap=cap)
        reasoner = Reasoner(program)
        if recon == "stored":
            alphabet = tuple(sorted(stored))
        elif recon == "closure":
            alphabet = tuple(sorted(reasoner.closure(stored)))
        elif isinstance(recon, str):
            raise SourceError(f"unknown reconstruction alphabet {recon!r}")
        else:
            alphabet = explicit
        return cls(program, stored, tuple(float(x) for x in probs), alphabet, universe, reasoner)

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @property
    def prob(self) -> dict[Fact, float]:
        return dict(zip(self.stored, self.probs))

    def closure(self, facts: Iterable[Fact] = None) -> frozenset[Fact]:
        return self.reasoner.closure(self.stored if facts is None else facts)

    @property
    def cn(self) -> frozenset[Fact]:
        """``Cn(S_O)``."""
        return self.closure()

    def without(self, s: Fact) -> frozenset[Fact]:
        return frozenset(self.stored) - {s}

    def reordered(self, order: Sequence[Fact]) -> "DeductiveSource":
        """Same source with a different canonical scan order."""
        if sorted(order) != sorted(self.stored):
            raise SourceError("order must be a permutation of the stored facts")
        prob = self.prob
        return replace(self, stored=tuple(order), probs=tuple(prob[f] for f in order))

    def with_recon(self, recon: Iterable[Fact]) -> "DeductiveSource":
        return DeductiveSource.build(self.program, self.stored, self.probs, tuple(recon))

    def with_probs(self, probs: Sequence[float]) -> "DeductiveSource":
        return replace(self, probs=tuple(float(x) for x in probs))


@dataclass(frozen=True)
class CoreDecomposition:
    core: tuple[Fact, ...]
    redundant: tuple[Fact, ...]
    mass: float
    cond: dict[Fact, float] | None

    @property
    def entropy_term(self) -> float:
        """``P_A * H(pi_A)`` with the zero-mass convention."""
        if self.cond is None:
            return 0.0
        from .info import entropy

        return self.mass * entropy(list(self.cond.values()))


def _decompose(source: DeductiveSource, core: Sequence[Fact]) -> CoreDecomposition:
    kept = set(core)
    prob = source.prob
    mass = float(sum(prob[a] for a in core))
    cond = {a: prob[a] / mass for a in core} if mass > 0 else None
    redundant = tuple(s for s in source.stored if s not in kept)
    return CoreDecomposition(tuple(core), redundant, mass, cond)


def _settled(source: DeductiveSource) -> tuple[frozenset[Fact], frozenset[Fact]]:
    """Facts whose fate in any deletion scan is known up front.

    A stored fact whose predicate heads no rule is never derivable, so it stays.
    Those facts are therefore present at every step, and anything they derive
    is redundant whatever the order.
    """
    heads = source.program.head_predicates
    fixed = frozenset(s for s in source.stored if s.predicate not in heads)
    base = source.reasoner.closure(fixed)
    return fixed, frozenset(s for s in source.stored if s not in fixed and s in base)


def extract_core(source: DeductiveSource) -> CoreDecomposition:
    """Irredundant core by deletion in the stored (canonical) order."""
    fixed, redundant = _settled(source)
    current = set(source.stored) - redundant
    for s in source.stored:
        if s in fixed or s in redundant:
            continue
        current.discard(s)
        if not source.reasoner.derives(current, s):
            current.add(s)
    return _decompose(source, [s for s in source.stored if s in current])


def essential_set(source: DeductiveSource) -> frozenset[Fact]:
    """Stored facts not derivable from the rest of the store."""
    fixed, redundant = _settled(source)
    return fixed | frozenset(
        s for s in source.stored
        if s not in fixed and s not in redundant and not source.reasoner.derives(source.without(s), s)
    )


@dataclass(frozen=True)
class RobustnessVerdict:
    robust: bool
    core: frozenset[Fact]
    essential: frozenset[Fact]
    essential_generates: bool

    def __bool__(self) -> bool:
        return self.robust


def is_order_robust(source: DeductiveSource) -> RobustnessVerdict:
    """Whether the extracted core equals the essential set.

    ``essential_generates`` reports the order-free sufficient condition
    ``Cn(Ess) = Cn(S_O)``, under which every scan order gives the same core.
    """
    core = frozenset(extract_core(source).core)
    ess = essential_set(source)
    generates = source.closure(ess) == source.cn
    return RobustnessVerdict(core == ess, core, ess, generates)


def delta_core(source: DeductiveSource, delta: int) -> frozenset[Fact]:
    """Stored facts not recoverable from the rest of the store within ``delta`` steps."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    out = set()
    for s in source.stored:
        if delta == 0 or s not in source.reasoner.bounded(source.without(s), delta):
            out.add(s)
    return frozenset(out)


def redundancy_depths(source: DeductiveSource) -> dict[Fact, float]:
    """``Dd(s | S_O - {s})`` for every stored fact (``inf`` when underivable).

    ``s`` belongs to the ``delta``-core exactly when this depth exceeds ``delta``.
    """
    return {s: derivation_depth(source.program, source.without(s), s) for s in source.stored}


def max_intrinsic_depth(source: DeductiveSource, core: Iterable[Fact] | None = None) -> int:
    """Largest derivation depth of a stored fact from the core (0 for an empty max)."""
    core = set(extract_core(source).core if core is None else core)
    todo = set(source.stored) - core
    if not todo:
        return 0
    best = 0
    for n, new in enumerate(iterate_rounds(source.program, core), start=1):
        hit = todo & new
        if hit:
            best = n
            todo -= hit
        if not todo:
            break
    if todo:
        raise SourceError("core does not generate the stored facts")
    return best


@dataclass(frozen=True)
class DepthProfile:
    cores_by_depth: tuple[frozenset[Fact], ...]
    masses: tuple[float, ...]
    conds: tuple[dict[Fact, float] | None, ...]
    max_depth: int
    redundancy_depth: dict[Fact, float]

    @property
    def stable_depth(self) -> int:
        return len(self.cores_by_depth) - 1

    def core(self, delta: int) -> frozenset[Fact]:
        return self.cores_by_depth[min(delta, self.stable_depth)]

    def mass(self, delta: int) -> float:
        return self.masses[min(delta, self.stable_depth)]

    def cond(self, delta: int) -> dict[Fact, float] | None:
        return self.conds[min(delta, self.stable_depth)]


def depth_profile(source: DeductiveSource) -> DepthProfile:
    """The filtration ``A_0 ⊇ A_1 ⊇ ...`` up to its stabilization.

    Computed from the per-fact redundancy depths, so the reported last core is
    exact: no fact leaves the core after ``stable_depth``.
    """
    rd = redundancy_depths(source)
    d_max = max_intrinsic_depth(source)
    finite = [int(v) for v in rd.values() if v != math.inf]
    horizon = max([d_max, *finite]) if finite else d_max
    prob = source.prob
    cores, masses, conds = [], [], []
    for delta in range(horizon + 1):
        core = frozenset(s for s in source.stored if rd[s] > delta)
        mass = float(sum(prob[s] for s in core))
        cores.append(core)
        masses.append(mass)
        conds.append({s: prob[s] / mass for s in source.stored if s in core} if mass > 0 else None)
    return DepthProfile(tuple(cores), tuple(masses), tuple(conds), d_max, rd)
