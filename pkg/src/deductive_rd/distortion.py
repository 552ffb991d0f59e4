"""Closure-based fidelity and distortion, zero-distortion sets, and assumption checks."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx
import numpy as np

from .datalog import Fact, Program, closure
from .source import DeductiveSource, delta_core, extract_core

DEFAULT_CORE_CAP = 16


class CoreTooLarge(ValueError):
    pass


def _jaccard(a: frozenset, b: frozenset) -> float:
    union = len(a | b)
    if union == 0:
        return 1.0
    return len(a & b) / union


def closure_fidelity(program: Program, S: Iterable[Fact], T: Iterable[Fact]) -> float:
    """Jaccard similarity of ``Cn(S)`` and ``Cn(T)`` (``0/0 := 1``)."""
    return _jaccard(closure(program, S), closure(program, T))


def _substituted(source: DeductiveSource, s: Fact, s_hat: Fact) -> frozenset[Fact]:
    return source.reasoner.extend(source.without(s), [s_hat])


def closure_distortion(source: DeductiveSource, s: Fact, s_hat: Fact) -> float:
    """Jaccard distance between ``Cn(S_O)`` and ``Cn((S_O - {s}) | {s_hat})``."""
    if s not in source.stored:
        raise ValueError(f"{s} is not a stored fact")
    reference = source.reasoner.extend(source.without(s), [s])
    other = _substituted(source, s, s_hat)
    union = len(reference | other)
    if union == 0:
        return 0.0
    return 1.0 - len(reference & other) / union


def hamming_distortion(s: Fact, s_hat: Fact) -> int:
    return int(s != s_hat)


def delta_distortion(source: DeductiveSource, s: Fact, s_hat: Fact, delta: int) -> int:
    """0 iff all of ``S_O`` is recovered within ``delta`` steps after substitution."""
    if s not in source.stored:
        raise ValueError(f"{s} is not a stored fact")
    reached = source.reasoner.bounded(source.without(s) | {s_hat}, delta)
    return 0 if reached.issuperset(source.stored) else 1


@dataclass(frozen=True)
class DistortionMatrix:
    rows: tuple[Fact, ...]
    cols: tuple[Fact, ...]
    values: np.ndarray = field(repr=False)
    kind: str = "closure"
    delta: int | None = None

    def row(self, s: Fact) -> np.ndarray:
        return self.values[self.rows.index(s)]

    def to_csv(self) -> str:
        lines = ["," + ",".join(str(c) for c in self.cols)]
        for r, vals in zip(self.rows, self.values):
            lines.append(str(r) + "," + ",".join(f"{v:.12g}" for v in vals))
        return "\n".join(lines) + "\n"


def distortion_matrix(
    source: DeductiveSource,
    kind: str = "closure",
    delta: int | None = None,
    rows: Iterable[Fact] | None = None,
    cols: Iterable[Fact] | None = None,
) -> DistortionMatrix:
    """Tabulate a distortion over stored (or given) rows and reconstruction columns."""
    rows = tuple(source.stored if rows is None else rows)
    cols = tuple(source.recon if cols is None else cols)
    if kind == "closure":
        fn = lambda s, t: closure_distortion(source, s, t)
    elif kind == "hamming":
        fn = hamming_distortion
    elif kind == "delta":
        if delta is None:
            raise ValueError("delta distortion needs a depth")
        fn = lambda s, t: delta_distortion(source, s, t, delta)
    else:
        raise ValueError(f"unknown distortion kind {kind!r}")
    values = np.array([[fn(s, t) for t in cols] for s in rows], dtype=float).reshape(len(rows), len(cols))
    return DistortionMatrix(rows, cols, values, kind, delta if kind == "delta" else None)


@dataclass(frozen=True)
class ReconSets:
    sets: dict[Fact, frozenset[Fact]]
    variant: str = "unbounded"
    delta: int | None = None
    alphabet: tuple[Fact, ...] = ()

    def __getitem__(self, s: Fact) -> frozenset[Fact]:
        return self.sets[s]

    def __iter__(self):
        return iter(self.sets)


def recon_sets(
    source: DeductiveSource,
    delta: int | None = None,
    alphabet: Iterable[Fact] | None = None,
) -> ReconSets:
    """Exact zero-distortion reconstruction set of every stored fact.

    ``delta`` switches to the depth-bounded distortion; ``alphabet`` restricts
    the candidates to a receiver vocabulary ``V`` (unbounded distortion only).
    """
    if delta is not None and alphabet is not None:
        raise ValueError("choose either a depth bound or a restricted alphabet")
    cols = tuple(source.recon if alphabet is None else dict.fromkeys(alphabet))
    if not cols:
        raise ValueError("reconstruction alphabet must be nonempty")
    out = {}
    if delta is None:
        target = source.cn
        for s in source.stored:
            base = source.without(s)
            out[s] = frozenset(t for t in cols if source.reasoner.extend(base, [t]) == target)
        variant = "unbounded" if alphabet is None else "restricted"
    else:
        stored = frozenset(source.stored)
        for s in source.stored:
            base = source.without(s)
            out[s] = frozenset(t for t in cols if source.reasoner.bounded(base | {t}, delta) >= stored)
        variant = "delta"
    return ReconSets(out, variant, delta, cols)


# ---------------------------------------------------------------------------
# assumption validators


@dataclass(frozen=True)
class Verdict:
    name: str
    ok: bool
    witness: tuple | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def as_dict(self) -> dict:
        w = None if self.witness is None else [str(x) if isinstance(x, Fact) else sorted(map(str, x)) if isinstance(x, (set, frozenset)) else x for x in self.witness]
        return {"name": self.name, "ok": self.ok, "witness": w, "detail": self.detail}


def _pairwise_overlap(name: str, core, sets: ReconSets) -> Verdict:
    for a1, a2 in itertools.combinations(core, 2):
        common = sets[a1] & sets[a2]
        if common:
            s_hat = min(common)
            return Verdict(name, False, (a1, a2, s_hat), f"{s_hat} is zero-distortion for {a1} and {a2}")
    return Verdict(name, True)


def check_core_disjoint(source: DeductiveSource, sets: ReconSets | None = None) -> Verdict:
    """Pairwise disjointness of the core zero-distortion sets."""
    core = extract_core(source).core
    sets = recon_sets(source) if sets is None else sets
    return _pairwise_overlap("core_disjoint", core, sets)


def check_core_coverage(source: DeductiveSource, sets: ReconSets | None = None) -> Verdict:
    dec = extract_core(source)
    sets = recon_sets(source) if sets is None else sets
    if dec.mass == 0:
        hit = set(sets.alphabet) & source.cn
        if hit:
            return Verdict("core_coverage", True)
        return Verdict("core_coverage", False, (), "no reconstruction lies in Cn(S_O)")
    for a in dec.core:
        if not sets[a]:
            return Verdict("core_coverage", False, (a,), f"{a} has no zero-distortion reconstruction")
    return Verdict("core_coverage", True)


def check_delta_disjoint(source: DeductiveSource, delta: int) -> Verdict:
    core = [s for s in source.stored if s in delta_core(source, delta)]
    return _pairwise_overlap(f"delta_disjoint[{delta}]", core, recon_sets(source, delta=delta))


def compatibility_graph(core, sets: ReconSets) -> nx.Graph:
    """Core symbols joined when their zero-distortion sets intersect."""
    g = nx.Graph()
    g.add_nodes_from(core)
    for a1, a2 in itertools.combinations(core, 2):
        if sets[a1] & sets[a2]:
            g.add_edge(a1, a2)
    return g


def check_pairwise_realisability(
    source: DeductiveSource,
    sets: ReconSets | None = None,
    cap: int = DEFAULT_CORE_CAP,
) -> Verdict:
    """Every pairwise-compatible core subset has a common zero-distortion reconstruction.

    It suffices to test the maximal cliques of the compatibility graph.
    """
    core = extract_core(source).core
    if len(core) > cap:
        raise CoreTooLarge(f"core has {len(core)} facts (cap {cap})")
    sets = recon_sets(source) if sets is None else sets
    g = compatibility_graph(core, sets)
    for clique in sorted(nx.find_cliques(g), key=lambda c: sorted(c)):
        common = frozenset.intersection(*(sets[a] for a in clique))
        if not common:
            return Verdict(
                "pairwise_realisability", False, (frozenset(clique),),
                "pairwise compatible subset without a common reconstruction",
            )
    return Verdict("pairwise_realisability", True)
