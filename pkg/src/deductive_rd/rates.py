"""Zero-distortion rates, core-decomposed rate-distortion, and rate-depth laws.

Every rate comes back as a :class:`RateReport` carrying the regime that produced
it and the assumption verdicts that licensed the formula.  Infeasibility is a
value (``math.inf``), never an exception.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .datalog import Fact
from .distortion import (
    DEFAULT_CORE_CAP,
    ReconSets,
    Verdict,
    check_core_coverage,
    check_core_disjoint,
    check_delta_disjoint,
    check_pairwise_realisability,
    compatibility_graph,
    distortion_matrix,
    recon_sets,
)
from .info import (
    RDCurve,
    RDPoint,
    RateDistortionSolver,
    default_grid,
    entropy,
    min_information_constrained,
)
from .source import DeductiveSource, depth_profile, extract_core


class AssumptionError(ValueError):
    """A closed-form formula was requested outside its hypotheses."""

    def __init__(self, message: str, verdict: Verdict | None = None):
        super().__init__(message)
        self.verdict = verdict


@dataclass(frozen=True)
class RateReport:
    value: float
    regime: str
    assumptions: tuple[Verdict, ...] = ()
    witnesses: dict = field(default_factory=dict)

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)

    def as_dict(self) -> dict:
        witnesses = dict(self.witnesses)
        if "edge_witness" in witnesses:
            witnesses["edge_witness"] = [
                {"edge": sorted(e), "witness": w} for e, w in witnesses["edge_witness"].items()
            ]

        def plain(v):
            if isinstance(v, Fact):
                return str(v)
            if isinstance(v, (set, frozenset)):
                return sorted(plain(x) for x in v)
            if isinstance(v, (list, tuple)):
                return [plain(x) for x in v]
            if isinstance(v, dict):
                return {str(plain(k)) if not isinstance(k, str) else k: plain(x) for k, x in v.items()}
            return v

        return {
            "value": self.value,
            "unit": "bits",
            "regime": self.regime,
            "assumptions": [v.as_dict() for v in self.assumptions],
            "witnesses": plain(witnesses),
        }


@dataclass(frozen=True)
class Hypergraph:
    """Maximal hyperedges of the core zero-distortion hypergraph."""

    edges: tuple[frozenset[Fact], ...]
    witness: dict[frozenset[Fact], Fact]
    vertices: tuple[Fact, ...] = ()

    def contains(self, subset: Iterable[Fact]) -> bool:
        """Membership in the (downward-closed) hypergraph."""
        subset = frozenset(subset)
        return bool(subset) and any(subset <= e for e in self.edges)


@dataclass(frozen=True)
class IncompatibilityGraph:
    vertices: tuple[Fact, ...]
    edges: frozenset[frozenset[Fact]]

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(tuple(e) for e in self.edges)
        return g

    def maximal_independent_sets(self) -> list[frozenset[Fact]]:
        comp = nx.complement(self.to_networkx())
        return sorted((frozenset(c) for c in nx.find_cliques(comp)), key=lambda c: sorted(c))


def _maximal(sets: Iterable[frozenset]) -> list[frozenset]:
    sets = sorted(set(sets), key=lambda s: (-len(s), sorted(s)))
    out: list[frozenset] = []
    for s in sets:
        if not any(s <= t for t in out):
            out.append(s)
    return sorted(out, key=lambda s: sorted(s))


def build_gamma0(source: DeductiveSource, sets: ReconSets | None = None) -> Hypergraph:
    """Witness inversion: ``W(s_hat) = {a in A : s_hat in R(a)}``, keeping maximal sets."""
    core = extract_core(source).core
    if not core:
        raise ValueError("the core is empty")
    sets = recon_sets(source) if sets is None else sets
    by_set: dict[frozenset, Fact] = {}
    for s_hat in sets.alphabet:
        w = frozenset(a for a in core if s_hat in sets[a])
        if w and w not in by_set:
            by_set[w] = s_hat
    edges = _maximal(by_set)
    return Hypergraph(tuple(edges), {e: by_set[e] for e in edges}, tuple(core))


def incompatibility_graph(source: DeductiveSource, sets: ReconSets | None = None) -> IncompatibilityGraph:
    core = extract_core(source).core
    sets = recon_sets(source) if sets is None else sets
    compat = compatibility_graph(core, sets)
    edges = frozenset(
        frozenset((a, b)) for i, a in enumerate(core) for b in core[i + 1 :] if not compat.has_edge(a, b)
    )
    return IncompatibilityGraph(tuple(core), edges)


def _set_entropy(pi: dict[Fact, float], feasible: Sequence[frozenset[Fact]]) -> tuple[float, np.ndarray]:
    """``min I(A; W)`` with ``W`` ranging over ``feasible`` and ``A in W`` a.s."""
    atoms = list(pi)
    supports = [[j for j, w in enumerate(feasible) if a in w] for a in atoms]
    return min_information_constrained([pi[a] for a in atoms], supports, n_outputs=len(feasible))


def hypergraph_entropy(pi: dict[Fact, float], gamma: Hypergraph) -> float:
    return _set_entropy(pi, gamma.edges)[0]


def graph_entropy(pi: dict[Fact, float], graph: IncompatibilityGraph) -> float:
    return _set_entropy(pi, graph.maximal_independent_sets())[0]


def _cond(dec) -> dict[Fact, float]:
    return {a: w for a, w in dec.cond.items() if w > 0}


# ---------------------------------------------------------------------------
# zero-distortion rates


def zero_rate_disjoint(source: DeductiveSource) -> RateReport:
    """``P_A H(pi_A)``, valid when the core zero-distortion sets are disjoint."""
    dec = extract_core(source)
    sets = recon_sets(source)
    missing = [a for a in dec.core if a not in source.recon]
    if missing:
        raise AssumptionError(f"core facts missing from the reconstruction alphabet: {missing}")
    verdict = check_core_disjoint(source, sets)
    if not verdict:
        raise AssumptionError(f"core zero-distortion sets overlap ({verdict.detail}); use zero_rate_general", verdict)
    if not dec.core:
        coverage = check_core_coverage(source, sets)
        value = 0.0 if coverage else math.inf
        return RateReport(value, "disjoint" if coverage else "infeasible", (verdict, coverage), {"core": ()})
    return RateReport(dec.entropy_term, "disjoint", (verdict,), {"core": dec.core})


def _infeasible_symbol(source: DeductiveSource, sets: ReconSets) -> Fact | None:
    for s, p in zip(source.stored, source.probs):
        if p > 0 and not sets[s]:
            return s
    return None


def zero_rate_general(source: DeductiveSource, alphabet: Iterable[Fact] | None = None) -> RateReport:
    """Exact zero-distortion rate in every regime (hypergraph entropy of the core).

    With ``alphabet`` the reconstruction is restricted to that vocabulary.
    """
    dec = extract_core(source)
    sets = recon_sets(source, alphabet=alphabet)
    bad = _infeasible_symbol(source, sets)
    coverage = check_core_coverage(source, sets)
    if bad is not None:
        return RateReport(math.inf, "infeasible", (coverage,), {"uncovered": bad, "core": dec.core})
    if dec.mass == 0:
        return RateReport(0.0, "hypergraph", (coverage,), {"core": dec.core})
    disjoint = check_core_disjoint(source, sets)
    gamma = build_gamma0(source, sets)
    value = dec.mass * hypergraph_entropy(_cond(dec), gamma)
    return RateReport(
        value,
        "hypergraph",
        (coverage, disjoint),
        {"core": dec.core, "hyperedges": gamma.edges, "edge_witness": gamma.witness},
    )


def zero_rate_graph(source: DeductiveSource, cap: int = DEFAULT_CORE_CAP) -> RateReport:
    """``P_A`` times the graph entropy of the incompatibility graph (pairwise realisability)."""
    dec = extract_core(source)
    sets = recon_sets(source)
    verdict = check_pairwise_realisability(source, sets, cap=cap)
    if not verdict:
        raise AssumptionError("pairwise realisability fails", verdict)
    bad = _infeasible_symbol(source, sets)
    if bad is not None:
        return RateReport(math.inf, "infeasible", (verdict,), {"uncovered": bad})
    if dec.mass == 0:
        return RateReport(0.0, "graph", (verdict,), {"core": dec.core})
    graph = incompatibility_graph(source, sets)
    value = dec.mass * graph_entropy(_cond(dec), graph)
    return RateReport(
        value, "graph", (verdict,),
        {"core": dec.core, "independent_sets": tuple(graph.maximal_independent_sets())},
    )


def restricted_zero_rate(source: DeductiveSource, alphabet: Iterable[Fact]) -> RateReport:
    """Zero-distortion rate for a receiver limited to the vocabulary ``alphabet``."""
    V = tuple(dict.fromkeys(alphabet))
    if not V:
        raise ValueError("restricted alphabet must be nonempty")
    dec = extract_core(source)
    sets = recon_sets(source, alphabet=V)
    covered = Verdict("H1_nonempty", all(sets[a] for a in dec.core),
                      next(((a,) for a in dec.core if not sets[a]), None))
    separated = check_core_disjoint(source, sets)
    separated = Verdict("H2_disjoint", separated.ok, separated.witness, separated.detail)
    for a, p in zip(source.stored, source.probs):
        if a in dec.core and p > 0 and not sets[a]:
            return RateReport(math.inf, "infeasible", (covered, separated), {"uncovered": a})
    if dec.core and covered and separated:
        return RateReport(dec.entropy_term, "disjoint", (covered, separated), {"core": dec.core})
    report = zero_rate_general(source, alphabet=V)
    return RateReport(report.value, report.regime, (covered, separated, *report.assumptions), report.witnesses)


# ---------------------------------------------------------------------------
# full rate-distortion


def _require_inside_closure(source: DeductiveSource) -> None:
    outside = [t for t in source.recon if t not in source.cn]
    if outside:
        raise AssumptionError(
            f"reconstruction alphabet leaves Cn(S_O): {', '.join(map(str, outside[:5]))}"
        )


@dataclass
class _SubSource:
    rows: tuple[Fact, ...]
    pi: np.ndarray
    mass: float
    solver: RateDistortionSolver | None


def _core_subsource(source: DeductiveSource, rows: Sequence[Fact], kind: str, delta=None, tol=1e-12) -> _SubSource:
    prob = source.prob
    rows = tuple(rows)
    mass = float(sum(prob[a] for a in rows))
    if mass == 0:
        return _SubSource(rows, np.zeros(0), 0.0, None)
    pi = np.array([prob[a] / mass for a in rows])
    d = distortion_matrix(source, kind, delta=delta, rows=rows).values
    return _SubSource(rows, pi, mass, RateDistortionSolver(pi, d, tol=tol))


def rd_function(source: DeductiveSource, D: float, tol: float = 1e-12) -> float:
    """``R_sem(D) = P_A R^(A)(D / P_A)`` under closure distortion."""
    return rd_curve(source, [D], tol=tol).points[0].R


def rd_curve(source: DeductiveSource, grid: Sequence[float] | int | None = None, tol: float = 1e-12) -> RDCurve:
    """Closure-distortion R(D) of the source via its core sub-source.

    ``grid`` is a list of distortion levels (full-source units) or a number of
    evenly spaced levels between the extreme distortions (default 33).
    """
    _require_inside_closure(source)
    if grid is not None and not isinstance(grid, int) and min(grid) < 0:
        raise ValueError("distortion levels must be nonnegative")
    dec = extract_core(source)
    sub = _core_subsource(source, dec.core, "closure", tol=tol)
    return _scaled_curve(sub, grid, source)


def _scaled_curve(sub: _SubSource, grid, source) -> RDCurve:
    if grid is None or isinstance(grid, int):
        n = 33 if grid is None else grid
        levels = [0.0] if sub.solver is None else sub.mass * default_grid(sub.pi, sub.solver.d_full, n)
    else:
        levels = np.asarray(grid, dtype=float)
    if sub.solver is None:
        pts = tuple(RDPoint(float(D), 0.0, 0.0, 0, 0.0) for D in levels)
    else:
        pts = tuple(
            RDPoint(float(D), sub.mass * pt.R, pt.slope, pt.iterations, sub.mass * pt.residual, pt.kernel)
            for D, pt in zip(levels, (sub.solver.rate(float(D) / sub.mass) for D in levels))
        )
    return RDCurve(pts, sub.rows, source.recon)


def direct_rd_curve(source: DeductiveSource, grid: Sequence[float], kind: str = "closure", delta=None, tol=1e-12) -> RDCurve:
    """R(D) solved on the full source without decomposition (verification route)."""
    d = distortion_matrix(source, kind, delta=delta).values
    solver = RateDistortionSolver(source.p, d, tol=tol)
    return RDCurve(tuple(solver.rate(float(D)) for D in grid), source.stored, source.recon)


# ---------------------------------------------------------------------------
# bounded inference


def rate_depth_zero(source: DeductiveSource, delta: int) -> RateReport:
    """``P_delta H(pi_delta)`` under depth-``delta`` disjointness."""
    profile = depth_profile(source)
    core = [s for s in source.stored if s in profile.core(delta)]
    missing = [a for a in core if a not in source.recon]
    if missing:
        raise AssumptionError(f"delta-core facts missing from the reconstruction alphabet: {missing}")
    verdict = check_delta_disjoint(source, delta)
    if not verdict:
        raise AssumptionError(f"delta-core zero-distortion sets overlap ({verdict.detail})", verdict)
    mass = profile.mass(delta)
    cond = profile.cond(delta)
    value = 0.0 if cond is None else mass * entropy(list(cond.values()))
    return RateReport(value, "disjoint", (verdict,), {"core": tuple(core), "delta": delta})


def rate_depth_distortion(source: DeductiveSource, D: float, delta: int, tol: float = 1e-12) -> float:
    """``R_sem(D, delta) = P_delta R^(A_delta)(D / P_delta)`` under the depth-bounded distortion."""
    if D < 0:
        raise ValueError("distortion must be nonnegative")
    return rate_depth_curve(source, delta, [D], tol=tol).points[0].R


@dataclass(frozen=True)
class DepthSweep:
    phi: tuple[float, ...]
    cores: tuple[frozenset[Fact], ...]
    max_depth: int

    def __getitem__(self, delta: int) -> float:
        return self.phi[min(delta, len(self.phi) - 1)]

    @property
    def stable_depth(self) -> int:
        return len(self.phi) - 1


def rate_depth_sweep(source: DeductiveSource) -> DepthSweep:
    """``phi(delta) = P_delta H(pi_delta)`` for every depth up to stabilization."""
    profile = depth_profile(source)
    phi = tuple(rate_depth_zero(source, d).value for d in range(profile.stable_depth + 1))
    return DepthSweep(phi, profile.cores_by_depth, profile.max_depth)


def direct_zero_rate(
    source: DeductiveSource, delta: int | None = None, alphabet: Iterable[Fact] | None = None
) -> RateReport:
    """``min I(S; S_hat)`` with ``S_hat`` in the zero set of ``S`` a.s., over the whole source.

    No decomposition is used, so this is the reference value for the core formulas.
    """
    sets = recon_sets(source, delta=delta, alphabet=alphabet)
    cols = {t: j for j, t in enumerate(sets.alphabet)}
    bad = _infeasible_symbol(source, sets)
    if bad is not None:
        return RateReport(math.inf, "infeasible", (), {"uncovered": bad})
    everything = list(range(len(cols)))
    supports = [[cols[t] for t in sets[s]] or everything for s in source.stored]
    value, _ = min_information_constrained(source.p, supports, n_outputs=len(cols))
    return RateReport(value, "direct", (), {"delta": delta})


def rate_depth_curve(
    source: DeductiveSource, delta: int, grid: Sequence[float] | int | None = None, tol: float = 1e-12
) -> RDCurve:
    """``R_sem(D, delta)`` over a grid, solved on the ``delta``-core sub-source."""
    profile = depth_profile(source)
    core = [s for s in source.stored if s in profile.core(delta)]
    sub = _core_subsource(source, core, "delta", delta=delta, tol=tol)
    return _scaled_curve(sub, grid, source)
