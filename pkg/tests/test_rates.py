import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from deductive_rd.datalog import Fact, parse_program
from deductive_rd.distortion import (
    check_core_coverage,
    check_core_disjoint,
    check_pairwise_realisability,
    recon_sets,
)
from deductive_rd.generators import gen_pairwise_witnesses, gen_random_propositional, gen_tag_seeded
from deductive_rd.info import InfeasibleError, binary_entropy, brute_force_min_information, entropy
from deductive_rd.rates import (
    AssumptionError,
    _set_entropy,
    build_gamma0,
    direct_rd_curve,
    direct_zero_rate,
    incompatibility_graph,
    rate_depth_distortion,
    rate_depth_sweep,
    rate_depth_zero,
    rd_curve,
    rd_function,
    restricted_zero_rate,
    zero_rate_disjoint,
    zero_rate_general,
    zero_rate_graph,
)
from deductive_rd.source import DeductiveSource, essential_set, extract_core, is_order_robust, max_intrinsic_depth

from conftest import HB_THIRD, facts, sources

a, b, r, w = (Fact(x) for x in "abrw")
a1, a2 = Fact("a1"), Fact("a2")


def common_witness_source():
    # w restores either core fact, so the incompatibility graph has no edges
    return DeductiveSource.build(parse_program("a :- w.\nb :- w.\nw :- a, b."), [a, b], recon=[a, b, w])


# -- disjoint regime ----------------------------------------------------------


def test_disjoint_minimal_example(ex_min):
    rep = zero_rate_disjoint(ex_min)
    assert rep.value == pytest.approx(2 / 3, abs=1e-12)
    assert rep.regime == "disjoint"
    assert rep.assumptions[0].ok
    assert rep.as_dict()["witnesses"]["core"] == ["a", "b"]


@pytest.mark.parametrize("k,depth", [(2, 1), (3, 2), (4, 3), (5, 1)])
def test_disjoint_uniform_law(k, depth):
    src = gen_tag_seeded(k, depth, seed=k)
    n = len(src.stored)
    assert zero_rate_disjoint(src).value == pytest.approx(k / n * math.log2(k), abs=1e-12)


def test_disjoint_full_core(ex_restrict):
    assert zero_rate_disjoint(ex_restrict).value == pytest.approx(entropy(ex_restrict.p))


def test_disjoint_rejects_overlap(ex_conf):
    with pytest.raises(AssumptionError) as err:
        zero_rate_disjoint(ex_conf)
    assert err.value.verdict.witness == (a1, a2, r)
    assert "zero_rate_general" in str(err.value)


def test_disjoint_rejects_missing_core(ex_min):
    with pytest.raises(AssumptionError):
        zero_rate_disjoint(ex_min.with_recon([Fact("c")]))


def test_disjoint_zero_mass():
    src = DeductiveSource.build(parse_program("a.\nc :- a."), [a, Fact("c")])
    assert extract_core(src).core == ()
    assert zero_rate_disjoint(src).value == 0.0
    assert zero_rate_general(src).value == 0.0


# -- hypergraph ---------------------------------------------------------------


def test_gamma0_confusable(ex_conf):
    g = build_gamma0(ex_conf)
    assert set(g.edges) == {frozenset({a1, a2}), frozenset({b})}
    assert g.witness[frozenset({a1, a2})] == r
    assert g.witness[frozenset({b})] == b
    assert g.contains([a1]) and not g.contains([a1, b]) and not g.contains([])


def test_gamma0_disjoint_is_singletons(ex_min):
    g = build_gamma0(ex_min)
    assert sorted(map(sorted, g.edges)) == [[a], [b]]


def test_gamma0_restricted(ex_restrict):
    g = build_gamma0(ex_restrict, recon_sets(ex_restrict, alphabet=[a]))
    assert g.edges == (frozenset({a}),)


def test_gamma0_empty_core():
    src = DeductiveSource.build(parse_program("a."), [a])
    with pytest.raises(ValueError):
        build_gamma0(src)


def test_general_confusable(ex_conf):
    rep = zero_rate_general(ex_conf)
    assert rep.regime == "hypergraph"
    assert rep.value == pytest.approx(HB_THIRD, abs=1e-9)
    bf = brute_force_min_information(np.full(3, 1 / 3), [[0], [0], [1]], grid_step=0.02)
    assert abs(rep.value - bf) <= 0.02


def test_general_matches_disjoint(ex_min, ex_depth):
    for src in (ex_min, ex_depth):
        assert zero_rate_general(src).value == pytest.approx(zero_rate_disjoint(src).value, abs=1e-9)


def test_general_infeasible(ex_restrict):
    rep = zero_rate_general(ex_restrict, alphabet=[a])
    assert rep.infinite and rep.regime == "infeasible"
    assert rep.witnesses["uncovered"] == b


def test_general_infeasible_zero_probability_is_harmless(ex_restrict):
    src = ex_restrict.with_probs([1.0, 0.0])
    rep = zero_rate_general(src, alphabet=[a])
    assert rep.value == pytest.approx(0.0, abs=1e-12)


def test_pairwise_only_instance():
    src = gen_pairwise_witnesses(3)
    rep = zero_rate_general(src)
    # three pairs as edges, uniform over three symbols
    assert rep.value == pytest.approx(math.log2(3) - 1, abs=1e-9)
    assert rep.value == pytest.approx(direct_zero_rate(src).value, abs=1e-9)
    with pytest.raises(AssumptionError):
        zero_rate_graph(src)


# -- graph regime -------------------------------------------------------------


def test_graph_confusable(ex_conf):
    rep = zero_rate_graph(ex_conf)
    assert rep.regime == "graph"
    assert rep.value == pytest.approx(zero_rate_general(ex_conf).value, abs=1e-9)
    sets = {frozenset(map(str, s)) for s in rep.witnesses["independent_sets"]}
    assert sets == {frozenset({"a1", "a2"}), frozenset({"b"})}


def test_graph_complete(ex_min):
    g = incompatibility_graph(ex_min)
    assert len(g.edges) == 1
    rep = zero_rate_graph(ex_min)
    dec = extract_core(ex_min)
    assert rep.value == pytest.approx(dec.mass * entropy(list(dec.cond.values())), abs=1e-9)


def test_graph_empty():
    src = common_witness_source()
    assert not incompatibility_graph(src).edges
    assert zero_rate_graph(src).value == pytest.approx(0.0, abs=1e-12)
    assert zero_rate_general(src).value == pytest.approx(0.0, abs=1e-12)


# -- R(D) ---------------------------------------------------------------------


def test_rd_endpoints(ex_min):
    assert rd_function(ex_min, 0.0) == pytest.approx(2 / 3, abs=1e-9)
    assert rd_function(ex_min, 1.0) == 0.0
    curve = rd_curve(ex_min)
    assert len(curve.points) == 33
    assert np.all(np.diff(curve.R) <= 1e-9)


def test_rd_decomposition_random_five_facts():
    src = gen_random_propositional(6, 6, 5, seed=3, recon="closure")
    grid = np.linspace(0, 0.5, 11)
    fast = rd_curve(src, grid).R
    slow = direct_rd_curve(src, grid).R
    assert np.max(np.abs(fast - slow)) <= 1e-5


def test_rd_requires_alphabet_inside_closure(ex_restrict):
    src = ex_restrict.with_recon([a, Fact("zz")])
    with pytest.raises(AssumptionError):
        rd_function(src, 0.1)


def test_rd_rejects_negative_and_infeasible(ex_min):
    with pytest.raises(ValueError):
        rd_curve(ex_min, [-0.1])
    with pytest.raises(InfeasibleError):
        rd_function(ex_min.with_recon([Fact("c")]), 0.0)


def test_rd_zero_mass():
    src = DeductiveSource.build(parse_program("a."), [a])
    assert rd_function(src, 0.0) == 0.0


# -- depth --------------------------------------------------------------------


def test_rate_depth_zero_examples(ex_depth):
    assert rate_depth_zero(ex_depth, 0).value == pytest.approx(2.0)
    assert rate_depth_zero(ex_depth, 1).value == pytest.approx(2.0)
    assert rate_depth_zero(ex_depth, 2).value == pytest.approx(0.5)


def test_rate_depth_zero_rejects_overlap(ex_conf):
    with pytest.raises(AssumptionError):
        rate_depth_zero(ex_conf, 2)


def test_rate_depth_distortion_examples(ex_restrict, ex_min):
    expected = 1 - binary_entropy(0.1)
    assert rate_depth_distortion(ex_restrict, 0.1, 0) == pytest.approx(expected, abs=1e-9)
    depth = max_intrinsic_depth(ex_min)
    assert is_order_robust(ex_min)
    assert rate_depth_distortion(ex_min, 0.0, depth) == pytest.approx(2 / 3, abs=1e-9)
    assert rate_depth_distortion(ex_min, 1.0, 0) == 0.0
    with pytest.raises(ValueError):
        rate_depth_distortion(ex_min, -1.0, 0)


def test_sweep_examples(ex_depth, ex_restrict, ex_min):
    assert rate_depth_sweep(ex_depth).phi == pytest.approx((2.0, 2.0, 0.5))
    sweep = rate_depth_sweep(ex_restrict)
    assert sweep.phi == pytest.approx((1.0,))
    assert sweep[7] == pytest.approx(1.0)
    m = rate_depth_sweep(ex_min)
    assert m.phi == pytest.approx((math.log2(3), 2 / 3))
    assert m.stable_depth == 1


# -- restricted alphabets -----------------------------------------------------


def test_restricted_examples(ex_min, ex_restrict, ex_conf):
    rep = restricted_zero_rate(ex_min, [a, b])
    assert rep.regime == "disjoint" and rep.value == pytest.approx(2 / 3)
    inf = restricted_zero_rate(ex_restrict, [a])
    assert inf.infinite and not inf.assumptions[0].ok
    full = restricted_zero_rate(ex_conf, ex_conf.recon)
    assert full.value == pytest.approx(zero_rate_general(ex_conf).value, abs=1e-12)
    with pytest.raises(ValueError):
        restricted_zero_rate(ex_min, [])


# -- invariants ---------------------------------------------------------------

small = dict(max_atoms=5, max_rules=6)


@given(sources(**small))
def test_general_agrees_with_disjoint(src):
    sets = recon_sets(src)
    assume(check_core_disjoint(src, sets) and all(x in src.recon for x in extract_core(src).core))
    assert zero_rate_general(src).value == pytest.approx(zero_rate_disjoint(src).value, abs=1e-9)


@given(sources(**small))
def test_graph_agrees_with_general(src):
    assume(check_pairwise_realisability(src))
    assert zero_rate_graph(src).value == pytest.approx(zero_rate_general(src).value, abs=1e-9)


@given(sources(**small))
def test_general_agrees_with_direct_oracle(src):
    assert zero_rate_general(src).value == pytest.approx(direct_zero_rate(src).value, abs=1e-8)


@given(sources(**small))
def test_rd_endpoint_matches_zero_rate(src):
    assume(check_core_coverage(src))
    assert rd_function(src, 0.0) == pytest.approx(zero_rate_general(src).value, abs=1e-6)


@given(sources(**small))
def test_strict_gain(src):
    dec = extract_core(src)
    assume(dec.redundant and check_core_disjoint(src))
    assert zero_rate_disjoint(src).value < entropy(src.p)


@given(sources(recon="closure", **small))
@settings(max_examples=20)
def test_brute_force_oracle(src):
    assume(len(src.stored) <= 3 and len(src.recon) <= 4)
    sets = recon_sets(src)
    col = {t: j for j, t in enumerate(src.recon)}
    supports = [[col[t] for t in sets[s]] for s in src.stored]
    bf = brute_force_min_information(src.p, supports, grid_step=0.1)
    v = zero_rate_general(src).value
    assert v <= bf + 1e-9
    assert bf - v <= 0.1


@given(sources(**small))
def test_gamma0_structure(src):
    core = extract_core(src).core
    assume(core)
    sets = recon_sets(src)
    g = build_gamma0(src, sets)
    for e in g.edges:
        assert g.witness[e] in frozenset.intersection(*(sets[x] for x in e))
    for e, f in itertools.permutations(g.edges, 2):
        assert not e <= f
    for x in core:
        if sets[x]:
            assert any(x in e for e in g.edges)


def _full_gamma0(core, sets):
    out = []
    for k in range(1, len(core) + 1):
        for W in itertools.combinations(core, k):
            if frozenset.intersection(*(sets[x] for x in W)):
                out.append(frozenset(W))
    return out


def _random_instances(n):
    for seed in range(n):
        src = gen_random_propositional(6, 7, 5, seed=seed, recon="closure")
        core = extract_core(src).core
        if 0 < len(core) <= 4:
            yield src


def test_maximal_hyperedges_are_sound():
    checked = 0
    for src in itertools.chain(_random_instances(60), [gen_pairwise_witnesses(3), gen_pairwise_witnesses(4)]):
        dec = extract_core(src)
        sets = recon_sets(src)
        if any(not sets[x] for x in dec.core):
            continue
        pi = {x: q for x, q in dec.cond.items() if q > 0}
        full = _set_entropy(pi, _full_gamma0(dec.core, sets))[0]
        maximal = _set_entropy(pi, build_gamma0(src, sets).edges)[0]
        assert maximal <= full + 1e-9
        assert maximal == pytest.approx(full, abs=1e-9)
        checked += 1
    assert checked >= 20


@given(sources(**small))
def test_incompatibility_graph_shape(src):
    assume(extract_core(src).core)
    g = incompatibility_graph(src)
    for e in g.edges:
        assert len(e) == 2


@given(sources(**small), st.integers(0, 3))
def test_depth_zero_rate_is_entropy(src, delta):
    assert rate_depth_zero(src, 0).value == pytest.approx(entropy(src.p), abs=1e-12)
    phi = rate_depth_sweep(src).phi
    assert all(x >= y - 1e-12 for x, y in zip(phi, phi[1:]))


@given(sources(**small))
def test_sweep_stabilizes_at_core_rate(src):
    assume(is_order_robust(src))
    sweep = rate_depth_sweep(src)
    dd = max_intrinsic_depth(src)
    assert sweep[dd] == pytest.approx(extract_core(src).entropy_term, abs=1e-12)
