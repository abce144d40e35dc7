"""Relation networks, decomposition and strong 3-consistency."""

import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vcsp import CostTable, DomainSpec, Instance, Term, VcspError
from vcsp.consistency import (
    BinaryNetwork,
    certify_decomposition,
    compose,
    decompose_instance,
    enforce_strong_3_consistency,
    image,
    restrict_instance,
    restrict_network,
    support_maps,
)
from vcsp.model import feasible_assignments

from harness import random_majority_closed_instance


def rel_from_pairs(shape, pairs):
    mat = np.zeros(shape, dtype=bool)
    for a, b in pairs:
        mat[a, b] = True
    return mat


class TestImage:
    def test_empty_input(self):
        assert image(np.ones((2, 2), dtype=bool), set()) == set()

    def test_full_relation(self):
        assert image(np.ones((2, 3), dtype=bool), {1}) == {0, 1, 2}

    def test_single_lookup(self):
        rel = rel_from_pairs((2, 2), [(0, 1), (1, 0)])
        assert image(rel, {0}) == {1}
        assert image(rel, {0}, forward=False) == {1}


class TestCompose:
    def test_identity(self):
        rel = rel_from_pairs((3, 3), [(0, 1), (2, 0)])
        ident = np.eye(3, dtype=bool)
        assert np.array_equal(compose(rel, ident), rel)

    def test_empty(self):
        rel = np.zeros((2, 2), dtype=bool)
        assert not compose(rel, np.ones((2, 2), dtype=bool)).any()

    def test_dimension_mismatch(self):
        with pytest.raises(VcspError):
            compose(np.ones((2, 3), dtype=bool), np.ones((2, 3), dtype=bool))

    @settings(max_examples=60, deadline=None)
    @given(arrays(bool, (3, 3)), arrays(bool, (3, 3)))
    def test_matches_triple_loop_oracle(self, a, b):
        want = np.zeros((3, 3), dtype=bool)
        for x in range(3):
            for z in range(3):
                want[x, z] = any(a[x, y] and b[y, z] for y in range(3))
        assert np.array_equal(compose(a, b), want)


class TestDecompose:
    def test_single_crisp_binary_term(self):
        pairs = [(0, 0), (0, 1), (1, 1)]
        inst = Instance(DomainSpec((2, 2)), [
            Term(CostTable.relation((2, 2), pairs), (0, 1))])
        net = decompose_instance(inst)
        assert np.array_equal(net.rel(0, 1), rel_from_pairs((2, 2), pairs))
        assert list(net.unary[0]) == [True, True]
        assert list(net.unary[1]) == [True, True]

    def test_shared_variable_intersection(self):
        # unary projections of {0} and {0,1} intersect on the shared variable
        inst = Instance(DomainSpec((2, 2)), [
            Term(CostTable.relation((2, 2), [(0, 0)]), (0, 1)),
            Term(CostTable.relation((2, 2), [(0, 0), (1, 1)]), (0, 1))])
        net = decompose_instance(inst)
        assert list(net.unary[0]) == [True, False]

    def test_majority_relation_projects_full(self):
        maj = [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0),
               (1, 1, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1)]
        maj = [t for t in maj if sorted(t).count(sorted(t)[1]) >= 2]
        inst = Instance(DomainSpec((2, 2, 2)), [
            Term(CostTable.relation((2, 2, 2), maj), (0, 1, 2))])
        net = decompose_instance(inst)
        for i, j in [(0, 1), (0, 2), (1, 2)]:
            assert net.rel(i, j).all()
        assert certify_decomposition(net, inst)

    def test_repeated_scope_variable(self):
        # term on (x, x): only diagonal tuples can ever realize
        inst = Instance(DomainSpec((2,)), [
            Term(CostTable.relation((2, 2), [(0, 1), (1, 1)]), (0, 0))])
        net = decompose_instance(inst)
        assert list(net.unary[0]) == [False, True]


class TestEnforce:
    def test_fixed_point_unchanged(self):
        inst = Instance(DomainSpec((2, 2)), [
            Term(CostTable.relation((2, 2), [(0, 0), (1, 1)]), (0, 1))])
        net = decompose_instance(inst)
        out, empty = enforce_strong_3_consistency(net)
        assert not empty
        assert out.equal(net)

    def test_odd_disequality_cycle_empty(self):
        neq = CostTable.relation((2, 2), [(0, 1), (1, 0)])
        inst = Instance(DomainSpec((2, 2, 2)), [
            Term(neq, (0, 1)), Term(neq, (1, 2)), Term(neq, (0, 2))])
        assert feasible_assignments(inst) == set()
        _, empty = enforce_strong_3_consistency(decompose_instance(inst))
        assert empty

    def test_majority_closed_equals_global_projections(self):
        rng = random.Random(31)
        for _ in range(15):
            inst = random_majority_closed_instance(rng)
            net, empty = enforce_strong_3_consistency(decompose_instance(inst))
            feas = feasible_assignments(inst)
            assert empty == (not feas)
            if empty:
                continue
            n = inst.domains.variable_count
            for i in range(n):
                assert {a for a in range(inst.domains.sizes[i])
                        if net.unary[i][a]} == {x[i] for x in feas}
            for i in range(n):
                for j in range(i + 1, n):
                    got = {(a, b) for a, b in zip(*np.nonzero(net.rel(i, j)))}
                    assert got == {(x[i], x[j]) for x in feas}

    def test_confluence_under_randomized_orders(self):
        rng = random.Random(37)
        for _ in range(10):
            inst = random_majority_closed_instance(rng)
            base = decompose_instance(inst)
            ref, ref_empty = enforce_strong_3_consistency(base)
            for seed in range(4):
                out, empty = enforce_strong_3_consistency(
                    base, rng=random.Random(seed))
                assert empty == ref_empty
                assert out.equal(ref)

    def test_soundness_never_drops_feasible_pairs(self):
        rng = random.Random(43)
        for _ in range(15):
            # arbitrary crisp instances: enforcement may keep too much but
            # must never prune a globally realized label or pair
            n = rng.randint(3, 4)
            sizes = tuple(rng.randint(2, 3) for _ in range(n))
            terms = []
            for _ in range(rng.randint(2, 4)):
                i, j = rng.sample(range(n), 2)
                space = list(itertools.product(range(sizes[i]), range(sizes[j])))
                tuples = rng.sample(space, rng.randint(1, len(space)))
                terms.append(Term(CostTable.relation(
                    (sizes[i], sizes[j]), tuples), (i, j)))
            inst = Instance(DomainSpec(sizes), terms)
            net, _ = enforce_strong_3_consistency(decompose_instance(inst))
            for x in feasible_assignments(inst):
                for i in range(n):
                    assert net.unary[i][x[i]]
                    for j in range(i + 1, n):
                        assert net.rel(i, j)[x[i], x[j]]


class TestCertify:
    def test_crisp_binary_only_true(self):
        rng = random.Random(47)
        for _ in range(10):
            inst = random_majority_closed_instance(rng)
            net = decompose_instance(inst)
            assert certify_decomposition(net, inst)

    def test_parity_fails(self):
        even = [t for t in itertools.product(range(2), repeat=3)
                if sum(t) % 2 == 0]
        inst = Instance(DomainSpec((2, 2, 2)), [
            Term(CostTable.relation((2, 2, 2), even), (0, 1, 2))])
        net, empty = enforce_strong_3_consistency(decompose_instance(inst))
        assert not empty
        assert not certify_decomposition(net, inst)


class TestRestrict:
    def test_support_maps_and_restriction(self):
        inst = Instance(DomainSpec((3, 2)), [
            Term(CostTable.relation((3, 2), [(0, 0), (2, 1)]), (0, 1))])
        net, empty = enforce_strong_3_consistency(decompose_instance(inst))
        assert not empty
        keep = support_maps(net)
        assert keep == [[0, 2], [0, 1]]
        small_net = restrict_network(net, keep)
        assert small_net.domains.sizes == (2, 2)
        assert {(a, b) for a, b in zip(*np.nonzero(small_net.rel(0, 1)))} == {
            (0, 0), (1, 1)}
        small_inst = restrict_instance(inst, keep)
        # label 1 of variable 0 is gone; old label 2 is new label 1
        assert small_inst.evaluate((1, 1)) == 0
        from vcsp import INF
        assert small_inst.evaluate((1, 0)) is INF

    def test_restrict_empty_rejected(self):
        net = BinaryNetwork(DomainSpec((2, 2)))
        with pytest.raises(VcspError):
            restrict_network(net, [[0], []])

    def test_network_dump_format(self):
        net = BinaryNetwork(DomainSpec((2, 2)))
        net.unary[0][1] = False
        lines = net.dump().splitlines()
        assert lines[0] == "unary 1 10"
        assert lines[1] == "unary 2 11"
        assert lines[2] == "binary 1 2 1111"
