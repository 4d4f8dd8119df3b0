import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperstab.catalog import C1, CI, CJ, CK, CM1, get_group, get_hypergroup, hypergroup_names
from hyperstab.groups import class_hypergroup, conjugacy_partition, quotient_group
from hyperstab.hypergroup import (
    CapExceeded,
    HypergroupError,
    HypergroupMorphism,
    HypergroupTable,
    NotAMorphism,
    automorphisms,
    closure,
    coset,
    cosets,
    direct_product,
    enumerate_subhypergroups,
    group_valued_homomorphisms,
    quotient,
    trivial_hypergroup,
    validate,
)

SMALL = [n for n in hypergroup_names(max_size=12)]


@pytest.fixture(scope="module")
def q8():
    return get_group("q8").table


def klein_table():
    return get_group("z2xz2").table


def isomorphism(first: HypergroupTable, second: HypergroupTable):
    """Brute-force search for a structure-preserving bijection (small tables only)."""
    if first.size != second.size:
        return None
    rest = [x for x in range(first.size) if x != first.identity]
    targets = [y for y in range(second.size) if y != second.identity]
    for perm in itertools.permutations(targets):
        mapping = [0] * first.size
        mapping[first.identity] = second.identity
        for x, y in zip(rest, perm):
            mapping[x] = y
        try:
            if HypergroupMorphism(first, second, mapping).check() == "automorphism":
                return mapping
        except HypergroupError:
            continue
    return None


# -- validate ------------------------------------------------------------------------------------


def test_q8_classes_pass_exactly(q8):
    report = validate(q8)
    assert report.exact and report.passed
    assert all(r.residual == 0 for r in report.results)


def test_single_element_hypergroup_passes():
    assert validate(trivial_hypergroup()).passed


def test_perturbed_q8_fails_normalization_and_reversibility(q8):
    a, b, c, _ = q8.entries
    constants = {(int(x), int(y), int(z)): float(f) for x, y, z, f in zip(a, b, c, q8.entry_fractions())}
    constants[(CI, CI, C1)] = 0.6
    dense = np.zeros((5, 5, 5))
    for key, value in constants.items():
        dense[key] = value
    broken = HypergroupTable.from_dense(dense, identity=C1, involution=q8.involution, weights=q8.weights)
    failed = set(validate(broken).failed)
    assert {"normalization", "reversibility"} <= failed


def test_empty_hypergroup_rejected():
    with pytest.raises((HypergroupError, ValueError)):
        HypergroupTable(0, (np.array([]), np.array([]), np.array([]), np.array([])))


def test_every_catalog_hypergroup_validates():
    for name in hypergroup_names(max_size=16):
        report = validate(get_hypergroup(name))
        assert report.passed, (name, report.failed)
        if report.exact:
            assert max(r.residual for r in report.results) <= 1e-12


# -- products, closures, cosets -----------------------------------------------------------------


def test_product_support_q8(q8):
    assert q8.product_support(CI, CJ) == [(CK, Fraction(1))]
    assert q8.product_support(CI, CI) == [(C1, Fraction(1, 2)), (CM1, Fraction(1, 2))]


@given(st.sampled_from(SMALL), st.data())
def test_identity_product_is_point_mass(name, data):
    t = get_hypergroup(name)
    b = data.draw(st.integers(0, t.size - 1))
    support = t.product_support(t.identity, b)
    assert [c for c, _ in support] == [b] and float(support[0][1]) == 1.0


@given(st.sampled_from(SMALL), st.data())
def test_product_support_sums_to_one(name, data):
    t = get_hypergroup(name)
    a, b = data.draw(st.integers(0, t.size - 1)), data.draw(st.integers(0, t.size - 1))
    assert abs(sum(float(v) for _, v in t.product_support(a, b)) - 1) <= 1e-12


def test_closure_examples(q8):
    assert closure(q8, [CM1]).members == (C1, CM1)
    assert closure(q8, [q8.identity]).members == (C1,)
    assert closure(q8, [CI]).members == (C1, CM1, CI)


def test_coset_examples(q8):
    center = closure(q8, [CM1])
    assert coset(q8, CI, center) == (CI,)
    assert coset(q8, CM1, center) == center.members
    z6 = get_group("z6").table
    assert coset(z6, 1, closure(z6, [3])) == (1, 4)


@given(st.sampled_from(SMALL), st.data())
def test_cosets_partition_the_carrier(name, data):
    t = get_hypergroup(name)
    subs = enumerate_subhypergroups(t)
    N = subs[data.draw(st.integers(0, len(subs) - 1))]
    blocks = cosets(t, N)
    flat = sorted(x for b in blocks for x in b)
    assert flat == list(range(t.size))
    a = data.draw(st.integers(0, t.size - 1))
    assert coset(t, a, N) in blocks


@given(st.sampled_from(SMALL), st.data())
def test_closure_is_idempotent(name, data):
    t = get_hypergroup(name)
    seed = data.draw(st.lists(st.integers(0, t.size - 1), min_size=1, max_size=3))
    once = closure(t, seed)
    assert closure(t, once.members).members == once.members
    assert once.is_closed


# -- quotients ---------------------------------------------------------------------------------------


def test_q8_quotient_by_center_is_klein(q8):
    q = quotient(q8, closure(q8, [CM1]))
    assert q.size == 4
    assert validate(q).passed
    assert np.allclose(q.coset_weights, 1.0)
    assert isomorphism(q, klein_table()) is not None


def test_quotient_by_identity_is_isomorphic(q8):
    q = quotient(q8, closure(q8, [q8.identity]))
    assert isomorphism(q, q8) is not None


def test_d8_quotient_by_center_matches_class_hypergroup_of_quotient_group():
    entry = get_group("d8")
    t = entry.table
    center = closure(t, [c for c in range(t.size) if entry.partition.sizes[c] == 1])
    q = quotient(t, center)
    factor, _ = quotient_group(entry.group, entry.partition.union(center.members))
    target, _ = class_hypergroup(factor)
    assert isomorphism(q, target) is not None


def test_quotients_of_every_small_catalog_hypergroup_validate():
    for name in SMALL:
        t = get_hypergroup(name)
        for N in enumerate_subhypergroups(t):
            q = quotient(t, N)
            assert validate(q).passed, (name, N.members)
            expected = [t.weights[list(b)].sum() / N.weight for b in q.cosets]
            assert np.allclose(q.coset_weights, expected)


# -- enumeration ----------------------------------------------------------------------------------


def test_q8_has_six_subhypergroups(q8):
    subs = {s.members for s in enumerate_subhypergroups(q8)}
    assert subs == {(0,), (0, 1), (0, 1, 2), (0, 1, 3), (0, 1, 4), (0, 1, 2, 3, 4)}


def test_enumeration_small_cases():
    assert len(enumerate_subhypergroups(trivial_hypergroup())) == 1
    for p in (2, 3, 5, 7, 11, 13):
        assert len(enumerate_subhypergroups(get_group(f"z{p}").table)) == 2


def test_enumeration_matches_normal_subgroup_lattice():
    # normal subgroups are exactly the class unions closed under the hyperoperation
    for name in ("s4", "d12", "heisenberg3"):
        entry = get_group(name)
        t = entry.table
        subs = {s.members for s in enumerate_subhypergroups(t)}
        brute = set()
        for r in range(t.size):
            for combo in itertools.combinations(range(1, t.size), r):
                members = (t.identity,) + combo
                if closure(t, members).members == tuple(sorted(members)):
                    brute.add(tuple(sorted(members)))
        assert subs == brute


def test_enumeration_cap():
    with pytest.raises(CapExceeded):
        enumerate_subhypergroups(get_group("z64").table, cap=32)


# -- morphisms -------------------------------------------------------------------------------------------


@given(st.sampled_from(["q8classes", "conj-z8", "conj-z2xz2", "conj-d8", "conj-z12"]), st.data())
def test_automorphisms_compose_and_invert(name, data):
    t = get_hypergroup(name)
    autos = automorphisms(t)
    f = HypergroupMorphism(t, t, autos[data.draw(st.integers(0, len(autos) - 1))])
    g = HypergroupMorphism(t, t, autos[data.draw(st.integers(0, len(autos) - 1))])
    assert f.compose(g).check() == "automorphism"
    assert f.inverse().check() == "automorphism"
    assert f.compose(f.inverse()).mapping == tuple(range(t.size))


def test_q8_automorphisms_are_the_ijk_permutations(q8):
    autos = set(automorphisms(q8))
    assert len(autos) == 6
    assert all(a[:2] == (C1, CM1) for a in autos)


def test_group_valued_map_into_invertibles(q8):
    # Conj(Q8) -> Z2 via the sign of X_i
    z2 = get_group("z2").table
    f = HypergroupMorphism(q8, z2, [0, 0, 0, 1, 1])
    assert f.check() == "group-valued"
    with pytest.raises(NotAMorphism):
        HypergroupMorphism(q8, z2, [0, 1, 0, 1, 1]).check()


def test_direct_product_validates(q8):
    prod = direct_product(q8, get_group("z3").table)
    assert prod.size == 15 and validate(prod).passed


def brute_group_valued(source, target):
    units = np.flatnonzero(target.invertible).tolist()
    others = [x for x in range(source.size) if x != source.identity]
    found = []
    for images in itertools.product(units, repeat=len(others)):
        mapping = [0] * source.size
        mapping[source.identity] = target.identity
        for x, y in zip(others, images):
            mapping[x] = y
        try:
            if HypergroupMorphism(source, target, mapping).check() == "group-valued":
                found.append(tuple(mapping))
        except HypergroupError:
            continue
    return sorted(found)


@pytest.mark.parametrize("source", ["q8", "s3", "d8", "z6", "z2xz2"])
@pytest.mark.parametrize("target", ["q8", "z4", "z2xz2", "s3"])
def test_group_valued_search_matches_exhaustive_enumeration(source, target):
    s, t = get_group(source).table, get_group(target).table
    assert sorted(group_valued_homomorphisms(s, t)) == brute_group_valued(s, t)


def test_group_valued_maps_of_q8_pair_into_q8():
    # Conj(Q8)^2 has abelianisation (Z2 x Z2)^2, hence 16 maps into the centre-valued units
    assert len(group_valued_homomorphisms(get_hypergroup("q8classes2"), get_group("q8").table)) == 16
