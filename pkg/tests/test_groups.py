from fractions import Fraction

import numpy as np
import pytest

from hyperstab.catalog import CI, CM1, X2, get_group, group_names
from hyperstab.groups import (
    NotClassFunction,
    NotHomomorphism,
    class_hypergroup,
    conjugacy_partition,
    direct_product_group,
    embed_into_group_space,
    from_law,
    from_permutation_generators,
    group_irrep_data,
    quotient_group,
    reveal_hidden,
    wrap_class_function_oracle,
    wrap_homomorphism_oracle,
)
from hyperstab.catalog import cyclic
from hyperstab.hypergroup import enumerate_subhypergroups, quotient, validate

SMALL_GROUPS = group_names(max_order=24)


def test_d8_from_generators():
    group, elements = from_permutation_generators([(1, 2, 3, 0), (2, 1, 0, 3)])
    assert group.order == 8 and not group.is_abelian


def test_empty_generator_set_gives_trivial_group():
    group, _ = from_permutation_generators([], degree=3)
    assert group.order == 1


def test_heisenberg3_from_product_law():
    elements = [(x, y, z) for x in range(3) for y in range(3) for z in range(3)]

    def law(u, v):
        return ((u[0] + v[0]) % 3, (u[1] + v[1]) % 3, (u[2] + v[2] + u[0] * v[1]) % 3)

    group = from_law(elements, law)
    assert group.order == 27 and group.prime_power() == (3, 3)
    assert conjugacy_partition(group).size == 11


def test_q8_classes():
    entry = get_group("q8")
    assert entry.table.size == 5
    assert entry.table.weights.tolist() == [1, 1, 2, 2, 2]
    assert entry.table.total_weight == 8


def test_abelian_class_hypergroup_is_the_group_table():
    group = cyclic(6)
    table, part = class_hypergroup(group)
    assert part.sizes.tolist() == [1] * 6
    for a in range(6):
        for b in range(6):
            c = int(part.class_of[group.mul(part.element(a, 0), part.element(b, 0))])
            assert table.product_support(a, b) == [(c, Fraction(1))]


def test_s3_transposition_square():
    entry = get_group("s3")
    sizes = entry.partition.sizes.tolist()
    transpositions, three_cycles = sizes.index(3), sizes.index(2)
    identity = entry.table.identity
    assert dict(entry.table.product_support(transpositions, transpositions)) == {
        identity: Fraction(1, 3),
        three_cycles: Fraction(2, 3),
    }


def test_partition_index_maps_are_inverse():
    for name in ("s4", "d12", "heisenberg3", "affine7"):
        part = get_group(name).partition
        group = get_group(name).group
        assert all(group.order % s == 0 for s in part.sizes)
        for x in range(group.order):
            c, pos = part.locate(x)
            assert part.element(c, pos) == x


def test_irrep_dimensions():
    assert group_irrep_data(get_group("q8").group, get_group("q8").characters).dimensions.tolist() == [1, 1, 1, 1, 2]
    z7 = get_group("z7")
    assert set(group_irrep_data(z7.group, z7.characters).dimensions.tolist()) == {1}
    h = get_group("heisenberg3")
    data = group_irrep_data(h.group, h.characters)
    assert sorted(data.dimensions.tolist()) == [1] * 9 + [3, 3]
    assert data.dimension_square_sum == 27


# -- oracles -------------------------------------------------------------------------------------------


def test_z6_mod3_oracle_hides_order_two_subgroup():
    entry = get_group("z6")
    oracle = wrap_class_function_oracle(entry.group, entry.partition, entry.table, lambda x: x % 3)
    assert sorted(entry.partition.union(reveal_hidden(oracle)).tolist()) == [0, 3]


def test_q8_projection_oracle_hides_center():
    entry = get_group("q8")
    _, coset_of = quotient_group(entry.group, [0, 1])
    oracle = wrap_class_function_oracle(entry.group, entry.partition, entry.table, lambda x: int(coset_of[x]))
    assert reveal_hidden(oracle) == (0, 1)


def test_constant_oracle_hides_everything():
    entry = get_group("d8")
    oracle = wrap_class_function_oracle(entry.group, entry.partition, entry.table, lambda x: 0)
    assert reveal_hidden(oracle) == tuple(range(entry.table.size))


def test_non_class_function_rejected():
    entry = get_group("s3")
    with pytest.raises(NotClassFunction):
        wrap_class_function_oracle(entry.group, entry.partition, entry.table, lambda x: x)


def test_heisenberg_projection_hides_center():
    entry = get_group("heisenberg3")
    g = entry.group
    target = direct_product_group(cyclic(3), cyclic(3))
    mapping = [(x // 9) * 3 + (x // 3) % 3 for x in range(27)]
    oracle = wrap_homomorphism_oracle(g, entry.partition, entry.table, target, mapping)
    hidden = entry.partition.union(reveal_hidden(oracle))
    assert sorted(hidden.tolist()) == [0, 1, 2]


def test_identity_and_trivial_homomorphisms():
    entry = get_group("heisenberg3")
    g = entry.group
    ident = wrap_homomorphism_oracle(g, entry.partition, entry.table, g, range(27))
    assert reveal_hidden(ident) == (entry.table.identity,)
    trivial = wrap_homomorphism_oracle(g, entry.partition, entry.table, cyclic(1), [0] * 27)
    assert reveal_hidden(trivial) == tuple(range(entry.table.size))
    with pytest.raises(NotHomomorphism):
        wrap_homomorphism_oracle(g, entry.partition, entry.table, cyclic(3), [x % 3 for x in range(27)])


# -- embedding ------------------------------------------------------------------------------------------


def test_class_state_embedding_q8():
    entry = get_group("q8")
    vec = embed_into_group_space(entry.group, entry.partition, np.eye(5)[CI])
    expected = np.zeros(8)
    expected[[2, 3]] = 1 / np.sqrt(2)  # elements i and -i
    assert np.allclose(vec, expected, atol=1e-12)
    assert np.allclose(embed_into_group_space(entry.group, entry.partition, np.eye(5)[0]), np.eye(8)[0])


def test_character_state_embedding_q8():
    entry = get_group("q8")
    vec = embed_into_group_space(entry.group, entry.partition, np.eye(5)[X2], "dual", entry.characters)
    expected = np.zeros(8)
    expected[0], expected[1] = 2 / np.sqrt(8), -2 / np.sqrt(8)
    assert np.allclose(vec, expected, atol=1e-12)


@pytest.mark.parametrize("name", SMALL_GROUPS)
def test_fourier_transform_is_identity_in_group_space(name):
    entry = get_group(name)
    chars = entry.characters
    F = chars.qft_matrix()
    for x in range(entry.table.size):
        classes = embed_into_group_space(entry.group, entry.partition, np.eye(entry.table.size)[x])
        characters = embed_into_group_space(entry.group, entry.partition, F[:, x], "dual", chars)
        assert np.allclose(classes, characters, atol=1e-10)
        # conjugation invariance of the embedded state
        g = entry.group
        for h in g.generators or range(g.order):
            assert np.allclose(classes[g.conjugate(np.arange(g.order), h)], classes)


@pytest.mark.parametrize("name", SMALL_GROUPS)
def test_quotient_of_class_hypergroup_is_class_hypergroup_of_quotient(name):
    entry = get_group(name)
    t, part = entry.table, entry.partition
    for N in enumerate_subhypergroups(t):
        q = quotient(t, N)
        factor, coset_of = quotient_group(entry.group, part.union(N.members))
        target, target_part = class_hypergroup(factor)
        # coset of classes -> class of G/N holding the image of any representative element
        mapping = [int(target_part.class_of[coset_of[part.element(block[0], 0)]]) for block in q.cosets]
        assert sorted(mapping) == list(range(target.size))
        a, b, c, v = q.entries
        assert np.allclose(target.lookup(np.array(mapping)[a], np.array(mapping)[b], np.array(mapping)[c]), v)
        assert np.allclose(target.weights[mapping], q.weights * 1.0)
        assert validate(q).passed
