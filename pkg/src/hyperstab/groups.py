"""Finite groups, their conjugacy-class hypergroups, and hiding oracles on class indices."""

from __future__ import annotations

from dataclasses import dataclass
from math import lcm
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import kernels
from .characters import CharacterTable
from .hypergroup import CapExceeded, HypergroupError, HypergroupTable, SubhypergroupView, closure

GROUP_ORDER_CAP = 5000


class GroupError(ValueError):
    pass


class NonIntegralDimension(GroupError):
    pass


class NotClassFunction(GroupError):
    pass


class NotHomomorphism(GroupError):
    pass


class FiniteGroup:
    """A finite group on elements ``0..order-1``.

    Small groups hold a dense multiplication table.  Large ones (beyond the
    table cap) are law-backed: ``law`` multiplies index arrays elementwise and
    ``generators`` lets conjugacy classes be found without a table.
    """

    def __init__(
        self,
        table: np.ndarray | None = None,
        *,
        order: int | None = None,
        law: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
        inverse: np.ndarray | None = None,
        identity: int = 0,
        generators: Sequence[int] = (),
        labels: Sequence[str] | None = None,
        name: str | None = None,
        check: bool = True,
    ):
        if table is None and law is None:
            raise GroupError("a group needs a multiplication table or a law")
        self.name = name
        self.identity = int(identity)
        self._law = law
        if table is not None:
            table = np.ascontiguousarray(table, dtype=np.int64)
            n = table.shape[0]
            if table.shape != (n, n):
                raise GroupError("multiplication table must be square")
            self.order = n
            self.table = table
            if check:
                self._check_table()
            if inverse is None:
                rows, cols = np.nonzero(table == self.identity)
                inverse = np.empty(n, dtype=np.int64)
                inverse[rows] = cols
        else:
            if order is None or inverse is None:
                raise GroupError("law-backed groups need an order and an inverse map")
            self.order = int(order)
            self.table = None
        self.inverse = np.asarray(inverse, dtype=np.int64)
        self.generators = tuple(int(g) for g in generators)
        self.labels = tuple(labels) if labels is not None else None

    def _check_table(self):
        t, n, e = self.table, self.order, self.identity
        if t.min() < 0 or t.max() >= n:
            raise GroupError("table entry out of range")
        if not (np.array_equal(t[e], np.arange(n)) and np.array_equal(t[:, e], np.arange(n))):
            raise GroupError("identity axiom fails")
        everything = np.arange(n)
        for row in t:
            if not np.array_equal(np.sort(row), everything):
                raise GroupError("a row is not a permutation, so inverses fail")
        if n <= 128:
            # (xy)z == x(yz) for all triples
            left = t[t[:, :, None], np.arange(n)[None, None, :]]
            right = t[np.arange(n)[:, None, None], t[None, :, :]]
            if not np.array_equal(left, right):
                raise GroupError("associativity fails")
        else:
            rng = np.random.default_rng(0)
            x, y, z = rng.integers(0, n, size=(3, 20000))
            if not np.array_equal(t[t[x, y], z], t[x, t[y, z]]):
                raise GroupError("associativity fails on a sampled triple")

    def label(self, x: int) -> str:
        return self.labels[x] if self.labels else str(x)

    def mul(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if self.table is not None:
            return self.table[x, y]
        return self._law(*np.broadcast_arrays(x, y))

    def power(self, x: int, k: int) -> int:
        out = self.identity
        for _ in range(k):
            out = int(self.mul(out, x))
        return out

    def element_order(self, x: int) -> int:
        k, y = 1, int(x)
        while y != self.identity:
            y = int(self.mul(y, x))
            k += 1
        return k

    def conjugate(self, x, g) -> np.ndarray:
        """``g^{-1} x g``."""
        g = np.asarray(g, dtype=np.int64)
        return self.mul(self.mul(self.inverse[g], x), g)

    @property
    def is_abelian(self) -> bool:
        if self.table is not None:
            return bool(np.array_equal(self.table, self.table.T))
        gens = np.array(self.generators)
        return bool(np.all(self.mul(gens[:, None], gens[None, :]) == self.mul(gens[None, :], gens[:, None])))

    def prime_power(self) -> tuple[int, int] | None:
        n, p = self.order, None
        for q in range(2, n + 1):
            if n % q == 0:
                p = q
                break
        if p is None:
            return None
        k = 0
        while n % p == 0:
            n //= p
            k += 1
        return (p, k) if n == 1 else None

    def __repr__(self) -> str:
        return f"FiniteGroup(name={self.name!r}, order={self.order})"


def _compose_perm(perm_a: tuple[int, ...], perm_b: tuple[int, ...]) -> tuple[int, ...]:
    # apply a first, then b
    return tuple(perm_b[i] for i in perm_a)


def from_permutation_generators(
    generators: Sequence[Sequence[int]], degree: int | None = None, cap: int = GROUP_ORDER_CAP, name: str | None = None
) -> tuple[FiniteGroup, list[tuple[int, ...]]]:
    """Enumerate the group generated by permutations (images of ``0..d-1``).

    Returns the group and its elements as permutations, identity first.
    """
    gens = [tuple(int(x) for x in g) for g in generators]
    if degree is None:
        degree = len(gens[0]) if gens else 1
    for g in gens:
        if len(g) != degree or sorted(g) != list(range(degree)):
            raise GroupError("generators must be permutations of a common domain")
    identity = tuple(range(degree))
    elements = [identity]
    index = {identity: 0}
    frontier = [identity]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = _compose_perm(x, g)
                if y not in index:
                    index[y] = len(elements)
                    elements.append(y)
                    nxt.append(y)
                    if len(elements) > cap:
                        raise CapExceeded(f"group order exceeds {cap}")
        frontier = nxt
    arr = np.array(elements, dtype=np.int64)
    n = len(elements)
    # product x*y applies x then y: (x*y)[i] = y[x[i]]
    if degree <= 15:
        base = np.int64(16) ** np.arange(degree, dtype=np.int64)
        keys = arr @ base
        order = np.argsort(keys)
        sorted_keys = keys[order]
        table = np.empty((n, n), dtype=np.int64)
        for x in range(n):
            composed = arr[:, arr[x]]  # rows: y[x[i]] for each y
            table[x] = order[np.searchsorted(sorted_keys, composed @ base)]
    else:
        table = np.empty((n, n), dtype=np.int64)
        for x in range(n):
            for y in range(n):
                table[x, y] = index[_compose_perm(elements[x], elements[y])]
    return FiniteGroup(table, name=name, generators=[index[g] for g in gens]), elements


def from_law(
    elements: Sequence, law: Callable, name: str | None = None, labels: Sequence[str] | None = None
) -> FiniteGroup:
    """Dense group from an explicit element list and a Python product function."""
    index = {x: i for i, x in enumerate(elements)}
    n = len(elements)
    if n > GROUP_ORDER_CAP:
        raise CapExceeded(f"group order {n} exceeds {GROUP_ORDER_CAP}")
    table = np.empty((n, n), dtype=np.int64)
    for i, x in enumerate(elements):
        for j, y in enumerate(elements):
            table[i, j] = index[law(x, y)]
    identity = [i for i in range(n) if np.array_equal(table[i], np.arange(n))]
    if not identity:
        raise GroupError("no identity element")
    return FiniteGroup(table, identity=identity[0], name=name, labels=labels or [str(x) for x in elements])


# -- conjugacy classes -----------------------------------------------------------------


@dataclass
class ConjugacyPartition:
    """Classes of a group, each stored sorted, numbered with the identity class first."""

    classes: tuple[tuple[int, ...], ...]
    class_of: np.ndarray
    position: np.ndarray

    @property
    def size(self) -> int:
        return len(self.classes)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.classes], dtype=np.int64)

    @property
    def representatives(self) -> tuple[int, ...]:
        return tuple(c[0] for c in self.classes)

    def locate(self, x: int) -> tuple[int, int]:
        return int(self.class_of[x]), int(self.position[x])

    def element(self, class_index: int, position: int) -> int:
        return self.classes[class_index][position]

    def union(self, class_indices) -> np.ndarray:
        return np.sort(np.concatenate([np.array(self.classes[i]) for i in class_indices]))


def _class_labels(group: FiniteGroup) -> np.ndarray:
    if group.table is not None:
        return kernels.conjugacy_class_labels(group.table, group.inverse)
    # connected components of the conjugation-by-generator graph
    n = group.order
    everything = np.arange(n)
    rows, cols = [], []
    for g in group.generators:
        rows.append(everything)
        cols.append(group.conjugate(everything, g))
    graph = sp.csr_matrix(
        (np.ones(n * len(group.generators)), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    _, labels = connected_components(graph, directed=True, connection="weak")
    return labels.astype(np.int64)


def conjugacy_partition(group: FiniteGroup) -> ConjugacyPartition:
    raw = _class_labels(group)
    # renumber: identity class first, then by smallest member
    firsts = {}
    for x, lab in enumerate(raw.tolist()):
        firsts.setdefault(lab, x)
    ordering = sorted(firsts, key=lambda lab: (lab != raw[group.identity], firsts[lab]))
    renumber = np.empty(len(ordering), dtype=np.int64)
    renumber[ordering] = np.arange(len(ordering))
    class_of = renumber[raw]
    order = np.argsort(class_of, kind="stable")
    bounds = np.searchsorted(class_of[order], np.arange(len(ordering) + 1))
    classes = tuple(tuple(order[bounds[i] : bounds[i + 1]].tolist()) for i in range(len(ordering)))
    position = np.empty(group.order, dtype=np.int64)
    for members in classes:
        position[list(members)] = np.arange(len(members))
    for size in map(len, classes):
        if group.order % size:
            raise GroupError("a class size does not divide the group order")
    return ConjugacyPartition(classes, class_of, position)


def class_hypergroup(group: FiniteGroup, labels: Sequence[str] | None = None) -> tuple[HypergroupTable, ConjugacyPartition]:
    """``Conj(G)`` with exact constants ``n[C][D][E] = #{h ∈ D : rep_C·h ∈ E} / |D|``."""
    part = conjugacy_partition(group)
    k = part.size
    sizes = part.sizes
    denominator = lcm(*sizes.tolist())
    everything = np.arange(group.order)
    rows_a, rows_b, rows_c, nums = [], [], [], []
    for ci, rep in enumerate(part.representatives):
        row = group.mul(rep, everything)
        counts = kernels.pair_class_histogram(row, part.class_of, k)
        d, e = np.nonzero(counts)
        rows_a.append(np.full(d.size, ci))
        rows_b.append(d)
        rows_c.append(e)
        nums.append(counts[d, e] * (denominator // sizes[d]))
    a, b, c = (np.concatenate(z) for z in (rows_a, rows_b, rows_c))
    numerators = np.concatenate(nums)
    inverse_class = part.class_of[group.inverse[list(part.representatives)]]
    if labels is None:
        labels = [_class_label(group, part, i) for i in range(k)]
    table = HypergroupTable(
        k,
        (a, b, c, numerators / denominator),
        identity=0,
        involution=inverse_class,
        labels=labels,
        exact=(numerators.astype(object), denominator),
        name=f"Conj({group.name or 'G'})",
    )
    return table, part


def _class_label(group: FiniteGroup, part: ConjugacyPartition, i: int) -> str:
    return "C" + group.label(part.representatives[i]) if group.labels else f"C{part.representatives[i]}"


# -- irreps ---------------------------------------------------------------------------------


@dataclass
class IrrepData:
    dimensions: np.ndarray
    characters: np.ndarray  # chi_mu = d_mu * X_mu over classes

    @property
    def dimension_square_sum(self) -> int:
        return int(np.sum(self.dimensions**2))


def group_irrep_data(group: FiniteGroup, chars: CharacterTable) -> IrrepData:
    """Irrep dimensions ``d = sqrt(w_X)`` and group characters ``d·X``."""
    dims = np.rint(np.sqrt(chars.weights)).astype(np.int64)
    residual = np.abs(dims.astype(float) ** 2 - chars.weights)
    if np.any(residual > max(chars.parent.tol, 1e-9) * max(1.0, float(group.order))) or np.any(dims < 1):
        raise NonIntegralDimension(f"character weights {chars.weights} are not perfect squares")
    if int(np.sum(dims**2)) != group.order:
        raise NonIntegralDimension("dimension squares do not sum to the group order")
    return IrrepData(dims, chars.values * dims[:, None])


# -- oracles ---------------------------------------------------------------------------------


class ClassOracle:
    """Labels on class indices.  The hidden subhypergroup is kept apart as ``_hidden``.

    Algorithms call the oracle and read ``queries``; only tests look at the
    sealed handle through :func:`reveal_hidden`.
    """

    __slots__ = ("_labels", "_hidden", "queries")

    def __init__(self, labels: Sequence[int], hidden: tuple[int, ...]):
        self._labels = np.asarray(labels, dtype=np.int64)
        self._hidden = tuple(sorted(hidden))
        self.queries = 0

    def __call__(self, class_index) -> np.ndarray | int:
        self.queries += int(np.size(class_index))
        out = self._labels[class_index]
        return int(out) if np.ndim(out) == 0 else out

    @property
    def num_classes(self) -> int:
        return self._labels.size

    def restricted(self, keep: np.ndarray) -> "ClassOracle":
        """Oracle on a sub-carrier given by class indices ``keep`` (renumbered 0..)."""
        keep = np.asarray(keep, dtype=np.int64)
        position = {int(x): i for i, x in enumerate(keep)}
        hidden = tuple(position[h] for h in self._hidden if h in position)
        return ClassOracle(self._labels[keep], hidden)


def reveal_hidden(oracle: ClassOracle) -> tuple[int, ...]:
    """Test-side access to the subhypergroup an oracle hides."""
    return oracle._hidden


def oracle_from_labels(table: HypergroupTable, labels: Sequence[int]) -> ClassOracle:
    """Wrap class labels, checking they are constant exactly on cosets of a subhypergroup."""
    labels = np.asarray(labels, dtype=np.int64)
    hidden = np.flatnonzero(labels == labels[table.identity])
    sub = closure(table, hidden)
    if sub.members != tuple(hidden.tolist()):
        raise HypergroupError("labels at the identity do not form a subhypergroup")
    from .hypergroup import cosets

    for block in cosets(table, sub):
        if np.unique(labels[list(block)]).size != 1:
            raise HypergroupError("labels are not constant on a coset")
    reps = [block[0] for block in cosets(table, sub)]
    if np.unique(labels[reps]).size != len(reps):
        raise HypergroupError("labels repeat across distinct cosets")
    return ClassOracle(labels, tuple(hidden.tolist()))


def wrap_class_function_oracle(
    group: FiniteGroup, part: ConjugacyPartition, table: HypergroupTable, function: Callable[[int], int], seed: int = 0
) -> ClassOracle:
    """Class oracle from a function on group elements that is constant on classes."""
    rng = np.random.default_rng(seed)
    labels = []
    for members in part.classes:
        rep = members[0]
        value = function(rep)
        other = members[int(rng.integers(len(members)))]
        if function(other) != value:
            raise NotClassFunction(f"f differs on conjugate elements {rep} and {other}")
        labels.append(value)
    codes = {v: i for i, v in enumerate(dict.fromkeys(labels))}
    return oracle_from_labels(table, [codes[v] for v in labels])


def wrap_homomorphism_oracle(
    source: FiniteGroup,
    source_part: ConjugacyPartition,
    source_table: HypergroupTable,
    target: FiniteGroup,
    mapping: Sequence[int],
) -> ClassOracle:
    """Class oracle labelling each class by the target class of ``f(representative)``."""
    f = np.asarray(mapping, dtype=np.int64)
    if f.shape != (source.order,):
        raise NotHomomorphism("map must be defined on every element")
    if source.order <= GROUP_ORDER_CAP and source.table is not None and source.order <= 2048:
        x = np.arange(source.order)
        if not np.array_equal(f[source.mul(x[:, None], x[None, :])], target.mul(f[:, None], f[None, :])):
            raise NotHomomorphism("f(xy) differs from f(x)f(y)")
    else:
        x = np.arange(source.order)
        for g in source.generators:
            if not np.array_equal(f[source.mul(x, g)], target.mul(f, f[g])):
                raise NotHomomorphism("f(xg) differs from f(x)f(g) for a generator g")
    target_part = conjugacy_partition(target)
    labels = target_part.class_of[f[list(source_part.representatives)]]
    return oracle_from_labels(source_table, labels)


# -- embedding into the group Hilbert space ----------------------------------------------------


def embed_class_state(group: FiniteGroup, part: ConjugacyPartition, amplitudes: np.ndarray) -> np.ndarray:
    """``Σ_C ψ(C)|C⟩`` with ``|C⟩ = |C|^{-1/2} Σ_{g∈C}|g⟩``."""
    amplitudes = np.asarray(amplitudes, dtype=complex)
    sizes = part.sizes.astype(float)
    return amplitudes[part.class_of] / np.sqrt(sizes[part.class_of])


def embed_character_state(
    group: FiniteGroup, part: ConjugacyPartition, chars: CharacterTable, amplitudes: np.ndarray
) -> np.ndarray:
    """``Σ_μ ψ(μ)|X_μ⟩`` with ``|X_μ⟩ = Σ_g sqrt(d_μ²/|G|) conj(X_μ)(g)|g⟩``."""
    amplitudes = np.asarray(amplitudes, dtype=complex)
    coeff = np.sqrt(chars.weights / group.order)[:, None] * chars.values.conj()
    return amplitudes @ coeff[:, part.class_of]


def embed_into_group_space(
    group: FiniteGroup, part: ConjugacyPartition, amplitudes: np.ndarray, basis: str = "element", chars=None
) -> np.ndarray:
    if basis == "element":
        return embed_class_state(group, part, amplitudes)
    if basis == "dual":
        if chars is None:
            raise GroupError("character embedding needs the character table")
        return embed_character_state(group, part, chars, amplitudes)
    raise GroupError(f"unknown basis {basis!r}")


# -- derived groups ------------------------------------------------------------------------------


def subgroup_elements(group: FiniteGroup, seed: Sequence[int]) -> np.ndarray:
    members = {group.identity}
    frontier = list(set(int(s) for s in seed))
    members.update(frontier)
    while frontier:
        nxt = []
        current = np.array(sorted(members))
        for x in frontier:
            for prod in np.concatenate([group.mul(x, current), group.mul(current, x)]).tolist():
                if prod not in members:
                    members.add(prod)
                    nxt.append(prod)
        frontier = nxt
    return np.array(sorted(members), dtype=np.int64)


def quotient_group(group: FiniteGroup, normal: Sequence[int], name: str | None = None) -> tuple[FiniteGroup, np.ndarray]:
    """``G/N`` as a table group plus the projection ``G -> G/N``."""
    normal = np.asarray(sorted(set(int(x) for x in normal)), dtype=np.int64)
    n = group.order
    coset_of = np.full(n, -1, dtype=np.int64)
    reps = []
    for x in range(n):
        if coset_of[x] >= 0:
            continue
        block = group.mul(x, normal)
        coset_of[block] = len(reps)
        reps.append(x)
    for g in range(n):
        if set(coset_of[group.conjugate(normal, g)].tolist()) != {coset_of[group.identity]}:
            raise GroupError("subgroup is not normal")
    reps = np.array(reps)
    table = coset_of[group.mul(reps[:, None], reps[None, :])]
    return FiniteGroup(table, identity=int(coset_of[group.identity]), name=name or f"{group.name}/N"), coset_of


def direct_product_group(first: FiniteGroup, second: FiniteGroup, name: str | None = None) -> FiniteGroup:
    """Element ``(x, y)`` sits at ``x*|second| + y``."""
    m = second.order
    x = np.arange(first.order * m)
    a, b = x // m, x % m
    table = first.mul(a[:, None], a[None, :]) * m + second.mul(b[:, None], b[None, :])
    labels = None
    if first.labels or second.labels:
        labels = [f"({first.label(i)},{second.label(j)})" for i in range(first.order) for j in range(m)]
    return FiniteGroup(
        table,
        identity=first.identity * m + second.identity,
        labels=labels,
        name=name or f"{first.name}x{second.name}",
    )


def normal_subgroup_hypergroups(table: HypergroupTable) -> list[SubhypergroupView]:
    """Normal subgroups as subhypergroups of the class hypergroup."""
    from .hypergroup import enumerate_subhypergroups

    return enumerate_subhypergroups(table)


def commutator_subgroup(group: FiniteGroup) -> np.ndarray:
    x = np.arange(group.order)
    comm = group.mul(group.mul(group.inverse[x][:, None], group.inverse[x][None, :]), group.mul(x[:, None], x[None, :]))
    return subgroup_elements(group, np.unique(comm))


def is_p_group(group: FiniteGroup) -> bool:
    return group.prime_power() is not None


__all__ = [
    "ClassOracle",
    "ConjugacyPartition",
    "FiniteGroup",
    "IrrepData",
    "class_hypergroup",
    "conjugacy_partition",
    "direct_product_group",
    "embed_into_group_space",
    "from_law",
    "from_permutation_generators",
    "group_irrep_data",
    "quotient_group",
    "wrap_class_function_oracle",
    "wrap_homomorphism_oracle",
]
