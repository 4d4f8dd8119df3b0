"""Named groups, hypergroups and gate fixtures used by the tests, the CLI and the experiments."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .characters import CharacterTable, DualTable, compute_characters, dual_hypergroup
from .groups import (
    ConjugacyPartition,
    FiniteGroup,
    class_hypergroup,
    direct_product_group,
    from_law,
    from_permutation_generators,
)
from .hypergroup import HypergroupError, HypergroupTable, power

Q8_ELEMENT_LABELS = ("1", "-1", "i", "-i", "j", "-j", "k", "-k")
Q8_CHARACTER_LABELS = ("X1", "Xi", "Xj", "Xk", "X2")
# classes of Conj(Q8) in catalog order
C1, CM1, CI, CJ, CK = range(5)
# characters of Conj(Q8) in catalog order
X1, XI, XJ, XK, X2 = range(5)


class UnknownName(KeyError):
    pass


# -- groups -------------------------------------------------------------------------------


def cyclic(n: int) -> FiniteGroup:
    idx = np.arange(n)
    return FiniteGroup((idx[:, None] + idx[None, :]) % n, name=f"z{n}", generators=[1 % n])


def klein() -> FiniteGroup:
    idx = np.arange(4)
    return FiniteGroup(idx[:, None] ^ idx[None, :], name="z2xz2", labels=["00", "01", "10", "11"], generators=[1, 2])


def symmetric(degree: int) -> FiniteGroup:
    cycle = tuple(list(range(1, degree)) + [0])
    swap = tuple([1, 0] + list(range(2, degree)))
    group, _ = from_permutation_generators([cycle, swap], name=f"s{degree}")
    return group


def dihedral(order: int) -> FiniteGroup:
    """``D_order``: rotations ``a^j`` at index j, reflections ``a^j r`` at index n + j."""
    n = order // 2
    j = np.arange(order) % n
    s = np.arange(order) // n
    sign = np.where(s == 1, -1, 1)
    table = ((j[:, None] + sign[:, None] * j[None, :]) % n) + n * ((s[:, None] + s[None, :]) % 2)
    labels = [f"a{x}" for x in range(n)] + [f"a{x}r" for x in range(n)]
    return FiniteGroup(table, name=f"d{order}", labels=labels, generators=[1 % n, n])


def quaternion() -> FiniteGroup:
    units = [(1, 0, 0, 0), (-1, 0, 0, 0), (0, 1, 0, 0), (0, -1, 0, 0), (0, 0, 1, 0), (0, 0, -1, 0), (0, 0, 0, 1), (0, 0, 0, -1)]

    def hamilton(p, q):
        a0, a1, a2, a3 = p
        b0, b1, b2, b3 = q
        return (
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        )

    group = from_law(units, hamilton, name="q8", labels=Q8_ELEMENT_LABELS)
    group.generators = (2, 4)
    return group


def heisenberg(p: int, dense: bool | None = None) -> FiniteGroup:
    """Upper unitriangular 3x3 matrices over Z_p; ``(x,y,z)`` sits at index ``x p^2 + y p + z``."""
    order = p**3

    def decode(v):
        return v // (p * p), (v // p) % p, v % p

    def law(u, v):
        x, y, z = decode(u)
        x2, y2, z2 = decode(v)
        return ((x + x2) % p) * p * p + ((y + y2) % p) * p + (z + z2 + x * y2) % p

    x, y, z = decode(np.arange(order))
    inverse = ((-x) % p) * p * p + ((-y) % p) * p + (x * y - z) % p
    labels = [f"({a},{b},{c})" for a, b, c in zip(x.tolist(), y.tolist(), z.tolist())]
    generators = [p * p, p]
    if dense is None:
        dense = order <= 1000
    if dense:
        idx = np.arange(order)
        return FiniteGroup(law(idx[:, None], idx[None, :]), name=f"heisenberg{p}", labels=labels, generators=generators)
    return FiniteGroup(order=order, law=law, inverse=inverse, name=f"heisenberg{p}", labels=labels, generators=generators)


def affine(p: int) -> FiniteGroup:
    """Maps ``x -> a x + b`` over Z_p; ``(a, b)`` sits at ``(a-1) p + b`` and ``(c,d)(a,b) = (ac, bc+d)``."""
    order = p * (p - 1)
    a = np.arange(order) // p + 1
    b = np.arange(order) % p
    left_a, left_b = a[:, None], b[:, None]  # (c, d)
    right_a, right_b = a[None, :], b[None, :]  # (a, b)
    table = ((right_a * left_a) % p - 1) * p + (right_b * left_a + left_b) % p
    labels = [f"({x},{y})" for x, y in zip(a.tolist(), b.tolist())]
    primitive = next(g for g in range(2, p) if len({pow(g, k, p) for k in range(p - 1)}) == p - 1) if p > 2 else 1
    return FiniteGroup(table, name=f"affine{p}", labels=labels, generators=[(primitive - 1) * p, 1])


@dataclass
class GroupEntry:
    """A catalog group with lazily computed class hypergroup, characters and dual."""

    name: str
    group: FiniteGroup
    # nilpotent direct-product decomposition: element-index sets of the p-group factors
    factors: tuple[np.ndarray, ...] | None = None
    character_labels: tuple[str, ...] | None = field(default=None, repr=False)

    @cached_property
    def _classes(self) -> tuple[HypergroupTable, ConjugacyPartition]:
        return class_hypergroup(self.group)

    @property
    def table(self) -> HypergroupTable:
        return self._classes[0]

    @property
    def partition(self) -> ConjugacyPartition:
        return self._classes[1]

    @cached_property
    def characters(self) -> CharacterTable:
        chars = compute_characters(self.table)
        if self.character_labels:
            chars.labels = self.character_labels
        return chars

    @cached_property
    def dual(self) -> DualTable:
        return dual_hypergroup(self.table, self.characters)

    def factor_classes(self) -> list[np.ndarray] | None:
        """Class indices making up each nilpotent factor, or None when no decomposition is known."""
        if self.factors is None:
            return None
        return [np.unique(self.partition.class_of[f]) for f in self.factors]


GROUP_NAMES: tuple[str, ...] = (
    tuple(f"z{n}" for n in range(1, 65))
    + ("z2xz2", "s3", "s4")
    + tuple(f"d{2 * n}" for n in range(3, 17))
    + ("q8", "heisenberg3", "heisenberg5", "heisenberg7", "heisenberg31")
    + ("affine5", "affine7", "affine13", "z3xq8")
)


@lru_cache(maxsize=None)
def get_group(name: str) -> GroupEntry:
    name = name.lower()
    if name not in GROUP_NAMES:
        raise UnknownName(name)
    if match := re.fullmatch(r"z(\d+)", name):
        n = int(match.group(1))
        entry = GroupEntry(name, cyclic(n))
        p = _prime_power_base(n)
        if p is not None:
            entry.factors = (np.arange(n),)
        return entry
    if name == "z2xz2":
        return GroupEntry(name, klein(), factors=(np.arange(4),))
    if name in ("s3", "s4"):
        return GroupEntry(name, symmetric(int(name[1])))
    if match := re.fullmatch(r"d(\d+)", name):
        order = int(match.group(1))
        nilpotent = order & (order - 1) == 0
        return GroupEntry(name, dihedral(order), factors=(np.arange(order),) if nilpotent else None)
    if name == "q8":
        return GroupEntry(name, quaternion(), factors=(np.arange(8),), character_labels=Q8_CHARACTER_LABELS)
    if match := re.fullmatch(r"heisenberg(\d+)", name):
        p = int(match.group(1))
        return GroupEntry(name, heisenberg(p), factors=(np.arange(p**3),))
    if match := re.fullmatch(r"affine(\d+)", name):
        return GroupEntry(name, affine(int(match.group(1))))
    if name == "z3xq8":
        group = direct_product_group(cyclic(3), quaternion(), name="z3xq8")
        # index x*8 + y: the Z3 factor is {x*8}, the Q8 factor is {0..7}
        return GroupEntry(name, group, factors=(np.arange(3) * 8, np.arange(8)))
    raise UnknownName(name)


def _prime_power_base(n: int) -> int | None:
    if n < 2:
        return None
    p = next(q for q in range(2, n + 1) if n % q == 0)
    while n % p == 0:
        n //= p
    return p if n == 1 else None


def group_names(max_order: int | None = None) -> list[str]:
    out = []
    for name in GROUP_NAMES:
        if max_order is not None and _order_of(name) > max_order:
            continue
        out.append(name)
    return out


def _order_of(name: str) -> int:
    if match := re.fullmatch(r"z(\d+)", name):
        return int(match.group(1))
    if match := re.fullmatch(r"d(\d+)", name):
        return int(match.group(1))
    if match := re.fullmatch(r"heisenberg(\d+)", name):
        return int(match.group(1)) ** 3
    if match := re.fullmatch(r"affine(\d+)", name):
        p = int(match.group(1))
        return p * (p - 1)
    return {"z2xz2": 4, "s3": 6, "s4": 24, "q8": 8, "z3xq8": 24}[name]


# -- hypergroups ------------------------------------------------------------------------------------


HYPERGROUP_NAMES = ("q8classes", "q8classes2", "q8classes3")


@lru_cache(maxsize=None)
def get_hypergroup(name: str) -> HypergroupTable:
    """``q8classes[m]`` or ``conj-<group>`` for the class hypergroup of any catalog group."""
    name = name.lower()
    if name == "q8classes":
        return get_group("q8").table
    if match := re.fullmatch(r"q8classes([23])", name):
        return power(get_group("q8").table, int(match.group(1)))
    if name.startswith("conj-"):
        return get_group(name[5:]).table
    raise UnknownName(name)


def hypergroup_names(max_size: int | None = None) -> list[str]:
    names = list(HYPERGROUP_NAMES) + [f"conj-{g}" for g in group_names() if g != "heisenberg31"]
    if max_size is None:
        return names
    return [n for n in names if get_hypergroup(n).size <= max_size]


# -- gate fixtures on Conj(Q8) ---------------------------------------------------------------------


def q8_cyclic_class_sets() -> dict[str, tuple[int, ...]]:
    """The subhypergroups ``<x> = {C1, C-1, Cx}``."""
    return {"i": (C1, CM1, CI), "j": (C1, CM1, CJ), "k": (C1, CM1, CK)}


def q8_single_quadratic(axis: str) -> np.ndarray:
    """``xi_x``: 1 on ``<x>`` and i elsewhere."""
    values = np.full(5, 1j)
    values[list(q8_cyclic_class_sets()[axis])] = 1
    return values


def q8_linear_character_of(cls: int) -> int:
    """``f_C``: the trivial character on ``C±1`` and ``X_x`` on ``C_x``."""
    return {C1: X1, CM1: X1, CI: XI, CJ: XJ, CK: XK}[cls]


def q8_pair_quadratic() -> np.ndarray:
    """``xi(C_x, C_y) = f_{C_x}(C_y)`` on Conj(Q8)^2, indexed ``x*5 + y``."""
    chars = get_group("q8").characters
    values = np.empty(25, dtype=complex)
    for x in range(5):
        values[x * 5 : x * 5 + 5] = chars.values[q8_linear_character_of(x)]
    return np.round(values.real) + 0j


def q8_swap(first: str, second: str) -> tuple[int, ...]:
    """Automorphism of Conj(Q8) swapping the classes of two of i, j, k."""
    where = {"i": CI, "j": CJ, "k": CK}
    mapping = list(range(5))
    mapping[where[first]], mapping[where[second]] = where[second], where[first]
    return tuple(mapping)


def q8_controlled_sign(axis: str) -> tuple[int, ...]:
    """``alpha_x(C1, C2) = (C1, f_x(C1) C2)`` on Conj(Q8)^2 with ``f_x`` in the centre."""
    inside = set(q8_cyclic_class_sets()[axis])
    negate = {C1: CM1, CM1: C1, CI: CI, CJ: CJ, CK: CK}
    mapping = []
    for first in range(5):
        for second in range(5):
            target = second if first in inside else negate[second]
            mapping.append(first * 5 + target)
    return tuple(mapping)


def cyclic_quadratic(n: int, scale: int = 1) -> np.ndarray:
    """``a -> exp(2 pi i scale a^2 / n)`` on Z_n."""
    a = np.arange(n)
    return np.exp(2j * np.pi * scale * (a * a % n) / n)


def catalog_quadratics(table: HypergroupTable, name: str) -> dict[str, np.ndarray]:
    """Quadratic functions the catalog knows for a named hypergroup; the constant function always."""
    out = {"trivial": np.ones(table.size, dtype=complex)}
    if name in ("q8classes", "conj-q8"):
        for axis in "ijk":
            out[f"xi_{axis}"] = q8_single_quadratic(axis)
    elif name == "q8classes2":
        out["xi_pair"] = q8_pair_quadratic()
    elif match := re.fullmatch(r"conj-z(\d+)", name):
        n = int(match.group(1))
        out["square"] = cyclic_quadratic(n)
    return out


def require_q8_order(chars: CharacterTable):
    """Guard that the computed Conj(Q8) characters come out as X1, Xi, Xj, Xk, X2."""
    expected = np.array(
        [[1, 1, 1, 1, 1], [1, 1, 1, -1, -1], [1, 1, -1, 1, -1], [1, 1, -1, -1, 1], [1, -1, 0, 0, 0]], dtype=float
    )
    if not np.allclose(chars.values, expected, atol=1e-9):
        raise HypergroupError("Conj(Q8) characters are not in the catalog order")


# -- carriers and circuit fixtures -----------------------------------------------------------------


@lru_cache(maxsize=None)
def get_carrier(name: str):
    """A register carrier for a catalog group (its class hypergroup) or hypergroup name."""
    from .frames import Carrier

    name = name.lower()
    if name in GROUP_NAMES:
        entry = get_group(name)
        return Carrier(entry.table, entry.characters, entry.dual)
    if name.startswith("conj-"):
        return get_carrier(name[5:])
    if name == "q8classes":
        return get_carrier("q8")
    return Carrier.build(get_hypergroup(name))


def q8_pair_quadratic_circuit():
    """Two Conj(Q8) registers from ``|X1>|X1>``: global QFT, the pair quadratic phase, QFT on the second."""
    from .circuits import Circuit
    from .frames import DUAL
    from .gates import GlobalQFT, PartialQFT, QuadraticPhase

    q8 = get_carrier("q8")
    gates = [GlobalQFT(), QuadraticPhase((0, 1), q8_pair_quadratic(), "xi_pair"), PartialQFT(1)]
    return Circuit((q8, q8), (DUAL, DUAL), (X1, X1), gates, ("q8", "q8"))


def q8_controlled_sign_circuit(axis: str = "i"):
    """``|X1>|C1>``: QFT on the first register, then the controlled-sign automorphism ``alpha_x``."""
    from .circuits import Circuit
    from .frames import DUAL, ELEMENT
    from .gates import Automorphism, PartialQFT

    q8 = get_carrier("q8")
    gates = [PartialQFT(0), Automorphism((0, 1), q8_controlled_sign(axis), f"alpha_{axis}")]
    return Circuit((q8, q8), (DUAL, ELEMENT), (X1, C1), gates, ("q8", "q8"))
