"""Hidden-subhypergroup algorithms over class hypergroups: Fourier sampling, recursion on normal
subgroups, and the adaptive p-group/nilpotent procedure, with exact outcome distributions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .characters import CharacterTable, restriction_classes
from .groups import (
    ClassOracle,
    FiniteGroup,
    class_hypergroup,
    wrap_class_function_oracle,
)
from .hypergroup import HypergroupError, HypergroupTable, SubhypergroupView, closure, cosets

KERNEL_TOL = 1e-7
DEFAULT_REPEATS = 20


class NotClosed(HypergroupError):
    pass


class NotPGroup(HypergroupError):
    pass


class MissingDecomposition(HypergroupError):
    pass


class OracleUnavailable(HypergroupError):
    pass


@dataclass
class OutcomeDistribution:
    probabilities: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        if np.min(self.probabilities) < -1e-9 or abs(self.probabilities.sum() - 1.0) > 1e-9:
            raise HypergroupError("not a probability distribution")

    def __getitem__(self, mu: int) -> float:
        return float(self.probabilities[mu])

    def support(self, tol: float = 1e-12) -> np.ndarray:
        return np.flatnonzero(self.probabilities > tol)

    def total_variation(self, other: "OutcomeDistribution | np.ndarray") -> float:
        q = other.probabilities if isinstance(other, OutcomeDistribution) else np.asarray(other)
        return 0.5 * float(np.abs(self.probabilities - q).sum())


@dataclass
class RoundRecord:
    K: tuple[int, ...]
    sample: int
    kernel: tuple[int, ...] | None
    trivial_probability: float


@dataclass
class AlgorithmTrace:
    rounds: list[RoundRecord] = field(default_factory=list)
    answer: tuple[int, ...] = ()
    oracle_calls: int = 0
    seed: int | None = None
    levels: int = 0

    @property
    def samples(self) -> list[int]:
        return [r.sample for r in self.rounds]


# -- labels and cosets observed through the oracle ------------------------------------------------------


def label_blocks(oracle: ClassOracle, classes: Sequence[int]) -> list[np.ndarray]:
    """Partition ``classes`` by oracle label (the only information an algorithm sees)."""
    classes = np.asarray(classes, dtype=np.int64)
    labels = np.asarray(oracle(classes))
    return [classes[labels == lab] for lab in dict.fromkeys(labels.tolist())]


def hidden_cosets(table: HypergroupTable, hidden: Sequence[int], within: Sequence[int] | None = None) -> list[np.ndarray]:
    """Cosets of a known subhypergroup, optionally only those inside ``within``."""
    blocks = cosets(table, SubhypergroupView(table, hidden))
    if within is not None:
        inside = set(int(x) for x in within)
        blocks = [b for b in blocks if set(b) <= inside]
    return [np.asarray(b, dtype=np.int64) for b in blocks]


# -- Fourier sampling over the whole hypergroup ---------------------------------------------------------


def akr_distribution(table: HypergroupTable, chars: CharacterTable, hidden: Sequence[int]) -> OutcomeDistribution:
    """Closed form ``Pr(mu) = w_mu sum_c (weight(c)/total)^2 |X_mu(c)|^2``, zero off the annihilator."""
    w = table.weights
    total = table.total_weight
    blocks = hidden_cosets(table, hidden)
    reps = np.array([b[0] for b in blocks])
    ratio = np.array([w[b].sum() for b in blocks]) / total
    mags = np.abs(chars.values[:, reps]) ** 2
    probs = chars.weights * (mags @ ratio**2)
    perp = np.all(np.abs(chars.values[:, list(hidden)] - 1.0) <= KERNEL_TOL, axis=1)
    probs = np.where(perp, probs, 0.0)
    return OutcomeDistribution(probs, tuple(chars.labels))


def coset_state(table: HypergroupTable, block) -> np.ndarray:
    w = table.weights
    vec = np.zeros(table.size)
    block = np.asarray(block)
    vec[block] = np.sqrt(w[block] / w[block].sum())
    return vec


def akr_coset_outcomes(table: HypergroupTable, chars: CharacterTable, blocks) -> tuple[np.ndarray, np.ndarray]:
    """Per observed coset: its probability and the character distribution after the QFT."""
    qft = chars.qft_matrix()
    w = table.weights
    total = table.total_weight
    probs = np.array([w[b].sum() / total for b in blocks])
    states = np.zeros((table.size, len(blocks)))
    for k, b in enumerate(blocks):
        states[b, k] = np.sqrt(w[b] / w[b].sum())
    rows = (np.abs(qft @ states) ** 2).T
    return probs, rows


def akr_dense_distribution(table: HypergroupTable, chars: CharacterTable, oracle: ClassOracle) -> OutcomeDistribution:
    """Simulated route: uniform state, label measurement, coset state, QFT, squared amplitudes."""
    blocks = label_blocks(oracle, np.arange(table.size))
    probs, rows = akr_coset_outcomes(table, chars, blocks)
    return OutcomeDistribution(probs @ rows, tuple(chars.labels))


def kernel_intersection(chars: CharacterTable, samples: Sequence[int], within: Sequence[int] | None = None) -> tuple[int, ...]:
    members = np.arange(chars.parent.size) if within is None else np.asarray(within, dtype=np.int64)
    if len(samples):
        vals = chars.values[np.asarray(samples)][:, members]
        members = members[np.all(np.abs(vals - 1.0) <= KERNEL_TOL, axis=0)]
    return tuple(int(x) for x in members)


def akr_run(
    table: HypergroupTable, chars: CharacterTable, oracle: ClassOracle, samples: int, seed: int | None = None
) -> AlgorithmTrace:
    """Sample coset labels and characters by dense state-vector steps; answer the common kernel."""
    rng = np.random.default_rng(seed)
    blocks = label_blocks(oracle, np.arange(table.size))
    probs, rows = akr_coset_outcomes(table, chars, blocks)
    trace = AlgorithmTrace(seed=seed, levels=1)
    everything = tuple(range(table.size))
    trivial = float(probs @ rows[:, chars.trivial])
    for _ in range(samples):
        c = int(rng.choice(len(blocks), p=probs / probs.sum()))
        row = rows[c]
        mu = int(rng.choice(row.size, p=row / row.sum()))
        trace.rounds.append(RoundRecord(everything, mu, None, trivial))
        trace.oracle_calls += 1
    trace.answer = kernel_intersection(chars, trace.samples)
    return trace


def trivial_character_probability(dist: OutcomeDistribution, trivial: int = 0) -> float:
    return float(dist.probabilities[trivial])


# -- subhypergroup QFT -----------------------------------------------------------------------------


@dataclass
class CosetBasis:
    """Restriction classes ``nu K-perp`` with their weights and the QFT over the classes in ``K``."""

    members: np.ndarray
    representatives: np.ndarray
    coset_of: np.ndarray
    weights: np.ndarray
    qft: np.ndarray

    @property
    def size(self) -> int:
        return self.representatives.size

    @property
    def trivial(self) -> int:
        return int(self.coset_of[0])


def subhypergroup_coset_basis(table: HypergroupTable, chars: CharacterTable, members: Sequence[int]) -> CosetBasis:
    members = np.asarray(sorted(int(x) for x in members), dtype=np.int64)
    labels = restriction_classes(chars, members)
    count = int(labels.max()) + 1
    reps = np.array([int(np.flatnonzero(labels == k)[0]) for k in range(count)])
    mass = np.array([chars.weights[labels == k].sum() for k in range(count)])
    weights = mass / mass[labels[chars.trivial]]
    w = table.weights[members]
    total = float(w.sum())
    qft = np.sqrt(np.outer(weights, w) / total) * chars.values[np.ix_(reps, members)]
    return CosetBasis(members, reps, labels, weights, qft)


def kernel_restricted(table: HypergroupTable, chars: CharacterTable, nu: int, members: Sequence[int]) -> SubhypergroupView:
    members = np.asarray(list(members), dtype=np.int64)
    keep = members[np.abs(chars.values[nu, members] - 1.0) <= KERNEL_TOL]
    view = SubhypergroupView(table, keep)
    if not view.is_closed():
        raise NotClosed("restricted kernel is not closed")
    return view


def restricted_distribution(table: HypergroupTable, basis: CosetBasis, blocks) -> tuple[np.ndarray, np.ndarray]:
    """Coset probabilities within ``K`` and the outcome rows over ``nu K-perp``."""
    position = {int(x): i for i, x in enumerate(basis.members)}
    w = table.weights
    total = float(w[basis.members].sum())
    probs = np.array([w[b].sum() / total for b in blocks])
    rows = []
    for b in blocks:
        local = np.zeros(basis.members.size)
        idx = [position[int(x)] for x in b]
        local[idx] = np.sqrt(w[b] / w[b].sum())
        rows.append(np.abs(basis.qft @ local) ** 2)
    return probs, np.array(rows)


# -- adaptive algorithm for p-groups and nilpotent groups --------------------------------------------


def nilpotent_run(
    table: HypergroupTable,
    chars: CharacterTable,
    oracle: ClassOracle,
    repeats: int = DEFAULT_REPEATS,
    seed: int | None = None,
    group: FiniteGroup | None = None,
    factors: Sequence[Sequence[int]] | None = None,
    mode: str = "analytic",
) -> AlgorithmTrace:
    """Shrink ``K`` by kernels of restricted characters until ``repeats`` trivial samples in a row.

    ``factors`` lists the class sets of the p-group factors; without it ``group``
    must be a p-group.  ``mode='analytic'`` samples the exact round distribution,
    ``mode='shots'`` first samples the coset label then the character.
    """
    if factors is None:
        if group is not None and group.prime_power() is None:
            raise MissingDecomposition("non-p-group without a direct-product decomposition")
        factors = [np.arange(table.size)]
    rng = np.random.default_rng(seed)
    trace = AlgorithmTrace(seed=seed)
    answers = []
    for start in factors:
        answers.append(_shrink(table, chars, oracle, np.asarray(start), repeats, rng, trace, mode))
    joined = closure(table, sorted(set().union(*[set(a) for a in answers])))
    trace.answer = tuple(joined.members)
    return trace


def _shrink(table, chars, oracle, start, repeats, rng, trace, mode) -> tuple[int, ...]:
    K = np.asarray(sorted(int(x) for x in start), dtype=np.int64)
    streak = 0
    trace.levels += 1
    while True:
        basis = subhypergroup_coset_basis(table, chars, K)
        blocks = label_blocks(oracle, K)
        probs, rows = restricted_distribution(table, basis, blocks)
        dist = probs @ rows
        trivial_p = float(dist[basis.trivial])
        if mode == "shots":
            c = int(rng.choice(len(blocks), p=probs / probs.sum()))
            outcome = int(rng.choice(basis.size, p=rows[c] / rows[c].sum()))
        else:
            outcome = int(rng.choice(basis.size, p=dist / dist.sum()))
        trace.oracle_calls += 1
        nu = int(basis.representatives[outcome])
        if outcome == basis.trivial:
            trace.rounds.append(RoundRecord(tuple(K.tolist()), nu, None, trivial_p))
            streak += 1
            if streak >= repeats:
                return tuple(K.tolist())
            continue
        J = kernel_restricted(table, chars, nu, K)
        trace.rounds.append(RoundRecord(tuple(K.tolist()), nu, tuple(J.members), trivial_p))
        trace.levels += 1
        K = np.asarray(J.members, dtype=np.int64)
        streak = 0


def round_trivial_probability(table: HypergroupTable, K: Sequence[int], hidden: Sequence[int]) -> float:
    """``sum_c (weight(c) / weight(K))^2`` over cosets of the hidden subhypergroup inside ``K``."""
    blocks = hidden_cosets(table, hidden, within=K)
    w = table.weights
    total = float(w[list(K)].sum())
    return float(sum((w[b].sum() / total) ** 2 for b in blocks))


# -- recursion on normal subgroups --------------------------------------------------------------------


@dataclass
class Level:
    group: FiniteGroup
    embedding: np.ndarray
    table: HypergroupTable
    characters: CharacterTable
    partition: object


def _level(group: FiniteGroup, embedding: np.ndarray) -> Level:
    from .characters import compute_characters

    table, part = class_hypergroup(group)
    return Level(group, embedding, table, compute_characters(table), part)


def subgroup_as_group(group: FiniteGroup, elements: np.ndarray) -> FiniteGroup:
    position = np.full(group.order, -1, dtype=np.int64)
    position[elements] = np.arange(elements.size)
    sub = position[group.mul(elements[:, None], elements[None, :])]
    if np.any(sub < 0):
        raise HypergroupError("element set is not a subgroup")
    return FiniteGroup(sub, identity=int(position[group.identity]), name=f"{group.name}|K")


def function_oracle_factory(group: FiniteGroup, function: Callable[[int], int]):
    """For a subgroup ``K`` (elements of ``group``), the class oracle of ``function`` restricted to ``K``."""

    def factory(level: Level) -> ClassOracle:
        return wrap_class_function_oracle(
            level.group, level.partition, level.table, lambda x: function(int(level.embedding[x]))
        )

    return factory


def homomorphism_oracle_factory(group: FiniteGroup, target: FiniteGroup, mapping: Sequence[int]):
    """For a subgroup ``K``, label classes of ``K`` by classes of the image ``f(K)`` inside ``target``.

    Using the image rather than all of ``target`` keeps distinct ``K``-classes
    apart when they would fuse under conjugation by the larger group.
    """
    from .groups import wrap_homomorphism_oracle

    f = np.asarray(mapping, dtype=np.int64)

    def factory(level: Level) -> ClassOracle:
        image = np.unique(f[level.embedding])
        image_group = subgroup_as_group(target, image)
        position = np.full(target.order, -1, dtype=np.int64)
        position[image] = np.arange(image.size)
        local = position[f[level.embedding]]
        return wrap_homomorphism_oracle(level.group, level.partition, level.table, image_group, local)

    return factory


def recursive_subgroup_run(
    group: FiniteGroup,
    oracle_factory,
    samples_per_level: int = DEFAULT_REPEATS,
    seed: int | None = None,
    max_levels: int = 64,
) -> AlgorithmTrace:
    """Fourier sample on ``Conj(K)``, replace ``K`` by the common kernel, repeat until nothing shrinks.

    ``trace.answer`` holds element indices of ``group``.
    """
    rng = np.random.default_rng(seed)
    trace = AlgorithmTrace(seed=seed)
    level = _level(group, np.arange(group.order))
    while trace.levels < max_levels:
        trace.levels += 1
        try:
            oracle = oracle_factory(level)
        except Exception as exc:  # factory failures are reported uniformly
            raise OracleUnavailable(str(exc)) from exc
        run = akr_run(level.table, level.characters, oracle, samples_per_level, int(rng.integers(2**32)))
        trace.oracle_calls += run.oracle_calls
        for r in run.rounds:
            trace.rounds.append(RoundRecord(tuple(level.embedding.tolist()), r.sample, r.kernel, r.trivial_probability))
        kept = np.asarray(run.answer, dtype=np.int64)
        if kept.size == level.table.size:
            break
        local = np.sort(np.concatenate([level.partition.classes[c] for c in kept]))
        sub = subgroup_as_group(level.group, local)
        level = _level(sub, level.embedding[local])
    trace.answer = tuple(int(x) for x in np.sort(level.embedding))
    return trace


def elements_to_classes(part, elements) -> tuple[int, ...]:
    return tuple(int(c) for c in np.unique(part.class_of[np.asarray(elements)]))


# -- weak Fourier sampling in the group space -------------------------------------------------------


def group_space_distribution(group: FiniteGroup, part, chars: CharacterTable, function: Callable[[int], int]) -> OutcomeDistribution:
    """Uniform superposition, label measurement, then ``Pr(rho | L) = d/|G| sum conj psi(g) psi(h) chi(g^-1 h)``."""
    order = group.order
    x = np.arange(order)
    labels = np.array([function(int(g)) for g in x])
    quotient_class = part.class_of[group.mul(group.inverse[x][:, None], x[None, :])]
    dims = np.rint(np.sqrt(chars.weights)).astype(int)
    probs = np.zeros(chars.size)
    for lab in np.unique(labels):
        L = np.flatnonzero(labels == lab)
        psi = np.zeros(order)
        psi[L] = 1.0 / np.sqrt(L.size)
        block = quotient_class[np.ix_(L, L)]
        for mu in range(chars.size):
            chi = dims[mu] * chars.values[mu][block]
            amp = (dims[mu] / order) * np.real(psi[L] @ chi @ psi[L])
            probs[mu] += (L.size / order) * amp
    return OutcomeDistribution(probs, tuple(chars.labels))


# -- worked examples on dihedral and affine groups ----------------------------------------------------


@dataclass
class ExampleCheck:
    group: str
    K: tuple[int, ...]
    hidden: tuple[int, ...]
    trivial_probability: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.trivial_probability <= self.bound + 1e-12


def dihedral_checks(table: HypergroupTable, name: str, normals: Sequence[SubhypergroupView]) -> list[ExampleCheck]:
    """Trivial-outcome probability for every pair ``N < K`` of normal subgroups against 2/3."""
    out = []
    for K in normals:
        for N in normals:
            if set(N.members) < set(K.members):
                p = round_trivial_probability(table, K.members, N.members)
                out.append(ExampleCheck(name, tuple(K.members), tuple(N.members), p, 2.0 / 3.0))
    return out


def affine_check(group: FiniteGroup, table: HypergroupTable, part, name: str) -> ExampleCheck:
    """``K = [G, G]``, ``N = {e}``: the trivial outcome dominates as ``p`` grows."""
    from .groups import commutator_subgroup

    K = elements_to_classes(part, commutator_subgroup(group))
    p = round_trivial_probability(table, K, (table.identity,))
    return ExampleCheck(name, K, (table.identity,), p, 2.0 / 3.0)


__all__ = [
    "AlgorithmTrace",
    "OutcomeDistribution",
    "akr_dense_distribution",
    "akr_distribution",
    "akr_run",
    "affine_check",
    "dihedral_checks",
    "group_space_distribution",
    "hidden_subgroup_oracle",
    "kernel_restricted",
    "nilpotent_run",
    "normal_subgroup_function",
    "recursive_subgroup_run",
    "subhypergroup_coset_basis",
    "trivial_character_probability",
]


def normal_subgroup_function(group: FiniteGroup, normal_elements) -> Callable[[int], int]:
    """Class function hiding a normal subgroup: the conjugacy class of ``xN`` in ``G/N``."""
    from .groups import conjugacy_partition, quotient_group

    quotient, coset_of = quotient_group(group, normal_elements)
    class_of = conjugacy_partition(quotient).class_of
    return lambda x: int(class_of[coset_of[x]])


def hidden_subgroup_oracle(table: HypergroupTable, hidden: Sequence[int]) -> ClassOracle:
    """Oracle labelling each class by the index of its coset of ``hidden``."""
    from .groups import oracle_from_labels

    labels = np.zeros(table.size, dtype=np.int64)
    for k, block in enumerate(hidden_cosets(table, hidden)):
        labels[block] = k
    return oracle_from_labels(table, labels)
