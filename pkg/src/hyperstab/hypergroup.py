"""Finite commutative hypergroups as validated structure-constant tables.

A table stores the nonzero constants ``n[a][b][c]`` in a CSR layout over the
pair index ``a*size + b``.  Tables built from group data additionally carry
integer numerators over a common denominator so every axiom can be checked
without rounding.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels

DENSE_LIMIT = 160
DEFAULT_SUBHYPERGROUP_CAP = 64


class HypergroupError(ValueError):
    """Base class for malformed or inconsistent hypergroup data."""


class CapExceeded(HypergroupError):
    pass


class RepresentativeInconsistency(HypergroupError):
    pass


class UnsupportedMorphism(HypergroupError):
    pass


class NotAMorphism(HypergroupError):
    pass


def default_tolerance() -> float:
    """The comparison tolerance, overridable through ``HYPERSTAB_TOL``."""
    return float(os.environ.get("HYPERSTAB_TOL", "1e-9"))


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"not an exact value: {value!r}")


class HypergroupTable:
    """Structure constants of a finite commutative hypergroup.

    Args:
        size: number of elements.
        entries: arrays ``(a, b, c, value)`` listing the nonzero constants.
        identity: index of the identity element.
        involution: the anti-element permutation; inferred from the
            constants ``n[a][b][e] > 0`` when omitted.
        labels: element names.
        weights: explicit weights; when omitted they are ``1/n[a][ā][e]``.
        exact: optional ``(numerators, denominator)`` aligned with ``entries``.
    """

    def __init__(
        self,
        size: int,
        entries: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
        *,
        identity: int = 0,
        involution: Sequence[int] | None = None,
        labels: Sequence[str] | None = None,
        weights: Sequence[float] | None = None,
        exact: tuple[np.ndarray, int] | None = None,
        tol: float | None = None,
        name: str | None = None,
    ):
        if size < 1:
            raise HypergroupError("a hypergroup needs at least one element")
        a, b, c, values = (np.asarray(x) for x in entries)
        a, b, c = (np.asarray(x, dtype=np.int64) for x in (a, b, c))
        values = np.asarray(values, dtype=float)
        if not (a.shape == b.shape == c.shape == values.shape and a.ndim == 1):
            raise HypergroupError("entry arrays must be one-dimensional and aligned")
        if a.size and (min(a.min(), b.min(), c.min()) < 0 or max(a.max(), b.max(), c.max()) >= size):
            raise HypergroupError("entry index out of range")
        if not 0 <= identity < size:
            raise HypergroupError("identity index out of range")
        numerators = None
        if exact is not None:
            numerators = np.asarray(exact[0], dtype=object)
            if numerators.shape != values.shape:
                raise HypergroupError("exact numerators must align with entries")
        keep = values != 0
        a, b, c, values = a[keep], b[keep], c[keep], values[keep]
        if numerators is not None:
            numerators = numerators[keep]
        order = np.lexsort((c, a * size + b))
        self.size = int(size)
        self.identity = int(identity)
        self.name = name
        self.tol = default_tolerance() if tol is None else float(tol)
        self._a, self._b, self._c = a[order], b[order], c[order]
        self._values = values[order]
        self._numerators = None if numerators is None else numerators[order]
        self.denominator = None if exact is None else int(exact[1])
        pair = self._a * size + self._b
        if pair.size and np.any((np.diff(pair) == 0) & (np.diff(self._c) == 0)):
            raise HypergroupError("duplicate structure-constant entries")
        self.pair_ptr = np.searchsorted(pair, np.arange(size * size + 1)).astype(np.int64)
        self.labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(size))
        if len(self.labels) != size:
            raise HypergroupError("label count differs from size")
        if involution is None:
            involution = self._infer_involution()
        self.involution = np.asarray(involution, dtype=np.int64)
        if self.involution.shape != (size,) or sorted(self.involution.tolist()) != list(range(size)):
            raise HypergroupError("involution must be a permutation of the carrier")
        self._explicit_weights = None if weights is None else np.asarray(weights, dtype=float)
        if self._explicit_weights is not None and self._explicit_weights.shape != (size,):
            raise HypergroupError("weight count differs from size")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_dense(cls, structure, **kwargs) -> "HypergroupTable":
        structure = np.asarray(structure, dtype=float)
        n = structure.shape[0]
        if structure.shape != (n, n, n):
            raise HypergroupError("structure tensor must have shape (n, n, n)")
        a, b, c = np.nonzero(structure)
        return cls(n, (a, b, c, structure[a, b, c]), **kwargs)

    @classmethod
    def from_fractions(cls, size: int, constants: Mapping[tuple[int, int, int], object], **kwargs) -> "HypergroupTable":
        """Build an exact table from ``{(a, b, c): value}`` with rational values."""
        items = [(k, _as_fraction(v)) for k, v in constants.items() if _as_fraction(v) != 0]
        denominator = lcm(*(v.denominator for _, v in items)) if items else 1
        a = np.array([k[0] for k, _ in items], dtype=np.int64)
        b = np.array([k[1] for k, _ in items], dtype=np.int64)
        c = np.array([k[2] for k, _ in items], dtype=np.int64)
        numerators = np.array([v.numerator * (denominator // v.denominator) for _, v in items], dtype=object)
        values = np.array([float(v) for _, v in items], dtype=float)
        return cls(size, (a, b, c, values), exact=(numerators, denominator), **kwargs)

    def _infer_involution(self) -> np.ndarray:
        e = self.identity
        mask = (self._c == e) & (self._values > self.tol)
        inv = np.full(self.size, -1, dtype=np.int64)
        for a, b in zip(self._a[mask], self._b[mask]):
            if inv[a] not in (-1, b):
                raise HypergroupError(f"element {a} has more than one anti-element")
            inv[a] = b
        if np.any(inv < 0):
            raise HypergroupError("some element has no anti-element")
        return inv

    # -- basic data -----------------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self._numerators is not None

    @property
    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self._a, self._b, self._c, self._values

    @property
    def numerators(self) -> np.ndarray | None:
        return self._numerators

    def entry_fractions(self) -> list[Fraction]:
        if not self.is_exact:
            raise HypergroupError("table is not exact")
        return [Fraction(int(x), self.denominator) for x in self._numerators]

    @cached_property
    def _sparse(self) -> sp.csr_matrix:
        n = self.size
        return sp.csr_matrix((self._values, (self._a * n + self._b, self._c)), shape=(n * n, n))

    @cached_property
    def _sparse_numerators(self) -> sp.csr_matrix | None:
        if not self.is_exact:
            return None
        n = self.size
        nums = self._numerators.astype(np.int64)
        return sp.csr_matrix((nums, (self._a * n + self._b, self._c)), shape=(n * n, n), dtype=np.int64)

    def lookup(self, a, b, c) -> np.ndarray:
        """Vectorized ``n[a][b][c]`` as floats."""
        a, b, c = np.broadcast_arrays(*(np.asarray(x, dtype=np.int64) for x in (a, b, c)))
        if a.size == 0:
            return np.zeros(a.shape)
        return np.asarray(self._sparse[(a * self.size + b).ravel(), np.array(c.ravel())]).reshape(a.shape)

    def lookup_numerators(self, a, b, c) -> np.ndarray:
        a, b, c = np.broadcast_arrays(*(np.asarray(x, dtype=np.int64) for x in (a, b, c)))
        if a.size == 0:
            return np.zeros(a.shape, dtype=np.int64)
        return np.asarray(self._sparse_numerators[(a * self.size + b).ravel(), np.array(c.ravel())]).reshape(a.shape)

    def value(self, a: int, b: int, c: int):
        """``n[a][b][c]``, as a Fraction for exact tables."""
        if self.is_exact:
            return Fraction(int(self.lookup_numerators(a, b, c)), self.denominator)
        return float(self.lookup(a, b, c))

    @cached_property
    def dense(self) -> np.ndarray:
        if self.size > DENSE_LIMIT:
            raise CapExceeded(f"dense structure tensor refused for size {self.size} > {DENSE_LIMIT}")
        out = np.zeros((self.size,) * 3)
        out[self._a, self._b, self._c] = self._values
        return out

    @cached_property
    def dense_numerators(self) -> np.ndarray:
        if not self.is_exact:
            raise HypergroupError("table is not exact")
        if self.size > DENSE_LIMIT:
            raise CapExceeded(f"dense structure tensor refused for size {self.size} > {DENSE_LIMIT}")
        out = np.zeros((self.size,) * 3, dtype=object)
        out[...] = 0
        out[self._a, self._b, self._c] = self._numerators
        return out

    @cached_property
    def derived_weights(self) -> np.ndarray:
        back = self.lookup(np.arange(self.size), self.involution, self.identity)
        with np.errstate(divide="ignore"):
            return np.where(back > 0, 1.0 / np.where(back > 0, back, 1.0), np.inf)

    @property
    def weights(self) -> np.ndarray:
        if self._explicit_weights is not None:
            return self._explicit_weights
        return self.derived_weights

    @cached_property
    def exact_weights(self) -> tuple[Fraction, ...] | None:
        if not self.is_exact:
            return None
        back = self.lookup_numerators(np.arange(self.size), self.involution, self.identity)
        return tuple(Fraction(self.denominator, int(x)) if x > 0 else None for x in back)

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    # -- products -------------------------------------------------------------

    def pair_slice(self, a: int, b: int) -> slice:
        k = a * self.size + b
        return slice(int(self.pair_ptr[k]), int(self.pair_ptr[k + 1]))

    def product_row(self, a: int, b: int) -> np.ndarray:
        """Dense vector ``n[a][b][:]``."""
        row = np.zeros(self.size)
        s = self.pair_slice(a, b)
        row[self._c[s]] = self._values[s]
        return row

    def product_support(self, a: int, b: int) -> list[tuple[int, object]]:
        """Pairs ``(c, n[a][b][c])`` with coefficient above the tolerance."""
        s = self.pair_slice(a, b)
        out = []
        for k in range(s.start, s.stop):
            if self._values[k] > self.tol:
                coefficient = (
                    Fraction(int(self._numerators[k]), self.denominator) if self.is_exact else float(self._values[k])
                )
                out.append((int(self._c[k]), coefficient))
        return out

    @cached_property
    def support_csr(self) -> tuple[np.ndarray, np.ndarray]:
        keep = self._values > self.tol
        pair = (self._a * self.size + self._b)[keep]
        ptr = np.searchsorted(pair, np.arange(self.size * self.size + 1)).astype(np.int64)
        return ptr, self._c[keep].astype(np.int64)

    def support(self, a: int, b: int) -> np.ndarray:
        ptr, idx = self.support_csr
        k = a * self.size + b
        return idx[ptr[k] : ptr[k + 1]]

    @cached_property
    def invertible(self) -> np.ndarray:
        """Mask of elements whose product with their anti-element is exactly the identity."""
        back = self.lookup(np.arange(self.size), self.involution, self.identity)
        return np.abs(back - 1.0) <= self.tol

    def multiply_single(self, a: int, b: int) -> int:
        """The unique element of ``a·b``; raises when the support is not a single element."""
        sup = self.support(a, b)
        if sup.size != 1:
            raise HypergroupError(f"product of {a} and {b} is not a single element")
        return int(sup[0])

    # -- comparison -----------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, HypergroupTable):
            return NotImplemented
        if (self.size, self.identity, self.labels) != (other.size, other.identity, other.labels):
            return False
        if not np.array_equal(self.involution, other.involution):
            return False
        mine = (self._a, self._b, self._c)
        theirs = (other._a, other._b, other._c)
        if any(x.shape != y.shape or not np.array_equal(x, y) for x, y in zip(mine, theirs)):
            return False
        if self.is_exact and other.is_exact:
            return self.entry_fractions() == other.entry_fractions()
        return bool(np.allclose(self._values, other._values, rtol=0, atol=max(self.tol, other.tol)))

    __hash__ = object.__hash__

    def __repr__(self) -> str:
        kind = "exact" if self.is_exact else "float"
        return f"HypergroupTable(name={self.name!r}, size={self.size}, {kind})"


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class AxiomResult:
    axiom: str
    passed: bool
    residual: float


@dataclass
class ValidationReport:
    exact: bool
    results: list[AxiomResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, axiom: str) -> AxiomResult:
        for r in self.results:
            if r.axiom == axiom:
                return r
        raise KeyError(axiom)

    @property
    def failed(self) -> list[str]:
        return [r.axiom for r in self.results if not r.passed]

    def to_tsv(self) -> str:
        lines = ["axiom\tstatus\tresidual"]
        for r in self.results:
            lines.append(f"{r.axiom}\t{'pass' if r.passed else 'FAIL'}\t{r.residual:.12g}")
        return "\n".join(lines) + "\n"


def _exact_max(values: Iterable) -> Fraction:
    best = Fraction(0)
    for v in values:
        v = abs(v)
        if v > best:
            best = v
    return best


def validate(table: HypergroupTable, associativity_samples: int = 4000, seed: int = 0) -> ValidationReport:
    """Check every hypergroup axiom and report the worst residual of each.

    Exact tables are checked in rational arithmetic.  Tables above the dense
    limit check associativity on a seeded random sample of triples.
    """
    if table.is_exact:
        return _validate_exact(table, associativity_samples, seed)
    return _validate_float(table, associativity_samples, seed)


def _validate_float(t: HypergroupTable, samples: int, seed: int) -> ValidationReport:
    n, e, inv, tol = t.size, t.identity, t.involution, t.tol
    a, b, c, v = t.entries
    report = ValidationReport(exact=False)

    def add(name, residual):
        residual = float(residual)
        report.results.append(AxiomResult(name, bool(residual <= tol), residual))

    add("involution", 0.0 if np.array_equal(inv[inv], np.arange(n)) and inv[e] == e else 1.0)
    add("non-negativity", max(0.0, -float(v.min())) if v.size else 0.0)
    row_sums = np.bincount(a * n + b, weights=v, minlength=n * n)
    add("normalization", np.max(np.abs(row_sums - 1.0)))
    ident = np.zeros((n, n))
    mask = a == e
    ident[b[mask], c[mask]] = v[mask]
    add("identity", np.max(np.abs(ident - np.eye(n))))
    add("commutativity", np.max(np.abs(v - t.lookup(b, a, c))) if v.size else 0.0)
    at_identity = np.zeros((n, n))
    mask = c == e
    at_identity[a[mask], b[mask]] = v[mask]
    off = at_identity.copy()
    off[np.arange(n), inv] = 0.0
    missing = np.where(at_identity[np.arange(n), inv] > tol, 0.0, 1.0)
    add("anti-element", max(float(np.max(np.abs(off))), float(np.max(missing))))
    w = t.derived_weights
    if np.all(np.isfinite(w)):
        first = v / w[c]
        second = t.lookup(inv[a], c, b) / w[b]
        third = t.lookup(c, inv[b], a) / w[a]
        add("reversibility", max(np.max(np.abs(first - second), initial=0.0), np.max(np.abs(first - third), initial=0.0)))
    else:
        add("reversibility", np.inf)
    add("involution-compatibility", np.max(np.abs(v - t.lookup(inv[a], inv[b], inv[c])), initial=0.0))
    add("associativity", _associativity_residual(t, samples, seed))
    if t._explicit_weights is not None:
        add("weights", np.max(np.abs(t._explicit_weights - w)))
    else:
        add("weights", 0.0 if np.all(np.isfinite(w)) and np.all(w > 0) else np.inf)
    return report


def _associativity_residual(t: HypergroupTable, samples: int, seed: int) -> float:
    n = t.size
    if n <= DENSE_LIMIT:
        d = t.dense
        worst = 0.0
        flat = d.reshape(n * n, n)
        stacked = d.reshape(n, n * n)
        for a in range(n):
            left = (d[a] @ stacked).reshape(n, n, n)  # [b, c, x] = sum_d n[a][b][d] n[d][c][x]
            right = (flat @ d[a]).reshape(n, n, n)  # [b, c, x] = sum_d n[b][c][d] n[a][d][x]
            worst = max(worst, float(np.max(np.abs(left - right))))
        return worst
    rng = np.random.default_rng(seed)
    worst = 0.0
    for a, b, c in rng.integers(0, n, size=(samples, 3)):
        left = np.zeros(n)
        sab = t.pair_slice(a, b)
        for d, coeff in zip(t._c[sab], t._values[sab]):
            left += coeff * t.product_row(d, c)
        right = np.zeros(n)
        sbc = t.pair_slice(b, c)
        for d, coeff in zip(t._c[sbc], t._values[sbc]):
            right += coeff * t.product_row(a, d)
        worst = max(worst, float(np.max(np.abs(left - right))))
    return worst


def _validate_exact(t: HypergroupTable, samples: int, seed: int) -> ValidationReport:
    n, e, inv, den = t.size, t.identity, t.involution, t.denominator
    a, b, c, _ = t.entries
    nums = t.numerators
    report = ValidationReport(exact=True)

    def add(name, residual: Fraction | float):
        if isinstance(residual, Fraction):
            passed = residual == 0
            residual = float(residual)
        else:
            residual = float(residual)
            passed = residual <= t.tol
        report.results.append(AxiomResult(name, bool(passed), residual))

    add("involution", Fraction(0 if np.array_equal(inv[inv], np.arange(n)) and inv[e] == e else 1))
    add("non-negativity", Fraction(max(0, -min((int(x) for x in nums), default=0)), den))
    sums: dict[int, int] = {}
    for p, x in zip((a * n + b).tolist(), nums):
        sums[p] = sums.get(p, 0) + int(x)
    add("normalization", Fraction(max(abs(sums.get(p, 0) - den) for p in range(n * n)), den))
    worst = 0
    for k in range(t.pair_ptr[e * n], t.pair_ptr[e * n + n]):
        expected = den if c[k] == b[k] else 0
        worst = max(worst, abs(int(nums[k]) - expected))
    for bb in range(n):
        if t.lookup_numerators(e, bb, bb) == 0:
            worst = max(worst, den)
    add("identity", Fraction(worst, den))
    mirrored = t.lookup_numerators(b, a, c)
    add("commutativity", Fraction(max((abs(int(x) - int(y)) for x, y in zip(nums, mirrored)), default=0), den))
    worst = 0
    for k in np.flatnonzero(c == e):
        if b[k] != inv[a[k]]:
            worst = max(worst, abs(int(nums[k])))
    back = t.lookup_numerators(np.arange(n), inv, e)
    if np.any(back <= 0):
        worst = max(worst, den)
    add("anti-element", Fraction(worst, den))
    weights = t.exact_weights
    if all(w is not None for w in weights):
        second = t.lookup_numerators(inv[a], c, b)
        third = t.lookup_numerators(c, inv[b], a)
        residuals = []
        for k in range(len(nums)):
            x = Fraction(int(nums[k]), den) / weights[c[k]]
            y = Fraction(int(second[k]), den) / weights[b[k]]
            z = Fraction(int(third[k]), den) / weights[a[k]]
            residuals.append(max(abs(x - y), abs(x - z)))
        add("reversibility", _exact_max(residuals))
    else:
        add("reversibility", Fraction(1))
    images = t.lookup_numerators(inv[a], inv[b], inv[c])
    add(
        "involution-compatibility",
        Fraction(max((abs(int(x) - int(y)) for x, y in zip(nums, images)), default=0), den),
    )
    add("associativity", _exact_associativity(t, samples, seed))
    if t._explicit_weights is not None and all(w is not None for w in weights):
        add("weights", float(np.max(np.abs(t._explicit_weights - np.array([float(w) for w in weights])))))
    else:
        add("weights", Fraction(0 if all(w is not None and w > 0 for w in weights) else 1))
    return report


def _exact_associativity(t: HypergroupTable, samples: int, seed: int) -> Fraction | float:
    n, den = t.size, t.denominator
    nums = t.numerators
    bound = max((abs(int(x)) for x in nums), default=0)
    if n <= DENSE_LIMIT and n * bound * bound < 2**52:
        # integer-valued floats: every partial sum is exactly representable
        d = np.zeros((n, n, n))
        a, b, c, _ = t.entries
        d[a, b, c] = nums.astype(float)
        flat = d.reshape(n * n, n)
        stacked = d.reshape(n, n * n)
        worst = 0.0
        for x in range(n):
            left = d[x] @ stacked
            right = (flat @ d[x]).reshape(n, n * n)
            worst = max(worst, float(np.max(np.abs(left - right))))
        return Fraction(int(worst), den * den)
    return _associativity_residual(t, samples, seed)


# -- subhypergroups -------------------------------------------------------------


class SubhypergroupView:
    """A closed subset of a hypergroup, held by sorted member indices."""

    __slots__ = ("parent", "members", "_mask")

    def __init__(self, parent, members: Iterable[int]):
        self.parent = parent
        self.members = tuple(sorted(int(m) for m in set(members)))
        mask = np.zeros(parent.size, dtype=bool)
        mask[list(self.members)] = True
        self._mask = mask

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def weight(self) -> float:
        return float(np.sum(self.parent.weights[list(self.members)]))

    def __contains__(self, item: int) -> bool:
        return bool(self._mask[item])

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SubhypergroupView):
            return NotImplemented
        return self.parent is other.parent and self.members == other.members

    def __hash__(self) -> int:
        return hash((id(self.parent), self.members))

    def __repr__(self) -> str:
        names = ", ".join(self.parent.labels[m] for m in self.members)
        return f"SubhypergroupView({{{names}}})"

    def is_closed(self) -> bool:
        return closure(self.parent, self.members).members == self.members


def closure(table: HypergroupTable, seed: Iterable[int]) -> SubhypergroupView:
    """Smallest subhypergroup containing ``seed`` and the identity."""
    mask = np.zeros(table.size, dtype=np.uint8)
    mask[[int(s) for s in seed]] = 1
    mask[table.identity] = 1
    ptr, idx = table.support_csr
    closed = kernels.support_closure(ptr, idx, table.involution, mask)
    return SubhypergroupView(table, np.flatnonzero(closed))


def coset(table: HypergroupTable, a: int, subgroup: SubhypergroupView | Iterable[int]) -> tuple[int, ...]:
    """Support of ``a·N``."""
    members = subgroup.members if isinstance(subgroup, SubhypergroupView) else tuple(subgroup)
    out: set[int] = set()
    for b in members:
        out.update(table.support(a, b).tolist())
    return tuple(sorted(out))


def cosets(table: HypergroupTable, subgroup: SubhypergroupView) -> list[tuple[int, ...]]:
    """The cosets of ``subgroup``, ordered by smallest member; raises if they fail to partition."""
    seen = np.full(table.size, -1, dtype=np.int64)
    out: list[tuple[int, ...]] = []
    for a in range(table.size):
        if seen[a] >= 0:
            continue
        block = coset(table, a, subgroup)
        if any(seen[x] >= 0 for x in block) or a not in block:
            raise HypergroupError("cosets do not partition the carrier")
        seen[list(block)] = len(out)
        out.append(block)
    return out


class QuotientTable(HypergroupTable):
    """``T/N`` with the cosets kept alongside the structure constants."""

    parent: HypergroupTable
    subgroup: SubhypergroupView
    cosets: tuple[tuple[int, ...], ...]
    coset_of: np.ndarray

    @property
    def coset_weights(self) -> np.ndarray:
        return self.weights


def quotient(table: HypergroupTable, subgroup: SubhypergroupView) -> QuotientTable:
    """The quotient hypergroup, checking that every representative gives the same constants."""
    blocks = cosets(table, subgroup)
    k = len(blocks)
    coset_of = np.empty(table.size, dtype=np.int64)
    for i, block in enumerate(blocks):
        coset_of[list(block)] = i
    a, b, c, v = table.entries
    # r[A][B][C] for each concrete pair (a, b): sum of n[a][b][d] over d in C
    key = (a * table.size + b) * k + coset_of[c]
    projected = np.zeros(table.size * table.size * k)
    np.add.at(projected, key, v)
    projected = projected.reshape(table.size, table.size, k)
    reps = np.array([block[0] for block in blocks])
    rep_values = projected[reps][:, reps]
    spread = np.abs(projected - rep_values[coset_of][:, coset_of])
    if float(spread.max(initial=0.0)) > table.tol:
        raise RepresentativeInconsistency("quotient constants depend on the coset representative")
    subgroup_weight = subgroup.weight
    coset_weights = np.array([table.weights[list(block)].sum() for block in blocks]) / subgroup_weight
    A, B, C = np.nonzero(rep_values > 0)
    exact = None
    if table.is_exact:
        nums: dict[tuple[int, int, int], int] = {}
        is_rep = np.zeros(table.size, dtype=bool)
        is_rep[reps] = True
        na, nb, nc, _ = table.entries
        keep = is_rep[na] & is_rep[nb]
        for x, y, z, num in zip(na[keep], nb[keep], nc[keep], table.numerators[keep]):
            key3 = (int(coset_of[x]), int(coset_of[y]), int(coset_of[z]))
            nums[key3] = nums.get(key3, 0) + int(num)
        exact = (np.array([nums[(x, y, z)] for x, y, z in zip(A, B, C)], dtype=object), table.denominator)
    labels = ["{" + ",".join(table.labels[m] for m in block) + "}" for block in blocks]
    out = QuotientTable(
        k,
        (A, B, C, rep_values[A, B, C]),
        identity=int(coset_of[table.identity]),
        labels=labels,
        weights=coset_weights,
        exact=exact,
        tol=table.tol,
        name=f"{table.name or 'T'}/N",
    )
    out.parent = table
    out.subgroup = subgroup
    out.cosets = tuple(blocks)
    out.coset_of = coset_of
    return out


def enumerate_subhypergroups(
    table: HypergroupTable, max_count: int | None = None, cap: int = DEFAULT_SUBHYPERGROUP_CAP
) -> list[SubhypergroupView]:
    """All subhypergroups, found by growing closures one element at a time.

    Every subhypergroup H is reached: starting from {e}, adding any element
    of H that is still missing and closing stays inside H and grows.
    """
    if table.size > cap:
        raise CapExceeded(f"subhypergroup enumeration refused for size {table.size} > {cap}")
    start = closure(table, [table.identity])
    found = {start.members: start}
    frontier = [start]
    while frontier:
        nxt = []
        for sub in frontier:
            for x in range(table.size):
                if x in sub:
                    continue
                grown = closure(table, sub.members + (x,))
                if grown.members not in found:
                    found[grown.members] = grown
                    nxt.append(grown)
                    if max_count is not None and len(found) >= max_count:
                        return _ordered(found.values())
        frontier = nxt
    return _ordered(found.values())


def _ordered(subs: Iterable[SubhypergroupView]) -> list[SubhypergroupView]:
    return sorted(subs, key=lambda s: (len(s), s.members))


# -- morphisms ---------------------------------------------------------------------


@dataclass(frozen=True)
class HypergroupMorphism:
    """An index map between hypergroups, validated in one of two supported cases."""

    source: HypergroupTable
    target: HypergroupTable
    mapping: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(int(x) for x in self.mapping))
        if len(self.mapping) != self.source.size:
            raise NotAMorphism("map length differs from source size")
        if any(not 0 <= x < self.target.size for x in self.mapping):
            raise NotAMorphism("map image out of range")

    @property
    def is_bijective(self) -> bool:
        return self.source.size == self.target.size and len(set(self.mapping)) == self.source.size

    def check(self) -> str:
        """Return ``'automorphism'`` or ``'group-valued'``; raise when neither case holds."""
        f = np.array(self.mapping)
        src, dst = self.source, self.target
        if f[src.identity] != dst.identity:
            raise NotAMorphism("identity not preserved")
        if not np.array_equal(f[src.involution], dst.involution[f]):
            raise NotAMorphism("involution not preserved")
        a, b, c, v = src.entries
        if self.is_bijective:
            if src.is_exact and dst.is_exact:
                lhs = [Fraction(int(x), src.denominator) for x in src.numerators]
                rhs = [Fraction(int(x), dst.denominator) for x in dst.lookup_numerators(f[a], f[b], f[c])]
                ok = lhs == rhs and len(dst.numerators) == len(src.numerators)
            else:
                ok = (
                    np.max(np.abs(v - dst.lookup(f[a], f[b], f[c])), initial=0.0) <= max(src.tol, dst.tol)
                    and abs(float(v.sum()) - float(dst.entries[3].sum())) <= max(src.tol, dst.tol) * max(1, v.size)
                )
                ok = ok and dst.entries[3].size == v.size
            if not ok:
                raise NotAMorphism("structure constants not preserved")
            return "automorphism"
        if np.all(dst.invertible[f]):
            keep = v > src.tol
            for x, y, z in zip(a[keep], b[keep], c[keep]):
                if f[z] != dst.multiply_single(int(f[x]), int(f[y])):
                    raise NotAMorphism(f"f({z}) differs from f({x})f({y})")
            return "group-valued"
        raise UnsupportedMorphism("only automorphisms and maps into invertible elements are supported")

    def compose(self, other: "HypergroupMorphism") -> "HypergroupMorphism":
        """``self ∘ other``."""
        if other.target is not self.source and other.target.size != self.source.size:
            raise NotAMorphism("composition of incompatible morphisms")
        return HypergroupMorphism(other.source, self.target, tuple(self.mapping[x] for x in other.mapping))

    def inverse(self) -> "HypergroupMorphism":
        if not self.is_bijective:
            raise NotAMorphism("only bijections have inverses")
        inv = [0] * self.source.size
        for x, y in enumerate(self.mapping):
            inv[y] = x
        return HypergroupMorphism(self.target, self.source, tuple(inv))


def _refined_colours(table: HypergroupTable, coeff: list[dict]) -> list[int]:
    """Colour refinement: elements an automorphism can swap always share a colour."""
    n = table.size
    inv = table.involution
    colour = [hash((round(float(table.weights[x]), 9), int(inv[x]) == x, x == table.identity)) for x in range(n)]
    while True:
        sig = []
        for x in range(n):
            rows = []
            for z in range(n):
                for k in (x * n + z, z * n + x):
                    rows.append((colour[z], tuple(sorted((round(float(v), 9), colour[c]) for c, v in coeff[k].items()))))
            sig.append((colour[x], tuple(sorted(rows))))
        index = {key: i for i, key in enumerate(sorted(set(sig)))}
        fresh = [index[key] for key in sig]
        if len(set(fresh)) == len(set(colour)):
            return fresh
        colour = fresh


def automorphisms(table: HypergroupTable, limit: int | None = None) -> list[tuple[int, ...]]:
    """All automorphisms of a small hypergroup.

    Backtracking with candidate domains seeded by colour refinement. Each assigned
    pair ``(a, b)`` narrows the domain of every ``c`` in the support of ``a*b`` to
    the support of ``f(a)*f(b)`` with the same coefficient; singletons are forced
    and the search branches on the smallest remaining domain.
    """
    n = table.size
    inv = table.involution
    tol = table.tol
    ptr, idx = table.support_csr
    coeff = []
    for k in range(n * n):
        sup = idx[ptr[k] : ptr[k + 1]]
        coeff.append(dict(zip(map(int, sup), table.product_row(k // n, k % n)[sup].tolist())))
    colour = _refined_colours(table, coeff)
    domain = [frozenset(y for y in range(n) if colour[y] == colour[x]) for x in range(n)]
    found: list[tuple[int, ...]] = []
    f = [-1] * n
    used = [False] * n

    def assign(x: int, y: int, trail: list, queue: list[int]) -> bool:
        if f[x] != -1:
            return f[x] == y
        if used[y] or y not in domain[x] or (int(inv[x]) == x) != (int(inv[y]) == y):
            return False
        f[x], used[y] = y, True
        trail.append(("f", x))
        queue.append(x)
        return assign(int(inv[x]), int(inv[y]), trail, queue)

    def narrow(c: int, allowed: frozenset, trail: list, queue: list[int]) -> bool:
        if f[c] != -1:
            return f[c] in allowed
        smaller = domain[c] & allowed
        if smaller != domain[c]:
            trail.append(("d", c, domain[c]))
            domain[c] = smaller
        open_ = [y for y in smaller if not used[y]]
        if not open_:
            return False
        return len(open_) > 1 or assign(c, open_[0], trail, queue)

    def pair_forces(a: int, b: int, trail: list, queue: list[int]) -> bool:
        here, there = coeff[a * n + b], coeff[f[a] * n + f[b]]
        if len(here) != len(there):
            return False
        for c, v in here.items():
            allowed = frozenset(t for t, u in there.items() if abs(u - v) <= tol)
            if not narrow(c, allowed, trail, queue):
                return False
        return True

    def propagate(trail: list, queue: list[int]) -> bool:
        while queue:
            x = queue.pop()
            for a in range(n):
                if f[a] != -1 and not (pair_forces(x, a, trail, queue) and pair_forces(a, x, trail, queue)):
                    return False
        return True

    def undo(trail: list):
        for entry in reversed(trail):
            if entry[0] == "f":
                used[f[entry[1]]] = False
                f[entry[1]] = -1
            else:
                domain[entry[1]] = entry[2]

    def search() -> bool:
        free = [x for x in range(n) if f[x] == -1]
        if not free:
            found.append(tuple(f))
            return limit is not None and len(found) >= limit
        x = min(free, key=lambda z: (sum(1 for y in domain[z] if not used[y]), z))
        for y in sorted(domain[x]):
            if used[y]:
                continue
            trail: list = []
            queue: list[int] = []
            if assign(x, y, trail, queue) and propagate(trail, queue) and search():
                return True
            undo(trail)
        return False

    trail: list = []
    queue: list[int] = []
    if not (assign(table.identity, table.identity, trail, queue) and propagate(trail, queue)):
        return []
    search()
    valid = []
    for mapping in found:
        try:
            if HypergroupMorphism(table, table, mapping).check() == "automorphism":
                valid.append(mapping)
        except NotAMorphism:
            continue
    return sorted(valid)


def group_valued_homomorphisms(source: HypergroupTable, target: HypergroupTable, limit: int | None = None) -> list[tuple[int, ...]]:
    """Maps from ``source`` into the invertible elements of ``target`` that respect products.

    Backtracking: every product ``a*b`` forces ``f(c) = f(a) f(b)`` on its whole
    support, so most images are determined by a few free choices.
    """
    units = np.flatnonzero(target.invertible).tolist()
    n = source.size
    ptr, idx = source.support_csr
    out: list[tuple[int, ...]] = []

    def propagate(mapping: list[int], start: list[int]) -> bool:
        queue = list(start)
        while queue:
            a = queue.pop()
            for b in range(n):
                if mapping[b] < 0:
                    continue
                for x, y in ((a, b), (b, a)):
                    image = target.multiply_single(mapping[x], mapping[y])
                    for c in idx[ptr[x * n + y] : ptr[x * n + y + 1]]:
                        c = int(c)
                        if mapping[c] < 0:
                            mapping[c] = image
                            queue.append(c)
                        elif mapping[c] != image:
                            return False
        return True

    def search(mapping: list[int]) -> bool:
        free = [x for x in range(n) if mapping[x] < 0]
        if not free:
            try:
                if HypergroupMorphism(source, target, mapping).check() == "group-valued":
                    out.append(tuple(mapping))
            except (NotAMorphism, HypergroupError):
                pass
            return limit is not None and len(out) >= limit
        x = free[0]
        for y in units:
            trial = list(mapping)
            trial[x] = y
            if propagate(trial, [x]) and search(trial):
                return True
        return False

    start = [-1] * n
    start[source.identity] = target.identity
    if propagate(start, [source.identity]):
        search(start)
    return out


# -- products ------------------------------------------------------------------------


def direct_product(first: HypergroupTable, second: HypergroupTable) -> HypergroupTable:
    """Product hypergroup with element ``(x, y)`` at index ``x*|second| + y``."""
    m = second.size
    a1, b1, c1, v1 = first.entries
    a2, b2, c2, v2 = second.entries
    A = (a1[:, None] * m + a2[None, :]).ravel()
    B = (b1[:, None] * m + b2[None, :]).ravel()
    C = (c1[:, None] * m + c2[None, :]).ravel()
    V = (v1[:, None] * v2[None, :]).ravel()
    exact = None
    if first.is_exact and second.is_exact:
        nums = np.multiply.outer(first.numerators, second.numerators).ravel()
        exact = (nums, first.denominator * second.denominator)
    labels = [f"({x},{y})" for x in first.labels for y in second.labels]
    involution = (first.involution[:, None] * m + second.involution[None, :]).ravel()
    weights = None
    if first._explicit_weights is not None or second._explicit_weights is not None:
        weights = np.outer(first.weights, second.weights).ravel()
    return HypergroupTable(
        first.size * m,
        (A, B, C, V),
        identity=first.identity * m + second.identity,
        involution=involution,
        labels=labels,
        weights=weights,
        exact=exact,
        tol=min(first.tol, second.tol),
        name=f"{first.name or 'T'}x{second.name or 'T'}",
    )


def power(table: HypergroupTable, copies: int) -> HypergroupTable:
    out = table
    for _ in range(copies - 1):
        out = direct_product(out, table)
    out.name = f"{table.name or 'T'}^{copies}"
    return out


def trivial_hypergroup() -> HypergroupTable:
    return HypergroupTable.from_fractions(1, {(0, 0, 0): 1}, labels=["e"], name="trivial")
