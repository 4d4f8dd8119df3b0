"""Characters of an abelian hypergroup, the dual hypergroup and annihilators.

Characters come from simultaneously diagonalizing the regular
representation.  With ``D = diag(w)`` the symmetrized matrices
``S_a = D^{-1/2} M_a D^{1/2}`` are normal and commute, and each shared
eigenvector ``u`` satisfies ``u[b] ∝ sqrt(w_b)·conj(X(b))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .hypergroup import (
    HypergroupError,
    HypergroupTable,
    SubhypergroupView,
    cosets,
    enumerate_subhypergroups,
)

CLUSTER_TOL = 1e-7
MIX_RETRIES = 5
MATCH_TOL = 1e-7
DENSE_DUAL_LIMIT = 96


class DegenerateSpectrum(HypergroupError):
    pass


class IllConditioned(HypergroupError):
    pass


class NoMatch(HypergroupError):
    pass


def match_rows(rows: np.ndarray, candidates: np.ndarray, tol: float = MATCH_TOL, seed: int = 7) -> np.ndarray:
    """Index map ``i -> j`` with ``rows[i] ≈ candidates[j]`` entrywise.

    Rows are bucketed by a random projection first so large tables match in
    ``O(k log k)`` comparisons; every proposed pair is then checked in full.
    """
    rows = np.asarray(rows, dtype=complex)
    candidates = np.asarray(candidates, dtype=complex)
    if rows.shape != candidates.shape:
        raise NoMatch("row sets have different shapes")
    k = rows.shape[0]
    rng = np.random.default_rng(seed)
    probe = rng.standard_normal(rows.shape[1]) + 1j * rng.standard_normal(rows.shape[1])
    probe /= np.linalg.norm(probe)
    keys_rows = rows @ probe
    keys_cand = candidates @ probe
    order = np.argsort(keys_cand.real)
    sorted_re = keys_cand.real[order]
    out = np.full(k, -1, dtype=np.int64)
    taken = np.zeros(k, dtype=bool)
    window = max(tol * np.sqrt(rows.shape[1]) * 10, 1e-9)
    for i in range(k):
        lo = np.searchsorted(sorted_re, keys_rows[i].real - window)
        hi = np.searchsorted(sorted_re, keys_rows[i].real + window)
        for j in order[lo:hi]:
            if taken[j]:
                continue
            if np.max(np.abs(rows[i] - candidates[j])) <= tol:
                out[i] = j
                taken[j] = True
                break
        if out[i] < 0:
            raise NoMatch(f"row {i} has no partner within {tol}")
    return out


@dataclass
class CharacterTable:
    """Character values ``values[mu][a]`` with weights and the conjugation permutation."""

    parent: HypergroupTable
    values: np.ndarray
    weights: np.ndarray
    conjugation: np.ndarray
    trivial: int = 0
    seed: int = 0
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.labels:
            self.labels = tuple(f"X{m}" for m in range(self.values.shape[0]))

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def kernel(self, mu: int, tol: float | None = None) -> np.ndarray:
        tol = self.parent.tol if tol is None else tol
        return np.flatnonzero(np.abs(self.values[mu] - 1.0) <= tol)

    @cached_property
    def invertible(self) -> np.ndarray:
        """Characters of unit modulus everywhere, the invertible elements of the dual."""
        return np.all(np.abs(np.abs(self.values) - 1.0) <= max(self.parent.tol, 1e-9), axis=1)

    def qft_matrix(self) -> np.ndarray:
        """``F[mu][a] = sqrt(w_mu w_a / ϖ) X_mu(a)``, the element-to-character transform."""
        w = self.parent.weights
        scale = np.sqrt(np.outer(self.weights, w) / self.parent.total_weight)
        return scale * self.values

    def character_equation_residual(self, max_pairs: int = 20000, seed: int = 0) -> float:
        t = self.parent
        a, b, c, v = t.entries
        n = t.size
        if n * n > max_pairs:
            rng = np.random.default_rng(seed)
            pairs = np.unique(rng.integers(0, n * n, size=max_pairs))
            keep = np.isin(a * n + b, pairs)
            a, b, c, v = a[keep], b[keep], c[keep], v[keep]
        else:
            pairs = np.arange(n * n)
        lookup = np.searchsorted(pairs, a * n + b)
        rhs = np.zeros((self.size, pairs.size), dtype=complex)
        np.add.at(rhs.T, lookup, (v[:, None] * self.values[:, c].T))
        pa, pb = pairs // n, pairs % n
        lhs = self.values[:, pa] * self.values[:, pb]
        return float(np.max(np.abs(lhs - rhs)))

    def orthogonality_residual(self) -> float:
        gram = (self.values.conj() * self.parent.weights) @ self.values.T
        gram *= self.weights[None, :] / self.parent.total_weight
        return float(np.max(np.abs(gram - np.eye(self.size))))


def _symmetrized_mix(t: HypergroupTable, coefficients: np.ndarray) -> np.ndarray:
    a, b, c, v = t.entries
    w = t.weights
    out = np.zeros((t.size, t.size))
    np.add.at(out, (c, b), coefficients[a] * np.sqrt(w[b] / w[c]) * v)
    return out


def _sort_key(row: np.ndarray) -> tuple:
    rounded = np.round(row, 6) + (0.0 + 0.0j)
    parts = []
    for z in rounded:
        parts.extend((-(z.real + 0.0), -(z.imag + 0.0)))
    return tuple(parts)


def compute_characters(t: HypergroupTable, seed: int = 0) -> CharacterTable:
    """All characters of ``t``: trivial first, the rest in descending lexicographic order."""
    n = t.size
    rng = np.random.default_rng(seed)
    w = t.weights
    for _attempt in range(MIX_RETRIES):
        coefficients = rng.uniform(-1.0, 1.0, size=n)
        mix = _symmetrized_mix(t, coefficients)
        eigenvalues, vectors = np.linalg.eig(mix)
        if n > 1:
            gaps = np.abs(eigenvalues[:, None] - eigenvalues[None, :])
            gaps[np.diag_indices(n)] = np.inf
            scale = max(1.0, float(np.max(np.abs(eigenvalues))))
            if float(gaps.min()) < CLUSTER_TOL * scale:
                continue
        anchor = vectors[t.identity]
        if np.any(np.abs(anchor) < 1e-12):
            continue
        values = np.conj(vectors / anchor[None, :]).T * np.sqrt(w[t.identity] / w)[None, :]
        break
    else:
        raise DegenerateSpectrum(f"eigenvalues stayed clustered after {MIX_RETRIES} random mixes")
    values = _clean(values)
    trivial_candidates = np.flatnonzero(np.all(np.abs(values - 1.0) <= 1e-7, axis=1))
    if trivial_candidates.size != 1:
        raise DegenerateSpectrum("could not identify a unique trivial character")
    trivial = int(trivial_candidates[0])
    rest = sorted((m for m in range(n) if m != trivial), key=lambda m: _sort_key(values[m]))
    values = values[[trivial] + rest]
    values[0] = 1.0
    weights = t.total_weight / np.sum(w[None, :] * np.abs(values) ** 2, axis=1)
    conjugation = match_rows(values.conj(), values)
    table = CharacterTable(t, values, weights, conjugation, 0, seed)
    _check_table(table)
    return table


def _clean(values: np.ndarray) -> np.ndarray:
    re = np.where(np.abs(values.real) < 1e-13, 0.0, values.real)
    im = np.where(np.abs(values.imag) < 1e-13, 0.0, values.imag)
    return re + 1j * im


def _check_table(chars: CharacterTable):
    t = chars.parent
    tol = max(t.tol, 1e-9) * max(1.0, np.sqrt(t.size))
    residual = chars.character_equation_residual()
    if residual > tol:
        raise DegenerateSpectrum(f"character equation residual {residual:.3g} exceeds {tol:.3g}")
    inv_residual = float(np.max(np.abs(chars.values[:, t.involution] - chars.values.conj())))
    if inv_residual > tol:
        raise DegenerateSpectrum(f"involution compatibility residual {inv_residual:.3g}")


# -- dual hypergroup -----------------------------------------------------------------


@dataclass
class DualTable:
    table: HypergroupTable
    signed_flag: bool
    residual: float
    characters: CharacterTable = field(repr=False)


def _dual_constants_dense(chars: CharacterTable) -> np.ndarray:
    t = chars.parent
    x = chars.values
    k = chars.size
    weighted_conj = (x.conj() * t.weights[None, :]).T  # [a, gamma]
    products = (x[:, None, :] * x[None, :, :]).reshape(k * k, t.size)
    m = (products @ weighted_conj) * (chars.weights[None, :] / t.total_weight)
    return m.reshape(k, k, k)


def _dual_constants_hashed(chars: CharacterTable, tol: float, seed: int):
    """Sparse dual constants, spotting products that equal a single character by hashing."""
    t = chars.parent
    x = chars.values
    k = chars.size
    rng = np.random.default_rng(seed)
    probe = rng.standard_normal(t.size)
    # hash[mu][nu] = sum_a X_mu(a) X_nu(a) probe(a)
    pair_hash = (x * probe[None, :]) @ x.T
    char_hash = x @ probe
    order = np.argsort(char_hash.real)
    sorted_re = char_hash.real[order]
    pos = np.clip(np.searchsorted(sorted_re, pair_hash.real), 1, k - 1)
    left, right = order[pos - 1], order[pos]
    pick = np.where(
        np.abs(char_hash[left] - pair_hash) <= np.abs(char_hash[right] - pair_hash), left, right
    )
    close = np.abs(char_hash[pick] - pair_hash) <= 1e-6 * np.sqrt(t.size)
    rows_a, rows_b, rows_c, vals = [], [], [], []
    single_mu, single_nu = np.nonzero(close)
    chunk = max(1, 2_000_000 // max(1, t.size))
    verified = np.zeros(single_mu.size, dtype=bool)
    for s in range(0, single_mu.size, chunk):
        mu, nu = single_mu[s : s + chunk], single_nu[s : s + chunk]
        gamma = pick[mu, nu]
        diff = np.max(np.abs(x[mu] * x[nu] - x[gamma]), axis=1)
        verified[s : s + chunk] = diff <= tol
    close[single_mu[~verified], single_nu[~verified]] = False
    mu, nu = single_mu[verified], single_nu[verified]
    rows_a.append(mu)
    rows_b.append(nu)
    rows_c.append(pick[mu, nu])
    vals.append(np.ones(mu.size))
    weighted_conj = (x.conj() * t.weights[None, :]).T
    scale = chars.weights / t.total_weight
    multi_mu, multi_nu = np.nonzero(~close)
    for s in range(0, multi_mu.size, 4096):
        mu, nu = multi_mu[s : s + 4096], multi_nu[s : s + 4096]
        coeffs = ((x[mu] * x[nu]) @ weighted_conj) * scale[None, :]
        coeffs = coeffs.real
        idx, gamma = np.nonzero(np.abs(coeffs) > tol)
        rows_a.append(mu[idx])
        rows_b.append(nu[idx])
        rows_c.append(gamma)
        vals.append(coeffs[idx, gamma])
    return tuple(np.concatenate(z) for z in (rows_a, rows_b, rows_c, vals))


def dual_hypergroup(t: HypergroupTable, chars: CharacterTable | None = None, seed: int = 0) -> DualTable:
    """The character hypergroup; ``signed_flag`` is set when a constant is negative."""
    chars = compute_characters(t, seed) if chars is None else chars
    k = chars.size
    tol = max(t.tol, 1e-9)
    if k <= DENSE_DUAL_LIMIT:
        m = _dual_constants_dense(chars)
        if np.max(np.abs(m.imag)) > tol:
            raise IllConditioned("dual structure constants are not real")
        m = np.where(np.abs(m.real) > tol, m.real, 0.0)
        a, b, c = np.nonzero(m)
        entries = (a, b, c, m[a, b, c])
    else:
        entries = _dual_constants_hashed(chars, tol, seed)
    a, b, c, v = entries
    signed = bool(np.any(v < -tol))
    residual = _dual_residual(chars, entries)
    if residual > tol * max(1.0, np.sqrt(k)):
        raise IllConditioned(f"dual reconstruction residual {residual:.3g}")
    v = np.where(np.abs(v - np.round(v)) <= 1e-12, np.round(v), v)
    table = HypergroupTable(
        k,
        (a, b, c, v),
        identity=chars.trivial,
        involution=chars.conjugation,
        labels=chars.labels,
        tol=t.tol,
        name=f"{t.name or 'T'}*",
    )
    return DualTable(table, signed, residual, chars)


def _dual_residual(chars: CharacterTable, entries, max_pairs: int = 20000, seed: int = 1) -> float:
    a, b, c, v = entries
    k = chars.size
    x = chars.values
    if k * k > max_pairs:
        rng = np.random.default_rng(seed)
        pairs = np.unique(rng.integers(0, k * k, size=max_pairs))
    else:
        pairs = np.arange(k * k)
    keys = a * k + b
    keep = np.isin(keys, pairs)
    lookup = np.searchsorted(pairs, keys[keep])
    rhs = np.zeros((pairs.size, x.shape[1]), dtype=complex)
    np.add.at(rhs, lookup, v[keep][:, None] * x[c[keep]])
    lhs = x[pairs // k] * x[pairs % k]
    return float(np.max(np.abs(lhs - rhs)))


def double_dual_iso(t: HypergroupTable, dual: DualTable | None = None, seed: int = 0) -> np.ndarray:
    """The map ``a -> index of the character conj(X_.)(a)`` of the dual, checked as an isomorphism."""
    dual = dual_hypergroup(t, seed=seed) if dual is None else dual
    if dual.signed_flag:
        raise NoMatch("dual hypergroup is signed")
    chars = dual.characters
    dual_chars = compute_characters(dual.table, seed)
    evaluations = chars.values.T.conj()  # [a][mu]
    mapping = match_rows(evaluations, dual_chars.values, tol=MATCH_TOL)
    # the structure of the double dual must reproduce n under the map
    double = dual_hypergroup(dual.table, dual_chars, seed)
    a, b, c, v = t.entries
    mirrored = double.table.lookup(mapping[a], mapping[b], mapping[c])
    if a.size and float(np.max(np.abs(mirrored - v))) > max(t.tol, 1e-8) * max(1.0, np.sqrt(t.size)):
        raise NoMatch("double dual structure differs from the original")
    if double.table.entries[0].size != a.size:
        raise NoMatch("double dual has a different support")
    if mapping[t.identity] != dual_chars.trivial:
        raise NoMatch("identity does not map to the trivial character")
    return mapping


# -- annihilators and orthogonality ---------------------------------------------------


def annihilator_members(chars: CharacterTable, members, tol: float | None = None) -> np.ndarray:
    tol = chars.parent.tol if tol is None else tol
    members = np.asarray(list(members), dtype=np.int64)
    return np.flatnonzero(np.all(np.abs(chars.values[:, members] - 1.0) <= tol, axis=1))


def annihilator(sub: SubhypergroupView, dual: DualTable) -> SubhypergroupView:
    """``N⊥`` as a subhypergroup of the dual, checked to be closed."""
    members = annihilator_members(dual.characters, sub.members)
    view = SubhypergroupView(dual.table, members)
    if not view.is_closed():
        raise HypergroupError("annihilator is not closed; tolerance too loose")
    return view


def restriction_classes(chars: CharacterTable, members) -> np.ndarray:
    """Label characters by their restriction to ``members``; equal labels share a coset of ``N⊥``."""
    restricted = chars.values[:, list(members)]
    labels = np.full(chars.size, -1, dtype=np.int64)
    next_label = 0
    for mu in range(chars.size):
        if labels[mu] >= 0:
            continue
        same = np.all(np.abs(restricted - restricted[mu]) <= 1e-7, axis=1)
        labels[same & (labels < 0)] = next_label
        next_label += 1
    return labels


@dataclass
class OrthogonalityReport:
    character_residual: float
    subgroup_residual: float
    coset_residual: float
    subgroups_checked: int
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.character_residual, self.subgroup_residual, self.coset_residual) <= self.tol


def verify_orthogonality(
    t: HypergroupTable, chars: CharacterTable | None = None, subgroups: list[SubhypergroupView] | None = None
) -> OrthogonalityReport:
    """Worst residuals of plain orthogonality and of both sums relative to every subhypergroup."""
    chars = compute_characters(t) if chars is None else chars
    subgroups = enumerate_subhypergroups(t) if subgroups is None else subgroups
    x = chars.values
    w = t.weights
    wx = chars.weights
    first = second = 0.0
    for sub in subgroups:
        members = list(sub.members)
        ann = annihilator_members(chars, members)
        labels = restriction_classes(chars, members)
        coset_weight = np.bincount(labels, weights=wx) / wx[ann].sum()
        weight_n = w[members].sum()
        # sum over a in N of w_{X_nu N⊥} w_a conj(X_mu(a)) X_nu(a) / ϖ_N
        gram = (x[:, members].conj() * w[members]) @ x[:, members].T / weight_n
        gram *= coset_weight[labels][None, :]
        expected = (labels[:, None] == labels[None, :]).astype(float)
        first = max(first, float(np.max(np.abs(gram - expected))))
        blocks = cosets(t, sub)
        coset_of = np.empty(t.size, dtype=np.int64)
        for i, block in enumerate(blocks):
            coset_of[list(block)] = i
        block_weight = np.array([w[list(bl)].sum() for bl in blocks]) / weight_n
        weight_ann = wx[ann].sum()
        # sum over mu in N⊥ of w_{bN} w_mu conj(X_mu(a)) X_mu(b) / ϖ_{N⊥}
        dual_gram = (x[ann].T.conj() * wx[ann]) @ x[ann] / weight_ann
        dual_gram *= block_weight[coset_of][None, :]
        expected = (coset_of[:, None] == coset_of[None, :]).astype(float)
        second = max(second, float(np.max(np.abs(dual_gram - expected))))
    return OrthogonalityReport(chars.orthogonality_residual(), first, second, len(subgroups), max(t.tol, 1e-9))
