"""Basis frames: which hypergroup labels the computational basis of each register.

A register over ``T`` is measured either in the element basis (tag ``element``)
or in the character basis (tag ``dual``).  A :class:`Frame` collects everything
that depends on that choice: the hypergroup whose elements label basis states,
the hypergroup labelling Z-type Pauli parameters, the diagonal values of those
Z operators, and the QFT carrying coordinates into the opposite frame.

Conventions, stated once:

* element frame: basis ``T``, Z parameters ``T*``, ``values[mu][x] = X_mu(x)``,
  QFT coordinates map by ``F[mu][a] = sqrt(w_mu w_a / total) X_mu(a)``;
* dual frame: basis ``T*``, Z parameters ``T``, ``values[a][mu] = X_mu(a)``,
  QFT coordinates map by ``F^dagger`` so two QFTs compose to the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np

from .characters import MATCH_TOL, CharacterTable, DualTable, NoMatch, compute_characters, dual_hypergroup, match_rows
from .hypergroup import HypergroupTable, direct_product

ELEMENT = "element"
DUAL = "dual"
TAGS = (ELEMENT, DUAL)


def flip(tag: str) -> str:
    return DUAL if tag == ELEMENT else ELEMENT


@dataclass(eq=False)
class Carrier:
    """A hypergroup bundled with its characters and dual, computed once."""

    table: HypergroupTable
    characters: CharacterTable
    dual: DualTable

    @classmethod
    def build(cls, table: HypergroupTable, characters: CharacterTable | None = None, seed: int = 0) -> "Carrier":
        chars = characters if characters is not None else compute_characters(table, seed=seed)
        return cls(table, chars, dual_hypergroup(table, chars, seed=seed))

    @cached_property
    def qft(self) -> np.ndarray:
        return self.characters.qft_matrix()

    @property
    def size(self) -> int:
        return self.table.size

    def frame(self, tag: str) -> "Frame":
        return frame_of((self,), (tag,))


@dataclass(eq=False)
class Frame:
    """Basis data for one or several registers under fixed tags (row-major product order)."""

    carriers: tuple[Carrier, ...]
    tags: tuple[str, ...]
    basis: HypergroupTable
    params: HypergroupTable
    values: np.ndarray
    qft: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.basis.size

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.carriers)

    @cached_property
    def param_invertible(self) -> np.ndarray:
        return np.all(np.abs(np.abs(self.values) - 1.0) <= 1e-9, axis=1)

    @cached_property
    def trivial_param(self) -> int:
        hits = np.flatnonzero(np.all(np.abs(self.values - 1.0) <= 1e-9, axis=1))
        return int(hits[0])

    def encode(self, labels) -> int:
        return int(np.ravel_multi_index(tuple(int(x) for x in labels), self.dims))

    def decode(self, index: int) -> tuple[int, ...]:
        return tuple(int(x) for x in np.unravel_index(int(index), self.dims))

    def flipped(self) -> "Frame":
        return frame_of(self.carriers, tuple(flip(t) for t in self.tags))

    def conjugate_param(self, p: int) -> int:
        return int(self.params.involution[p])

    def pauli_x(self, x: int) -> np.ndarray:
        """``X(x)|y> = sum_z sqrt(w_y / w_z) n[x][y][z] |z>`` as a dense matrix."""
        w = self.basis.weights
        n = self.size
        m = np.zeros((n, n))
        s = self.basis
        for y in range(n):
            sl = s.pair_slice(x, y)
            z = s._c[sl]
            m[z, y] = np.sqrt(w[y] / w[z]) * s._values[sl]
        return m

    def pauli_z(self, p: int) -> np.ndarray:
        return np.diag(self.values[p])

    def dual_map(self, mapping) -> np.ndarray:
        """``alpha^{-*}`` on Z parameters: ``values[alpha^{-*}(p)] = values[p] o alpha^{-1}``."""
        mapping = np.asarray(mapping, dtype=np.int64)
        inverse = np.empty_like(mapping)
        inverse[mapping] = np.arange(mapping.size)
        return match_rows(self.values[:, inverse], self.values)

    def match_param(self, row: np.ndarray) -> int:
        """Z parameter whose diagonal equals ``row``."""
        hits = np.flatnonzero(np.max(np.abs(self.values - np.asarray(row)[None, :]), axis=1) <= MATCH_TOL)
        if hits.size == 0:
            raise NoMatch("no Z parameter has this diagonal")
        return int(hits[0])


_FRAMES: dict[tuple, Frame] = {}


def _single(carrier: Carrier, tag: str) -> tuple[HypergroupTable, HypergroupTable, np.ndarray, np.ndarray]:
    if tag == ELEMENT:
        return carrier.table, carrier.dual.table, carrier.characters.values, carrier.qft
    return carrier.dual.table, carrier.table, carrier.characters.values.T, carrier.qft.conj().T


def frame_of(carriers, tags) -> Frame:
    carriers, tags = tuple(carriers), tuple(tags)
    if len(carriers) != len(tags) or not carriers:
        raise ValueError("need one tag per register")
    for t in tags:
        if t not in TAGS:
            raise ValueError(f"unknown basis tag {t!r}")
    key = (tuple(id(c) for c in carriers), tags)
    cached = _FRAMES.get(key)
    if cached is not None and cached.carriers == carriers:
        return cached
    parts = [_single(c, t) for c, t in zip(carriers, tags)]
    basis = reduce(direct_product, (p[0] for p in parts))
    params = reduce(direct_product, (p[1] for p in parts))
    values = reduce(np.kron, (p[2] for p in parts))
    qft = reduce(np.kron, (p[3] for p in parts))
    out = Frame(carriers, tags, basis, params, values, qft)
    _FRAMES[key] = out
    return out
