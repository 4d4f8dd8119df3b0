"""Normalizer gate records and quadratic-function validation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .characters import NoMatch
from .frames import Frame
from .hypergroup import HypergroupError, HypergroupMorphism

UNIT_TOL = 1e-9


class UnsupportedGate(HypergroupError):
    pass


class NotQuadratic(HypergroupError):
    pass


@dataclass(frozen=True)
class PauliX:
    register: int
    element: int


@dataclass(frozen=True)
class PauliZ:
    register: int
    param: int


@dataclass(frozen=True)
class Automorphism:
    """Index map over the product basis of ``registers`` under their tags at this step."""

    registers: tuple[int, ...]
    mapping: tuple[int, ...]
    name: str = ""


@dataclass(frozen=True, eq=False)
class QuadraticPhase:
    """Diagonal ``D_xi`` with values over the product basis of ``registers``."""

    registers: tuple[int, ...]
    values: np.ndarray = field(repr=False)
    name: str = ""


@dataclass(frozen=True)
class GlobalQFT:
    pass


@dataclass(frozen=True)
class PartialQFT:
    register: int


Gate = PauliX | PauliZ | Automorphism | QuadraticPhase | GlobalQFT | PartialQFT


def is_monomial(gate) -> bool:
    return isinstance(gate, (PauliX, PauliZ, Automorphism))


def is_diagonal(gate) -> bool:
    return isinstance(gate, (PauliZ, QuadraticPhase))


def check_automorphism(frame: Frame, mapping) -> None:
    """Raise unless ``mapping`` is an automorphism of the frame's basis hypergroup."""
    try:
        kind = HypergroupMorphism(frame.basis, frame.basis, tuple(int(m) for m in mapping)).check()
    except HypergroupError as exc:
        raise UnsupportedGate(f"not an automorphism: {exc}") from exc
    if kind != "automorphism":
        raise UnsupportedGate("map is not a bijective automorphism")


@dataclass(eq=False)
class QuadraticFunction:
    """A validated quadratic function with its bicharacter and homomorphism into invertible parameters."""

    values: np.ndarray
    bicharacter: np.ndarray
    beta: np.ndarray
    residual: float


def validate_quadratic(frame: Frame, values) -> QuadraticFunction:
    """Check that ``xi`` is quadratic on the frame's basis and solve ``xi(gh) = xi(g) xi(h) B(g,h)``.

    ``B`` is read off the product support, which must carry a single value of
    ``xi``; each row ``B(g, .)`` must be one of the frame's Z diagonals, which
    yields ``beta(g)``; ``beta`` must land on invertible parameters.
    """
    t = frame.basis
    xi = np.asarray(values, dtype=complex)
    n = t.size
    if xi.shape != (n,):
        raise NotQuadratic(f"expected {n} values, got {xi.shape}")
    if np.max(np.abs(np.abs(xi) - 1.0)) > UNIT_TOL:
        raise NotQuadratic("values are not of unit modulus")
    ptr, idx = t.support_csr
    bichar = np.empty((n, n), dtype=complex)
    worst = 0.0
    for g in range(n):
        for h in range(n):
            sup = idx[ptr[g * n + h] : ptr[g * n + h + 1]]
            spread = float(np.max(np.abs(xi[sup] - xi[sup[0]])))
            if spread > UNIT_TOL:
                raise NotQuadratic(f"xi is not constant on the support of {t.labels[g]}*{t.labels[h]}")
            bichar[g, h] = xi[sup[0]] / (xi[g] * xi[h])
    worst = max(worst, float(np.max(np.abs(bichar - bichar.T))))
    # B(g, .) must be a character: multiplicative against the structure constants
    for g in range(n):
        row = bichar[g]
        for a in range(n):
            for b in range(n):
                sl = t.pair_slice(a, b)
                expect = np.dot(t._values[sl], row[t._c[sl]])
                worst = max(worst, abs(row[a] * row[b] - expect))
    if worst > 1e-8:
        raise NotQuadratic(f"defect is not a symmetric bicharacter (residual {worst:.3g})")
    try:
        beta = np.array([frame.match_param(bichar[g]) for g in range(n)], dtype=np.int64)
    except NoMatch as exc:
        raise NotQuadratic("a row of the bicharacter is not a character of this frame") from exc
    if not np.all(frame.param_invertible[beta]):
        raise NotQuadratic("beta reaches a non-invertible character")
    return QuadraticFunction(xi, bichar, beta, worst)
