"""Hypergroup Pauli operators, their conjugation calculus, and CSS stabilizer states.

Operators act on the coordinates of a register set whose basis is fixed by a
tuple of tags (see :mod:`hyperstab.frames`).  A Pauli product is an ordered
tuple of :class:`PauliTerm`; the matrix is the left-to-right product.  X-type
operators are neither unitary nor monomial in general, so products are never
multiplied out symbolically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .frames import DUAL, ELEMENT, Carrier, Frame, flip, frame_of
from .gates import (
    Automorphism,
    GlobalQFT,
    PartialQFT,
    PauliX,
    PauliZ,
    QuadraticPhase,
    UnsupportedGate,
    validate_quadratic,
)
from .hypergroup import HypergroupError, SubhypergroupView, coset, cosets

EIGEN_TOL = 1e-7


class EmptySpace(HypergroupError):
    pass


@dataclass(frozen=True)
class PauliTerm:
    """``phase * X(param)`` or ``phase * Z(param)`` on one register, relative to the tag ``side``."""

    register: int
    side: str
    kind: str
    param: int
    phase: complex = 1.0

    def __post_init__(self):
        if self.kind not in ("X", "Z"):
            raise ValueError(f"Pauli kind must be X or Z, not {self.kind!r}")
        if self.side not in (ELEMENT, DUAL):
            raise ValueError(f"unknown side {self.side!r}")
        if abs(abs(self.phase) - 1.0) > 1e-9:
            raise ValueError("Pauli phase must have unit modulus")

    def scaled(self, factor: complex) -> "PauliTerm":
        return PauliTerm(self.register, self.side, self.kind, self.param, complex(self.phase * factor))


def register_frame(carriers, tags, register: int) -> Frame:
    return frame_of((carriers[register],), (tags[register],))


def _embed(matrix: np.ndarray, register: int, dims) -> np.ndarray:
    before = int(np.prod(dims[:register], dtype=np.int64))
    after = int(np.prod(dims[register + 1 :], dtype=np.int64))
    return np.kron(np.kron(np.eye(before), matrix), np.eye(after))


def dense_pauli(term: PauliTerm, carriers, tags) -> np.ndarray:
    """Matrix of one term on the full register product."""
    frame = register_frame(carriers, tags, term.register)
    if term.side != tags[term.register]:
        raise ValueError("term side does not match the register tag")
    local = frame.pauli_x(term.param) if term.kind == "X" else frame.pauli_z(term.param)
    dims = [c.size for c in carriers]
    return term.phase * _embed(local, term.register, dims)


def dense_product(terms, carriers, tags) -> np.ndarray:
    dim = int(np.prod([c.size for c in carriers]))
    return reduce(lambda acc, t: acc @ dense_pauli(t, carriers, tags), terms, np.eye(dim, dtype=complex))


def commutes(frame: Frame, element: int, param: int, tol: float = 1e-9) -> bool:
    """X(element) and Z(param) commute exactly when the character value is 1."""
    return bool(abs(frame.values[param][element] - 1.0) <= tol)


# -- conjugation ------------------------------------------------------------------------------


def conjugate_term(term: PauliTerm, gate, carriers, tags) -> tuple[PauliTerm, ...]:
    """Rewrite ``G P G^dagger`` as an ordered Pauli product in the post-gate frames."""
    r = term.register
    if isinstance(gate, (GlobalQFT, PartialQFT)):
        if isinstance(gate, PartialQFT) and gate.register != r:
            return (term,)
        frame = register_frame(carriers, tags, r)
        new_side = flip(term.side)
        if term.side == ELEMENT:
            # X(a) -> Z*(a), Z(mu) -> X*(conj mu)
            if term.kind == "X":
                return (PauliTerm(r, new_side, "Z", term.param, term.phase),)
            return (PauliTerm(r, new_side, "X", frame.conjugate_param(term.param), term.phase),)
        # dual side: X*(nu) -> Z(conj nu), Z*(a) -> X(a)
        if term.kind == "X":
            return (PauliTerm(r, new_side, "Z", int(frame.basis.involution[term.param]), term.phase),)
        return (PauliTerm(r, new_side, "X", term.param, term.phase),)
    if isinstance(gate, PauliX):
        if gate.register != r or term.kind == "X":
            return (term,)
        frame = register_frame(carriers, tags, r)
        if not frame.basis.invertible[gate.element]:
            raise UnsupportedGate("Pauli X gate with a non-invertible element")
        inverse = int(frame.basis.involution[gate.element])
        return (term.scaled(frame.values[term.param][inverse]),)
    if isinstance(gate, PauliZ):
        if gate.register != r or term.kind == "Z":
            return (term,)
        frame = register_frame(carriers, tags, r)
        if not frame.param_invertible[gate.param]:
            raise UnsupportedGate("Pauli Z gate with a non-invertible character")
        return (term.scaled(frame.values[gate.param][term.param]),)
    if isinstance(gate, Automorphism):
        if r not in gate.registers:
            return (term,)
        regs = gate.registers
        frame = frame_of([carriers[q] for q in regs], [tags[q] for q in regs])
        slot = regs.index(r)
        if term.kind == "X":
            labels = [register_frame(carriers, tags, q).basis.identity for q in regs]
            labels[slot] = term.param
            image = frame.decode(gate.mapping[frame.encode(labels)])
            identities = [register_frame(carriers, tags, q).basis.identity for q in regs]
        else:
            labels = [register_frame(carriers, tags, q).trivial_param for q in regs]
            labels[slot] = term.param
            image = frame.decode(frame.dual_map(gate.mapping)[frame.encode(labels)])
            identities = [register_frame(carriers, tags, q).trivial_param for q in regs]
        out = [
            PauliTerm(q, tags[q], term.kind, p) for q, p, e in zip(regs, image, identities) if p != e
        ] or [PauliTerm(r, tags[r], term.kind, identities[slot])]
        out[0] = out[0].scaled(term.phase)
        return tuple(out)
    if isinstance(gate, QuadraticPhase):
        if r not in gate.registers or term.kind == "Z":
            return (term,)
        regs = gate.registers
        frame = frame_of([carriers[q] for q in regs], [tags[q] for q in regs])
        quad = validate_quadratic(frame, gate.values)
        labels = [register_frame(carriers, tags, q).basis.identity for q in regs]
        labels[regs.index(r)] = term.param
        g = frame.encode(labels)
        beta = frame.decode(quad.beta[g])
        out = [term.scaled(quad.values[g])]
        for q, p in zip(regs, beta):
            if p != register_frame(carriers, tags, q).trivial_param:
                out.append(PauliTerm(q, tags[q], "Z", p))
        return tuple(out)
    raise UnsupportedGate(f"unknown gate {gate!r}")


def tags_after(gate, tags) -> tuple[str, ...]:
    if isinstance(gate, GlobalQFT):
        return tuple(flip(t) for t in tags)
    if isinstance(gate, PartialQFT):
        out = list(tags)
        out[gate.register] = flip(out[gate.register])
        return tuple(out)
    return tuple(tags)


# -- CSS states -----------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CssStabilizer:
    """The pair ``{X(a): a in N}`` with eigenvalues ``X_sigma(a)`` and ``{Z(mu): mu in N-perp}`` with ``X_mu(s)``."""

    frame: Frame
    members: tuple[int, ...]
    s: int
    sigma: int

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(sorted(int(m) for m in self.members)))
        if self.frame.basis.identity not in self.members:
            raise HypergroupError("N must contain the identity")

    @property
    def s_invertible(self) -> bool:
        return bool(self.frame.basis.invertible[self.s])

    @property
    def sigma_invertible(self) -> bool:
        return bool(self.frame.param_invertible[self.sigma])

    @property
    def subgroup(self) -> SubhypergroupView:
        return SubhypergroupView(self.frame.basis, self.members)

    @property
    def annihilator(self) -> tuple[int, ...]:
        vals = self.frame.values[:, list(self.members)]
        return tuple(np.flatnonzero(np.all(np.abs(vals - 1.0) <= 1e-9, axis=1)).tolist())

    def generators(self) -> list[tuple[np.ndarray, complex]]:
        """Dense ``(operator, eigenvalue)`` pairs for the whole stabilizer."""
        f = self.frame
        out = [(f.pauli_x(a), complex(f.values[self.sigma][a])) for a in self.members]
        out += [(f.pauli_z(mu), complex(f.values[mu][self.s])) for mu in self.annihilator]
        return out


@dataclass
class StabilizedSpace:
    basis: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]

    @property
    def state(self) -> np.ndarray:
        if self.dimension != 1:
            raise EmptySpace(f"space has dimension {self.dimension}, not 1")
        return self.basis[:, 0]


def css_normal_form(stab: CssStabilizer) -> StabilizedSpace:
    """Closed-form stabilized space: one vector when s or sigma is invertible, else the span of psi_y."""
    f = stab.frame
    t = f.basis
    w = t.weights
    support = coset(t, stab.s, stab.subgroup)
    conj_sigma = np.conj(f.values[stab.sigma])
    if stab.s_invertible or stab.sigma_invertible:
        perp = stab.annihilator
        perp_view = SubhypergroupView(f.params, perp)
        weight_perp = float(f.params.weights[list(perp)].sum())
        sigma_coset = coset(f.params, f.conjugate_param(stab.sigma), perp_view)
        coset_weight = float(f.params.weights[list(sigma_coset)].sum()) / weight_perp
        total = float(w[list(support)].sum())
        vec = np.zeros(t.size, dtype=complex)
        idx = np.array(support)
        vec[idx] = np.sqrt(w[idx] * coset_weight / total) * conj_sigma[idx]
        return StabilizedSpace(vec[:, None])
    members = list(stab.members)
    columns = []
    for y in support:
        ybar = int(t.involution[y])
        col = np.zeros(t.size, dtype=complex)
        for x in range(t.size):
            col[x] = np.sqrt(w[x]) * np.dot(t.lookup(x, ybar, members), conj_sigma[members])
        columns.append(col)
    stack = np.array(columns).T
    u, sv, _ = np.linalg.svd(stack, full_matrices=False)
    rank = int(np.sum(sv > EIGEN_TOL * max(1.0, sv[0] if sv.size else 1.0)))
    if rank == 0:
        raise EmptySpace("every psi_y vanishes; the eigenvalues are inconsistent")
    return StabilizedSpace(u[:, :rank])


def dense_stabilized_space(generators, eigenvalues=None, dim: int | None = None) -> StabilizedSpace:
    """Joint eigenspace by successive projection; ``generators`` may hold ``(matrix, eigenvalue)`` pairs."""
    pairs = list(generators) if eigenvalues is None else list(zip(generators, eigenvalues))
    if dim is None:
        if not pairs:
            raise ValueError("dimension required when there are no generators")
        dim = pairs[0][0].shape[0]
    basis = np.eye(dim, dtype=complex)
    for op, lam in pairs:
        if basis.shape[1] == 0:
            break
        residual = (op - lam * np.eye(dim)) @ basis
        _, sv, vh = np.linalg.svd(residual, full_matrices=True)
        padded = np.zeros(basis.shape[1])
        padded[: sv.size] = sv
        null = vh.conj().T[:, padded <= EIGEN_TOL]
        basis = basis @ null
        if basis.shape[1]:
            basis, _ = np.linalg.qr(basis)
    return StabilizedSpace(basis)


def coset_state(frame: Frame, s: int, members) -> np.ndarray:
    """``|sN> = sum_{x in sN} sqrt(w_x / weight(sN)) |x>``."""
    t = frame.basis
    support = np.array(coset(t, s, members))
    vec = np.zeros(t.size, dtype=complex)
    w = t.weights[support]
    vec[support] = np.sqrt(w / w.sum())
    return vec


def coset_probabilities(frame: Frame, state: np.ndarray, members) -> tuple[list[tuple[int, ...]], np.ndarray]:
    blocks = cosets(frame.basis, SubhypergroupView(frame.basis, members))
    probs = np.array([float(np.sum(np.abs(state[list(b)]) ** 2)) for b in blocks])
    return blocks, probs


def syndrome_measure_Z(frame: Frame, state: np.ndarray, members, rng=None) -> tuple[int, np.ndarray, float]:
    """Project onto a coset of N sampled with probability ``|P_{sN} psi|^2``; returns the coset index."""
    rng = np.random.default_rng(rng)
    blocks, probs = coset_probabilities(frame, state, members)
    k = int(rng.choice(len(blocks), p=probs / probs.sum()))
    post = np.zeros_like(state)
    idx = list(blocks[k])
    post[idx] = state[idx] / np.sqrt(probs[k])
    return k, post, float(probs[k])


def carriers_of(*tables) -> tuple[Carrier, ...]:
    return tuple(Carrier.build(t) for t in tables)
