"""Normalizer circuits: IR with basis-tag tracking, dense simulation, CSS tracking, normal form and sampling."""

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
    check_automorphism,
    is_diagonal,
    validate_quadratic,
)
from .hypergroup import CapExceeded, HypergroupError, SubhypergroupView, group_valued_homomorphisms
from .pauli import CssStabilizer, css_normal_form, register_frame, tags_after

DENSE_CAP = 4096


@dataclass
class Circuit:
    registers: tuple[Carrier, ...]
    input_tags: tuple[str, ...]
    input_labels: tuple[int, ...]
    gates: list = field(default_factory=list)
    register_names: tuple[str, ...] = ()

    def __post_init__(self):
        self.registers = tuple(self.registers)
        self.input_tags = tuple(self.input_tags)
        self.input_labels = tuple(int(x) for x in self.input_labels)
        if not (len(self.registers) == len(self.input_tags) == len(self.input_labels)):
            raise ValueError("one input tag and label per register")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.registers)

    def tag_history(self) -> list[tuple[str, ...]]:
        """Tags in force before each gate, then the final tags."""
        tags = self.input_tags
        out = [tags]
        for g in self.gates:
            tags = tags_after(g, tags)
            out.append(tags)
        return out

    @property
    def final_tags(self) -> tuple[str, ...]:
        return self.tag_history()[-1]

    def frame(self, tags=None, registers=None) -> Frame:
        tags = self.input_tags if tags is None else tags
        regs = range(len(self.registers)) if registers is None else registers
        return frame_of([self.registers[r] for r in regs], [tags[r] for r in regs])


@dataclass
class CircuitReport:
    issues: list[str]
    final_tags: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_circuit(c: Circuit) -> CircuitReport:
    """Replay tags and flag invalid parameters, non-invertible Pauli gates and non-automorphisms."""
    issues = []
    m = len(c.registers)
    for r, (tag, label) in enumerate(zip(c.input_tags, c.input_labels)):
        if not 0 <= label < c.registers[r].size:
            issues.append(f"input label {label} out of range on register {r}")
    tags = c.input_tags
    for step, g in enumerate(c.gates):
        where = f"gate {step} ({type(g).__name__})"
        try:
            if isinstance(g, PauliX):
                f = register_frame(c.registers, tags, g.register)
                if not 0 <= g.element < f.size:
                    issues.append(f"{where}: element out of range")
                elif not f.basis.invertible[g.element]:
                    issues.append(f"{where}: element {f.basis.labels[g.element]} is not invertible")
            elif isinstance(g, PauliZ):
                f = register_frame(c.registers, tags, g.register)
                if not 0 <= g.param < f.size:
                    issues.append(f"{where}: parameter out of range")
                elif not f.param_invertible[g.param]:
                    issues.append(f"{where}: parameter {f.params.labels[g.param]} is not invertible")
            elif isinstance(g, Automorphism):
                _check_registers(g.registers, m)
                check_automorphism(c.frame(tags, g.registers), g.mapping)
            elif isinstance(g, QuadraticPhase):
                _check_registers(g.registers, m)
                validate_quadratic(c.frame(tags, g.registers), g.values)
            elif isinstance(g, PartialQFT):
                _check_registers((g.register,), m)
            elif not isinstance(g, GlobalQFT):
                issues.append(f"{where}: unknown gate")
        except (HypergroupError, IndexError, ValueError) as exc:
            issues.append(f"{where}: {exc}")
        tags = tags_after(g, tags)
    return CircuitReport(issues, tags)


def _check_registers(regs, m):
    if len(set(regs)) != len(regs) or any(not 0 <= r < m for r in regs):
        raise ValueError(f"bad register list {regs}")


# -- dense simulation -------------------------------------------------------------------------------


@dataclass
class DenseState:
    amplitudes: np.ndarray
    tags: tuple[str, ...]
    dims: tuple[int, ...]

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)


def _apply_local(state: np.ndarray, dims, regs, matrix: np.ndarray) -> np.ndarray:
    psi = state.reshape(dims)
    psi = np.moveaxis(psi, list(regs), list(range(len(regs))))
    shape = psi.shape
    local = int(np.prod([dims[r] for r in regs]))
    psi = (matrix @ psi.reshape(local, -1)).reshape(shape)
    return np.moveaxis(psi, list(range(len(regs))), list(regs)).reshape(-1)


def local_gate_matrix(gate, carriers, tags) -> tuple[tuple[int, ...], np.ndarray]:
    """Registers touched and the gate's matrix on their product, in the current frames."""
    if isinstance(gate, PauliX):
        return (gate.register,), register_frame(carriers, tags, gate.register).pauli_x(gate.element)
    if isinstance(gate, PauliZ):
        return (gate.register,), register_frame(carriers, tags, gate.register).pauli_z(gate.param)
    if isinstance(gate, Automorphism):
        n = len(gate.mapping)
        perm = np.zeros((n, n))
        perm[list(gate.mapping), np.arange(n)] = 1.0
        return tuple(gate.registers), perm
    if isinstance(gate, QuadraticPhase):
        return tuple(gate.registers), np.diag(np.asarray(gate.values, dtype=complex))
    if isinstance(gate, PartialQFT):
        return (gate.register,), register_frame(carriers, tags, gate.register).qft
    raise UnsupportedGate(f"no local matrix for {gate!r}")


def apply_gate(state: np.ndarray, gate, carriers, tags) -> tuple[np.ndarray, tuple[str, ...]]:
    dims = [c.size for c in carriers]
    if isinstance(gate, GlobalQFT):
        for r in range(len(carriers)):
            state = _apply_local(state, dims, (r,), register_frame(carriers, tags, r).qft)
    else:
        regs, mat = local_gate_matrix(gate, carriers, tags)
        state = _apply_local(state, dims, regs, mat)
    return state, tags_after(gate, tags)


def basis_vector(dims, labels) -> np.ndarray:
    vec = np.zeros(int(np.prod(dims)), dtype=complex)
    vec[np.ravel_multi_index(tuple(labels), tuple(dims))] = 1.0
    return vec


def simulate_dense(c: Circuit, cap: int = DENSE_CAP, state: np.ndarray | None = None) -> DenseState:
    dims = c.dims
    if int(np.prod(dims)) > cap:
        raise CapExceeded(f"state dimension {int(np.prod(dims))} exceeds {cap}")
    psi = basis_vector(dims, c.input_labels) if state is None else np.asarray(state, dtype=complex)
    tags = c.input_tags
    for g in c.gates:
        psi, tags = apply_gate(psi, g, c.registers, tags)
    return DenseState(psi, tags, dims)


def circuit_unitary(c: Circuit, cap: int = 1024) -> np.ndarray:
    """Dense matrix of the whole circuit (columns are images of basis states)."""
    dim = int(np.prod(c.dims))
    if dim > cap:
        raise CapExceeded(f"unitary of dimension {dim} exceeds {cap}")
    cols = []
    for k in range(dim):
        cols.append(simulate_dense(c, state=np.eye(dim, dtype=complex)[k]).amplitudes)
    return np.array(cols).T


# -- full-product helpers ---------------------------------------------------------------------------


def extend_mapping(dims, regs, mapping) -> np.ndarray:
    """Lift a map on the product of ``regs`` to all registers (identity elsewhere)."""
    total = int(np.prod(dims))
    if len(regs) == 0:
        return np.arange(total)
    coords = np.array(np.unravel_index(np.arange(total), dims))
    sub_dims = [dims[r] for r in regs]
    local = np.ravel_multi_index(tuple(coords[list(regs)]), sub_dims)
    image = np.array(np.unravel_index(np.asarray(mapping)[local], sub_dims))
    coords[list(regs)] = image
    return np.ravel_multi_index(tuple(coords), dims)


def _single_param(frame: Frame, register: int, value: int, trivial: bool) -> int:
    """Full-product index with ``value`` at one register and identities (or trivial params) elsewhere."""
    labels = []
    for q, (carrier, tag) in enumerate(zip(frame.carriers, frame.tags)):
        sub = frame_of((carrier,), (tag,))
        labels.append(value if q == register else (sub.trivial_param if trivial else sub.basis.identity))
    return frame.encode(labels)


# -- stabilizer tracking ------------------------------------------------------------------------------


@dataclass
class TrackedState:
    stabilizer: CssStabilizer
    tags: tuple[str, ...]
    trailing: list = field(default_factory=list)

    def state_vector(self) -> np.ndarray:
        vec = css_normal_form(self.stabilizer).state
        for g in self.trailing:
            carriers = self.stabilizer.frame.carriers
            regs, mat = local_gate_matrix(g, carriers, self.tags)
            vec = _apply_local(vec, [c.size for c in carriers], regs, mat)
        return vec


def _trailing_split(gates) -> int:
    """Index where the trailing diagonal layer starts (quadratic gates allowed only there)."""
    cut = len(gates)
    while cut > 0 and is_diagonal(gates[cut - 1]):
        cut -= 1
    for g in gates[:cut]:
        if isinstance(g, QuadraticPhase):
            raise UnsupportedGate("quadratic phase gates are supported only in the trailing diagonal layer")
        if isinstance(g, PartialQFT):
            raise UnsupportedGate("partial QFTs are outside the tracked gate set")
    return cut


def track_stabilizers(c: Circuit) -> TrackedState:
    """Follow the CSS triple (N, s, sigma) of a basis-state input through the circuit."""
    cut = _trailing_split(c.gates)
    tags = c.input_tags
    frame = c.frame(tags)
    members = {frame.basis.identity}
    s = frame.encode(c.input_labels)
    sigma = frame.trivial_param
    dims = c.dims
    for g in c.gates[:cut]:
        if isinstance(g, PauliX):
            if not register_frame(c.registers, tags, g.register).basis.invertible[g.element]:
                raise UnsupportedGate("Pauli X gate with a non-invertible element")
            s = frame.basis.multiply_single(_single_param(frame, g.register, g.element, False), s)
        elif isinstance(g, PauliZ):
            if not register_frame(c.registers, tags, g.register).param_invertible[g.param]:
                raise UnsupportedGate("Pauli Z gate with a non-invertible parameter")
            p = _single_param(frame, g.register, g.param, True)
            sigma = frame.params.multiply_single(sigma, frame.conjugate_param(p))
        elif isinstance(g, Automorphism):
            full = extend_mapping(dims, g.registers, g.mapping)
            members = {int(full[x]) for x in members}
            s = int(full[s])
            sigma = int(frame.dual_map(full)[sigma])
        elif isinstance(g, GlobalQFT):
            perp = CssStabilizer(frame, tuple(members), s, sigma).annihilator
            s_parts, sigma_parts = frame.decode(s), frame.decode(sigma)
            new_s, new_sigma = [], []
            for r, tag in enumerate(tags):
                sub = register_frame(c.registers, tags, r)
                if tag == ELEMENT:
                    new_s.append(sigma_parts[r])
                    new_sigma.append(int(sub.basis.involution[s_parts[r]]))
                else:
                    new_s.append(sub.conjugate_param(sigma_parts[r]))
                    new_sigma.append(s_parts[r])
            tags = tuple(flip(t) for t in tags)
            frame = c.frame(tags)
            members, s, sigma = set(perp), frame.encode(new_s), frame.encode(new_sigma)
        else:
            raise UnsupportedGate(f"{type(g).__name__} cannot be tracked")
    stab = CssStabilizer(frame, tuple(members), s, sigma)
    return TrackedState(stab, tags, list(c.gates[cut:]))


# -- normal form ---------------------------------------------------------------------------------------


@dataclass
class NormalForm:
    """``C = (trailing diagonal) M F`` with ``F`` either nothing or one global QFT."""

    monomial: list
    qft: bool
    trailing: list
    input_tags: tuple[str, ...]

    @property
    def output_tags(self) -> tuple[str, ...]:
        return tuple(flip(t) for t in self.input_tags) if self.qft else self.input_tags

    def as_circuit(self, template: Circuit) -> Circuit:
        gates = ([GlobalQFT()] if self.qft else []) + list(self.monomial) + list(self.trailing)
        return Circuit(template.registers, template.input_tags, template.input_labels, gates, template.register_names)


def push_through_qft(gate, carriers, tags):
    """The gate ``G'`` with ``QFT G = G' QFT``, expressed in the post-QFT frames."""
    if isinstance(gate, PauliX):
        f = register_frame(carriers, tags, gate.register)
        if tags[gate.register] == ELEMENT:
            return PauliZ(gate.register, gate.element)
        return PauliZ(gate.register, int(f.basis.involution[gate.element]))
    if isinstance(gate, PauliZ):
        f = register_frame(carriers, tags, gate.register)
        if tags[gate.register] == ELEMENT:
            return PauliX(gate.register, f.conjugate_param(gate.param))
        return PauliX(gate.register, gate.param)
    if isinstance(gate, Automorphism):
        f = frame_of([carriers[r] for r in gate.registers], [tags[r] for r in gate.registers])
        # Z(mu) crosses the QFT as X(conj mu) on element-tagged registers only
        kappa = extend_mapping(
            f.dims,
            [k for k, r in enumerate(gate.registers) if tags[r] == ELEMENT],
            _conjugation_table(carriers, gate.registers, tags),
        )
        pushed = kappa[f.dual_map(gate.mapping)[kappa]]
        return Automorphism(gate.registers, tuple(int(x) for x in pushed), gate.name + "*")
    raise UnsupportedGate(f"{type(gate).__name__} cannot be pushed through a QFT")


def _conjugation_table(carriers, regs, tags) -> np.ndarray:
    """Joint involution on the Z parameters of the element-tagged registers among ``regs``."""
    picked = [r for r in regs if tags[r] == ELEMENT]
    if not picked:
        return np.zeros(1, dtype=np.int64)
    f = frame_of([carriers[r] for r in picked], [tags[r] for r in picked])
    return np.asarray(f.params.involution, dtype=np.int64)


def normal_form(c: Circuit) -> NormalForm:
    cut = _trailing_split(c.gates)
    monomial: list = []
    qft = False
    tags = c.input_tags
    for g in c.gates[:cut]:
        if isinstance(g, GlobalQFT):
            monomial = [push_through_qft(m, c.registers, tags) for m in monomial]
            qft = not qft
            tags = tuple(flip(t) for t in tags)
        elif isinstance(g, (PauliX, PauliZ, Automorphism)):
            monomial.append(g)
        else:
            raise UnsupportedGate(f"{type(g).__name__} is outside the normal-form gate set")
    return NormalForm(monomial, qft, list(c.gates[cut:]), c.input_tags)


# -- sampling -------------------------------------------------------------------------------------------


def monomial_permutation(nf: NormalForm, c: Circuit) -> np.ndarray:
    """Basis permutation of M in the output frames (phases dropped)."""
    tags = nf.output_tags
    frame = c.frame(tags)
    dims = c.dims
    perm = np.arange(frame.size)
    for g in nf.monomial:
        if isinstance(g, PauliX):
            sub = register_frame(c.registers, tags, g.register)
            if not sub.basis.invertible[g.element]:
                raise UnsupportedGate("Pauli X gate with a non-invertible element")
            local = np.array([sub.basis.multiply_single(g.element, y) for y in range(sub.size)])
            step = extend_mapping(dims, (g.register,), local)
        elif isinstance(g, PauliZ):
            continue
        else:
            step = extend_mapping(dims, g.registers, g.mapping)
        perm = step[perm]
    return perm


def _register_columns(c: Circuit, nf: NormalForm) -> list[np.ndarray]:
    """Per-register output distributions right after F."""
    cols = []
    for r, (carrier, tag, label) in enumerate(zip(c.registers, c.input_tags, c.input_labels)):
        if nf.qft:
            q = frame_of((carrier,), (tag,)).qft
            cols.append(np.abs(q[:, label]) ** 2)
        else:
            col = np.zeros(carrier.size)
            col[label] = 1.0
            cols.append(col)
    return cols


def outcome_distribution(c: Circuit) -> np.ndarray:
    """Analytic final-basis distribution: the post-F product distribution pushed through M's permutation."""
    nf = normal_form(c)
    base = reduce(np.kron, _register_columns(c, nf))
    perm = monomial_permutation(nf, c)
    out = np.zeros_like(base)
    np.add.at(out, perm, base)
    return out


def dense_distribution(c: Circuit, cap: int = DENSE_CAP) -> np.ndarray:
    return simulate_dense(c, cap=cap).probabilities()


@dataclass
class Samples:
    outcomes: list[tuple[int, ...]]
    tags: tuple[str, ...]

    def counts(self) -> dict[tuple[int, ...], int]:
        out: dict[tuple[int, ...], int] = {}
        for o in self.outcomes:
            out[o] = out.get(o, 0) + 1
        return out


def sample_outcomes(c: Circuit, shots: int, seed: int | None = None) -> Samples:
    """Shot sampler: draw each register from its post-F column, then apply M's permutation."""
    nf = normal_form(c)
    rng = np.random.default_rng(seed)
    cols = _register_columns(c, nf)
    draws = np.stack([rng.choice(col.size, size=shots, p=col / col.sum()) for col in cols])
    flat = np.ravel_multi_index(tuple(draws), c.dims)
    final = monomial_permutation(nf, c)[flat]
    decoded = np.array(np.unravel_index(final, c.dims)).T
    return Samples([tuple(int(v) for v in row) for row in decoded], nf.output_tags)


# -- random circuits in the restricted gate set -----------------------------------------------------------


def random_restricted_circuit(carriers, depth: int, rng, input_tags=None, trailing_quadratics=None) -> Circuit:
    """Global QFTs, invertible Pauli gates and automorphisms (single-register, register swaps and
    controlled multiplications by group-valued homomorphisms), on a random basis-state input."""
    from .hypergroup import automorphisms

    rng = np.random.default_rng(rng)
    m = len(carriers)
    if input_tags is None:
        input_tags = tuple(ELEMENT if rng.random() < 0.5 else DUAL for _ in range(m))
    labels = tuple(int(rng.integers(c.size)) for c in carriers)
    gates = []
    tags = tuple(input_tags)
    for _ in range(depth):
        kind = rng.choice(["qft", "px", "pz", "auto1", "auto2"], p=[0.2, 0.2, 0.2, 0.2, 0.2])
        r = int(rng.integers(m))
        f = register_frame(carriers, tags, r)
        if kind == "qft":
            gates.append(GlobalQFT())
        elif kind == "px":
            gates.append(PauliX(r, int(rng.choice(np.flatnonzero(f.basis.invertible)))))
        elif kind == "pz":
            gates.append(PauliZ(r, int(rng.choice(np.flatnonzero(f.param_invertible)))))
        elif kind == "auto1" or m == 1:
            autos = _cached(("auto", id(f)), lambda: automorphisms(f.basis, limit=64))
            gates.append(Automorphism((r,), autos[int(rng.integers(len(autos)))], "alpha"))
        else:
            q = int(rng.choice([x for x in range(m) if x != r]))
            g = _two_register_automorphism(carriers, tags, r, q, rng)
            gates.append(g)
        tags = tags_after(gates[-1], tags)
    if trailing_quadratics:
        gates.extend(trailing_quadratics(tags))
    return Circuit(carriers, input_tags, labels, gates)


_CACHE: dict = {}


def _cached(key, build):
    if key not in _CACHE:
        _CACHE[key] = build()
    return _CACHE[key]


def _two_register_automorphism(carriers, tags, control: int, target: int, rng) -> Automorphism:
    fc = register_frame(carriers, tags, control)
    ft = register_frame(carriers, tags, target)
    regs = (control, target)
    same = fc.basis.size == ft.basis.size and np.allclose(fc.basis.weights, ft.basis.weights) and fc.basis == ft.basis
    if same and rng.random() < 0.3:
        n = fc.size
        mapping = tuple(int(y * n + x) for x in range(n) for y in range(n))
        return Automorphism(regs, mapping, "swap")
    homs = _cached(("hom", id(fc), id(ft)), lambda: group_valued_homomorphisms(fc.basis, ft.basis, limit=64))
    h = homs[int(rng.integers(len(homs)))]
    n = ft.size
    mapping = []
    for x in range(fc.size):
        for y in range(n):
            mapping.append(x * n + ft.basis.multiply_single(h[x], y))
    return Automorphism(regs, tuple(mapping), "ctrl-mult")


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


def stabilizer_fidelity(tracked: TrackedState, dense: DenseState) -> float:
    return float(abs(np.vdot(tracked.state_vector(), dense.amplitudes)) ** 2)


def coset_members(frame: Frame, members) -> SubhypergroupView:
    return SubhypergroupView(frame.basis, members)
