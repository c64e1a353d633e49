"""Reconstruction protocols and attack scenarios.

Gates follow the controlled-U rule of the constructions: a single control
applies U_i to the target for control value i, a control pair applies
U_k with k = 2 - (i XOR j); the tables are fixed to U0 = U2 = identity
and U1 = bit flip, so both cases reduce to conditional flips.

Measurements are projective in the computational basis and both branches
are enumerated exactly with their probabilities; nothing is sampled.
Protocol steps may only touch particles owned by the acting players.
"""

from dataclasses import dataclass, field

import numpy as np

from .qstate import PureState, RegisterLayout, mutual_information, partial_trace
from .schemes import (
    apply_to_secret,
    build_block_scheme,
    build_threshold34,
    distribute_purified,
    identity_assignment,
)
from .structures import PlayerSubset

DECOUPLING_TOL = 1e-9


class ProtocolError(ValueError):
    """Protocol construction or simulation failure."""


class UnauthorizedSetError(ProtocolError):
    """The acting set cannot reconstruct the secret."""


class UnsupportedActingSetError(ProtocolError):
    """Authorized, but this protocol has no wiring for the set."""


class DecouplingError(ProtocolError):
    """Complement still correlated with the reference; decoding impossible."""

    def __init__(self, i_re):
        self.i_re = i_re
        super().__init__(
            f"I(R:E) = {i_re:.9f} > {DECOUPLING_TOL}; the acting set cannot decode"
        )


# ---------------------------------------------------------------------------
# protocol steps


@dataclass(frozen=True)
class GateStep:
    """One conditional-flip gate on particle registers."""

    kind: str  # "single_controlled" | "double_controlled" | "cnot" | "pauli_x"
    controls: tuple
    targets: tuple

    def __post_init__(self):
        expected = {
            "single_controlled": (1, None),
            "double_controlled": (2, 1),
            "cnot": (1, 1),
            "pauli_x": (0, 1),
        }
        if self.kind not in expected:
            raise ProtocolError(f"unknown gate kind {self.kind!r}")
        n_ctl, n_tgt = expected[self.kind]
        if len(self.controls) != n_ctl or (n_tgt is not None and len(self.targets) != n_tgt):
            raise ProtocolError(f"bad operand counts for {self.kind}: {self}")
        if not self.targets:
            raise ProtocolError("gate needs at least one target")
        if set(self.controls) & set(self.targets):
            raise ProtocolError(f"control and target registers overlap in {self}")

    @property
    def registers(self):
        return self.controls + self.targets


@dataclass(frozen=True)
class MeasureStep:
    """Computational-basis measurement, outcome broadcast classically."""

    register: str
    broadcast: bool = True


@dataclass(frozen=True)
class CorrectionStep:
    """Gates applied conditionally on an earlier measurement outcome."""

    register: str
    on_outcome: dict

    @property
    def registers(self):
        return tuple(
            r for gates in self.on_outcome.values() for g in gates for r in g.registers
        )


@dataclass(frozen=True)
class ReconstructionProtocol:
    acting_players: PlayerSubset
    steps: tuple


def _conditional_flip(state, target, condition):
    """Flip the target bit on indices where the condition holds.

    The condition must not depend on the target bit; all gates here keep
    controls and targets disjoint, which makes every step an involution.
    """
    layout = state.layout
    n = layout.num_qubits
    tbit = 1 << (n - 1 - layout.axis(target))
    idx = np.arange(layout.dim)
    src = np.where(condition, idx ^ tbit, idx)
    return PureState(layout, state.amplitudes[src])


def _bit_vector(state, register):
    n = state.num_qubits
    shift = n - 1 - state.layout.axis(register)
    return (np.arange(state.layout.dim) >> shift) & 1


def apply_gate_step(state, step):
    if step.kind == "pauli_x":
        return _conditional_flip(state, step.targets[0], np.True_)
    if step.kind in ("cnot", "single_controlled"):
        cond = _bit_vector(state, step.controls[0]) == 1
        for target in step.targets:
            state = _conditional_flip(state, target, cond)
        return state
    # double control: U_{2 - i XOR j}, which flips exactly when the bits differ
    cond = _bit_vector(state, step.controls[0]) != _bit_vector(state, step.controls[1])
    return _conditional_flip(state, step.targets[0], cond)


def measure_z(state, register):
    """Both projective branches as (outcome, probability, collapsed-state) triples.

    A zero-probability branch is reported with state None rather than
    dropped, so vacuous outcomes stay visible in traces.
    """
    bits = _bit_vector(state, register)
    probs = [float(np.sum(np.abs(state.amplitudes[bits == b]) ** 2)) for b in (0, 1)]
    branches = []
    for b in (0, 1):
        if probs[b] <= 1e-300:
            branches.append((b, 0.0, None))
            continue
        amps = np.where(bits == b, state.amplitudes, 0.0) / np.sqrt(probs[b])
        branches.append((b, probs[b], PureState(state.layout, amps)))
    return branches


@dataclass
class Branch:
    outcomes: dict
    probability: float
    state: PureState | None


def simulate_protocol(protocol, state, register_owner):
    """Run the steps over all measurement branches.

    register_owner maps each particle register to its holder; every gate
    and measurement register must belong to an acting player, never the
    dealer or an outsider.
    """
    acting = {f"P{p}" for p in protocol.acting_players.players()}

    def check_ownership(registers):
        for reg in registers:
            owner = register_owner.get(reg)
            if owner not in acting:
                raise ProtocolError(
                    f"register {reg} belongs to {owner}, outside the acting set {sorted(acting)}"
                )

    branches = [Branch({}, 1.0, state)]
    log = []
    for step in protocol.steps:
        if isinstance(step, GateStep):
            check_ownership(step.registers)
            for br in branches:
                if br.state is not None:
                    br.state = apply_gate_step(br.state, step)
            log.append({"step": step.kind, "controls": step.controls, "targets": step.targets})
        elif isinstance(step, MeasureStep):
            check_ownership((step.register,))
            new_branches = []
            for br in branches:
                if br.state is None:
                    new_branches.append(br)
                    continue
                for outcome, prob, collapsed in measure_z(br.state, step.register):
                    outcomes = dict(br.outcomes)
                    outcomes[step.register] = outcome
                    new_branches.append(Branch(outcomes, br.probability * prob, collapsed))
            branches = new_branches
            log.append({"step": "measure_z", "register": step.register})
        elif isinstance(step, CorrectionStep):
            check_ownership(step.registers)
            for br in branches:
                if br.state is None:
                    continue
                for gate in step.on_outcome.get(br.outcomes.get(step.register), ()):
                    br.state = apply_gate_step(br.state, gate)
            log.append({"step": "correction", "register": step.register})
        else:
            raise ProtocolError(f"unknown step {step!r}")
    return branches, log


# ---------------------------------------------------------------------------
# outcomes


@dataclass
class ProtocolOutcome:
    output_register: str
    fidelity: float
    residual_factorized: bool
    branch_probabilities: dict
    branch_fidelities: dict
    deviations: list = field(default_factory=list)
    trace: dict = field(default_factory=dict)

    def __post_init__(self):
        total = sum(self.branch_probabilities.values())
        if abs(total - 1.0) > 1e-9:
            raise ProtocolError(f"branch probabilities sum to {total}, not 1")


def _secret_fidelity(state, register, alpha, beta):
    rho = partial_trace(state, [register]).matrix
    psi = np.array([alpha, beta], dtype=np.complex128)
    return float(np.real(psi.conj() @ rho @ psi))


def _residual_purity(state, output_register):
    rest = [lbl for lbl in state.layout.labels if lbl != output_register]
    rho = partial_trace(state, rest).matrix
    return float(np.real(np.trace(rho @ rho)))


def _residual_ket(state, output_register, alpha, beta):
    """Project the output register onto the secret and renormalize the rest."""
    layout = state.layout
    ax = layout.axis(output_register)
    rest_axes = tuple(a for a in range(layout.num_qubits) if a != ax)
    t = state.tensor().transpose((ax,) + rest_axes).reshape(2, -1)
    vec = np.conj(alpha) * t[0] + np.conj(beta) * t[1]
    norm = np.linalg.norm(vec)
    if norm < 1e-9:
        return None
    rest_labels = tuple(layout.labels[a] for a in rest_axes)
    return PureState(RegisterLayout(rest_labels), vec / norm)


def _normalize_acting(acting_set, n):
    if isinstance(acting_set, PlayerSubset):
        if acting_set.n != n:
            raise ProtocolError(f"acting set is over {acting_set.n} players, expected {n}")
        return acting_set
    return PlayerSubset.from_players(acting_set, n)


def _ket_doc(state):
    """JSON-ready ket expansion of a state."""
    if state is None:
        return None
    return [
        {"ket": b, "re": float(a.real), "im": float(a.imag)} for b, a in state.ket_terms()
    ]


# ---------------------------------------------------------------------------
# circuit reconstruction for the four-share threshold scheme

# acting triple -> (controller, stage-one targets, output particle); fixed
# wiring validated by the fidelity-1 requirement
_CIRCUIT_ROLES = {
    frozenset({1, 3, 4}): (3, (1, 4), 1),
    frozenset({2, 3, 4}): (3, (2, 4), 2),
    frozenset({1, 2, 3}): (1, (2, 3), 3),
    frozenset({1, 2, 4}): (1, (2, 4), 4),
}

_DOCUMENTED_RESIDUAL_NOTE = (
    "acting set {P1,P3,P4}: gate algebra leaves the residual "
    "(|000>+|110>)/sqrt(2) on (p2,p3,p4); the documented walkthrough ket "
    "(|010>+|110>)/sqrt(2) does not match and is recorded, not adopted"
)


def run_threshold34_circuit(secret, acting_set, scheme=None):
    """Controlled-flip reconstruction circuit for an authorized triple.

    Stage one: the designated controller conditions flips on both other
    acting particles.  Stage two: those two particles jointly control a
    parity flip back onto the controller.  The secret ends on the output
    particle with fidelity 1 and the residual factorizes.
    """
    alpha, beta = complex(secret[0]), complex(secret[1])
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-9:
        raise ProtocolError("secret amplitudes are not normalized")
    if scheme is None:
        scheme = build_threshold34()
    reference = build_threshold34()
    if not np.allclose(scheme.basis_images, reference.basis_images, atol=1e-12):
        raise ProtocolError("circuit wiring is specific to the four-share threshold scheme")
    if scheme.assignment != identity_assignment(4):
        raise ProtocolError("circuit wiring assumes each player holds his own particle")
    acting = _normalize_acting(acting_set, 4)
    key = frozenset(acting.players())
    if key not in _CIRCUIT_ROLES:
        raise UnauthorizedSetError(f"{acting} is not an authorized triple")
    controller, targets, output = _CIRCUIT_ROLES[key]

    steps = (
        GateStep("single_controlled", (f"p{controller}",), tuple(f"p{t}" for t in targets)),
        GateStep("double_controlled", tuple(f"p{t}" for t in targets), (f"p{controller}",)),
    )
    protocol = ReconstructionProtocol(acting, steps)
    owner = {f"p{i}": f"P{i}" for i in range(1, 5)}
    state = apply_to_secret(scheme, alpha, beta)
    branches, log = simulate_protocol(protocol, state, owner)
    final = branches[0].state
    out_reg = f"p{output}"
    fidelity = _secret_fidelity(final, out_reg, alpha, beta)
    purity = _residual_purity(final, out_reg)
    residual = _residual_ket(final, out_reg, alpha, beta)

    deviations = []
    if key == frozenset({1, 3, 4}):
        deviations.append(_DOCUMENTED_RESIDUAL_NOTE)
    trace = {
        "protocol": "circuit",
        "acting": list(acting.players()),
        "steps": log,
        "residual": _ket_doc(residual),
    }
    return ProtocolOutcome(
        output_register=out_reg,
        fidelity=fidelity,
        residual_factorized=purity >= 1.0 - 1e-9,
        branch_probabilities={"": 1.0},
        branch_fidelities={"": fidelity},
        deviations=deviations,
        trace=trace,
    )


# ---------------------------------------------------------------------------
# measure-and-correct reconstruction for block schemes


def run_block_measure_protocol(scheme, block, acting_set, secret):
    """Measurement protocol for acting sets of the form block + one outsider.

    The outsider measures his particle and broadcasts the bit; on outcome
    1 every block particle is flipped; a flip chain from the first block
    particle then disentangles the rest, leaving the secret there.  Sets
    of the form co-block + one insider are authorized too but have no
    wiring here and are routed to the decoupling decoder.
    """
    n = scheme.num_particles
    block = _normalize_acting(block, n)
    reference, gamma = build_block_scheme(n, block)
    if not np.allclose(scheme.basis_images, reference.basis_images, atol=1e-12):
        raise ProtocolError("scheme images do not match the block construction for this block")
    if scheme.assignment != identity_assignment(n):
        raise ProtocolError("measure protocol assumes each player holds his own particle")
    alpha, beta = complex(secret[0]), complex(secret[1])
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-9:
        raise ProtocolError("secret amplitudes are not normalized")

    acting = _normalize_acting(acting_set, n)
    outsiders = acting.bits & ~block.bits
    if acting.bits | block.bits == acting.bits and outsiders.bit_count() == 1:
        measurer = outsiders.bit_length()
    else:
        comp = block.complement()
        insiders = acting.bits & ~comp.bits
        if acting.bits | comp.bits == acting.bits and insiders.bit_count() == 1:
            raise UnsupportedActingSetError(
                f"{acting} is the co-block plus one insider; use the decoupling decoder"
            )
        if not gamma.contains(acting):
            raise UnauthorizedSetError(f"{acting} is not authorized for this block scheme")
        raise UnsupportedActingSetError(
            f"{acting} is authorized but not of the form block + one outsider"
        )

    members = block.players()
    first = members[0]
    flips = tuple(GateStep("pauli_x", (), (f"p{p}",)) for p in members)
    chain = tuple(GateStep("cnot", (f"p{first}",), (f"p{p}",)) for p in members[1:])
    steps = (
        MeasureStep(f"p{measurer}"),
        CorrectionStep(f"p{measurer}", {1: flips}),
    ) + chain
    protocol = ReconstructionProtocol(acting, steps)
    owner = {f"p{i}": f"P{i}" for i in range(1, n + 1)}
    state = apply_to_secret(scheme, alpha, beta)
    branches, log = simulate_protocol(protocol, state, owner)

    out_reg = f"p{first}"
    probabilities, fidelities = {}, {}
    worst_fidelity, factorized = 1.0, True
    for br in branches:
        key = str(br.outcomes[f"p{measurer}"])
        probabilities[key] = br.probability
        if br.state is None:
            continue
        f = _secret_fidelity(br.state, out_reg, alpha, beta)
        fidelities[key] = f
        worst_fidelity = min(worst_fidelity, f)
        factorized = factorized and _residual_purity(br.state, out_reg) >= 1.0 - 1e-9
    trace = {
        "protocol": "measure",
        "acting": list(acting.players()),
        "measurer": measurer,
        "steps": log,
        "branches": {
            str(br.outcomes[f"p{measurer}"]): _ket_doc(br.state) for br in branches
        },
    }
    return ProtocolOutcome(
        output_register=out_reg,
        fidelity=worst_fidelity,
        residual_factorized=factorized,
        branch_probabilities=probabilities,
        branch_fidelities=fidelities,
        trace=trace,
    )


# ---------------------------------------------------------------------------
# generic decoupling decoder


def apply_block_unitary(state, regs, matrix):
    """Apply a unitary to the joint space of the given registers.

    The block is ordered by layout position, most significant first, so a
    matrix built for (r1, r2, ...) in layout order acts as expected.
    """
    layout = state.layout
    axes = layout.axes(regs)
    dim = 1 << len(axes)
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (dim, dim):
        raise ProtocolError(f"matrix shape {matrix.shape} does not fit a {dim}-dim block")
    other = tuple(ax for ax in range(layout.num_qubits) if ax not in axes)
    perm = other + axes
    block = state.tensor().transpose(perm).reshape(-1, dim)
    out = (block @ matrix.T).reshape((2,) * layout.num_qubits)
    return PureState(layout, out.transpose(np.argsort(perm)).reshape(-1))


@dataclass
class DecoderResult:
    isometry: np.ndarray
    fidelity: float
    output_register: str
    i_re: float
    decoded_state: PureState


def decoupling_decoder(state, a_regs, r_regs, out_dim=2):
    """Decode the secret onto the acting registers via purification matching.

    Works whenever the complement E of R and A is uncorrelated with R
    (I(R:E) = 0): the global state is then a purification of a product
    rho_R x rho_E, whose relative states on A form an orthonormal family.
    Mapping that family onto (output qubit) x (junk) is a unitary on A
    that leaves R and the output in the purified-secret state.
    """
    if out_dim != 2:
        raise ProtocolError("only one-qubit secrets are decoded")
    a_regs, r_regs = tuple(a_regs), tuple(r_regs)
    if len(r_regs) != 1:
        raise ProtocolError("exactly one reference register expected")
    if set(a_regs) & set(r_regs):
        raise ProtocolError("acting registers overlap the reference")
    layout = state.layout
    a_axes = layout.axes(a_regs)
    r_axis = layout.axis(r_regs[0])
    e_axes = tuple(
        ax for ax in range(layout.num_qubits) if ax not in a_axes and ax != r_axis
    )
    e_regs = tuple(layout.labels[ax] for ax in e_axes)

    i_re = mutual_information(state, r_regs, e_regs) if e_regs else 0.0
    if i_re > DECOUPLING_TOL:
        raise DecouplingError(i_re)

    rho_r = partial_trace(state, r_regs).matrix
    if abs(rho_r[0, 1]) > 1e-9:
        raise ProtocolError("reference is not stored in its eigenbasis")
    p = np.clip(np.real(np.diag(rho_r)), 0.0, 1.0)

    if e_regs:
        rho_e = partial_trace(state, e_regs).matrix
        e_vals, e_vecs = np.linalg.eigh(rho_e)
        order = np.argsort(e_vals)[::-1]
        e_vals, e_vecs = e_vals[order], e_vecs[:, order]
    else:
        e_vals = np.array([1.0])
        e_vecs = np.array([[1.0 + 0.0j]])

    dim_a = 1 << len(a_axes)
    junk = dim_a // 2
    t = state.tensor().transpose((r_axis,) + e_axes + a_axes).reshape(2, len(e_vals), dim_a)

    kept, targets = [], []
    for i in (0, 1):
        for k in range(len(e_vals)):
            weight = p[i] * max(float(e_vals[k]), 0.0)
            if weight <= 1e-12:
                continue
            vec = e_vecs[:, k].conj() @ t[i] / np.sqrt(weight)
            for prev in kept:
                vec = vec - (prev.conj() @ vec) * prev
            norm = np.linalg.norm(vec)
            if norm < 0.5:
                raise ProtocolError("relative states degenerate; decoder construction failed")
            kept.append(vec / norm)
            targets.append(i * junk + k)
    if len(kept) > dim_a:
        raise ProtocolError("more relative states than the acting space can hold")

    unused = [x for x in range(dim_a) if x not in set(targets)]
    basis = list(kept)
    for j in range(dim_a):
        if len(basis) == dim_a:
            break
        vec = np.zeros(dim_a, dtype=np.complex128)
        vec[j] = 1.0
        for prev in basis:
            vec = vec - (prev.conj() @ vec) * prev
        norm = np.linalg.norm(vec)
        if norm > 1e-6:
            basis.append(vec / norm)
            targets.append(unused.pop(0))
    isometry = np.zeros((dim_a, dim_a), dtype=np.complex128)
    for vec, tgt in zip(basis, targets):
        isometry[tgt, :] = vec.conj()
    if np.max(np.abs(isometry @ isometry.conj().T - np.eye(dim_a))) > 1e-8:
        raise ProtocolError("decoder matrix failed the unitarity check")

    decoded = apply_block_unitary(state, a_regs, isometry)
    out_reg = layout.labels[a_axes[0]]
    rho = partial_trace(decoded, (r_regs[0], out_reg)).matrix
    phi = np.zeros(4, dtype=np.complex128)
    phi[0b00] = np.sqrt(p[0])
    phi[0b11] = np.sqrt(p[1])
    fidelity = float(np.real(phi.conj() @ rho @ phi))
    return DecoderResult(isometry, fidelity, out_reg, i_re, decoded)


# ---------------------------------------------------------------------------
# attack scenarios on the four-share threshold scheme


@dataclass
class PairAttackReport:
    branch_probabilities: dict
    outcome0_residual: PureState | None
    outcome1_probability: float
    deviations: list = field(default_factory=list)


def attack_threshold34_pair12(secret):
    """P1 applies a flip controlled on his particle onto P2's; P2 measures.

    The outcome-1 branch has probability exactly zero; the outcome-0
    collapse leaves P1, P3, P4 holding a state still entangled with the
    secret amplitudes, so the pair learns nothing it can isolate.
    """
    alpha, beta = complex(secret[0]), complex(secret[1])
    scheme = build_threshold34()
    state = apply_to_secret(scheme, alpha, beta)
    state = apply_gate_step(state, GateStep("cnot", ("p1",), ("p2",)))
    branches = measure_z(state, "p2")
    probs = {str(b): p for b, p, _ in branches}
    outcome0 = branches[0][2]
    residual = None
    if outcome0 is not None:
        # p2 collapsed to |0>: slice it out to expose the (p1,p3,p4) factor
        t = outcome0.tensor()
        residual = PureState(RegisterLayout(("p1", "p3", "p4")), t[:, 0, :, :].reshape(-1))
    notes = []
    if probs["1"] <= 1e-12:
        notes.append(
            "outcome-1 branch has probability exactly 0; the outcome-1 "
            "measurement scenario is unreachable"
        )
    return PairAttackReport(
        branch_probabilities=probs,
        outcome0_residual=residual,
        outcome1_probability=probs["1"],
        deviations=notes,
    )


@dataclass
class PhaseAttackReport:
    rho: np.ndarray
    rho_phased: np.ndarray
    max_entry_difference: float
    phase_blind: bool
    diagonal: np.ndarray
    mixed_secret_mutual_info: float


def attack_threshold34_pair23(secret, phase):
    """Reduced state of the pair (P2, P3) and its blindness to the secret phase.

    The pair's reduced state is diagonal and depends only on the secret
    magnitudes, so multiplying beta by any phase changes nothing the pair
    can observe; the magnitudes do leak, consistent with the generalized
    bound I(R:A) = S(S) rather than zero.
    """
    alpha, beta = complex(secret[0]), complex(secret[1])
    scheme = build_threshold34()
    rho = partial_trace(apply_to_secret(scheme, alpha, beta), ("p2", "p3")).matrix
    phased = beta * np.exp(1j * float(phase))
    rho_phased = partial_trace(apply_to_secret(scheme, alpha, phased), ("p2", "p3")).matrix
    diff = float(np.max(np.abs(rho - rho_phased)))
    purified = distribute_purified(scheme)
    info = mutual_information(purified, ("R",), ("p2", "p3"))
    return PhaseAttackReport(
        rho=rho,
        rho_phased=rho_phased,
        max_entry_difference=diff,
        phase_blind=diff <= 1e-12,
        diagonal=np.real(np.diag(rho)).copy(),
        mixed_secret_mutual_info=info,
    )


def random_secret(rng):
    """One qubit drawn uniformly from the pure-state sphere via two angles."""
    theta = np.arccos(1.0 - 2.0 * rng.uniform())
    phi = rng.uniform(0.0, 2.0 * np.pi)
    return (np.cos(theta / 2.0), np.exp(1j * phi) * np.sin(theta / 2.0))
