"""Exact state-vector engine over labeled one-qubit registers.

States live on an ordered register layout; the first label is the most
significant bit of the amplitude index.  Everything is dense complex128:
at the target scale (at most 14 qubits) exact linear algebra is cheap and
beats sampling, so reduced states, spectra, and entropies are computed
directly.

Entropy is base 2 throughout: a maximally mixed qubit has S = 1.
"""

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
ISOMETRY_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10
ZERO_EIGENVALUE_CUT = 1e-12

MAX_QUBITS = 14


class QStateError(ValueError):
    """Malformed state, layout, or operator input."""


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered one-qubit register names; order fixes tensor indices."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise QStateError("layout needs at least one register")
        if len(set(labels)) != len(labels):
            raise QStateError(f"duplicate register labels in {labels}")
        if len(labels) > MAX_QUBITS:
            raise QStateError(f"at most {MAX_QUBITS} qubits supported, got {len(labels)}")

    @property
    def num_qubits(self):
        return len(self.labels)

    @property
    def dim(self):
        return 1 << len(self.labels)

    def axis(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise QStateError(f"unknown register {label!r}; layout has {self.labels}") from None

    def axes(self, labels):
        """Axes of the given registers, sorted into layout order."""
        return tuple(sorted(self.axis(lbl) for lbl in labels))


class PureState:
    """Normalized amplitude vector over a register layout."""

    def __init__(self, layout, amplitudes):
        if not isinstance(layout, RegisterLayout):
            layout = RegisterLayout(tuple(layout))
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (layout.dim,):
            raise QStateError(
                f"amplitude vector has shape {amplitudes.shape}, expected ({layout.dim},)"
            )
        norm = float(np.linalg.norm(amplitudes))
        if abs(norm - 1.0) > NORM_TOL:
            raise QStateError(f"state norm {norm!r} deviates from 1 beyond {NORM_TOL}")
        self.layout = layout
        self.amplitudes = amplitudes.copy()
        self.amplitudes.flags.writeable = False

    @property
    def num_qubits(self):
        return self.layout.num_qubits

    def tensor(self):
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def ket_terms(self, cut=1e-12):
        """(bitstring, amplitude) pairs of the significant components."""
        n = self.num_qubits
        return [
            (format(i, f"0{n}b"), self.amplitudes[i])
            for i in range(self.layout.dim)
            if abs(self.amplitudes[i]) > cut
        ]

    def __repr__(self):
        terms = ", ".join(f"|{b}>: {a:.4g}" for b, a in self.ket_terms(1e-6))
        return f"PureState({self.layout.labels}; {terms})"


class DensityMatrix:
    """Hermitian trace-one matrix, optionally tagged with register labels."""

    def __init__(self, matrix, labels=None):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise QStateError(f"density matrix must be square, got shape {matrix.shape}")
        if np.max(np.abs(matrix - matrix.conj().T)) > HERMITIAN_TOL:
            raise QStateError("matrix is not Hermitian within tolerance")
        tr = complex(np.trace(matrix))
        if abs(tr - 1.0) > HERMITIAN_TOL:
            raise QStateError(f"trace {tr} deviates from 1")
        if labels is not None:
            labels = tuple(labels)
            if matrix.shape[0] != 1 << len(labels):
                raise QStateError("label count does not match matrix dimension")
        self.matrix = matrix.copy()
        self.matrix.flags.writeable = False
        self.labels = labels

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EntropyRecord:
    """Entropies of a register subset relative to the reference system."""

    subset: tuple
    s_a: float
    s_ra: float
    i_ra: float


def purify_secret(probabilities):
    """Purification |RS> = sum_i sqrt(p_i) |i>_R |i>_S of a one-qubit mixture."""
    probs = [float(p) for p in probabilities]
    if len(probs) != 2:
        raise QStateError("only one-qubit secrets (two probabilities) are supported")
    if any(p < -NORM_TOL for p in probs):
        raise QStateError(f"negative probability in {probs}")
    if abs(sum(probs) - 1.0) > NORM_TOL:
        raise QStateError(f"probabilities {probs} do not sum to 1")
    amps = np.zeros(4, dtype=np.complex128)
    amps[0b00] = np.sqrt(max(probs[0], 0.0))
    amps[0b11] = np.sqrt(max(probs[1], 0.0))
    return PureState(RegisterLayout(("R", "S")), amps)


def apply_isometry(state, target, new_labels, images):
    """Replace one register with new registers via a basis-image table.

    images[b] is the amplitude vector over the new registers that the
    basis ket |b> of the target register maps to; the two images must be
    orthonormal (Gram matrix equal to the identity within 1e-10).  The new
    registers are spliced into the target's position in the layout.
    """
    new_labels = tuple(new_labels)
    images = np.asarray(images, dtype=np.complex128)
    if images.shape != (2, 1 << len(new_labels)):
        raise QStateError(
            f"image table has shape {images.shape}, expected (2, {1 << len(new_labels)})"
        )
    gram = images @ images.conj().T
    if np.max(np.abs(gram - np.eye(2))) > ISOMETRY_TOL:
        raise QStateError("basis images are not orthonormal: not an isometry")
    t = state.layout.axis(target)
    remaining = state.layout.labels[:t] + state.layout.labels[t + 1 :]
    clash = set(new_labels) & set(remaining)
    if clash:
        raise QStateError(f"new register labels collide with existing ones: {sorted(clash)}")
    labels = state.layout.labels[:t] + new_labels + state.layout.labels[t + 1 :]
    n = state.num_qubits
    pre, post = 1 << t, 1 << (n - 1 - t)
    psi = state.amplitudes.reshape(pre, 2, post)
    out = np.einsum("pbq,bs->psq", psi, images)
    return PureState(RegisterLayout(labels), out.reshape(-1))


def partial_trace(state, keep):
    """Reduced density matrix on the kept registers, in layout order."""
    keep = tuple(keep)
    if not keep:
        raise QStateError("keep at least one register")
    if isinstance(state, PureState):
        layout = state.layout
        keep_ax = layout.axes(keep)
        env_ax = tuple(a for a in range(layout.num_qubits) if a not in keep_ax)
        k, e = len(keep_ax), len(env_ax)
        t = state.tensor().transpose(keep_ax + env_ax).reshape(1 << k, 1 << e)
        rho = t @ t.conj().T
    elif isinstance(state, DensityMatrix):
        if state.labels is None:
            raise QStateError("density matrix has no register labels to trace over")
        layout = RegisterLayout(state.labels)
        keep_ax = layout.axes(keep)
        env_ax = tuple(a for a in range(layout.num_qubits) if a not in keep_ax)
        k, e = len(keep_ax), len(env_ax)
        n = layout.num_qubits
        order = keep_ax + env_ax
        t = state.matrix.reshape((2,) * (2 * n))
        t = t.transpose(order + tuple(n + a for a in order))
        t = t.reshape(1 << k, 1 << e, 1 << k, 1 << e)
        rho = np.einsum("iaja->ij", t)
    else:
        raise QStateError(f"cannot take partial trace of {type(state).__name__}")
    kept_labels = tuple(layout.labels[a] for a in keep_ax)
    return DensityMatrix(rho, labels=kept_labels)


def eigendecompose_hermitian(dm):
    """Eigenvalues (descending) and matching eigenvector columns."""
    matrix = dm.matrix if isinstance(dm, DensityMatrix) else np.asarray(dm, dtype=np.complex128)
    if np.max(np.abs(matrix - matrix.conj().T)) > HERMITIAN_TOL:
        raise QStateError("eigendecomposition requires a Hermitian matrix")
    values, vectors = np.linalg.eigh(matrix)
    return values[::-1].copy(), vectors[:, ::-1].copy()


def von_neumann_entropy(dm):
    """S(rho) = -sum lambda_i log2 lambda_i, in bits."""
    values = np.linalg.eigvalsh(dm.matrix)
    if values.min() < EIGENVALUE_FLOOR:
        raise QStateError(f"density matrix has eigenvalue {values.min()} below floor")
    lam = values[values > ZERO_EIGENVALUE_CUT]
    s = float(-(lam * np.log2(lam)).sum())
    return min(max(s, 0.0), np.log2(dm.dim))


def subsystem_entropy(state, regs):
    """Entropy of the reduced state on the given registers."""
    return von_neumann_entropy(partial_trace(state, regs))


def mutual_information(state, ref_regs, a_regs):
    """I(R:A) = S(R) + S(A) - S(RA) from three partial traces."""
    ref_regs, a_regs = tuple(ref_regs), tuple(a_regs)
    overlap = set(ref_regs) & set(a_regs)
    if overlap:
        raise QStateError(f"register lists overlap on {sorted(overlap)}")
    s_r = subsystem_entropy(state, ref_regs)
    s_a = subsystem_entropy(state, a_regs)
    s_ra = subsystem_entropy(state, ref_regs + a_regs)
    return s_r + s_a - s_ra


def entropy_record(state, ref_regs, a_regs):
    """EntropyRecord for a subset; keeps the three entropies together."""
    ref_regs, a_regs = tuple(ref_regs), tuple(a_regs)
    s_a = subsystem_entropy(state, a_regs)
    s_ra = subsystem_entropy(state, ref_regs + a_regs)
    s_r = subsystem_entropy(state, ref_regs)
    return EntropyRecord(a_regs, s_a, s_ra, s_r + s_a - s_ra)
