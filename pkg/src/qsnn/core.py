"""Dense state-vector algebra and time-dependent propagation.

Conventions, fixed once for the whole package:

* qubit 0 is the most significant index bit,
* ``|0> = |down>`` is the ground state, so ``<down|sigma_z|down> = -1``
  (the Pauli-Z matrix is ``diag(-1, +1)`` in index order),
* hbar = 1; all energies are expressed in units of the relevant drive
  amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import (
    DimensionMismatchError,
    DuplicateTargetError,
    InvalidParamsError,
    NormDriftError,
    OutOfBoundsError,
)

NORM_TOL = 1e-9
NORM_FAIL = 1e-7
UNITARITY_TOL = 1e-8
DEGENERATE_PROB = 1e-14

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
PAULI = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)   # |up><down|
SIGMA_MINUS = SIGMA_PLUS.conj().T

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
NOT_X = PAULI_X

DRIVE_FORMS = ("cosine_x", "rotating_plus", "rotating_minus", "static_z")

BELL_LABELS = ("Phi+", "Phi-", "Psi+", "Psi-")

_SQ2 = 1.0 / math.sqrt(2.0)
# Index order on two qubits: 00, 01, 10, 11 with 0 = down.
BELL_VECTORS = {
    "Phi+": np.array([_SQ2, 0.0, 0.0, _SQ2], dtype=complex),
    "Phi-": np.array([-_SQ2, 0.0, 0.0, _SQ2], dtype=complex),
    "Psi+": np.array([0.0, _SQ2, _SQ2, 0.0], dtype=complex),
    "Psi-": np.array([0.0, _SQ2, -_SQ2, 0.0], dtype=complex),
}


def _check_qubit(qubit: int, num_qubits: int) -> None:
    if not 0 <= qubit < num_qubits:
        raise OutOfBoundsError(f"qubit {qubit} outside register of {num_qubits}")


class StateVector:
    """Normalized complex amplitudes over an n-qubit register."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, num_qubits: int, amplitudes: Sequence[complex]):
        if num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        amp = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amp.size != 2**num_qubits:
            raise DimensionMismatchError(
                f"expected {2**num_qubits} amplitudes, got {amp.size}"
            )
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > NORM_TOL:
            raise NormDriftError(
                f"state norm {norm} deviates from 1 beyond {NORM_TOL}"
            )
        self.num_qubits = num_qubits
        self.amplitudes = amp / norm

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "StateVector":
        """Computational basis state; bits[0] is qubit 0 (most significant)."""
        n = len(bits)
        index = 0
        for b in bits:
            index = (index << 1) | int(b)
        amp = np.zeros(2**n, dtype=complex)
        amp[index] = 1.0
        return cls(n, amp)

    @classmethod
    def all_down(cls, num_qubits: int) -> "StateVector":
        return cls.from_bits([0] * num_qubits)

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(
            self.num_qubits + other.num_qubits,
            np.kron(self.amplitudes, other.amplitudes),
        )

    def overlap(self, other: "StateVector") -> complex:
        if self.num_qubits != other.num_qubits:
            raise DimensionMismatchError("register sizes differ")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.overlap(other)) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def __repr__(self) -> str:  # pragma: no cover
        return f"StateVector(num_qubits={self.num_qubits})"


def bell_state(label: str) -> StateVector:
    """One of the four Bell states on a 2-qubit register."""
    if label not in BELL_VECTORS:
        raise ValueError(f"unknown Bell label {label!r}; use one of {BELL_LABELS}")
    return StateVector(2, BELL_VECTORS[label])


class DenseOperator:
    """A dense dim x dim complex operator."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError("operator must be square")
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "DenseOperator":
        return cls(np.eye(dim, dtype=complex))

    def dagger(self) -> "DenseOperator":
        return DenseOperator(self.matrix.conj().T)

    def is_unitary(self, tol: float = UNITARITY_TOL) -> bool:
        delta = self.matrix.conj().T @ self.matrix - np.eye(self.dim)
        return bool(np.max(np.abs(delta)) < tol)

    def assert_unitary(self, tol: float = UNITARITY_TOL) -> None:
        if not self.is_unitary(tol):
            raise NormDriftError("operator failed the unitarity check")

    def apply(self, state: StateVector) -> StateVector:
        if self.dim != state.amplitudes.size:
            raise DimensionMismatchError("operator/state dimensions differ")
        return StateVector(state.num_qubits, self.matrix @ state.amplitudes)

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.matrix @ other.matrix)

    def __repr__(self) -> str:  # pragma: no cover
        return f"DenseOperator(dim={self.dim})"


@dataclass(frozen=True)
class StaticTerm:
    """coefficient * product of single-qubit Paulis, time independent."""

    coefficient: float
    factors: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if not math.isfinite(self.coefficient):
            raise InvalidParamsError("coefficient must be finite")
        qubits = [q for q, _ in self.factors]
        if len(set(qubits)) != len(qubits):
            raise DuplicateTargetError("repeated qubit in a static term")
        for q, axis in self.factors:
            if axis not in PAULI:
                raise ValueError(f"unknown axis {axis!r}")
            if q < 0:
                raise OutOfBoundsError(f"negative qubit index {q}")


@dataclass(frozen=True)
class DriveTerm:
    """A single-qubit drive; the instantaneous operator is Hermitian for all t."""

    amplitude: float
    angular_frequency: float
    target_qubit: int
    form: str

    def __post_init__(self):
        if self.form not in DRIVE_FORMS:
            raise InvalidParamsError(f"unknown drive form {self.form!r}")
        if not math.isfinite(self.amplitude) or not math.isfinite(
            self.angular_frequency
        ):
            raise ValueError("drive parameters must be finite")

    def operator_at(self, t: float) -> np.ndarray:
        """Instantaneous 2x2 operator on the target qubit."""
        a, w = self.amplitude, self.angular_frequency
        if self.form == "cosine_x":
            return a * math.cos(w * t) * PAULI_X
        if self.form == "rotating_plus":
            phase = np.exp(-1j * w * t)
            return 0.5 * a * (phase * SIGMA_PLUS + np.conj(phase) * SIGMA_MINUS)
        if self.form == "rotating_minus":
            phase = np.exp(1j * w * t)
            return 0.5 * a * (phase * SIGMA_PLUS + np.conj(phase) * SIGMA_MINUS)
        return a * PAULI_Z  # static_z


@dataclass(frozen=True)
class TimeDependentHamiltonian:
    """Static multi-qubit Pauli terms plus single-qubit drive terms."""

    num_qubits: int
    static_terms: tuple[StaticTerm, ...] = ()
    drive_terms: tuple[DriveTerm, ...] = ()

    def __post_init__(self):
        for term in self.static_terms:
            for q, _ in term.factors:
                _check_qubit(q, self.num_qubits)
        for drv in self.drive_terms:
            _check_qubit(drv.target_qubit, self.num_qubits)

    def support(self) -> tuple[int, ...]:
        """Qubits the Hamiltonian acts on non-trivially, sorted."""
        qubits = set()
        for term in self.static_terms:
            qubits.update(q for q, _ in term.factors)
        for drv in self.drive_terms:
            qubits.add(drv.target_qubit)
        return tuple(sorted(qubits)) if qubits else (0,)

    def _local_pieces(self):
        """Static matrix and drive thunks over the support subspace."""
        support = self.support()
        pos = {q: i for i, q in enumerate(support)}
        s = len(support)
        dim = 2**s
        static = np.zeros((dim, dim), dtype=complex)
        for term in self.static_terms:
            ops = [np.eye(2, dtype=complex)] * s
            for q, axis in term.factors:
                ops[pos[q]] = PAULI[axis]
            prod = ops[0]
            for op in ops[1:]:
                prod = np.kron(prod, op)
            static += term.coefficient * prod
        drives = []
        for drv in self.drive_terms:
            left = 2 ** pos[drv.target_qubit]
            right = dim // (2 * left)
            embed = lambda op, l=left, r=right: np.kron(
                np.kron(np.eye(l), op), np.eye(r)
            )
            drives.append((drv, embed))
        return support, static, drives

    def local_matrix(self, t: float) -> tuple[tuple[int, ...], np.ndarray]:
        """H(t) restricted to its support qubits."""
        support, static, drives = self._local_pieces()
        h = static.copy()
        for drv, embed in drives:
            h += embed(drv.operator_at(t))
        return support, h

    def matrix(self, t: float) -> np.ndarray:
        """Dense 2^n x 2^n matrix of H(t)."""
        support, local = self.local_matrix(t)
        return embed_matrix(local, support, self.num_qubits)

    def max_nonhermiticity(self, times: Sequence[float]) -> float:
        worst = 0.0
        for t in times:
            _, h = self.local_matrix(t)
            worst = max(worst, float(np.max(np.abs(h - h.conj().T))))
        return worst


def embed_matrix(op: np.ndarray, targets: Sequence[int], num_qubits: int) -> np.ndarray:
    """Embed an operator on `targets` (in that order) into the full register."""
    k = len(targets)
    if op.shape != (2**k, 2**k):
        raise DimensionMismatchError("operator size does not match target count")
    if len(set(targets)) != k:
        raise DuplicateTargetError("targets must be distinct")
    for q in targets:
        _check_qubit(q, num_qubits)
    rest = [q for q in range(num_qubits) if q not in targets]
    order = list(targets) + rest
    full = np.kron(op, np.eye(2 ** (num_qubits - k), dtype=complex))
    tensor = full.reshape([2] * (2 * num_qubits))
    # Row/column axis i of `tensor` currently belongs to register qubit order[i];
    # permute so axis i belongs to qubit i.
    inverse = [order.index(q) for q in range(num_qubits)]
    perm = inverse + [num_qubits + i for i in inverse]
    return tensor.transpose(perm).reshape(2**num_qubits, 2**num_qubits)


def tensor_embed(
    op: DenseOperator, targets: Sequence[int], num_qubits: int
) -> DenseOperator:
    """Embed an 8-dim operator on a qubit triple, identity elsewhere."""
    if op.dim != 8:
        raise DimensionMismatchError("tensor_embed expects an 8-dim operator")
    if len(targets) != 3:
        raise ValueError("exactly three targets required")
    if num_qubits < 3:
        raise ValueError("register must hold at least 3 qubits")
    return DenseOperator(embed_matrix(op.matrix, tuple(targets), num_qubits))


def _split_support(amplitudes: np.ndarray, support: Sequence[int], num_qubits: int):
    """Reshape amplitudes to (2^s, rest) with support qubits leading."""
    rest = [q for q in range(num_qubits) if q not in support]
    order = list(support) + rest
    tensor = amplitudes.reshape([2] * num_qubits).transpose(order)
    return tensor.reshape(2 ** len(support), -1), order


def _merge_support(block: np.ndarray, order: Sequence[int], num_qubits: int):
    tensor = block.reshape([2] * num_qubits)
    inverse = np.argsort(order)
    return tensor.transpose(inverse).reshape(-1)


def _static_local(static: np.ndarray, drives) -> np.ndarray | None:
    """Full local matrix when H is time independent, else None."""
    h = static.copy()
    for drv, embed in drives:
        if drv.form != "static_z":
            return None
        h += embed(drv.operator_at(0.0))
    return h


def _integrate_local(
    static: np.ndarray,
    drives,
    y0: np.ndarray,
    duration: float,
    tol: float,
    t_eval=None,
):
    """Integrate dY/dt = -i H(t) Y with Y of shape (dim, cols)."""
    dim, cols = y0.shape

    def rhs(t, y):
        h = static
        for drv, embed in drives:
            h = h + embed(drv.operator_at(t))
        return (-1j * h @ y.reshape(dim, cols)).reshape(-1)

    # Integrate a couple of decades below the requested accuracy so that
    # accumulated norm drift stays within the 1e-9 budget.
    rtol = max(tol * 1e-2, 1e-13)
    atol = max(tol * 1e-4, 1e-14)
    sol = solve_ivp(
        rhs,
        (0.0, duration),
        y0.reshape(-1).astype(complex),
        method="DOP853",
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
        dense_output=False,
    )
    if not sol.success:  # pragma: no cover
        raise NormDriftError(f"integrator failed: {sol.message}")
    return sol


def evolve(
    state: StateVector,
    hamiltonian: TimeDependentHamiltonian,
    duration: float,
    tol: float = 1e-9,
    method: str = "auto",
) -> StateVector:
    """Solve the Schrodinger equation from t = 0 to t = duration.

    method "auto" uses a single matrix exponential when H is time
    independent and the adaptive integrator otherwise; "ode" forces the
    integrator (useful for convergence studies).
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if state.num_qubits != hamiltonian.num_qubits:
        raise DimensionMismatchError("state and Hamiltonian register sizes differ")
    if duration == 0:
        return state.copy()
    support, static, drives = hamiltonian._local_pieces()
    block, order = _split_support(state.amplitudes, support, state.num_qubits)
    if method not in ("auto", "ode"):
        raise ValueError(f"unknown method {method!r}")
    h_const = _static_local(static, drives) if method == "auto" else None
    if h_const is not None:
        out = expm(-1j * duration * h_const) @ block
    else:
        sol = _integrate_local(static, drives, block, duration, tol)
        out = sol.y[:, -1].reshape(block.shape)
    amplitudes = _merge_support(out, order, state.num_qubits)
    norm = np.linalg.norm(amplitudes)
    if abs(norm - 1.0) > NORM_FAIL:
        raise NormDriftError(f"norm drifted to {norm}")
    return StateVector(state.num_qubits, amplitudes)


def evolve_sampled(
    state: StateVector,
    hamiltonian: TimeDependentHamiltonian,
    times: Sequence[float],
    tol: float = 1e-9,
) -> list[StateVector]:
    """States at the requested instants of one continuous evolution from t=0."""
    times = np.asarray(times, dtype=float)
    if times.size < 1 or times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be non-negative and strictly increasing")
    if state.num_qubits != hamiltonian.num_qubits:
        raise DimensionMismatchError("state and Hamiltonian register sizes differ")
    support, static, drives = hamiltonian._local_pieces()
    block, order = _split_support(state.amplitudes, support, state.num_qubits)
    h_const = _static_local(static, drives)
    outputs = []
    if h_const is not None:
        energies, vectors = np.linalg.eigh(h_const)
        coeffs = vectors.conj().T @ block
        for t in times:
            out = vectors @ (np.exp(-1j * energies * t)[:, None] * coeffs)
            outputs.append(out)
    else:
        t_eval = times if times[0] > 0 else times[1:]
        sol = _integrate_local(static, drives, block, float(times[-1]), tol,
                               t_eval=t_eval)
        idx = 0
        for t in times:
            if t == 0.0:
                outputs.append(block)
            else:
                outputs.append(sol.y[:, idx].reshape(block.shape))
                idx += 1
    states = []
    for out in outputs:
        amplitudes = _merge_support(out, order, state.num_qubits)
        norm = np.linalg.norm(amplitudes)
        if abs(norm - 1.0) > NORM_FAIL:
            raise NormDriftError(f"norm drifted to {norm}")
        states.append(StateVector(state.num_qubits, amplitudes))
    return states


def propagator(
    hamiltonian: TimeDependentHamiltonian,
    duration: float,
    tol: float = 1e-9,
) -> DenseOperator:
    """Time-ordered propagator over the full register."""
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = hamiltonian.num_qubits
    if duration == 0:
        return DenseOperator.identity(2**n)
    support, static, drives = hamiltonian._local_pieces()
    dim = 2 ** len(support)
    h_const = _static_local(static, drives)
    if h_const is not None:
        local = expm(-1j * duration * h_const)
    else:
        sol = _integrate_local(
            static, drives, np.eye(dim, dtype=complex), duration, tol
        )
        local = sol.y[:, -1].reshape(dim, dim)
    full = DenseOperator(embed_matrix(local, support, n))
    full.assert_unitary()
    return full


def piecewise_constant_evolve(
    state: StateVector,
    hamiltonian: TimeDependentHamiltonian,
    duration: float,
    step: float,
) -> StateVector:
    """Independent oracle: midpoint-sampled piecewise-constant exponentials."""
    op = piecewise_constant_propagator(hamiltonian, duration, step)
    return op.apply(state)


def piecewise_constant_propagator(
    hamiltonian: TimeDependentHamiltonian,
    duration: float,
    step: float,
) -> DenseOperator:
    """Oracle propagator: expm of H sampled at each step midpoint."""
    if step <= 0:
        raise ValueError("step must be positive")
    support, static, drives = hamiltonian._local_pieces()
    dim = 2 ** len(support)
    steps = max(1, int(math.ceil(duration / step)))
    dt = duration / steps
    u = np.eye(dim, dtype=complex)
    for i in range(steps):
        t_mid = (i + 0.5) * dt
        h = static.copy()
        for drv, embed in drives:
            h += embed(drv.operator_at(t_mid))
        u = expm(-1j * dt * h) @ u
    return DenseOperator(embed_matrix(u, support, hamiltonian.num_qubits))


def _gate_name_param(gate):
    if isinstance(gate, str):
        return gate, None
    return gate[0], (gate[1] if len(gate) > 1 else None)


# Exact 2x2 gates, index basis (|down>, |up>).
def _gate_matrix(gate) -> np.ndarray:
    name, param = _gate_name_param(gate)
    if name == "hadamard":
        return HADAMARD
    if name == "not_x":
        return NOT_X
    if name == "phase":
        return np.array([[1.0, 0.0], [0.0, np.exp(1j * param)]], dtype=complex)
    if name == "z_rotation":
        return np.array(
            [[np.exp(-1j * param / 2), 0.0], [0.0, np.exp(1j * param / 2)]],
            dtype=complex,
        )
    raise ValueError(f"unknown gate {gate!r}")


def _gate_dynamics_matrix(gate, drive_amplitude: float = 1.0) -> np.ndarray:
    """Gate realized by Hamiltonian evolution, as in hardware protocols.

    hadamard: evolve sqrt(2)*B*(sigma_x + sigma_z) for pi/(4B); the sigma_z
    here is the gate-axis matrix diag(1, -1), so the rotation axis coincides
    with the exact Hadamard's reflection axis and the result is -i*H.
    phase(phi): evolve B*sigma_z for phi/(2B).
    """
    name, param = _gate_name_param(gate)
    b = drive_amplitude
    z_gate_axis = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    if name == "hadamard":
        h = math.sqrt(2.0) * b * (PAULI_X + z_gate_axis)
        return expm(-1j * h * (math.pi / (4.0 * b)))
    if name == "phase":
        h = b * z_gate_axis
        return expm(-1j * h * (param / (2.0 * b)))
    raise ValueError(f"no dynamics realization for gate {gate!r}")


def apply_gate(
    state: StateVector,
    gate,
    target: int,
    mode: str = "exact",
) -> StateVector:
    """Apply a single-qubit gate; `gate` is a name or (name, parameter)."""
    _check_qubit(target, state.num_qubits)
    if mode == "exact":
        m = _gate_matrix(gate)
    elif mode == "dynamics":
        m = _gate_dynamics_matrix(gate)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    block, order = _split_support(state.amplitudes, (target,), state.num_qubits)
    out = m @ block
    return StateVector(state.num_qubits, _merge_support(out, order, state.num_qubits))


def expectation(state: StateVector, axis: str, qubit: int) -> float:
    """<psi| sigma^axis_qubit |psi>."""
    _check_qubit(qubit, state.num_qubits)
    if axis not in PAULI:
        raise ValueError(f"unknown axis {axis!r}")
    block, _ = _split_support(state.amplitudes, (qubit,), state.num_qubits)
    return float(np.real(np.sum(block.conj() * (PAULI[axis] @ block))))


class MeasureResult(NamedTuple):
    p_down: float
    p_up: float
    post_down: StateVector | None
    post_up: StateVector | None


def measure(state: StateVector, qubit: int) -> MeasureResult:
    """Projective measurement of one qubit in the computational basis.

    Post-states whose outcome probability is below 1e-14 are returned as
    None (undefined) rather than as unnormalizable vectors.
    """
    _check_qubit(qubit, state.num_qubits)
    block, order = _split_support(state.amplitudes, (qubit,), state.num_qubits)
    p_down = float(np.sum(np.abs(block[0]) ** 2))
    p_up = float(np.sum(np.abs(block[1]) ** 2))
    posts = []
    for outcome, p in ((0, p_down), (1, p_up)):
        if p < DEGENERATE_PROB:
            posts.append(None)
            continue
        proj = np.zeros_like(block)
        proj[outcome] = block[outcome] / math.sqrt(p)
        posts.append(
            StateVector(
                state.num_qubits, _merge_support(proj, order, state.num_qubits)
            )
        )
    return MeasureResult(p_down, p_up, posts[0], posts[1])
