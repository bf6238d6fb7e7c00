"""Dense Pauli-basis kernel for one- and two-qubit problems.

Conventions
-----------
* Computational basis ``|0>, |1>`` with ``Z = diag(1, -1)``, so ``|0>`` is the
  z = +1 state.
* ``SIGMA_MINUS = |0><1|`` lowers the excitation ``|1> -> |0>``.
* Multi-qubit labels read left to right as qubit 1, 2, ...; qubit 1 is the
  most significant tensor factor.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import ContractViolation

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T

_SINGLE = {"I": I2, "X": X, "Y": Y, "Z": Z}

# a * b = phase * c for single-qubit Pauli letters
_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}

HERMITIAN_TOL = 1e-12


def _check_label(label: str) -> str:
    if not label or any(ch not in _SINGLE for ch in label):
        raise ContractViolation(f"invalid Pauli label {label!r}")
    return label


def pauli_operator(label: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis named by ``label`` (e.g. ``"XI"``)."""
    _check_label(label)
    out = np.array([[1.0 + 0j]])
    for ch in label:
        out = np.kron(out, _SINGLE[ch])
    return out


@lru_cache(maxsize=None)
def pauli_labels(n_qubits: int, include_identity: bool = False) -> tuple[str, ...]:
    """All Pauli labels on ``n_qubits`` in lexicographic IXYZ order."""
    labels = tuple("".join(p) for p in itertools.product("IXYZ", repeat=n_qubits))
    if include_identity:
        return labels
    return labels[1:]


@lru_cache(maxsize=None)
def _pauli_stack(n_qubits: int) -> np.ndarray:
    stack = np.array([pauli_operator(lab) for lab in pauli_labels(n_qubits)])
    stack.setflags(write=False)
    return stack


def pauli_stack(n_qubits: int) -> np.ndarray:
    """Array of shape ``(4**Q - 1, d, d)`` ordered as :func:`pauli_labels`."""
    return _pauli_stack(n_qubits)


def pauli_product(a: str, b: str) -> tuple[complex, str]:
    """Symbolic product ``a * b = phase * c`` of two Pauli strings."""
    if len(a) != len(b):
        raise ContractViolation("Pauli labels differ in length")
    phase: complex = 1
    letters = []
    for x, y in zip(_check_label(a), _check_label(b)):
        p, c = _PRODUCT[(x, y)]
        phase *= p
        letters.append(c)
    return phase, "".join(letters)


def commutator_coefficient(p: str, o: str) -> tuple[float, str | None]:
    """Return ``(c, R)`` such that ``i[P, O] = c * R``.

    ``c`` is real (0 or +-2); ``R`` is ``None`` when the two strings commute.
    """
    phase_po, r = pauli_product(p, o)
    phase_op, _ = pauli_product(o, p)
    if np.isclose(phase_po, phase_op):
        return 0.0, None
    # anticommuting: i[P, O] = 2i * phase_po * R
    c = 2j * phase_po
    return float(np.real(c)), r


def is_z_type(label: str) -> bool:
    """True for strings built from I and Z only (not measurable at first order)."""
    return set(label) <= {"I", "Z"}


def embed(op: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Place a single-qubit operator on ``qubit`` (0-based) of an n-qubit register."""
    out = np.array([[1.0 + 0j]])
    for q in range(n_qubits):
        out = np.kron(out, op if q == qubit else I2)
    return out


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def dissipator(L: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``D[L] rho = L rho L^dag - {L^dag L, rho} / 2`` (broadcasts over leading axes of rho)."""
    L = np.asarray(L)
    rho = np.asarray(rho)
    if L.shape[-2:] != rho.shape[-2:] or L.shape[-1] != L.shape[-2]:
        raise ContractViolation(f"dimension mismatch: L {L.shape} vs rho {rho.shape}")
    Ld = L.conj().T
    LdL = Ld @ L
    return L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)


def dissipator_adjoint(L: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Heisenberg-picture dissipator ``L^dag O L - {L^dag L, O} / 2``."""
    L = np.asarray(L)
    op = np.asarray(op)
    if L.shape != op.shape:
        raise ContractViolation(f"dimension mismatch: L {L.shape} vs O {op.shape}")
    Ld = L.conj().T
    LdL = Ld @ L
    return Ld @ op @ L - 0.5 * (LdL @ op + op @ LdL)


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(a - np.swapaxes(a.conj(), -1, -2)), initial=0.0) <= tol)


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    d = u.shape[-1]
    return bool(np.max(np.abs(np.swapaxes(u.conj(), -1, -2) @ u - np.eye(d))) < tol)


def matrix_exp(a: np.ndarray) -> np.ndarray:
    """Matrix exponential.

    Skew-Hermitian inputs (the propagator hot path) go through a Hermitian
    eigendecomposition, which keeps the result unitary to machine precision.
    Anything else falls back to Pade scaling-and-squaring. Leading axes are
    treated as a batch.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape[-1] != a.shape[-2]:
        raise ContractViolation(f"matrix_exp needs square input, got {a.shape}")
    skew = np.max(np.abs(a + np.swapaxes(a.conj(), -1, -2)), initial=0.0) <= HERMITIAN_TOL
    if skew:
        k = 1j * a  # Hermitian
        k = 0.5 * (k + np.swapaxes(k.conj(), -1, -2))
        w, v = np.linalg.eigh(k)
        phases = np.exp(-1j * w)
        return (v * phases[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)
    if a.ndim == 2:
        return scipy.linalg.expm(a)
    flat = a.reshape(-1, *a.shape[-2:])
    out = np.array([scipy.linalg.expm(m) for m in flat])
    return out.reshape(a.shape)


def bloch_vector(rho: np.ndarray, n_qubits: int | None = None) -> np.ndarray:
    """Pauli expectation values ``Tr(rho P)`` for all non-identity labels.

    Accepts a single density matrix or a stack with leading batch axes.
    """
    rho = np.asarray(rho)
    d = rho.shape[-1]
    q = int(round(np.log2(d))) if n_qubits is None else n_qubits
    if 2**q != d:
        raise ContractViolation(f"dimension {d} is not 2**{q}")
    tr = np.trace(rho, axis1=-2, axis2=-1)
    if np.any(np.abs(tr - 1) > 1e-9):
        raise ContractViolation(f"density matrix trace {tr} differs from 1")
    paulis = pauli_stack(q)
    # Tr(rho P) = sum_ij rho_ij P_ji
    vals = np.einsum("...ij,kji->...k", rho, paulis)
    return vals.real


def density_from_bloch(b: np.ndarray, n_qubits: int) -> np.ndarray:
    """Inverse of :func:`bloch_vector`: ``(I + sum_P b_P P) / 2**Q``."""
    b = np.asarray(b, dtype=float)
    d = 2**n_qubits
    if b.shape[-1] != d * d - 1:
        raise ContractViolation(f"expected {d * d - 1} Bloch components, got {b.shape[-1]}")
    paulis = pauli_stack(n_qubits)
    return (np.eye(d) + np.einsum("...k,kij->...ij", b, paulis)) / d


# Single-qubit cardinal states by label
_CARDINAL = {
    "+Z": np.array([1, 0], dtype=complex),
    "-Z": np.array([0, 1], dtype=complex),
    "+X": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-X": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "+Y": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "-Y": np.array([1, -1j], dtype=complex) / np.sqrt(2),
}
_CARDINAL["0"] = _CARDINAL["+Z"]
_CARDINAL["1"] = _CARDINAL["-Z"]
_CARDINAL["+"] = _CARDINAL["+X"]
_CARDINAL["-"] = _CARDINAL["-X"]

CARDINAL_LABELS = ("+X", "-X", "+Y", "-Y", "+Z", "-Z")


def state_vector(label: str) -> np.ndarray:
    """Product state from a label like ``"+X"`` or ``"+X,-Z"`` (comma separated per qubit)."""
    parts = [p.strip() for p in label.split(",")]
    psi = np.array([1.0 + 0j])
    for p in parts:
        if p not in _CARDINAL:
            raise ContractViolation(f"unknown single-qubit state {p!r}")
        psi = np.kron(psi, _CARDINAL[p])
    return psi


def density_matrix(label_or_vector) -> np.ndarray:
    psi = state_vector(label_or_vector) if isinstance(label_or_vector, str) else np.asarray(
        label_or_vector, dtype=complex
    )
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())
