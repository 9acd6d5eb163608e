"""
Dense complex Hermitian linear algebra.

Bipartite operators are always indexed A-first: row = iA * dB + iB.
"""
from functools import lru_cache
from itertools import permutations, product
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import unitary_group

from app.core.config import settings
from app.core.errors import DimensionMismatch, NonSquare
from app.models.operators import BlochVector, Operator, ValidationReport

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

Side = Literal["A", "B"]


def identity(d: int) -> Operator:
    return np.eye(d, dtype=complex)


def ket(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def projector(vector: Sequence[complex]) -> Operator:
    """|v><v| for a vector normalized on the fly."""
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def dagger(op: np.ndarray) -> np.ndarray:
    return np.asarray(op).conj().T


def hermitian_part(op: np.ndarray) -> Operator:
    return (op + dagger(op)) / 2


def _check_square(op: np.ndarray) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise NonSquare(f"operator of shape {op.shape} is not square")
    return op


def min_eigenvalue(op: np.ndarray) -> float:
    op = _check_square(op)
    return float(np.linalg.eigvalsh(hermitian_part(op))[0])


def validate(op: np.ndarray, psd_required: bool = False, tol: Optional[float] = None) -> ValidationReport:
    """Hermiticity defect and minimum eigenvalue, checked against one tolerance."""
    tol = settings.hermiticity_tol if tol is None else tol
    op = _check_square(op)
    defect = float(np.max(np.abs(op - dagger(op))))
    lowest = min_eigenvalue(op)
    passed = defect <= tol and (not psd_required or lowest >= -tol)
    return ValidationReport(
        passed=passed,
        hermiticity_defect=defect,
        min_eigenvalue=lowest,
        psd_required=psd_required,
        tol=tol,
    )


def tensor(a: np.ndarray, b: np.ndarray) -> Operator:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(op: np.ndarray, dims: Tuple[int, int], keep: Side = "B") -> Operator:
    """Reduced operator on the kept side of an A-first bipartite operator."""
    op = _check_square(op)
    d_a, d_b = dims
    if op.shape[0] != d_a * d_b:
        raise DimensionMismatch(f"operator of dimension {op.shape[0]} is not {d_a}x{d_b}")
    blocks = op.reshape(d_a, d_b, d_a, d_b)
    if keep == "B":
        return np.einsum("ijik->jk", blocks)
    if keep == "A":
        return np.einsum("ijkj->ik", blocks)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def partial_transpose(op: np.ndarray, dims: Tuple[int, int], side: Side = "B") -> Operator:
    op = _check_square(op)
    d_a, d_b = dims
    if op.shape[0] != d_a * d_b:
        raise DimensionMismatch(f"operator of dimension {op.shape[0]} is not {d_a}x{d_b}")
    blocks = op.reshape(d_a, d_b, d_a, d_b)
    axes = (0, 3, 2, 1) if side == "B" else (2, 1, 0, 3)
    return blocks.transpose(axes).reshape(d_a * d_b, d_a * d_b)


def transpose(op: np.ndarray) -> Operator:
    return _check_square(op).T.copy()


def bloch(op: np.ndarray) -> BlochVector:
    op = _check_square(op)
    if op.shape[0] != 2:
        raise DimensionMismatch(f"Bloch coordinates need a qubit operator, got dimension {op.shape[0]}")
    vec = tuple(float(np.trace(op @ p).real) for p in PAULIS)
    return BlochVector(weight=float(np.trace(op).real), vec=vec)


def from_bloch(b: BlochVector) -> Operator:
    out = b.weight * identity(2)
    for component, p in zip(b.vec, PAULIS):
        out = out + component * p
    return out / 2


def qubit_effect(vec: Sequence[float], weight: float = 1.0) -> Operator:
    """(weight * 1 + vec . sigma) / 2."""
    return from_bloch(BlochVector(weight=weight, vec=tuple(float(v) for v in vec)))


def max_entangled(d: int) -> Operator:
    """|phi+><phi+| with |phi+> = sum_i |ii> / sqrt(d)."""
    phi = np.eye(d, dtype=complex).reshape(d * d) / np.sqrt(d)
    return np.outer(phi, phi.conj())


def max_norm(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


@lru_cache(maxsize=None)
def _gell_mann(d: int) -> Tuple[np.ndarray, ...]:
    basis = [identity(d) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / np.sqrt(2)
            asym = np.zeros((d, d), dtype=complex)
            asym[j, k] = -1j / np.sqrt(2)
            asym[k, j] = 1j / np.sqrt(2)
            basis.extend([sym, asym])
    for m in range(1, d):
        diag = np.zeros(d)
        diag[:m] = 1
        diag[m] = -m
        basis.append(np.diag(diag / np.sqrt(m * (m + 1))).astype(complex))
    for b in basis:
        b.setflags(write=False)
    return tuple(basis)


def hermitian_basis(d: int) -> Tuple[np.ndarray, ...]:
    """Orthonormal Hermitian basis: 1/sqrt(d) followed by generalized Gell-Mann matrices."""
    return _gell_mann(d)


def to_real_vector(op: np.ndarray) -> np.ndarray:
    basis = hermitian_basis(op.shape[0])
    return np.array([np.trace(b @ op).real for b in basis])


def from_real_vector(vec: np.ndarray) -> Operator:
    d = int(round(np.sqrt(len(vec))))
    if d * d != len(vec):
        raise DimensionMismatch(f"{len(vec)} coordinates do not describe a square matrix")
    return np.tensordot(vec, np.array(hermitian_basis(d)), axes=1)


def permutation_operator(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary sending subsystem i of the input to position perm[i] of the output."""
    dims = list(dims)
    total = int(np.prod(dims))
    out_dims = [0] * len(dims)
    for i, target in enumerate(perm):
        out_dims[target] = dims[i]
    op = np.zeros((total, total))
    for index in product(*(range(d) for d in dims)):
        out_index = [0] * len(dims)
        for i, target in enumerate(perm):
            out_index[target] = index[i]
        op[np.ravel_multi_index(out_index, out_dims), np.ravel_multi_index(index, dims)] = 1.0
    return op


def symmetric_subspace_isometry(d: int, copies: int) -> np.ndarray:
    """Columns form an orthonormal basis of the symmetric subspace of (C^d)^copies."""
    dims = [d] * copies
    perms = list(permutations(range(copies)))
    sym = sum(permutation_operator(dims, perm) for perm in perms) / len(perms)
    values, vectors = np.linalg.eigh(sym)
    return vectors[:, values > 0.5].astype(complex)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng)


def random_density(d: int, rng: np.random.Generator, rank: Optional[int] = None) -> Operator:
    """Random density operator from a Ginibre matrix of the given rank."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_psd(d: int, rng: np.random.Generator) -> Operator:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return g @ dagger(g)
