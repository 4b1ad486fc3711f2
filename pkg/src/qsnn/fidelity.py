"""Subspace-restricted average gate fidelity and its Monte-Carlo oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DenseOperator
from .errors import (
    DimensionMismatchError,
    InvalidParamsError,
    NonOrthonormalSubspaceError,
)

ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True)
class FidelityReport:
    """Average fidelity, leakage, and per-state overlaps for one realization."""

    f_avg: float
    leakage: float
    per_state: tuple[float, ...]
    subspace_dim: int

    def __post_init__(self):
        eps = 1e-9
        if not -eps <= self.f_avg <= 1 + eps:
            raise InvalidParamsError(f"f_avg {self.f_avg} outside [0, 1]")
        if not -eps <= self.leakage <= 1 + eps:
            raise InvalidParamsError(f"leakage {self.leakage} outside [0, 1]")
        for v in self.per_state:
            if not -eps <= v <= 1 + eps:
                raise InvalidParamsError(f"per-state overlap {v} outside [0, 1]")


def _subspace_matrix(subspace: Sequence, dim: int) -> np.ndarray:
    basis = np.array([np.asarray(v, dtype=complex).reshape(-1) for v in subspace]).T
    if basis.shape[0] != dim:
        raise DimensionMismatchError(
            f"subspace vectors have length {basis.shape[0]}, operators dim {dim}"
        )
    gram = basis.conj().T @ basis
    if np.max(np.abs(gram - np.eye(basis.shape[1]))) > ORTHONORMALITY_TOL:
        raise NonOrthonormalSubspaceError(
            "subspace basis is not orthonormal within 1e-10"
        )
    return basis


def average_fidelity(
    u_actual: DenseOperator,
    u_ideal: DenseOperator,
    subspace: Sequence,
) -> FidelityReport:
    """Average gate fidelity over Haar-random states of the subspace.

    With M = P·u_ideal†·u_actual·P restricted to the d-dim subspace,
    f_avg = (Tr(MM†) + |Tr M|²)/(d(d+1)); leakage = 1 − Tr(M̃M̃†)/d with
    M̃ = P·u_actual·P.  Leakage out of the subspace is fully accounted for
    by the fidelity metric itself.
    """
    if u_actual.dim != u_ideal.dim:
        raise DimensionMismatchError("operators must share dimension")
    basis = _subspace_matrix(subspace, u_actual.dim)
    d = basis.shape[1]
    v = u_ideal.matrix.conj().T @ u_actual.matrix
    m = basis.conj().T @ v @ basis
    f_avg = (float(np.trace(m @ m.conj().T).real) + abs(np.trace(m)) ** 2) / (
        d * (d + 1)
    )
    m_tilde = basis.conj().T @ u_actual.matrix @ basis
    leakage = 1.0 - float(np.trace(m_tilde @ m_tilde.conj().T).real) / d
    per_state = tuple(abs(m[i, i]) for i in range(d))
    return FidelityReport(
        f_avg=min(max(f_avg, 0.0), 1.0),
        leakage=min(max(leakage, 0.0), 1.0),
        per_state=per_state,
        subspace_dim=d,
    )


def mc_average_fidelity(
    u_actual: DenseOperator,
    u_ideal: DenseOperator,
    subspace: Sequence,
    n_samples: int = 2000,
    seed: int | None = None,
) -> tuple[float, float]:
    """Monte-Carlo estimate (mean, standard error) of average_fidelity.

    Haar sampling on the subspace: normalized standard complex Gaussian
    coefficients over the basis states.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if u_actual.dim != u_ideal.dim:
        raise DimensionMismatchError("operators must share dimension")
    basis = _subspace_matrix(subspace, u_actual.dim)
    d = basis.shape[1]
    rng = np.random.default_rng(seed)
    v = u_ideal.matrix.conj().T @ u_actual.matrix
    m = basis.conj().T @ v @ basis
    coeffs = rng.normal(size=(n_samples, d)) + 1j * rng.normal(size=(n_samples, d))
    coeffs /= np.linalg.norm(coeffs, axis=1, keepdims=True)
    overlaps = np.einsum("si,ij,sj->s", coeffs.conj(), m, coeffs)
    values = np.abs(overlaps) ** 2
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n_samples))
    return mean, stderr
