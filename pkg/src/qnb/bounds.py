"""Eigenvalue upper bounds on the nonbilocal measure from correlation matrices.

Both bounds follow from the same relaxation: a rank-one measurement on a
subsystem group induces a matrix with orthonormal rows whose entries are
``Tr(Pi_h B_j)`` over an operator basis ``B_j``.  The fidelity is a trace
form in that matrix, and minimizing it over all row-orthonormal matrices
(Ky Fan) gives the sum of the smallest Gram eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, DimensionError
from .measurements import DEFAULT_DEGENERACY_TOL, apply_measurement, eigenmeasurement
from .measures import fidelity_alt
from .qstate import CorrelationMatrix, bloch_matrix, partial_trace


@dataclass(frozen=True)
class BoundResult:
    bound: float
    eigenvalues_used: np.ndarray
    normalization: float
    details: dict = field(default_factory=dict)

    def __float__(self):
        return self.bound


def lambda_joint(lambda_ab, lambda_cd):
    """Coefficients of ``rho_ab (x) rho_cd`` with measured indices on the rows.

    Entry ``[(j, k), (i, l)] = lambda^ab_ij * lambda^cd_kl``, row index
    ``j * u^2 + k`` and column index ``i * v^2 + l``.
    """
    a = np.asarray(getattr(lambda_ab, "entries", lambda_ab))
    c = np.asarray(getattr(lambda_cd, "entries", lambda_cd))
    if a.ndim != 2 or c.ndim != 2:
        raise DimensionError("correlation matrices must be two-dimensional")
    return CorrelationMatrix(np.kron(a.T, c), "(j:b,k:c)", "(i:a,l:d)")


def gram_spectrum(lam):
    """Increasing eigenvalues of ``L L^T`` (one per row of ``L``).

    Computed on the smaller Gram side; the larger side's extra
    eigenvalues are exact zeros.
    """
    lam = np.asarray(getattr(lam, "entries", lam))
    rows, cols = lam.shape
    if rows <= cols:
        mu = np.linalg.eigvalsh(lam @ lam.T)
    else:
        mu = np.concatenate([np.zeros(rows - cols), np.linalg.eigvalsh(lam.T @ lam)])
    return np.sort(np.maximum(mu, 0.0), kind="stable")


def bound_thm1(rho_ab, rho_cd):
    """``1 - (sum of the n*u smallest eigenvalues of L L^T) / ||L||^2``.

    ``L`` is :func:`lambda_joint` of the two correlation matrices, ``n`` and
    ``u`` the dimensions of the measured subsystems b and c.
    """
    if rho_ab.n_subsystems != 2 or rho_cd.n_subsystems != 2:
        raise DimensionError("bound_thm1 needs two bipartite states")
    lam = lambda_joint(bloch_matrix(rho_ab), bloch_matrix(rho_cd))
    n, u = rho_ab.dims[1], rho_cd.dims[0]
    mu = gram_spectrum(lam)[: n * u]
    norm = lam.norm2()
    return BoundResult(float(1 - mu.sum() / norm), mu, norm,
                       {"outcomes": n * u, "index_layout": "row=j*u^2+k, col=i*v^2+l"})


def _fidelity_b(rho_ab, tolerance):
    marginal_b = partial_trace(rho_ab, (1,))
    meas, structure = eigenmeasurement(marginal_b, tolerance)
    if not structure.is_nondegenerate:
        raise DegeneracyError(f"marginal on b is degenerate: spectrum {structure.eigenvalues}")
    return fidelity_alt(rho_ab, apply_measurement(rho_ab, meas, (1,)))


def bound_thm2(rho_ab, rho_cd, tolerance=DEFAULT_DEGENERACY_TOL):
    """Bound for nondegenerate ``rho^b`` and product measurements ``Pi^b (x) Pi^c``.

    ``1 - F(rho_ab, Pi^b(rho_ab)) * (sum of the u smallest eigenvalues of
    L_cd L_cd^T) / ||L_cd||^2``.
    """
    if rho_ab.n_subsystems != 2 or rho_cd.n_subsystems != 2:
        raise DimensionError("bound_thm2 needs two bipartite states")
    fid = _fidelity_b(rho_ab, tolerance)
    lam_cd = bloch_matrix(rho_cd)
    u = rho_cd.dims[0]
    mu = gram_spectrum(lam_cd)[:u]
    norm = lam_cd.norm2()
    return BoundResult(float(1 - fid * mu.sum() / norm), mu, norm, {"fidelity_b": fid, "outcomes_c": u})


def bound_thm2_qubit(rho_ab, rho_cd, tolerance=DEFAULT_DEGENERACY_TOL):
    """Closed form of :func:`bound_thm2` when subsystem c is a qubit."""
    if rho_cd.dims[0] != 2:
        raise DimensionError("closed form needs a qubit on c")
    fid = _fidelity_b(rho_ab, tolerance)
    lam_cd = bloch_matrix(rho_cd)
    mu = gram_spectrum(lam_cd)
    norm = lam_cd.norm2()
    return float(1 - fid * (mu[0] + mu[1]) / norm)
