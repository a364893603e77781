"""Density-matrix algebra: construction, validation, composition, reduction.

States are immutable: every operation returns a new object.  Subsystem
structure is carried explicitly in ``dims`` so that partial traces and
measurements on subsystem groups never have to guess the factorization.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionError, RangeError, ValidationError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
NORM_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _check_dims(dims):
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 2 for d in dims):
        raise ValidationError("dim-mismatch", 0.0, f"every subsystem dimension must be >= 2, got {dims}")
    return dims


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix with a declared subsystem factorization."""

    dims: tuple
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = _check_dims(self.dims)
        m = np.asarray(self.matrix, dtype=complex)
        n = math.prod(dims)
        if m.shape != (n, n):
            raise ValidationError("dim-mismatch", abs(m.shape[0] - n) if m.ndim == 2 else n,
                                  f"matrix shape {m.shape} vs dims {dims}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("not-finite", float("inf"))
        herm = np.max(np.abs(m - m.conj().T))
        if herm > HERMITIAN_TOL:
            raise ValidationError("non-hermitian", herm)
        tr = abs(np.trace(m) - 1.0)
        if tr > TRACE_TOL:
            raise ValidationError("bad-trace", tr, f"trace {np.trace(m).real:.12g}")
        lo = np.linalg.eigvalsh((m + m.conj().T) / 2)[0]
        if lo < -PSD_TOL:
            raise ValidationError("not-psd", -lo, f"min eigenvalue {lo:.3e}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def n_subsystems(self):
        return len(self.dims)

    def purity(self):
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class PureState:
    """Unit-norm state vector with subsystem dimensions."""

    dims: tuple
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = _check_dims(self.dims)
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.size != math.prod(dims):
            raise ValidationError("dim-mismatch", abs(v.size - math.prod(dims)))
        if not np.all(np.isfinite(v)):
            raise ValidationError("not-finite", float("inf"))
        err = abs(np.vdot(v, v).real - 1.0)
        if err > NORM_TOL:
            raise ValidationError("bad-norm", err)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", _frozen(v))

    def density(self):
        v = self.amplitudes
        return DensityMatrix(self.dims, np.outer(v, v.conj()))


@dataclass(frozen=True)
class SchmidtDecomposition:
    """Schmidt amplitudes (descending, squares sum to one) and bases.

    ``left_basis`` and ``right_basis`` hold the Schmidt vectors as columns.
    """

    coefficients: np.ndarray
    left_basis: np.ndarray = field(repr=False)
    right_basis: np.ndarray = field(repr=False)

    def reconstruct(self):
        return np.einsum("i,ai,bi->ab", self.coefficients, self.left_basis, self.right_basis).reshape(-1)


@dataclass(frozen=True)
class OperatorBasis:
    """Trace-orthonormal Hermitian basis; element 0 is the scaled identity."""

    dim: int
    elements: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.elements)

    def coefficients(self, m):
        """Real coordinates ``Tr(M X_k)`` of a Hermitian matrix."""
        return np.real(np.einsum("kij,ji->k", self.elements, m))

    def reconstruct(self, coeffs):
        return np.einsum("k,kij->ij", coeffs, self.elements)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Real coefficient matrix of a state in product operator bases.

    ``row_index``/``col_index`` record which operator-basis indices each
    axis carries, e.g. ``"i:a"`` or ``"(j:b,k:c)"``.
    """

    entries: np.ndarray
    row_index: str = "i"
    col_index: str = "j"

    @property
    def shape(self):
        return self.entries.shape

    def norm2(self):
        return float(np.sum(self.entries ** 2))


def make_density(matrix, dims):
    """Validate ``matrix`` as a density matrix over subsystems ``dims``."""
    return DensityMatrix(tuple(dims), matrix)


def kron(a, b):
    """Tensor product of two states; subsystem lists are concatenated."""
    return DensityMatrix(a.dims + b.dims, np.kron(a.matrix, b.matrix))


def _as_tensor(rho):
    return rho.matrix.reshape(rho.dims + rho.dims)


def permute(rho, order):
    """Reorder subsystems: new subsystem ``i`` is old subsystem ``order[i]``."""
    order = tuple(order)
    n = rho.n_subsystems
    if sorted(order) != list(range(n)):
        raise IndexError(f"order {order} is not a permutation of {n} subsystems")
    t = _as_tensor(rho).transpose(order + tuple(n + i for i in order))
    dims = tuple(rho.dims[i] for i in order)
    d = math.prod(dims)
    return DensityMatrix(dims, t.reshape(d, d))


def partial_trace(rho, keep):
    """Marginal on the subsystems in ``keep`` (returned in ascending order)."""
    n = rho.n_subsystems
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise IndexError("keep must name at least one subsystem")
    for k in keep:
        if not 0 <= k < n:
            raise IndexError(f"subsystem {k} out of range for {n} subsystems")
    drop = [i for i in range(n) if i not in keep]
    t = _as_tensor(rho)
    # trace the highest index first so remaining axis numbers stay valid
    for i in sorted(drop, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + m)
    dims = tuple(rho.dims[k] for k in keep)
    d = math.prod(dims)
    return DensityMatrix(dims, t.reshape(d, d))


def local_unitary(rho, unitaries):
    """Conjugate ``rho`` by the product of one unitary per subsystem."""
    if len(unitaries) != rho.n_subsystems:
        raise DimensionError("need one unitary per subsystem")
    u = np.array([[1.0]], dtype=complex)
    for d, ui in zip(rho.dims, unitaries):
        ui = np.eye(d) if ui is None else np.asarray(ui)
        if ui.shape != (d, d):
            raise DimensionError(f"unitary shape {ui.shape} for subsystem of dim {d}")
        u = np.kron(u, ui)
    m = u @ rho.matrix @ u.conj().T
    return DensityMatrix(rho.dims, (m + m.conj().T) / 2)


def schmidt(psi, cut=1):
    """Schmidt decomposition of ``psi`` across a bipartition.

    ``cut`` is either the number of leading subsystems forming the left
    part, or an explicit sequence of left-part subsystem indices.
    """
    n = len(psi.dims)
    left = tuple(range(cut)) if isinstance(cut, int) else tuple(cut)
    if not left or len(left) >= n or any(not 0 <= i < n for i in left):
        raise IndexError(f"invalid cut {cut} for {n} subsystems")
    right = tuple(i for i in range(n) if i not in left)
    t = psi.amplitudes.reshape(psi.dims).transpose(left + right)
    dl = math.prod(psi.dims[i] for i in left)
    dr = math.prod(psi.dims[i] for i in right)
    u, s, vh = np.linalg.svd(t.reshape(dl, dr), full_matrices=False)
    return SchmidtDecomposition(s, u, vh.T)


@lru_cache(maxsize=None)
def _gell_mann(d):
    els = [np.eye(d, dtype=complex) / math.sqrt(d)]
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    for j, k in pairs:
        g = np.zeros((d, d), dtype=complex)
        g[j, k] = g[k, j] = 1
        els.append(g / math.sqrt(2))
    for j, k in pairs:
        g = np.zeros((d, d), dtype=complex)
        g[j, k] = -1j
        g[k, j] = 1j
        els.append(g / math.sqrt(2))
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        els.append(np.diag(diag).astype(complex) * math.sqrt(2 / (l * (l + 1))) / math.sqrt(2))
    a = np.array(els)
    a.setflags(write=False)
    return a


def operator_basis(d):
    """Normalized generalized Gell-Mann basis of ``d x d`` Hermitian matrices.

    Order: identity, symmetric off-diagonals, antisymmetric off-diagonals,
    diagonals.  For ``d = 2`` this is (I, X, Y, Z) / sqrt(2).
    """
    if d < 2:
        raise RangeError("operator basis needs d >= 2")
    return OperatorBasis(int(d), _gell_mann(int(d)))


def bloch_matrix(rho, basis_a=None, basis_b=None):
    """Correlation matrix ``lambda_ij = Tr(rho X_i (x) Y_j)`` of a bipartite state."""
    if rho.n_subsystems != 2:
        raise DimensionError("bloch_matrix needs a two-subsystem state")
    m, n = rho.dims
    basis_a = basis_a or operator_basis(m)
    basis_b = basis_b or operator_basis(n)
    t = _as_tensor(rho)
    lam = np.einsum("abcd,ica,jdb->ij", t, basis_a.elements, basis_b.elements)
    return CorrelationMatrix(np.real(lam), "i:a", "j:b")


def basis_ket(d, i):
    v = np.zeros(d, dtype=complex)
    v[i] = 1
    return v


def bell_state(m=2):
    """Maximally entangled state sum_i |ii> / sqrt(m)."""
    if m < 2:
        raise RangeError("bell_state needs m >= 2")
    v = np.zeros(m * m, dtype=complex)
    v[:: m + 1] = 1 / math.sqrt(m)
    return PureState((m, m), v)


def product_ket(dims, digits):
    """Computational basis product state |digits>."""
    v = np.array([1.0 + 0j])
    for d, i in zip(dims, digits):
        v = np.kron(v, basis_ket(d, i))
    return PureState(tuple(dims), v)


def swap_operator(m):
    s = np.zeros((m * m, m * m))
    for mu in range(m):
        for nu in range(m):
            s[mu * m + nu, nu * m + mu] = 1
    return s


def isotropic(m, x):
    """Mixture of the maximally mixed state and the maximally entangled projector.

    ``x`` is the singlet fraction ``<Psi|rho|Psi>`` in [0, 1].
    """
    if not 0 <= x <= 1:
        raise RangeError(f"isotropic parameter x={x} outside [0, 1]")
    psi = bell_state(m).amplitudes
    d2 = m * m
    mat = (1 - x) / (d2 - 1) * np.eye(d2) + (d2 * x - 1) / (d2 - 1) * np.outer(psi, psi.conj())
    return DensityMatrix((m, m), mat)


def werner(m, x):
    """Werner state with swap expectation ``x = Tr(rho S)`` in [-1, 1]."""
    if not -1 <= x <= 1:
        raise RangeError(f"werner parameter x={x} outside [-1, 1]")
    den = m ** 3 - m
    mat = (m - x) / den * np.eye(m * m) + (m * x - 1) / den * swap_operator(m)
    return DensityMatrix((m, m), mat)


def maximally_mixed(dims):
    dims = tuple(dims)
    d = math.prod(dims)
    return DensityMatrix(dims, np.eye(d) / d)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_pure(dims, seed=None):
    """Haar-random pure state (normalized complex Gaussian vector)."""
    rng = _rng(seed)
    d = math.prod(dims)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(tuple(dims), v / np.linalg.norm(v))


def random_density(dim, rank=None, seed=None, dims=None):
    """Random state from the induced measure: trace out a ``rank``-dim environment."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise RangeError(f"rank {rank} not in [1, {dim}]")
    rng = _rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    m /= np.trace(m).real
    dims = (dim,) if dims is None else tuple(dims)
    return DensityMatrix(dims, (m + m.conj().T) / 2)


def haar_unitary(d, seed=None, size=None):
    """Haar-random unitary via QR of a complex Ginibre matrix with phase fix.

    ``size`` draws a stack of shape ``(size, d, d)``.
    """
    rng = _rng(seed)
    shape = (d, d) if size is None else (size, d, d)
    z = rng.standard_normal(shape + (2,))
    z = (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r, axis1=-2, axis2=-1)
    ph = ph / np.abs(ph)
    return q * ph[..., None, :]


def classical_quantum(probabilities, states, side="right"):
    """Classical-quantum state.

    ``side="right"``: sum_i p_i rho_i (x) |i><i|  (classical part second).
    ``side="left"``:  sum_i p_i |i><i| (x) rho_i  (classical part first).
    """
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
        raise RangeError(f"invalid probabilities {probabilities}")
    if len(states) != len(p):
        raise DimensionError("need one conditional state per probability")
    k = len(p)
    if k < 2:
        raise DimensionError("classical register needs at least two levels")
    d = states[0].dim
    if any(s.dim != d for s in states):
        raise DimensionError("conditional states must share a dimension")
    mat = np.zeros((d * k, d * k), dtype=complex)
    for i, (pi, s) in enumerate(zip(p, states)):
        proj = np.zeros((k, k))
        proj[i, i] = 1
        mat += pi * (np.kron(s.matrix, proj) if side == "right" else np.kron(proj, s.matrix))
    dims = (d, k) if side == "right" else (k, d)
    return DensityMatrix(dims, mat)


# JSON state files: {"dims": [...], "matrix": [[[re, im], ...], ...]}
# or {"dims": [...], "amplitudes": [[re, im], ...]}.

def _complex_array(data):
    a = np.asarray(data, dtype=float)
    if a.shape[-1] != 2:
        raise ValidationError("dim-mismatch", 0.0, "complex entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def state_from_json(obj):
    """Parse the JSON state format into a DensityMatrix."""
    if "dims" not in obj:
        raise ValidationError("dim-mismatch", 0.0, "missing 'dims'")
    if "matrix" in obj:
        return DensityMatrix(tuple(obj["dims"]), _complex_array(obj["matrix"]))
    if "amplitudes" in obj:
        return PureState(tuple(obj["dims"]), _complex_array(obj["amplitudes"])).density()
    raise ValidationError("dim-mismatch", 0.0, "expected 'matrix' or 'amplitudes'")


def state_to_json(state):
    if isinstance(state, PureState):
        v = state.amplitudes
        return {"dims": list(state.dims), "amplitudes": [[z.real, z.imag] for z in v]}
    m = state.matrix
    return {"dims": list(state.dims), "matrix": [[[z.real, z.imag] for z in row] for row in m]}


def load_state(path):
    return state_from_json(json.loads(Path(path).read_text()))


def save_state(state, path):
    Path(path).write_text(json.dumps(state_to_json(state)))
