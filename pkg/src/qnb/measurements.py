"""Locally invariant rank-one projective measurements.

A measurement leaves a marginal invariant exactly when its vectors form an
eigenbasis of that marginal.  The remaining freedom is a unitary acting
inside each degenerate eigenspace, which is what :class:`DegeneracyStructure`
records and what the optimizers and oracles search over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ValidationError
from .qstate import DensityMatrix, operator_basis

PROJECTOR_TOL = 1e-10
DEFAULT_DEGENERACY_TOL = 1e-8


def group_spectrum(values, tol):
    """Split descending ``values`` into runs whose consecutive gaps are <= ``tol``."""
    blocks = [[0]]
    for i in range(1, len(values)):
        if values[i - 1] - values[i] <= tol:
            blocks[-1].append(i)
        else:
            blocks.append([i])
    return [tuple(b) for b in blocks]


@dataclass(frozen=True)
class DegeneracyStructure:
    """Degenerate eigenspaces of a marginal.

    ``eigenvalues`` are sorted descending and ``basis`` holds the matching
    eigenvectors as columns; ``blocks`` partitions the indices into
    contiguous runs of (numerically) equal eigenvalues.
    """

    eigenvalues: np.ndarray
    blocks: tuple
    tolerance: float
    basis: np.ndarray = field(repr=False)

    @property
    def block_dims(self):
        return tuple(len(b) for b in self.blocks)

    @property
    def dim(self):
        return len(self.eigenvalues)

    @property
    def n_params(self):
        return sum(d * d for d in self.block_dims)

    @property
    def is_nondegenerate(self):
        return all(d == 1 for d in self.block_dims)

    def active_blocks(self):
        """Blocks of size > 1 whose eigenvalue is nonzero.

        Rotations inside the marginal's kernel cannot change any
        post-measurement state: a rank-one projector onto a kernel vector
        annihilates the full state.
        """
        return tuple(b for b in self.blocks
                     if len(b) > 1 and self.eigenvalues[b[0]] > self.tolerance)

    def block_mask(self, active_only=False):
        mask = np.zeros((self.dim, self.dim), dtype=bool)
        for b in (self.active_blocks() if active_only else self.blocks):
            idx = np.array(b)
            mask[np.ix_(idx, idx)] = True
        return mask


@dataclass(frozen=True)
class ProjectiveMeasurement:
    """Complete set of orthogonal rank-one projectors on ``subsystem_dims``."""

    subsystem_dims: tuple
    projectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.projectors, dtype=complex)
        d = math.prod(self.subsystem_dims)
        if p.ndim != 3 or p.shape[1:] != (d, d):
            raise ValidationError("dim-mismatch", 0.0, f"projector stack shape {p.shape} vs dim {d}")
        comp = np.max(np.abs(p.sum(axis=0) - np.eye(d)))
        if comp > PROJECTOR_TOL:
            raise ValidationError("incomplete", comp)
        prods = np.einsum("kij,ljm->klim", p, p)
        expect = np.einsum("kl,kim->klim", np.eye(len(p)), p)
        orth = np.max(np.abs(prods - expect))
        if orth > PROJECTOR_TOL:
            raise ValidationError("non-orthogonal", orth)
        rank = np.max(np.abs(np.einsum("kii->k", p) - 1))
        if rank > PROJECTOR_TOL:
            raise ValidationError("not-rank-one", rank)
        p.setflags(write=False)
        object.__setattr__(self, "subsystem_dims", tuple(self.subsystem_dims))
        object.__setattr__(self, "projectors", p)

    def __len__(self):
        return len(self.projectors)

    @property
    def dim(self):
        return self.projectors.shape[1]

    def vectors(self):
        """Unit vectors spanning each projector (columns), phase fixed."""
        cols = []
        for p in self.projectors:
            j = int(np.argmax(np.real(np.diag(p))))
            cols.append(p[:, j] / math.sqrt(p[j, j].real))
        return np.array(cols).T

    @classmethod
    def from_basis(cls, basis, subsystem_dims, weights=None, tol=DEFAULT_DEGENERACY_TOL):
        """Measurement onto the columns of a unitary ``basis``.

        Projectors are ordered by descending ``weights`` (grouped at ``tol``),
        ties broken lexicographically on projector entries.
        """
        basis = np.asarray(basis, dtype=complex)
        projs = np.einsum("ik,jk->kij", basis, basis.conj())
        order = _canonical_order(projs, weights, tol)
        return cls(tuple(subsystem_dims), projs[order])


def _lex_key(p):
    flat = np.round(np.stack([p.real, p.imag], axis=-1).reshape(-1), 12)
    return tuple(-flat)


def _canonical_order(projs, weights, tol):
    n = len(projs)
    if weights is None:
        groups = [tuple(range(n))]
        w_order = list(range(n))
    else:
        w = np.asarray(weights, dtype=float)
        w_order = list(np.argsort(-w, kind="stable"))
        scale = max(float(np.max(np.abs(w))), 1e-300)
        groups = [tuple(w_order[i] for i in g) for g in group_spectrum(w[w_order], tol * scale)]
    order = []
    for g in groups:
        order.extend(sorted(g, key=lambda k: _lex_key(projs[k])))
    return np.array(order, dtype=int)


def _matrix(marginal):
    return marginal.matrix if isinstance(marginal, DensityMatrix) else np.asarray(marginal, dtype=complex)


def degeneracy_structure(marginal, tolerance=DEFAULT_DEGENERACY_TOL):
    m = _matrix(marginal)
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    w, v = w[::-1], v[:, ::-1]
    scale = max(float(w[0]), 1e-300)
    tol = tolerance * scale
    blocks = group_spectrum(w, tol)
    # canonical order within each block; makes the base measurement reproducible
    projs = np.einsum("ik,jk->kij", v, v.conj())
    order = []
    for b in blocks:
        order.extend(sorted(b, key=lambda k: _lex_key(projs[k])))
    v = v[:, order]
    v.setflags(write=False)
    w = np.array(w)
    w.setflags(write=False)
    return DegeneracyStructure(w, tuple(blocks), tol, v)


def eigenmeasurement(marginal, tolerance=DEFAULT_DEGENERACY_TOL):
    """Eigenprojective measurement of ``marginal`` and its degeneracy structure.

    ``tolerance`` is relative to the largest eigenvalue.
    """
    structure = degeneracy_structure(marginal, tolerance)
    dims = marginal.dims if isinstance(marginal, DensityMatrix) else (structure.dim,)
    projs = np.einsum("ik,jk->kij", structure.basis, structure.basis.conj())
    return ProjectiveMeasurement(dims, projs), structure


def block_unitary(structure, params):
    """Block-diagonal ``exp(i H_g)`` from per-block generator coordinates.

    ``params`` is a flat vector of length ``sum(d_g**2)``; block ``g`` uses
    its ``d_g**2`` entries as coefficients on the Gell-Mann basis of size
    ``d_g`` (a one-dimensional block contributes a global phase).
    """
    params = np.asarray(params, dtype=float).reshape(-1)
    if params.size != structure.n_params:
        raise DimensionError(f"expected {structure.n_params} parameters, got {params.size}")
    w = np.zeros((structure.dim, structure.dim), dtype=complex)
    pos = 0
    for b in structure.blocks:
        d = len(b)
        coeffs = params[pos:pos + d * d]
        pos += d * d
        if d == 1:
            h = np.array([[coeffs[0]]], dtype=complex)
        else:
            h = np.einsum("k,kij->ij", coeffs, operator_basis(d).elements)
        ev, q = np.linalg.eigh(h)
        idx = np.array(b)
        w[np.ix_(idx, idx)] = (q * np.exp(1j * ev)) @ q.conj().T
    return w


def rotate_measurement(base, structure, params):
    """Rotate ``base`` inside the degenerate blocks of ``structure``.

    The base projectors must be listed in the structure's eigenvalue
    order, as :func:`eigenmeasurement` returns them.
    """
    if base.dim != structure.dim:
        raise DimensionError(f"measurement dim {base.dim} vs structure dim {structure.dim}")
    u = base.vectors() @ block_unitary(structure, params)
    projs = np.einsum("ik,jk->kij", u, u.conj())
    return ProjectiveMeasurement(base.subsystem_dims, projs)


def _split(rho, target):
    """Permute ``rho`` to (target, rest) and return the 4-index tensor."""
    n = rho.n_subsystems
    target = tuple(int(t) for t in target)
    if len(set(target)) != len(target) or any(not 0 <= t < n for t in target):
        raise IndexError(f"invalid target subsystems {target} for {n} subsystems")
    rest = tuple(i for i in range(n) if i not in target)
    order = target + rest
    dx = math.prod(rho.dims[i] for i in target)
    dy = math.prod(rho.dims[i] for i in rest) if rest else 1
    t = rho.matrix.reshape(rho.dims + rho.dims).transpose(order + tuple(n + i for i in order))
    return t.reshape(dx, dy, dx, dy), order, dx, dy


def _unsplit(t, rho, order):
    n = rho.n_subsystems
    dims_perm = tuple(rho.dims[i] for i in order)
    inv = tuple(int(i) for i in np.argsort(order))
    full = t.reshape(dims_perm + dims_perm).transpose(inv + tuple(n + i for i in inv))
    return full.reshape(rho.dim, rho.dim)


def apply_measurement(rho, m, target):
    """Nonselective post-measurement state sum_k (P_k (x) 1) rho (P_k (x) 1)."""
    target = (target,) if isinstance(target, int) else tuple(target)
    r, order, dx, dy = _split(rho, target)
    if m.dim != dx:
        raise DimensionError(f"measurement dim {m.dim} vs target dim {dx}")
    post = np.einsum("kxz,zyvw,kvu->xyuw", m.projectors, r, m.projectors)
    mat = _unsplit(post, rho, order)
    return DensityMatrix(rho.dims, (mat + mat.conj().T) / 2)


def is_locally_invariant(m, marginal, tol=1e-9):
    """True when measuring leaves ``marginal`` unchanged entrywise within ``tol``."""
    a = _matrix(marginal)
    if a.shape[0] != m.dim:
        raise DimensionError(f"measurement dim {m.dim} vs marginal dim {a.shape[0]}")
    post = np.einsum("kij,jl,klm->im", m.projectors, a, m.projectors)
    return bool(np.max(np.abs(post - a)) <= tol)
