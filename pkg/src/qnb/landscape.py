"""Overlap objective over locally invariant measurements and its optimizer.

Every measure in :mod:`qnb.measures` is a function of the single quantity

    q(V) = Tr(rho Pi_V(rho)) = sum_k sum_{y,y'} |<v_k| R_{y y'} |v_k>|^2

where ``v_k`` are the columns of the measurement basis ``V`` on the target
subsystems and ``R_{y y'}`` are the blocks of ``rho`` indexed by the
untouched subsystems.  Feasible bases are ``V = V0 W`` with ``W``
block-diagonal over the degenerate eigenspaces of the target marginal.

The optimizer moves along ``V <- V exp(iH)`` with ``H`` the block-projected
Riemannian gradient, all starts advanced together as one batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .measurements import _split
from .qstate import haar_unitary


def expm_i(h):
    """``exp(i H)`` for a stack of Hermitian matrices."""
    w, q = np.linalg.eigh(h)
    return (q * np.exp(1j * w)[..., None, :]) @ np.conj(np.swapaxes(q, -1, -2))


class Overlap:
    """``q(V) = Tr(rho Pi_V(rho))`` for measurements on ``target`` subsystems."""

    def __init__(self, rho, target):
        self.rho = rho
        self.target = tuple(target)
        self.r, _, self.dx, self.dy = _split(rho, self.target)
        self.purity = rho.purity()
        probe = np.zeros((1, self.dx, self.dx), dtype=complex)
        self._path_b = np.einsum_path("sxk,xyzw,szk->skyw", probe, self.r, probe, optimize="optimal")[0]
        self._path_a = np.einsum_path("sxk,xyzw,szl->skylw", probe, self.r, probe, optimize="optimal")[0]

    def values(self, v):
        v = np.asarray(v).reshape(-1, self.dx, self.dx)
        b = np.einsum("sxk,xyzw,szk->skyw", v.conj(), self.r, v, optimize=self._path_b)
        return np.sum(np.abs(b) ** 2, axis=(1, 2, 3))

    def values_and_grad(self, v):
        """Values and Euclidean gradients G with dq = Tr(G H) for V -> V exp(iH)."""
        a = np.einsum("sxk,xyzw,szl->skylw", v.conj(), self.r, v, optimize=self._path_a)
        b = np.einsum("skykw->skyw", a)
        q = np.sum(np.abs(b) ** 2, axis=(1, 2, 3))
        bc = b.conj()
        c = (np.einsum("skylw,skyw->skl", a, bc)
             - np.einsum("skylw,slyw->skl", a, bc))
        g = 1j * (c - np.conj(np.swapaxes(c, -1, -2)))
        return q, g


class BlockManifold:
    """Unitaries ``V0 W`` with ``W`` block-diagonal over active degenerate blocks."""

    def __init__(self, structure):
        self.structure = structure
        self.base = np.array(structure.basis)
        self.mask = structure.block_mask(active_only=True)
        self.blocks = structure.active_blocks()

    @property
    def has_freedom(self):
        return bool(self.blocks)

    def direction(self, g):
        return np.where(self.mask, g, 0)

    def generators(self):
        """Hermitian generators of in-block rotations (diagonal phases excluded)."""
        d = self.structure.dim
        out = []
        for b in self.blocks:
            for i, j in ((i, j) for i in b for j in b if i < j):
                e = np.zeros((d, d), dtype=complex)
                e[i, j] = e[j, i] = 1 / math.sqrt(2)
                out.append(e)
                e = np.zeros((d, d), dtype=complex)
                e[i, j], e[j, i] = -1j / math.sqrt(2), 1j / math.sqrt(2)
                out.append(e)
        return np.array(out).reshape(-1, d, d)

    def random(self, rng, n):
        w = np.tile(np.eye(self.structure.dim, dtype=complex), (n, 1, 1))
        for b in self.blocks:
            idx = np.array(b)
            w[:, idx[:, None], idx[None, :]] = haar_unitary(len(b), rng, size=n)
        return self.base @ w

    def describe(self):
        return {"blocks": [list(map(int, b)) for b in self.structure.blocks],
                "block_dims": list(self.structure.block_dims),
                "active_blocks": [list(map(int, b)) for b in self.blocks]}


class ProductManifold:
    """Product bases ``(Vb W_b) (x) (Vc W_c)``, each factor locally invariant."""

    def __init__(self, structure_b, structure_c):
        self.left = BlockManifold(structure_b)
        self.right = BlockManifold(structure_c)
        self.nb = structure_b.dim
        self.nc = structure_c.dim
        self.base = np.kron(self.left.base, self.right.base)

    @property
    def has_freedom(self):
        return self.left.has_freedom or self.right.has_freedom

    def direction(self, g):
        g4 = g.reshape(-1, self.nb, self.nc, self.nb, self.nc)
        gb = self.left.direction(np.einsum("sicjc->sij", g4))
        gc = self.right.direction(np.einsum("sbibj->sij", g4))
        eb, ec = np.eye(self.nb), np.eye(self.nc)
        return (np.einsum("sij,kl->sikjl", gb, ec) + np.einsum("ij,skl->sikjl", eb, gc)).reshape(g.shape)

    def generators(self):
        gb = [np.kron(e, np.eye(self.nc)) for e in self.left.generators()]
        gc = [np.kron(np.eye(self.nb), e) for e in self.right.generators()]
        return np.array(gb + gc).reshape(-1, self.nb * self.nc, self.nb * self.nc)

    def random(self, rng, n):
        vb = self.left.random(rng, n)
        vc = self.right.random(rng, n)
        return np.einsum("sij,skl->sikjl", vb, vc).reshape(n, self.nb * self.nc, self.nb * self.nc)

    def describe(self):
        return {"product": True, "b": self.left.describe(), "c": self.right.describe()}


@dataclass
class OptimizerConfig:
    """Multi-start settings.  ``certify_samples = 0`` disables the oracle check."""

    starts: int = 32
    max_iters: int = 2000
    step_tol: float = 1e-10
    stall_window: int = 50
    seed: int = 0
    degeneracy_tol: float = 1e-8
    certify_samples: int = 20000

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be >= 1")

    def as_dict(self):
        return {k: getattr(self, k) for k in
                ("starts", "max_iters", "step_tol", "stall_window", "seed", "degeneracy_tol", "certify_samples")}


@dataclass
class Outcome:
    value: float
    basis: np.ndarray = field(repr=False)
    report: dict = field(default_factory=dict)


_ARMIJO = 1e-4
_MAX_HALVINGS = 40
_FD_STEP = 1e-5
_GRAD_TOL = 1e-11
_BATCH = 512


def _batched(fn, v):
    """Apply ``fn`` over a stack of bases in memory-bounded chunks."""
    if len(v) <= _BATCH:
        return fn(v)
    parts = [fn(v[i:i + _BATCH]) for i in range(0, len(v), _BATCH)]
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p) for p in zip(*parts))
    return np.concatenate(parts)


class _Newton:
    """Gradient and finite-difference Hessian in generator coordinates."""

    def __init__(self, objective, gens, sign):
        self.objective = objective
        self.gens = gens
        self.sign = sign
        self.shift = np.stack([expm_i(_FD_STEP * gens), expm_i(-_FD_STEP * gens)], axis=1)

    def value(self, v):
        return self.sign * _batched(self.objective.values, v)

    def grad(self, v):
        q, g = _batched(self.objective.values_and_grad, v)
        return self.sign * q, self.sign * np.real(np.einsum("sij,aji->sa", g, self.gens))

    def hessian(self, v):
        s, n = len(v), len(self.gens)
        pert = np.einsum("sij,akjl->sakil", v, self.shift).reshape(-1, *v.shape[1:])
        _, gp = self.grad(pert)
        gp = gp.reshape(s, n, 2, n)
        h = (gp[:, :, 0, :] - gp[:, :, 1, :]) / (2 * _FD_STEP)
        return (h + np.swapaxes(h, 1, 2)) / 2

    def step(self, grad, hess):
        """Newton direction with the Hessian spectrum replaced by its magnitude."""
        w, u = np.linalg.eigh(hess)
        scale = np.max(np.abs(w), axis=1, keepdims=True)
        w = np.maximum(np.abs(w), np.maximum(1e-8 * scale, 1e-12))
        return -np.einsum("sij,sj,skj,sk->si", u, 1 / w, u, grad)

    def move(self, v, x):
        return v @ expm_i(np.einsum("sa,aij->sij", x, self.gens))


def optimize(objective, manifold, config, direction="min"):
    """Multi-start extremum of ``objective.values`` over ``manifold``.

    Start 0 is the base eigenbasis; the rest are Haar-random block
    rotations of it.  All starts advance together by Riemannian Newton
    steps ``V <- V exp(i sum_a x_a E_a)`` over the in-block generators
    ``E_a``.  The Hessian comes from central differences of the analytic
    gradient, with its eigenvalues replaced by their magnitudes so every
    step descends.  Armijo backtracking guards each step.  A start stops
    when its gradient vanishes, its line search fails, or its value moves
    less than ``step_tol`` over ``stall_window`` iterations.
    """
    sign = 1.0 if direction == "min" else -1.0
    base = manifold.base[None]
    if not manifold.has_freedom:
        q = float(objective.values(base)[0])
        return Outcome(q, manifold.base, {"starts_used": 0, "iterations": 0,
                                          "best_objective": q, "converged_starts": 0,
                                          "skipped": "no degenerate freedom"})

    newton = _Newton(objective, manifold.generators(), sign)
    rng = np.random.default_rng(config.seed)
    n = config.starts
    v = base.copy() if n == 1 else np.concatenate([base, manifold.random(rng, n - 1)])
    f, grad = newton.grad(v)
    running = np.ones(n, dtype=bool)
    iters = np.zeros(n, dtype=int)
    history = [f.copy()]

    for it in range(1, config.max_iters + 1):
        running &= np.linalg.norm(grad, axis=1) > _GRAD_TOL
        idx = np.flatnonzero(running)
        if idx.size == 0:
            break
        x = newton.step(grad[idx], newton.hessian(v[idx]))
        slope = -np.einsum("sa,sa->s", grad[idx], x)
        a = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        v_new = v[idx].copy()
        for _ in range(_MAX_HALVINGS):
            k = np.flatnonzero(pending)
            if k.size == 0:
                break
            cand = newton.move(v[idx[k]], a[k, None] * x[k])
            fc = newton.value(cand)
            ok = fc <= f[idx[k]] - _ARMIJO * a[k] * slope[k]
            v_new[k[ok]] = cand[ok]
            pending[k[ok]] = False
            a[k[~ok]] *= 0.5
        moved = idx[~pending]
        if moved.size:
            v[moved] = v_new[~pending]
            f[moved], grad[moved] = newton.grad(v[moved])
        iters[idx] = it
        running[idx[pending]] = False
        history.append(f.copy())
        if len(history) > config.stall_window:
            running &= ~(history[0] - f < config.step_tol)
            history.pop(0)

    # re-unitarize against drift from repeated retractions
    u, _, wh = np.linalg.svd(v)
    v = u @ wh
    f = newton.value(v)
    best = int(np.argmin(f))
    q = float(sign * f[best])
    report = {
        "starts_used": n,
        "iterations": int(iters.max()),
        "iterations_best_start": int(iters[best]),
        "best_start": best,
        "best_objective": q,
        "converged_starts": int(np.sum(~running)),
        "spread": float(np.max(f) - np.min(f)),
        "starts_at_best": int(np.sum(f - f[best] < 1e-9)),
    }
    return Outcome(q, v[best], report)
