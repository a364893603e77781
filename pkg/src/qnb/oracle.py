"""Brute-force baselines for the measurement optimizations.

The objectives built here form the post-measurement state explicitly and
evaluate the fidelity or distance from its definition, so they share no
algebra with :mod:`qnb.landscape` beyond the state tensor itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StructureError
from .measurements import _split
from .qstate import haar_unitary

CHUNK = 2048


@dataclass(frozen=True)
class OracleReport:
    best_value: float
    samples: int
    seed: object
    method: str
    direction: str
    histogram: dict = field(default_factory=dict)
    best_basis: np.ndarray = field(default=None, repr=False)


def _post_states(r, v):
    """Post-measurement tensors for a stack of measurement bases ``v``."""
    proj = np.einsum("sik,sjk->skij", v, v.conj())
    return np.einsum("skxz,zyvw,skvu->sxyuw", proj, r, proj, optimize=True)


def fidelity_objective(rho, target):
    """Alternative fidelity between ``rho`` and its post-measurement state.

    Returns a callable mapping a stack of bases ``(n, dx, dx)`` to values.
    """
    r, _, dx, dy = _split(rho, tuple(target))
    flat = r.reshape(dx * dy, dx * dy)
    p_rho = float(np.real(np.vdot(flat, flat)))

    def objective(v):
        out = np.empty(len(v))
        for s in range(0, len(v), 256):
            post = _post_states(r, v[s:s + 256]).reshape(-1, dx * dy, dx * dy)
            overlap = np.real(np.einsum("ij,sji->s", flat, post))
            p_post = np.real(np.einsum("sij,sij->s", post, post.conj()))
            out[s:s + 256] = overlap ** 2 / (p_rho * p_post)
        return out

    return objective


def hs_distance_objective(rho, target):
    """Squared Hilbert-Schmidt distance ``||rho - Pi(rho)||^2``."""
    r, _, dx, dy = _split(rho, tuple(target))
    flat = r.reshape(dx * dy, dx * dy)

    def objective(v):
        out = np.empty(len(v))
        for s in range(0, len(v), 256):
            post = _post_states(r, v[s:s + 256]).reshape(-1, dx * dy, dx * dy)
            diff = flat[None] - post
            out[s:s + 256] = np.real(np.einsum("sij,sij->s", diff, diff.conj()))
        return out

    return objective


def _factors(structure):
    return tuple(structure) if isinstance(structure, (list, tuple)) else (structure,)


def _compose(factors, block_unitaries):
    """Bases from per-factor block unitaries; product structures use kron."""
    out = None
    for st, w in zip(factors, block_unitaries):
        v = np.asarray(st.basis)[None] @ w
        out = v if out is None else np.einsum("sij,skl->sikjl", out, v).reshape(
            len(v), out.shape[1] * v.shape[1], -1)
    return out


def _sample_chunk(factors, seed, chunk, n):
    ws = []
    for f_idx, st in enumerate(factors):
        w = np.tile(np.eye(st.dim, dtype=complex), (n, 1, 1))
        for b_idx, b in enumerate(st.blocks):
            if len(b) == 1:
                continue
            # independent stream per (chunk, factor, block): prefixes nest across n
            ss = np.random.SeedSequence(seed, spawn_key=(chunk, f_idx, b_idx))
            idx = np.array(b)
            w[:, idx[:, None], idx[None, :]] = haar_unitary(len(b), np.random.default_rng(ss), size=n)
        ws.append(w)
    return _compose(factors, ws)


def _histogram(values):
    lo, hi = float(np.min(values)), float(np.max(values))
    if not hi - lo > 1e-12 * max(1.0, abs(hi)):
        return {"min": lo, "max": hi, "mean": float(np.mean(values)),
                "counts": [int(len(values))], "edges": [lo, hi]}
    counts, edges = np.histogram(values, bins=10)
    return {"min": float(np.min(values)), "max": float(np.max(values)),
            "mean": float(np.mean(values)), "counts": counts.tolist(),
            "edges": [float(e) for e in edges]}


def _pick(values, direction):
    return int(np.argmin(values) if direction == "min" else np.argmax(values))


def sampled_extremum(objective, structure, n_samples, seed=0, direction="min"):
    """Extremum of ``objective`` over Haar-random block rotations.

    ``structure`` is a DegeneracyStructure, or a sequence of them for a
    product measurement.  Samples are drawn in fixed-size chunks with
    per-chunk seed streams, so the result depends only on
    ``(seed, n_samples)``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    factors = _factors(structure)
    if all(st.is_nondegenerate for st in factors):
        v = _compose(factors, [np.eye(st.dim, dtype=complex)[None] for st in factors])
        val = objective(v)
        return OracleReport(float(val[0]), n_samples, seed, "sampled", direction,
                            _histogram(val), v[0])
    best, best_v, vals = None, None, []
    for chunk in range(math.ceil(n_samples / CHUNK)):
        n = min(CHUNK, n_samples - chunk * CHUNK)
        v = _sample_chunk(factors, seed, chunk, n)
        val = objective(v)
        k = _pick(val, direction)
        if best is None or (val[k] < best if direction == "min" else val[k] > best):
            best, best_v = float(val[k]), v[k]
        vals.append(val)
    return OracleReport(best, n_samples, seed, "sampled", direction,
                        _histogram(np.concatenate(vals)), best_v)


def _block_pair(theta, phi):
    c, s = math.cos(theta), math.sin(theta)
    e = complex(math.cos(phi), math.sin(phi))
    return np.array([[c, -np.conj(e) * s], [e * s, c]], dtype=complex)


def grid_extremum(objective, structure, resolution=(90, 180), direction="min", freeze_kernel=True):
    """Extremum over a (theta, phi) grid for every two-dimensional block.

    ``resolution`` is ``(n_theta, n_phi)`` or a single int for both axes;
    theta spans [0, pi/2] inclusive and phi spans [0, 2 pi).  Blocks lying
    in the marginal's kernel are held fixed when ``freeze_kernel``.
    """
    factors = _factors(structure)
    n_theta, n_phi = (resolution, resolution) if isinstance(resolution, int) else resolution
    for st in factors:
        if max(st.block_dims) > 2:
            raise StructureError(f"grid oracle handles blocks of size <= 2, got {st.block_dims}")
    thetas = [0.0] if n_theta == 1 else list(np.linspace(0, math.pi / 2, n_theta))
    phis = list(2 * math.pi * np.arange(n_phi) / n_phi)
    cells = np.array([_block_pair(t, p) for t in thetas for p in phis])

    axes = []
    for f_idx, st in enumerate(factors):
        active = st.active_blocks() if freeze_kernel else tuple(b for b in st.blocks if len(b) == 2)
        for b in active:
            axes.append((f_idx, b))

    best, best_v, vals = None, None, []
    combos = itertools.product(range(len(cells)), repeat=len(axes))
    batch = []

    def flush(batch):
        nonlocal best, best_v
        n = len(batch)
        ws = [np.tile(np.eye(st.dim, dtype=complex), (n, 1, 1)) for st in factors]
        for col, (f_idx, b) in enumerate(axes):
            idx = np.array(b)
            ws[f_idx][:, idx[:, None], idx[None, :]] = cells[[c[col] for c in batch]]
        v = _compose(factors, ws)
        val = objective(v)
        k = _pick(val, direction)
        if best is None or (val[k] < best if direction == "min" else val[k] > best):
            best, best_v = float(val[k]), v[k]
        vals.append(val)

    total = 0
    for combo in combos:
        batch.append(combo)
        if len(batch) == CHUNK:
            flush(batch)
            total += len(batch)
            batch = []
    if batch:
        flush(batch)
        total += len(batch)
    return OracleReport(best, total, None, "grid", direction, _histogram(np.concatenate(vals)), best_v)
