"""Correlation measures built on locally invariant projective measurements.

All optimized measures reduce to extremizing ``q = Tr(rho Pi(rho))``:

* Hilbert-Schmidt MIN: ``max ||rho - Pi(rho)||^2 = Tr rho^2 - min q``
* restricted geometric discord: ``Tr rho^2 - max q``
* fidelity MIN and the nonbilocal measure: ``1 - min q / Tr rho^2``

using ``Tr Pi(rho)^2 = Tr(rho Pi(rho))`` for orthogonal projectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .errors import ConvergenceError, DimensionError, RangeError
from .landscape import BlockManifold, OptimizerConfig, Overlap, ProductManifold, optimize
from .measurements import ProjectiveMeasurement, degeneracy_structure
from .qstate import kron, partial_trace, permute

CERTIFY_TOL = 1e-6


@dataclass(frozen=True)
class MeasureResult:
    value: float
    optimizer_report: dict = field(default_factory=dict)
    certified_gap: float | None = None
    measurement: ProjectiveMeasurement | None = field(default=None, repr=False)

    def __float__(self):
        return self.value


def purity(rho):
    return rho.purity()


def fidelity_alt(rho, sigma):
    """(Tr rho sigma)^2 / (Tr rho^2 Tr sigma^2)."""
    if rho.dim != sigma.dim:
        raise DimensionError(f"dimension {rho.dim} vs {sigma.dim}")
    overlap = np.real(np.vdot(rho.matrix, sigma.matrix))
    return float(overlap ** 2 / (rho.purity() * sigma.purity()))


def _targets(rho, measured):
    t = (measured,) if isinstance(measured, (int, np.integer)) else tuple(measured)
    if not t or any(not 0 <= i < rho.n_subsystems for i in t):
        raise IndexError(f"measured subsystems {measured} invalid for {rho.n_subsystems} subsystems")
    return t


def _clip(x):
    return float(min(max(x, 0.0), 1.0)) if -1e-12 < x < 1 + 1e-12 else float(x)


class _Problem:
    """A state, the measured subsystems and the feasible measurement set."""

    def __init__(self, rho, target, config, product=None):
        self.rho = rho
        self.target = tuple(target)
        self.config = config
        self.overlap = Overlap(rho, self.target)
        keep = sorted(self.target)
        self.marginal = permute(partial_trace(rho, keep), [keep.index(t) for t in self.target])
        if product is None:
            st = degeneracy_structure(self.marginal, config.degeneracy_tol)
            self.structures = (st,)
            self.manifold = BlockManifold(st)
        else:
            sb, sc = (degeneracy_structure(partial_trace(rho, (i,)), config.degeneracy_tol)
                      for i in product)
            self.structures = (sb, sc)
            self.manifold = ProductManifold(sb, sc)

    def solve(self, direction):
        return optimize(self.overlap, self.manifold, self.config, direction)

    def measurement(self, basis):
        dims = tuple(self.rho.dims[i] for i in self.target)
        marg = self.marginal.matrix
        weights = np.real(np.einsum("ik,ij,jk->k", basis.conj(), marg, basis))
        return ProjectiveMeasurement.from_basis(basis, dims, weights, self.config.degeneracy_tol)

    def certify(self, objective, optimum, direction):
        """Compare the optimizer extremum with the sampling oracle.

        Returns the gap oriented so that a positive value means the oracle
        found a better point than the optimizer.
        """
        n = self.config.certify_samples
        if n <= 0:
            return None, None
        factors = self.structures if len(self.structures) > 1 else self.structures[0]
        rep = oracle.sampled_extremum(objective, factors, n, seed=self.config.seed, direction=direction)
        gap = optimum - rep.best_value if direction == "min" else rep.best_value - optimum
        return float(gap), rep

    def report(self, outcome, extra=None):
        rep = dict(outcome.report)
        rep["manifold"] = self.manifold.describe()
        rep["eigenvalues"] = [[float(x) for x in st.eigenvalues] for st in self.structures]
        rep["degeneracy_tol"] = self.config.degeneracy_tol
        if extra:
            rep.update(extra)
        return rep


def _finish(problem, outcome, value, objective, optimum, direction):
    gap, orep = problem.certify(objective, optimum, direction)
    extra = {}
    if orep is not None:
        extra = {"oracle_best": orep.best_value, "oracle_samples": orep.samples,
                 "optimizer_extremum": optimum}
    report = problem.report(outcome, extra)
    if gap is not None and gap > CERTIFY_TOL:
        raise ConvergenceError(f"oracle beats optimizer by {gap:.3e}", report)
    return MeasureResult(_clip(value), report, gap, problem.measurement(outcome.basis))


def hs_min(rho, measured=0, config=None):
    """Hilbert-Schmidt MIN: largest squared distance ``||rho - Pi(rho)||^2``."""
    config = config or OptimizerConfig()
    prob = _Problem(rho, _targets(rho, measured), config)
    out = prob.solve("min")
    value = prob.overlap.purity - out.value
    return _finish(prob, out, value, oracle.hs_distance_objective(rho, prob.target), value, "max")


def geometric_discord_restricted(rho, measured=0, config=None):
    """Smallest ``||rho - Pi(rho)||^2`` over the same locally invariant set."""
    config = config or OptimizerConfig()
    prob = _Problem(rho, _targets(rho, measured), config)
    out = prob.solve("max")
    value = prob.overlap.purity - out.value
    return _finish(prob, out, value, oracle.hs_distance_objective(rho, prob.target), value, "min")


def f_min(rho, measured=0, config=None):
    """Fidelity-based MIN, ``1 - min F(rho, Pi(rho))``."""
    config = config or OptimizerConfig()
    prob = _Problem(rho, _targets(rho, measured), config)
    out = prob.solve("min")
    fid = out.value / prob.overlap.purity
    return _finish(prob, out, 1 - fid, oracle.fidelity_objective(rho, prob.target), fid, "min")


def nonbilocal(rho_ab, rho_cd, config=None, feasible_set="general"):
    """Fidelity-based nonbilocal measure of ``rho_ab (x) rho_cd``.

    The measurement acts jointly on the inner pair (b, c).  With
    ``feasible_set="general"`` it ranges over every eigenbasis of the
    marginal on (b, c); ``"product"`` restricts to ``Pi^b (x) Pi^c``.
    """
    if rho_ab.n_subsystems != 2 or rho_cd.n_subsystems != 2:
        raise DimensionError("nonbilocal needs two bipartite states")
    if feasible_set not in ("general", "product"):
        raise ValueError(f"unknown feasible set {feasible_set!r}")
    config = config or OptimizerConfig()
    rho = kron(rho_ab, rho_cd)
    prob = _Problem(rho, (1, 2), config, product=(1, 2) if feasible_set == "product" else None)
    out = prob.solve("min")
    fid = out.value / prob.overlap.purity
    res = _finish(prob, out, 1 - fid, oracle.fidelity_objective(rho, (1, 2)), fid, "min")
    res.optimizer_report["feasible_set"] = feasible_set
    return res


def _amplitudes(s):
    s = np.asarray(s, dtype=float).reshape(-1)
    if np.any(s < 0) or abs(np.sum(s ** 2) - 1) > 1e-10:
        raise RangeError(f"Schmidt amplitudes must be nonnegative with unit square sum, got {s}")
    return s


def nonbilocal_pure_closed_form(s, r):
    """``1 - (sum_i s_i^4)(sum_j r_j^4)`` for Schmidt amplitudes ``s``, ``r``."""
    s, r = _amplitudes(s), _amplitudes(r)
    return float(1 - np.sum(s ** 4) * np.sum(r ** 4))


def f_min_pure_closed_form(s):
    """``1 - sum_i s_i^4`` for Schmidt amplitudes ``s``."""
    s = _amplitudes(s)
    return float(1 - np.sum(s ** 4))
