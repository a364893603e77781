"""Randomized verification suites behind ``qnb verify``.

Each suite draws its instances from a seeded generator, checks one
property per trial and records the worst violation.  The
``superactivation-search`` suite asserts nothing; it reports what it finds.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bounds, measures
from .errors import DegeneracyError
from .landscape import OptimizerConfig
from .measurements import degeneracy_structure
from .qstate import (DensityMatrix, classical_quantum, haar_unitary, kron, local_unitary,
                     partial_trace, random_density, random_pure, schmidt)

BELL_BASIS = np.array([[1, 0, 0, 1], [1, 0, 0, -1], [0, 1, 1, 0], [0, 1, -1, 0]]) / math.sqrt(2)


@dataclass
class SuiteReport:
    suite: str
    seed: int
    trials: list = field(default_factory=list)
    tolerance: float = 0.0
    asserting: bool = True
    findings: dict = field(default_factory=dict)

    @property
    def passed(self):
        return not self.asserting or all(t["passed"] for t in self.trials)

    @property
    def worst_violation(self):
        return max((t["violation"] for t in self.trials), default=0.0)

    def add(self, violation, **info):
        self.trials.append({"trial": len(self.trials), "passed": bool(violation <= self.tolerance),
                            "violation": float(violation), **info})

    def as_dict(self):
        d = asdict(self)
        d.update(passed=self.passed, worst_violation=self.worst_violation)
        return d


def _config(seed, certify=0):
    return OptimizerConfig(seed=seed, certify_samples=certify)


def bell_diagonal(weights):
    """Mixture of the four two-qubit Bell projectors (maximally mixed marginals)."""
    m = sum(w * np.outer(v, v) for w, v in zip(weights, BELL_BASIS))
    return DensityMatrix((2, 2), m)


def random_nondegenerate_probs(rng, k, gap=0.05):
    while True:
        p = rng.dirichlet(np.ones(k))
        if np.min(np.diff(np.sort(p))) > gap:
            return p


def random_cq_pair(rng, degenerate=False):
    """Classical on b for the first state and on c for the second."""
    if degenerate:
        p = random_nondegenerate_probs(rng, 2)
        q = p[::-1].copy()
    else:
        p = random_nondegenerate_probs(rng, 2)
        q = random_nondegenerate_probs(rng, 2)
        # keep products p_i q_j distinct so the joint marginal stays nondegenerate
        while np.min(np.diff(np.sort(np.outer(p, q).ravel()))) < 0.02:
            q = random_nondegenerate_probs(rng, 2)
    rho_ab = classical_quantum(p, [random_density(2, None, rng) for _ in p], side="right")
    rho_cd = classical_quantum(q, [random_density(2, None, rng) for _ in q], side="left")
    return rho_ab, rho_cd


def suite_pure_closed_form(trials, seed):
    """Optimized nonbilocal value vs 1 - sum s^4 sum r^4 on Haar-random pure pairs.

    Runs ``trials`` pairs with 2x2 factors, then ``round(0.4 * trials)``
    pairs with 2x3 factors.
    """
    rep = SuiteReport("pure-closed-form", seed, tolerance=1e-6)
    rng = np.random.default_rng(seed)
    shapes = [(2, 2)] * trials + [(2, 3)] * round(0.4 * trials)
    for i, dims in enumerate(shapes):
        pa, pc = random_pure(dims, rng), random_pure(dims, rng)
        s, r = schmidt(pa).coefficients, schmidt(pc).coefficients
        closed = measures.nonbilocal_pure_closed_form(s, r)
        got = measures.nonbilocal(pa.density(), pc.density(), _config(seed + i)).value
        rep.add(abs(got - closed), dims=list(dims), optimized=got, closed_form=closed)
    return rep


def suite_ordering(trials, seed):
    """nonbilocal(psi (x) psi) >= f_min(psi) on Haar-random pure two-qubit states."""
    rep = SuiteReport("ordering", seed, tolerance=1e-8)
    rng = np.random.default_rng(seed)
    for i in range(trials):
        rho = random_pure((2, 2), rng).density()
        nb = measures.nonbilocal(rho, rho, _config(seed + i)).value
        fm = measures.f_min(rho, 0, _config(seed + i)).value
        rep.add(max(0.0, fm - nb), nonbilocal=nb, f_min=fm)
    return rep


def suite_bounds(trials, seed):
    """Both eigenvalue bounds dominate the optimized measure on random mixed pairs."""
    rep = SuiteReport("bounds", seed, tolerance=1e-7)
    rng = np.random.default_rng(seed)
    for i in range(trials):
        a = random_density(4, 1 + i % 4, rng, dims=(2, 2))
        c = random_density(4, 1 + (i // 4) % 4, rng, dims=(2, 2))
        cfg = _config(seed + i)
        nb = measures.nonbilocal(a, c, cfg).value
        b1 = bounds.bound_thm1(a, c).bound
        viol = max(0.0, nb - b1)
        info = {"nonbilocal": nb, "bound_thm1": b1}
        try:
            b2 = bounds.bound_thm2(a, c).bound
        except DegeneracyError:
            info["bound_thm2"] = "NA"
        else:
            nbp = measures.nonbilocal(a, c, cfg, feasible_set="product").value
            viol = max(viol, nbp - b2)
            info.update(bound_thm2=b2, nonbilocal_product=nbp)
        rep.add(viol, **info)
    return rep


def suite_ancilla(trials, seed):
    """Appending a qubit ancilla to the unmeasured side.

    Hilbert-Schmidt MIN scales by the ancilla purity; fidelity MIN is unchanged.
    """
    rep = SuiteReport("ancilla", seed, tolerance=1e-8)
    rng = np.random.default_rng(seed)
    while len(rep.trials) < trials:
        rho = random_density(4, None, rng, dims=(2, 2))
        if not degeneracy_structure(partial_trace(rho, (0,))).is_nondegenerate:
            continue
        anc = random_density(2, None, rng)
        big = kron(rho, anc)
        cfg = _config(seed)
        hs, hs_big = measures.hs_min(rho, 0, cfg).value, measures.hs_min(big, 0, cfg).value
        fm, fm_big = measures.f_min(rho, 0, cfg).value, measures.f_min(big, 0, cfg).value
        scaling = abs(hs_big - hs * anc.purity())
        rep.add(max(scaling, abs(fm_big - fm)), hs_scaling_error=scaling,
                f_min_change=abs(fm_big - fm), ancilla_purity=anc.purity())
    return rep


def suite_cq_zero(trials, seed):
    """Classical-quantum pairs with nondegenerate classical probabilities give zero."""
    rep = SuiteReport("cq-zero", seed, tolerance=1e-7)
    rng = np.random.default_rng(seed)
    for i in range(trials):
        a, c = random_cq_pair(rng)
        nb = measures.nonbilocal(a, c, _config(seed + i)).value
        rep.add(nb, nonbilocal=nb)
    return rep


def suite_local_unitary(trials, seed, frames=5):
    """Measure drift under random local unitaries on all four subsystems."""
    rep = SuiteReport("local-unitary", seed, tolerance=1e-7)
    rng = np.random.default_rng(seed)
    for i in range(trials):
        if i % 2:
            a = bell_diagonal(rng.dirichlet(np.ones(4)))
            c = bell_diagonal(rng.dirichlet(np.ones(4)))
        else:
            a = random_density(4, None, rng, dims=(2, 2))
            c = random_density(4, None, rng, dims=(2, 2))
        cfg = _config(seed + i)
        ref = measures.nonbilocal(a, c, cfg).value
        drift = 0.0
        for _ in range(frames):
            ua = local_unitary(a, [haar_unitary(2, rng), haar_unitary(2, rng)])
            uc = local_unitary(c, [haar_unitary(2, rng), haar_unitary(2, rng)])
            drift = max(drift, abs(measures.nonbilocal(ua, uc, cfg).value - ref))
        rep.add(drift, nonbilocal=ref, kind="bell-diagonal" if i % 2 else "generic")
    return rep


def suite_superactivation(trials, seed):
    """Search for pairs with zero fidelity MIN on each factor but a positive joint measure.

    Candidates are classical-quantum pairs whose classical marginals are
    nondegenerate but whose product spectrum is degenerate.  Every such
    pair is separable, so a positive value is also a positive measure
    without entanglement in either input.
    """
    rep = SuiteReport("superactivation-search", seed, asserting=False)
    rng = np.random.default_rng(seed)
    best = None
    for i in range(trials):
        a, c = random_cq_pair(rng, degenerate=True)
        cfg = _config(seed + i)
        fa = measures.f_min(a, 1, cfg).value
        fc = measures.f_min(c, 0, cfg).value
        nb = measures.nonbilocal(a, c, cfg).value
        nbp = measures.nonbilocal(a, c, cfg, feasible_set="product").value
        found = fa <= 1e-9 and fc <= 1e-9 and nb > 1e-6
        rep.trials.append({"trial": i, "passed": True, "violation": 0.0, "f_min_ab": fa,
                           "f_min_cd": fc, "nonbilocal": nb, "nonbilocal_product": nbp,
                           "superactivated": found})
        if found and (best is None or nb > best["nonbilocal"]):
            best = {"trial": i, "nonbilocal": nb,
                    "marginal_b_spectrum": partial_trace(a, (1,)).eigenvalues().tolist(),
                    "marginal_c_spectrum": partial_trace(c, (0,)).eigenvalues().tolist()}
    hits = sum(t["superactivated"] for t in rep.trials)
    rep.findings = {"superactivated": hits, "searched": trials, "best": best,
                    "separable_positive": hits}
    return rep


SUITES = {
    "pure-closed-form": suite_pure_closed_form,
    "ordering": suite_ordering,
    "bounds": suite_bounds,
    "ancilla": suite_ancilla,
    "cq-zero": suite_cq_zero,
    "local-unitary": suite_local_unitary,
    "superactivation-search": suite_superactivation,
}


def run_suite(name, trials, seed):
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return SUITES[name](trials, seed)
