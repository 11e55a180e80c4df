"""Solving and certifying the real-quantum relaxation of the swap functional.

Two formulations of the same relaxation are available:

* ``"full"``: the projector-word moment matrices of :mod:`realnet.npo`, one
  block per Bob outcome, with the partial-transpose condition as equalities;
* ``"reduced"``: the symmetry-reduced problem of :mod:`realnet.reduced`, one
  block and a few hundred variables at level (2, 2).

The reduced problem is solved with the in-house interior-point method. Its dual
point is then lifted to the full problem and certified there as well, so the
reported bound does not rest on the symmetry argument alone. The full problem
goes through the interior-point method when its dense Schur complement fits the
memory budget and through SCS otherwise.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import npo, reduced
from .bellfunc import QUANTUM_MAX
from .netsim import correlations, ideal_strategy
from .qcore import DenseMatrix
from .sdp.certify import Certificate, certificate, infeasibility_certificate
from .sdp.problem import SdpProblem
from .sdp.solver import INFEASIBLE, SdpSolution, SolverOptions, solve

# dense Schur complement of the equality-reduced problem, in doubles
IPM_MEMORY_LIMIT = 1.5e9
FORMULATIONS = ("auto", "reduced", "full")


@dataclass
class BoundReport:
    level: tuple[int, int]
    formulation: str
    method: str
    status: str
    primal_value: float
    dual_value: float
    certified_bound: float | None
    certificate: dict | None
    full_certificate: dict | None
    iterations: int
    wall_time: float
    problem: dict
    info: dict = field(default_factory=dict)

    @property
    def bounds(self) -> list[float]:
        """Every certified bound obtained (reduced and lifted, or full)."""
        out = [] if self.certified_bound is None else [self.certified_bound]
        if self.full_certificate is not None:
            out.append(self.full_certificate["bound"])
        return out

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["bounds"] = self.bounds
        return d


def relaxation(level: tuple[int, int], ppt: str = "exact", fixed=None) -> SdpProblem:
    return npo.assemble(npo.build_structure(*level), ppt=ppt, fixed=fixed)


def choose_method(p: SdpProblem) -> str:
    """``"ipm"`` when the reduced Schur complement fits the memory budget, else ``"scs"``."""
    n_free = p.n_vars - p.n_eq  # upper estimate of the reduced dimension
    return "ipm" if 8.0 * n_free ** 2 <= IPM_MEMORY_LIMIT else "scs"


def solve_problem(p: SdpProblem, method: str = "auto", gap_tol: float = 1e-8,
                  feas_tol: float = 1e-8, max_iter: int = 100, eps: float = 1e-7,
                  max_iters_scs: int = 200_000, time_limit: float | None = None,
                  verbose: bool = False):
    if method == "auto":
        method = choose_method(p)
    if method == "ipm":
        opts = SolverOptions(gap_tol=gap_tol, feas_tol=feas_tol, max_iter=max_iter, verbose=verbose)
        return method, solve(p, opts)
    if method == "scs":
        from .sdp.external import solve_scs

        return method, solve_scs(p, eps=eps, max_iters=max_iters_scs, time_limit=time_limit,
                                 verbose=verbose)
    raise ValueError(f"unknown method {method!r}")


def _formulation(formulation: str) -> str:
    if formulation not in FORMULATIONS:
        raise ValueError(f"unknown formulation {formulation!r}")
    return "reduced" if formulation == "auto" else formulation


def lifted_solution(rs: reduced.ReducedStructure, sol: SdpSolution) -> SdpSolution:
    """Dual blocks of a reduced solution carried to the full problem (no primal part)."""
    blocks = reduced.lift_dual(rs, [b.data.real for b in sol.dual_blocks])
    return SdpSolution(sol.status, math.nan, math.nan, [], [DenseMatrix(b) for b in blocks],
                       sol.iterations, math.nan, solver=sol.solver + "+lift")


def solve_relaxation(level: tuple[int, int] = (1, 1), method: str = "auto",
                     formulation: str = "auto", lift: bool = True, **kw) -> BoundReport:
    """Upper bound on the swap functional over real strategies at ``level``."""
    t0 = time.time()
    formulation = _formulation(formulation)
    full_cert = None
    if formulation == "reduced":
        rs = reduced.build_reduced(*level)
        p = reduced.assemble_reduced(rs)
        method, sol = solve_problem(p, "ipm" if method == "auto" else method, **kw)
        if lift and sol.status != INFEASIBLE and sol.dual_blocks:
            full_cert = certificate(relaxation(level), lifted_solution(rs, sol)).to_dict()
    else:
        p = relaxation(level)
        method, sol = solve_problem(p, method, **kw)
    cert: Certificate | None = None
    if sol.status != INFEASIBLE and sol.dual_blocks:
        cert = certificate(p, sol)
    return BoundReport(tuple(level), formulation, method, sol.status, sol.primal_value,
                       sol.dual_value, None if cert is None else cert.bound,
                       None if cert is None else cert.to_dict(), full_cert,
                       sol.iterations, time.time() - t0, p.summary(), dict(sol.info))


@dataclass
class SeparationReport:
    """Ideal tensor fixed: infeasible with the PPT condition, feasible without it.

    ``min_eig_bound`` is a certified upper bound on the largest ``lam`` with
    ``Gamma_0 - lam I >= 0`` (reduced formulation); a negative value proves that no
    moment matrix reproduces the tensor. ``full_ray`` is the lifted Farkas ray
    checked on the full problem.
    """

    level: tuple[int, int]
    formulation: str
    min_eig_bound: float | None
    min_eig_primal: float | None
    full_ray: dict | None
    exact_status: str | None
    min_ppt_slack_lower: float | None
    no_ppt_min_eig: float | None
    without_ppt_residual: float
    without_ppt_objective: float
    wall_time: float

    @property
    def infeasible_with_ppt(self) -> bool:
        if self.min_eig_bound is not None and self.min_eig_bound < 0:
            return True
        if self.full_ray and self.full_ray.get("valid"):
            return True
        return self.min_ppt_slack_lower is not None and self.min_ppt_slack_lower > 0

    def feasible_without_ppt(self, tol: float = 1e-9) -> bool:
        return self.without_ppt_residual <= tol

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["infeasible_with_ppt"] = self.infeasible_with_ppt
        d["feasible_without_ppt"] = self.feasible_without_ppt()
        return d


def without_ppt_point(level: tuple[int, int]) -> tuple[float, float]:
    """Max residual and objective of the ideal strategy's real-part moments, PPT dropped."""
    st = npo.build_structure(*level)
    s = ideal_strategy()
    p = npo.assemble(st, ppt="none", fixed=correlations(s))
    y = npo.strategy_point(st, s)
    res = p.residuals(y)
    worst = max(float(res["eq_residual"]), float(-res["min_eig"]), 0.0)
    return worst, float(p.objective @ y)


def _min_eig(level, ppt: bool, pbar, lift: bool, **kw):
    rs = reduced.build_reduced(*level, ppt=ppt)
    p = reduced.assemble_reduced(rs, fixed=pbar, min_eig=True)
    _, sol = solve_problem(p, "ipm", **kw)
    bound = certificate(p, sol).bound if sol.dual_blocks else None
    ray = None
    if lift and bound is not None and bound < 0:
        # <W, Gamma_0(y)> <= bound < 0 for every y: a Farkas ray once lam is dropped
        ws = reduced.lift_dual(rs, [b.data.real for b in sol.dual_blocks[:2]])
        ray = infeasibility_certificate(relaxation(level, "exact", pbar), ws, None).to_dict()
    return sol.primal_value, bound, ray


def separation_checks(level: tuple[int, int] = (2, 2), method: str = "auto",
                      formulation: str = "auto", eps: float = 1e-8, slack: bool = True,
                      lift: bool = True, no_ppt: bool = True, **kw) -> SeparationReport:
    """With ``P`` fixed to the ideal tensor: infeasible with PPT, feasible without it."""
    t0 = time.time()
    formulation = _formulation(formulation)
    pbar = correlations(ideal_strategy())
    lam_primal = lam_bound = ray = status = lower = no_ppt_lam = None
    if formulation == "reduced":
        lam_primal, lam_bound, ray = _min_eig(level, True, pbar, lift, **kw)
        if no_ppt:
            no_ppt_lam = _min_eig(level, False, pbar, False, **kw)[0]
    else:
        p = relaxation(level, "exact", pbar)
        _, sol = solve_problem(p, method, eps=eps, **kw)
        status = sol.status
        if sol.status == INFEASIBLE and sol.dual_blocks:
            ws = [np.asarray(w.data.real) for w in sol.dual_blocks]
            ray = infeasibility_certificate(p, ws, sol.eq_dual).to_dict()
        if slack:
            ps = relaxation(level, "slack", pbar)
            _, ss = solve_problem(ps, method, eps=eps, **kw)
            if ss.status != INFEASIBLE and ss.dual_blocks:
                # max -s <= bound, hence s >= -bound on the whole feasible set
                lower = -certificate(ps, ss).bound
    worst, obj = without_ppt_point(level)
    return SeparationReport(tuple(level), formulation, lam_bound, lam_primal, ray, status, lower,
                            no_ppt_lam, worst, obj, time.time() - t0)


def ideal_value_gap(value: float) -> float:
    return QUANTUM_MAX - value


def finite(x) -> bool:
    return x is not None and math.isfinite(x)
