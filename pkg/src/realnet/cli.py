"""Command-line front end: ``realnet {ideal,bound,selftest,realsim,epsilon}``.

Every command builds a :class:`RunReport`. Numbers are printed with nine
significant digits next to the tolerance they were checked against, and the
exit code is 0 exactly when every check passed. ``--json PATH`` writes the full
report (``-`` for stdout).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__

# standard error of the sampled functional per round at the ideal point
SAMPLE_SIGMA_1M = 0.0104
SAMPLE_SIGMAS = 5.0


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.9g}"
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def content_hash(payload: dict) -> str:
    """git-style blob hash of the canonical JSON encoding of ``payload``."""
    data = json.dumps(_jsonable(payload), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


@dataclass
class Check:
    name: str
    value: float
    target: str
    tolerance: float
    passed: bool
    kind: str = "exact"

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        if not math.isfinite(self.value):
            return f"[{flag}] {self.name}: {self.target}"
        return f"[{flag}] {self.name}: {fmt(self.value)} ({self.target}, tol {fmt(self.tolerance)}, {self.kind})"


@dataclass
class RunReport:
    command: str
    parameters: dict
    input_hash: str = ""
    results: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    wall_time: float = 0.0
    version: str = __version__

    def __post_init__(self):
        if not self.input_hash:
            self.input_hash = content_hash({"command": self.command, "parameters": self.parameters,
                                            "version": self.version})

    def check_close(self, name: str, value: float, target: float, tol: float, kind: str = "exact"):
        ok = math.isfinite(value) and abs(value - target) <= tol
        self.checks.append(Check(name, float(value), f"target {fmt(target)}", tol, ok, kind))

    def check_range(self, name: str, value: float | None, lo: float, hi: float, tol: float = 0.0):
        v = math.nan if value is None else float(value)
        ok = math.isfinite(v) and lo - tol <= v <= hi + tol
        self.checks.append(Check(name, v, f"in [{fmt(lo)}, {fmt(hi)}]", tol, ok))

    def check_true(self, name: str, ok: bool, value: float = math.nan, tol: float = 0.0,
                   target: str = "true"):
        self.checks.append(Check(name, float(value), target, tol, bool(ok)))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def tolerances(self) -> dict:
        return {c.name: c.tolerance for c in self.checks}

    def to_dict(self) -> dict:
        return _jsonable({
            "command": self.command,
            "parameters": self.parameters,
            "input_hash": self.input_hash,
            "version": self.version,
            "results": self.results,
            "checks": [c.__dict__ for c in self.checks],
            "tolerances": self.tolerances,
            "passed": self.passed,
            "wall_time": self.wall_time,
        })

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def render(self) -> str:
        lines = [f"realnet {self.command}  (input {self.input_hash[:12]})"]
        lines += ["  " + c.line() for c in self.checks]
        lines.append(f"  {'all checks passed' if self.passed else 'CHECKS FAILED'}; "
                     f"wall time {self.wall_time:.3g} s")
        return "\n".join(lines)


REPORT_KEYS = {"command", "parameters", "input_hash", "version", "results", "checks",
               "tolerances", "passed", "wall_time"}
CHECK_KEYS = {"name", "value", "target", "tolerance", "passed", "kind"}


def validate_report(payload: dict) -> list[str]:
    """Schema check for a serialized report; returns a list of problems."""
    bad = []
    missing = REPORT_KEYS - payload.keys()
    if missing:
        bad.append(f"missing keys {sorted(missing)}")
    for i, c in enumerate(payload.get("checks", [])):
        if set(c) != CHECK_KEYS:
            bad.append(f"check {i} has keys {sorted(c)}")
        elif not isinstance(c["tolerance"], (int, float)):
            bad.append(f"check {i} has no numeric tolerance")
    if "passed" in payload and "checks" in payload:
        if payload["passed"] != all(c.get("passed") for c in payload["checks"]):
            bad.append("passed flag disagrees with checks")
    return bad


# ---------------------------------------------------------------------------
# commands


def cmd_ideal(visibility: float = 1.0, sample: int | None = None, seed: int = 0) -> RunReport:
    from .bellfunc import QUANTUM_MAX, t_total
    from .netsim import apply_white_noise, correlations, ideal_strategy
    from .netsim import sample as draw

    rep = RunReport("ideal", {"visibility": visibility, "sample": sample, "seed": seed})
    s = ideal_strategy()
    if visibility != 1.0:
        s = apply_white_noise(s, visibility)
    t = correlations(s)
    score = t_total(t)
    expected = QUANTUM_MAX * visibility ** 2
    rep.results["tensor"] = t.to_dict()
    rep.results["score"] = score.to_dict()
    rep.results["expected_total"] = expected
    rep.check_close("T total", score.total, expected, 1e-9)
    for b in range(4):
        rep.check_close(f"P(b={b:02b})", score.p_b[b], 0.25, 1e-12)
        rep.check_close(f"T_b(b={b:02b})", score.per_b[b], expected / 4, 1e-9)
    if sample:
        rec = draw(t, sample, seed)
        emp = t_total(rec.empirical)
        tol = SAMPLE_SIGMAS * SAMPLE_SIGMA_1M * math.sqrt(1e6 / sample)
        rep.results["empirical_score"] = emp.to_dict()
        rep.results["setting_counts"] = rec.setting_counts
        rep.check_close("empirical T total", emp.total, expected, tol, kind="statistical")
    return rep


def cmd_bound(level: int | tuple[int, int] = 1, export: str | None = None, method: str = "auto",
              gap_tol: float = 1e-8, feas_tol: float = 1e-8, max_iter: int = 100,
              eps: float = 1e-7, time_limit: float | None = None, verbose: bool = False,
              formulation: str = "auto", separation: bool = False) -> RunReport:
    from . import bound
    from .bellfunc import QUANTUM_MAX, REAL_BOUND
    from .sdp.sdpa import export_sdpa

    lv = (level, level) if isinstance(level, int) else tuple(level)
    rep = RunReport("bound", {"level": list(lv), "export": export, "method": method,
                              "formulation": formulation, "gap_tol": gap_tol,
                              "feas_tol": feas_tol, "max_iter": max_iter, "eps": eps,
                              "separation": separation})
    if export:
        if formulation == "reduced":
            from . import reduced

            p = reduced.assemble_reduced(reduced.build_reduced(*lv))
        else:
            p = bound.relaxation(lv)
        export_sdpa(p, export)
        rep.results["exported"] = {"path": export, **p.summary()}
        rep.check_true("export written", os.path.exists(export))
        return rep
    r = bound.solve_relaxation(lv, method, formulation, gap_tol=gap_tol, feas_tol=feas_tol,
                               max_iter=max_iter, eps=eps, time_limit=time_limit, verbose=verbose)
    rep.results["bound"] = r.to_dict()
    rep.check_true("solver status optimal", r.status == "optimal", target=r.status)
    lo, hi = (7.659, 7.661) if min(lv) >= 2 else (REAL_BOUND, 8.485282)
    rep.check_range("certified bound", r.certified_bound, lo, hi)
    if r.full_certificate is not None:
        rep.check_range("certified bound, lifted to the full problem",
                        r.full_certificate["bound"], lo, hi)
    rep.results["quantum_value"] = QUANTUM_MAX
    if separation:
        sep = bound.separation_checks(lv, method, formulation, gap_tol=gap_tol, feas_tol=feas_tol,
                                      max_iter=max_iter)
        rep.results["separation"] = sep.to_dict()
        rep.check_true("ideal tensor infeasible with PPT", sep.infeasible_with_ppt,
                       target=sep.min_eig_bound)
        rep.check_close("ideal point residual without PPT", sep.without_ppt_residual, 0.0, 1e-9)
        rep.check_close("ideal point objective without PPT", sep.without_ppt_objective,
                        QUANTUM_MAX, 1e-4)
    return rep


def cmd_selftest(n_real: int = 3, seed: int = 0) -> RunReport:
    from . import qcore, selftest
    from .netsim import Strategy, bell_projectors

    rep = RunReport("selftest", {"n_real": n_real, "seed": seed})
    out = selftest.extraction(route="embedded")
    for b in range(4):
        d = qcore.trace_distance(out.per_b_state[b], selftest.perfect_state(b))
        rep.check_close(f"extracted state b={b:02b}", d, 0.0, 1e-9)
    d = qcore.trace_distance(out.summed_state, selftest.summed_perfect_state())
    rep.check_close("summed extracted state", d, 0.0, 1e-9)
    for b in range(4):
        r1, r2 = selftest.verify_sos(b)
        rep.check_close(f"SOS residuals b={b:02b}", max(r1, r2), 0.0, 1e-9)
    rel = selftest.operator_relations()
    rep.check_close("ideal operator relations", max(rel.values()), 0.0, 1e-9)
    ideal = selftest.ppt_distance_report(out.summed_state)
    rep.results["ppt_distance_ideal"] = ideal.to_dict()
    rep.check_close("PPT distance, ideal", ideal.value, 1.0, 1e-6)
    rng = np.random.default_rng(seed)
    real = []
    for _ in range(n_real):
        s = Strategy(qcore.random_density(4, rng, real=True), qcore.random_density(4, rng, real=True),
                     [qcore.random_involution(2, rng, real=True) for _ in range(3)],
                     bell_projectors(),
                     [qcore.random_involution(2, rng, real=True) for _ in range(6)])
        real.append(selftest.ppt_set_distance(selftest.extraction(s).summed_state))
    rep.results["ppt_distance_real"] = real
    rep.check_close("PPT distance, real strategies (max)", max(real, default=0.0), 0.0, 1e-8)
    rep.results["extraction_route"] = out.route
    return rep


def cmd_realsim(random_trials: int = 100, seed: int = 1) -> RunReport:
    from . import realsim

    rep = RunReport("realsim", {"random_trials": random_trials, "seed": seed})
    tr = realsim.random_trials(random_trials, seed)
    rep.results["random_trials"] = tr
    rep.check_close("single-site deviation", tr["single_max_deviation"], 0.0, 1e-12)
    rep.check_close("bipartite deviation", tr["bipartite_max_deviation"], 0.0, 1e-12)
    rep.check_true("embedding invariants", not tr["violations"], value=len(tr["violations"]),
                   target="no violations")
    ch = realsim.chsh3_embedding_report()
    rep.results["chsh3"] = ch
    rep.check_close("embedded CHSH3 value", ch["real_value"], 6 * math.sqrt(2), 1e-9)
    sim = realsim.simulate_independent_preparations(*realsim.pbr_scenario())
    rep.results["independent_preparations_deviation"] = sim.max_deviation
    rep.check_close("independent preparations", sim.max_deviation, 0.0, 1e-12)
    neg = realsim.swap_negative_control()
    rep.results["negative_control"] = [
        {"mapping": n.mapping, "bob_real": n.bob_real, "bob_complete": n.bob_complete,
         "max_stat_deviation": n.max_stat_deviation, "t_value": n.t_value} for n in neg]
    rep.check_true("swap transplant fails", not any(n.valid_simulation for n in neg),
                   target="no valid real swap simulation")
    return rep


def cmd_epsilon(angles: tuple[float, ...] = (1e-3,)) -> RunReport:
    from . import selftest

    rep = RunReport("epsilon", {"angles": list(angles)})
    eps_c = selftest.critical_epsilon()
    rep.results["critical_epsilon"] = eps_c
    rep.results["budget_at_critical"] = selftest.epsilon_budget(eps_c).to_dict()
    rep.check_close("critical epsilon", eps_c, 7.18e-5, 0.02 * 7.18e-5)
    checks = []
    for a in angles:
        for c in selftest.approximate_extraction_check(selftest.perturbed_strategy(a)):
            checks.append({"angle": a, **c.to_dict()})
    rep.results["extraction_checks"] = checks
    rep.check_true("extraction-distance and operator-norm inequalities", all(c["passed"] for c in checks),
                   value=len(checks), target="all pass")
    return rep


# ---------------------------------------------------------------------------


def _apply_threads() -> None:
    threads = os.environ.get("REALNET_MAX_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def _level(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) == 1:
        return int(parts[0]), int(parts[0])
    if len(parts) == 2:
        return int(parts[0]), int(parts[1])
    raise argparse.ArgumentTypeError("level is K or nA,nC")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="realnet", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", metavar="PATH", help="write the report as JSON ('-' for stdout)")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("ideal", help="ideal strategy, tensor and score")
    common(p)
    p.add_argument("--visibility", type=float, default=1.0)
    p.add_argument("--sample", type=int, default=None, metavar="N")

    p = sub.add_parser("bound", help="solve or export the real-quantum relaxation")
    common(p)
    p.add_argument("--level", type=_level, default=(1, 1), metavar="K")
    p.add_argument("--export", metavar="PATH", help="write SDPA file and skip the solve")
    p.add_argument("--method", choices=("auto", "ipm", "scs"), default="auto")
    p.add_argument("--formulation", choices=("auto", "reduced", "full"), default="auto",
                   help="symmetry-reduced problem (default) or the full per-outcome blocks")
    p.add_argument("--separation", action="store_true",
                   help="also check that the ideal tensor is infeasible with PPT")
    p.add_argument("--gap-tol", type=float, default=1e-8)
    p.add_argument("--feas-tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--eps", type=float, default=1e-7, help="SCS accuracy")
    p.add_argument("--time-limit", type=float, default=None, help="SCS time limit in seconds")
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("selftest", help="isometry extraction, SOS and PPT-distance checks")
    common(p)
    p.add_argument("--real-strategies", type=int, default=3)

    p = sub.add_parser("realsim", help="real embeddings and the swap negative control")
    common(p)
    p.add_argument("--random-trials", type=int, default=100)

    p = sub.add_parser("epsilon", help="critical noise constant and robustness inequalities")
    common(p)
    p.add_argument("--angles", type=float, nargs="+", default=[1e-3])
    return ap


COMMANDS: dict[str, Callable[[argparse.Namespace], RunReport]] = {
    "ideal": lambda a: cmd_ideal(a.visibility, a.sample, 0 if a.seed is None else a.seed),
    "bound": lambda a: cmd_bound(a.level, a.export, a.method, a.gap_tol, a.feas_tol, a.max_iter,
                                 a.eps, a.time_limit, a.verbose, a.formulation, a.separation),
    "selftest": lambda a: cmd_selftest(a.real_strategies, 0 if a.seed is None else a.seed),
    "realsim": lambda a: cmd_realsim(a.random_trials, 1 if a.seed is None else a.seed),
    "epsilon": lambda a: cmd_epsilon(tuple(a.angles)),
}


def main(argv: list[str] | None = None) -> int:
    _apply_threads()
    args = build_parser().parse_args(argv)
    t0 = time.time()
    try:
        rep = COMMANDS[args.command](args)
    except Exception as exc:  # surfaced as a failed report, not a traceback
        rep = RunReport(args.command, {k: v for k, v in vars(args).items() if k != "command"})
        rep.results["error"] = f"{type(exc).__name__}: {exc}"
        rep.check_true("command completed", False, target=str(exc))
    rep.wall_time = time.time() - t0
    if args.json == "-":
        print(rep.to_json(indent=2))
    else:
        print(rep.render())
        if args.json:
            with open(args.json, "w") as fh:
                fh.write(rep.to_json(indent=2))
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
