from __future__ import annotations

import io
import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from realnet.sdp import Block, SdpProblem
from realnet.sdp.certify import (CertificateError, certificate, certify_upper_bound,
                                 infeasibility_certificate)
from realnet.sdp.external import solve_scs
from realnet.sdp.sdpa import SdpaFormatError, dumps_sdpa, export_sdpa, import_sdpa, loads_sdpa
from realnet.sdp.solver import FAILURE, INFEASIBLE, OPTIMAL, SolverOptions, solve


def block(name, kind, mats):
    """Block from dense matrices ``[F0, F1, ...]`` (None for a zero matrix)."""
    size = next(m for m in mats if m is not None).shape[0]
    var, row, col, val = [], [], [], []
    for k, m in enumerate(mats):
        if m is None:
            continue
        iu, ju = np.triu_indices(size)
        for i, j in zip(iu, ju):
            if m[i, j] != 0 and (kind == "psd" or i == j):
                var.append(k - 1)
                row.append(i)
                col.append(j)
                val.append(m[i, j])
    return Block(name, size, kind, var, row, col, val)


def problem(c, blocks, a=None, b=None, var_bound=None):
    n = len(c)
    a = sp.csr_matrix((0, n)) if a is None else sp.csr_matrix(np.atleast_2d(a))
    b = np.zeros(0) if b is None else np.atleast_1d(np.asarray(b, dtype=float))
    meta = {} if var_bound is None else {"var_bound": var_bound}
    return SdpProblem(n, np.asarray(c, dtype=float), blocks, a, b, metadata=meta).validate()


def sym_basis(n):
    """Symmetric unit matrices E_ij + E_ji (i < j) and E_ii, upper-triangle order."""
    out = []
    for i, j in zip(*np.triu_indices(n)):
        e = np.zeros((n, n))
        e[i, j] = e[j, i] = 1.0
        out.append(e)
    return out


def trace_max(n=3):
    # max tr X s.t. 0 <= X <= I
    basis = sym_basis(n)
    c = [np.trace(e) for e in basis]
    return problem(c, [block("X", "psd", [None] + basis),
                       block("I-X", "psd", [np.eye(n)] + [-e for e in basis])], var_bound=1.0)


def lp():
    return problem([1, 1], [block("y", "diag", [None, np.diag([1.0, 0, 0]), np.diag([0, 1.0, 0])]),
                            block("cap", "diag", [np.eye(1), -np.eye(1), -np.eye(1)])], var_bound=1.0)


def min_eig(a):
    n = a.shape[0]
    return problem([1.0], [block("A-tI", "psd", [a, -np.eye(n)])])


def max_eig(a):
    basis = sym_basis(a.shape[0])
    c = [np.sum(a * e) for e in basis]
    tr = [np.trace(e) for e in basis]
    return problem(c, [block("X", "psd", [None] + basis)], a=tr, b=1.0, var_bound=1.0)


def trace_norm(a):
    n = a.shape[0]
    basis = sym_basis(n)
    c = [np.sum(a * e) for e in basis]
    return problem(c, [block("I-X", "psd", [np.eye(n)] + [-e for e in basis]),
                       block("I+X", "psd", [np.eye(n)] + basis)], var_bound=1.0)


def chsh_level_one():
    # rows 1, A0, A1, B0, B1; unit diagonal; variables: the 10 off-diagonal entries
    n = 5
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mats = [np.eye(n)]
    for i, j in pairs:
        e = np.zeros((n, n))
        e[i, j] = e[j, i] = 1.0
        mats.append(e)
    coef = {(1, 3): 1, (1, 4): 1, (2, 3): 1, (2, 4): -1}
    c = [coef.get(p, 0) for p in pairs]
    return problem(c, [block("G", "psd", mats)], var_bound=1.0)


def maxcut_triangle():
    # max sum_edges (1 - X_ij) / 2 with diag(X) = 1; variables X01, X02, X12
    mats = [np.eye(3)]
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        e = np.zeros((3, 3))
        e[i, j] = e[j, i] = 1.0
        mats.append(e)
    p = problem([-0.5] * 3, [block("X", "psd", mats)], var_bound=1.0)
    return p, 1.5  # objective constant sum_edges 1/2


def theta_c5():
    # Lovasz theta: max <J, X>, tr X = 1, X_ij = 0 on edges of the 5-cycle
    n = 5
    basis = sym_basis(n)
    keys = list(zip(*np.triu_indices(n)))
    edges = {(i, (i + 1) % n) for i in range(n)}
    edges = {(min(e), max(e)) for e in edges}
    c = [np.sum(e) for e in basis]
    rows = [[np.trace(e) for e in basis]] + [[1.0 if k == edge else 0.0 for k in keys] for edge in sorted(edges)]
    return problem(c, [block("X", "psd", [None] + basis)], a=rows, b=[1.0] + [0.0] * 5, var_bound=1.0)


def two_blocks():
    # max y s.t. [[1, y], [y, 1]] >= 0 and 1/2 - y >= 0
    return problem([1.0], [block("G", "psd", [np.eye(2), np.array([[0, 1.0], [1.0, 0]])]),
                           block("cap", "diag", [np.eye(1) * 0.5, -np.eye(1)])], var_bound=1.0)


def redundant_equalities():
    # max x1 + x2 with x1 = x2 stated twice (once scaled) and |x1| <= 1 via a 2x2 block
    g = np.array([[0, 1.0], [1.0, 0]])
    return problem([1.0, 1.0], [block("G", "psd", [np.eye(2), g, None])],
                   a=[[1.0, -1.0], [2.0, -2.0]], b=[0.0, 0.0], var_bound=1.0)


RNG = np.random.default_rng(42)
_M = RNG.standard_normal((4, 4))
SYM = _M + _M.T

# (name, problem, objective constant, analytic optimum)
SUITE = [
    ("trace_max", trace_max(), 0.0, 3.0),
    ("lp", lp(), 0.0, 1.0),
    ("min_eig", min_eig(SYM), 0.0, float(np.linalg.eigvalsh(SYM)[0])),
    ("max_eig", max_eig(SYM), 0.0, float(np.linalg.eigvalsh(SYM)[-1])),
    ("trace_norm", trace_norm(SYM), 0.0, float(np.abs(np.linalg.eigvalsh(SYM)).sum())),
    ("chsh", chsh_level_one(), 0.0, 2 * np.sqrt(2)),
    ("maxcut_triangle", maxcut_triangle()[0], maxcut_triangle()[1], 9 / 4),
    ("theta_c5", theta_c5(), 0.0, np.sqrt(5)),
    ("two_blocks", two_blocks(), 0.0, 0.5),
    ("redundant_equalities", redundant_equalities(), 0.0, 2.0),
]
IDS = [s[0] for s in SUITE]


class TestRegressionSuite:
    @pytest.mark.parametrize("name,p,const,opt", SUITE, ids=IDS)
    def test_optimum(self, name, p, const, opt):
        sol = solve(p, gap_tol=1e-9)
        assert sol.status == OPTIMAL
        assert sol.primal_value + const == pytest.approx(opt, abs=1e-7)
        assert sol.duality_gap <= 1e-9 * max(1.0, abs(sol.primal_value)) + 1e-12 or \
            abs(sol.dual_value - sol.primal_value) <= 1e-7
        for m in sol.primal_blocks + sol.dual_blocks:
            assert np.linalg.eigvalsh(np.atleast_2d(m.data.real))[0] >= -1e-8

    @pytest.mark.parametrize("name,p,const,opt", SUITE, ids=IDS)
    def test_weak_duality(self, name, p, const, opt):
        sol = solve(p, gap_tol=1e-9)
        cert = certificate(p, sol, var_bound=p.metadata.get("var_bound", 10.0))
        assert cert.bound >= sol.primal_value - 1e-9
        assert cert.bound + const == pytest.approx(opt, abs=1e-6)

    @pytest.mark.parametrize("name,p,const,opt", [s for s in SUITE if s[1].n_eq], ids=lambda v: v if isinstance(v, str) else "")
    def test_row_scaling_invariance(self, name, p, const, opt):
        scale = np.geomspace(1e-3, 1e3, p.n_eq)
        a = solve(p, gap_tol=1e-9).primal_value
        b = solve(p.scaled_equalities(scale), gap_tol=1e-9).primal_value
        assert a == pytest.approx(b, abs=1e-7)


class TestStatuses:
    def test_infeasible(self):
        # y >= 1 and y <= 0
        p = problem([1.0], [block("lo", "diag", [-np.eye(1), np.eye(1)]),
                            block("hi", "diag", [None, -np.eye(1)])], var_bound=2.0)
        sol = solve(p)
        assert sol.status == INFEASIBLE
        with pytest.raises(CertificateError):
            certificate(p, sol)

    def test_inconsistent_equalities(self):
        p = problem([1.0], [block("cap", "diag", [np.eye(1), -np.eye(1)])], a=[[1.0], [1.0]], b=[0.0, 1.0])
        assert solve(p).status == INFEASIBLE

    def test_iteration_cap(self):
        sol = solve(theta_c5(), max_iter=2)
        assert sol.status == FAILURE
        assert sol.y is not None

    def test_options_object(self):
        sol = solve(trace_max(), SolverOptions(gap_tol=1e-6))
        assert sol.primal_value == pytest.approx(3.0, abs=1e-5)


class TestCertificate:
    def test_toy(self):
        p = trace_max()
        assert certify_upper_bound(p, solve(p, gap_tol=1e-10)) == pytest.approx(3.0, abs=1e-7)

    def test_no_bound_needs_small_residual(self):
        p = min_eig(SYM)
        sol = solve(p, gap_tol=1e-9)
        cert = certificate(p, sol)
        assert cert.var_bound is None and cert.correction == 0.0

    def test_perturbed_dual_still_valid(self):
        # a slightly wrong dual point costs only |r|_1 * var_bound
        p = chsh_level_one()
        sol = solve(p, gap_tol=1e-9)
        w = sol.dual_blocks[0].data.real + 1e-4 * np.eye(5)
        sol.dual_blocks[0] = type(sol.dual_blocks[0])(w)
        cert = certificate(p, sol, refine=False)
        assert cert.bound >= 2 * np.sqrt(2) - 1e-9
        assert cert.residual_l1 > 0

    def test_infeasibility_ray(self):
        p = problem([1.0], [block("lo", "diag", [-np.eye(1), np.eye(1)]),
                            block("hi", "diag", [None, -np.eye(1)])], var_bound=2.0)
        # W_lo = W_hi = 1: F^*(W) = 1 - 1 = 0 and <W, F0> = -1
        ray = infeasibility_certificate(p, [np.eye(1), np.eye(1)], np.zeros(0))
        assert ray.valid and ray.margin == pytest.approx(1.0)
        bad = infeasibility_certificate(p, [np.eye(1), np.zeros((1, 1))], np.zeros(0))
        assert not bad.valid

    def test_ray_least_squares_multipliers(self):
        # y1 = y2 as an equality; lo: y1 >= 1, hi: y2 <= 0
        p = problem([0.0, 0.0], [block("lo", "diag", [-np.eye(1), np.eye(1), None]),
                                 block("hi", "diag", [None, None, -np.eye(1)])],
                    a=[[1.0, -1.0]], b=[0.0], var_bound=2.0)
        assert infeasibility_certificate(p, [np.eye(1), np.eye(1)], None).valid


class TestSdpa:
    @pytest.mark.parametrize("name,p,const,opt", SUITE, ids=IDS)
    def test_round_trip_bytes(self, name, p, const, opt):
        text = dumps_sdpa(p)
        assert dumps_sdpa(loads_sdpa(text)) == text

    @pytest.mark.parametrize("name,p,const,opt", SUITE, ids=IDS)
    def test_round_trip_optimum(self, name, p, const, opt):
        back = loads_sdpa(dumps_sdpa(p))
        assert back.n_eq == p.n_eq
        assert solve(back, gap_tol=1e-10).primal_value == pytest.approx(
            solve(p, gap_tol=1e-10).primal_value, abs=1e-9)

    def test_layout(self):
        lines = dumps_sdpa(two_blocks()).splitlines()
        assert lines[:4] == ["1", "2", "2 -1", "-1.0"]
        # the constant term of the 2x2 block: F0 = I, written negated
        assert "0 1 1 1 -1.0" in lines
        for ln in lines[4:]:
            k, b, i, j, _ = ln.split()
            assert int(i) <= int(j)

    def test_equalities_as_pairs(self):
        p = theta_c5()
        lines = dumps_sdpa(p).splitlines()
        assert lines[2].split()[-1] == str(-2 * p.n_eq)

    def test_file_and_stream(self, tmp_path):
        p = chsh_level_one()
        path = tmp_path / "chsh.dat-s"
        export_sdpa(p, path)
        buf = io.StringIO()
        export_sdpa(p, buf)
        assert path.read_text() == buf.getvalue()
        assert dumps_sdpa(import_sdpa(path)) == dumps_sdpa(import_sdpa(io.StringIO(buf.getvalue())))

    def test_comments_skipped(self):
        text = '* a comment\n"title"\n' + dumps_sdpa(lp())
        assert dumps_sdpa(loads_sdpa(text)) == dumps_sdpa(lp())

    @pytest.mark.parametrize("mutate,line", [
        (lambda ls: ls[:2], 3),
        (lambda ls: ls[:1] + ["x"] + ls[2:], 2),
        (lambda ls: ls[:5] + ["1 1 1"] + ls[5:], 6),
        (lambda ls: ls[:5] + ["1 9 1 1 1.0"] + ls[5:], 6),
        (lambda ls: ls[:5] + ["1 1 3 3 1.0"] + ls[5:], 6),
        (lambda ls: ls[:3] + ["1.0 2.0"] + ls[4:], 4),
    ])
    def test_malformed(self, mutate, line):
        lines = dumps_sdpa(two_blocks()).splitlines()
        with pytest.raises(SdpaFormatError) as err:
            loads_sdpa("\n".join(mutate(lines)))
        assert err.value.line == line
        assert str(err.value).startswith(f"line {line}:")


class TestScsCrossCheck:
    @pytest.mark.parametrize("name,p,const,opt", [SUITE[0], SUITE[5], SUITE[7]], ids=lambda v: v if isinstance(v, str) else "")
    def test_matches_ipm(self, name, p, const, opt):
        ipm = solve(p, gap_tol=1e-10)
        ext = solve_scs(p, eps=1e-10, max_iters=100_000)
        assert ext.status == OPTIMAL
        assert ext.primal_value == pytest.approx(ipm.primal_value, abs=1e-7)
        assert certificate(p, ext).bound == pytest.approx(opt, abs=1e-6)

    def test_sdpa_import_to_scs(self):
        p = theta_c5()
        back = loads_sdpa(dumps_sdpa(p))
        assert solve_scs(back, eps=1e-10).primal_value == pytest.approx(np.sqrt(5), abs=1e-7)


def test_block_coalesces_duplicates():
    b = Block("b", 2, "psd", [0, 0], [0, 0], [1, 1], [1.0, 2.0])
    assert b.nnz == 1 and b.val[0] == 3.0
    b = Block("b", 2, "psd", [0, 0], [1, 0], [0, 1], [1.0, -1.0])
    assert b.nnz == 0


def test_problem_validation():
    with pytest.raises(ValueError):
        problem([1.0], [Block("b", 2, "psd", [3], [0], [0], [1.0])])
    with pytest.raises(ValueError):
        Block("b", 2, "cone")
    with pytest.raises(ValueError):
        problem([1.0], [Block("d", 2, "diag", [0], [0], [1], [1.0])])


def test_evaluate_and_adjoint_agree():
    p = theta_c5()
    y = np.random.default_rng(0).standard_normal(p.n_vars)
    w = np.random.default_rng(1).standard_normal((5, 5))
    w = w + w.T
    blk = p.blocks[0]
    c0, vec = blk.adjoint(w, p.n_vars)
    assert np.sum(w * blk.evaluate(y)) == pytest.approx(c0 + vec @ y, abs=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_trace_max_sizes(n):
    assert solve(trace_max(n), gap_tol=1e-10).primal_value == pytest.approx(n, abs=1e-7)
