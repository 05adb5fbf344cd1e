"""Regenerates the solver fixture suite and its oracle verdicts.

Each problem is written in the crate's JSON problem format and solved with
cvxpy twice (Clarabel and CVXOPT). The two verdicts must agree before the
Clarabel value is recorded in oracle.json. Run from this directory:

    python3 gen_fixtures.py
"""

import json
from pathlib import Path

import cvxpy as cp
import numpy as np

HERE = Path(__file__).resolve().parent
OUT = HERE / "sdp"
RNG = np.random.default_rng(20240917)


def herm(n, complex_=True):
    a = RNG.normal(size=(n, n))
    if complex_:
        a = a + 1j * RNG.normal(size=(n, n))
    return (a + a.conj().T) / 2


def pd(n, complex_=True, floor=0.5):
    g = RNG.normal(size=(n, n))
    if complex_:
        g = g + 1j * RNG.normal(size=(n, n))
    return g @ g.conj().T / n + floor * np.eye(n)


def flat(m):
    return [[float(z.real), float(z.imag)] for z in np.asarray(m, dtype=complex).ravel()]


class Problem:
    def __init__(self, name, blocks):
        self.name = name
        self.blocks = blocks  # list of (size, "psd" | "free")
        self.objective = []  # (block, C)
        self.constraints = []  # ([(block, A)], rhs)

    def doc(self):
        return {
            "blocks": [{"size": n, "cone": c} for n, c in self.blocks],
            "objective": [{"block": k, "coeff": flat(c)} for k, c in self.objective],
            "constraints": [
                {"terms": [{"block": k, "coeff": flat(a)} for k, a in terms], "rhs": float(rhs)}
                for terms, rhs in self.constraints
            ],
        }

    def solve(self, solver):
        xs = [cp.Variable((n, n), hermitian=True) for n, _ in self.blocks]
        cons = [x >> 0 for x, (_, c) in zip(xs, self.blocks) if c == "psd"]
        for terms, rhs in self.constraints:
            cons.append(sum(cp.real(cp.trace(a @ xs[k])) for k, a in terms) == rhs)
        obj = sum((cp.real(cp.trace(c @ xs[k])) for k, c in self.objective), cp.Constant(0.0))
        prob = cp.Problem(cp.Maximize(obj), cons)
        # Both solvers can stall at very tight tolerances; loosen until the
        # verdict is no longer flagged inaccurate.
        for tol in (1e-10, 1e-9, 1e-8):
            try:
                if solver == "CLARABEL":
                    prob.solve(solver=solver, tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol, max_iter=500)
                else:
                    prob.solve(solver=solver, abstol=tol, reltol=tol, feastol=tol, max_iters=500)
            except cp.error.SolverError:
                continue
            if not prob.status.endswith("inaccurate"):
                break
        status = {
            cp.OPTIMAL: "optimal",
            cp.INFEASIBLE: "primal-infeasible",
            cp.UNBOUNDED: "dual-infeasible",
        }.get(prob.status, prob.status)
        return status, (float(prob.value) if status == "optimal" else None)


def feasible(name, sizes, m, complex_=True, free=()):
    """Strictly feasible primal and dual by construction."""
    blocks = [(n, "free" if k in free else "psd") for k, n in enumerate(sizes)]
    p = Problem(name, blocks)
    x0 = [pd(n, complex_) if c == "psd" else herm(n, complex_) for n, c in blocks]
    y0 = RNG.normal(size=m)
    coeffs = []
    for _ in range(m):
        terms = [(k, herm(n, complex_)) for k, n in enumerate(sizes) if RNG.random() < 0.8 or k in free]
        if not terms:
            terms = [(0, herm(sizes[0], complex_))]
        coeffs.append(terms)
        p.constraints.append((terms, sum(np.trace(a @ x0[k]).real for k, a in terms)))
    # dual slack S = A^T y - C is positive definite on cones and zero on free blocks
    for k, (n, c) in enumerate(blocks):
        aty = np.zeros((n, n), dtype=complex)
        for j, terms in enumerate(coeffs):
            for kk, a in terms:
                if kk == k:
                    aty += y0[j] * a
        cost = aty - (pd(n, complex_) if c == "psd" else 0)
        p.objective.append((k, cost))
    return p


def max_eigenvalue(name, n):
    p = Problem(name, [(n, "psd")])
    p.objective.append((0, herm(n)))
    p.constraints.append(([(0, np.eye(n))], 1.0))
    return p


def negative_trace(name, n):
    p = Problem(name, [(n, "psd")])
    p.objective.append((0, herm(n)))
    p.constraints.append(([(0, np.eye(n))], -1.0))
    return p


def positive_functional_negative(name, sizes):
    """<P, X> = -0.3 with P positive definite, next to a trace normalization."""
    p = Problem(name, [(n, "psd") for n in sizes])
    for k, n in enumerate(sizes):
        p.objective.append((k, herm(n)))
    p.constraints.append(([(k, pd(n)) for k, n in enumerate(sizes)], -0.3))
    p.constraints.append(([(k, np.eye(n)) for k, n in enumerate(sizes)], 1.0))
    return p


def inconsistent_rows(name, n):
    p = Problem(name, [(n, "psd")])
    a = herm(n)
    p.objective.append((0, herm(n)))
    p.constraints.append(([(0, np.eye(n))], 1.0))
    p.constraints.append(([(0, a)], 0.2))
    p.constraints.append(([(0, 2 * a)], 0.7))
    return p


def free_block_pinned_negative(name, n):
    """A free block that must equal a matrix with a negative eigenvalue on a PSD block."""
    p = Problem(name, [(n, "psd"), (n, "free")])
    p.objective.append((0, herm(n)))
    target = pd(n) - 3.0 * np.eye(n) * 2
    basis = []
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            if i == j:
                e[i, i] = 1
            elif i < j:
                e[i, j] = e[j, i] = 1 / np.sqrt(2)
            else:
                e[i, j], e[j, i] = 1j / np.sqrt(2), -1j / np.sqrt(2)
            basis.append(e)
    for e in basis:
        # X_psd - X_free = 0 and X_free = target
        p.constraints.append(([(0, e), (1, -e)], 0.0))
        p.constraints.append(([(1, e)], float(np.trace(e @ target).real)))
    return p


def build():
    problems = []
    for i, n in enumerate([2, 2, 3, 3, 4, 4, 5, 5]):
        m = [1, 3, 2, 6, 4, 10, 5, 12][i]
        problems.append(feasible(f"real_single_{i:02d}", [n], m, complex_=False))
    for i, sizes in enumerate([[2, 3], [3, 3], [2, 2, 2], [4, 2], [3], [6]]):
        problems.append(feasible(f"complex_blocks_{i:02d}", sizes, 2 + 2 * i))
    for i, (sizes, free) in enumerate([([3, 2], (1,)), ([2, 2, 3], (0,)), ([4, 3], (1,))]):
        problems.append(feasible(f"free_block_{i:02d}", sizes, len(sizes) * 4 + i, free=free))
    problems.append(max_eigenvalue("max_eigenvalue_00", 3))
    problems.append(max_eigenvalue("max_eigenvalue_01", 5))
    problems.append(max_eigenvalue("max_eigenvalue_02", 6))
    problems.append(negative_trace("infeasible_trace", 3))
    problems.append(positive_functional_negative("infeasible_functional_00", [3]))
    problems.append(positive_functional_negative("infeasible_functional_01", [2, 3]))
    problems.append(inconsistent_rows("infeasible_rows", 3))
    problems.append(free_block_pinned_negative("infeasible_free_pin", 2))
    return problems


def main():
    OUT.mkdir(exist_ok=True)
    oracle = {}
    for p in build():
        s1, v1 = p.solve("CLARABEL")
        s2, v2 = p.solve("CVXOPT")
        assert s1 == s2, (p.name, s1, s2)
        if s1 == "optimal":
            assert abs(v1 - v2) <= 1e-6 * (1 + abs(v1)), (p.name, v1, v2)
        if p.name.startswith("max_eigenvalue"):
            exact = float(np.linalg.eigvalsh(p.objective[0][1])[-1])
            assert abs(v1 - exact) <= 1e-7, (p.name, v1, exact)
        (OUT / f"{p.name}.json").write_text(json.dumps(p.doc()) + "\n")
        oracle[p.name] = {"status": s1, "objective": v1}
        print(f"{p.name:28s} {s1:18s} {v1}")
    (HERE / "oracle.json").write_text(json.dumps(oracle, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
