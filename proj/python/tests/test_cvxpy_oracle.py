# Re-solves dumped conic programs with an independent solver.
import json
import os
import shutil
import subprocess

import numpy as np
import pytest

cp = pytest.importorskip("cvxpy")

CLI = os.environ.get("TIGHTFEED_CLI") or shutil.which("tightfeed")
pytestmark = pytest.mark.skipif(CLI is None, reason="tightfeed executable not found")


def run(args):
    proc = subprocess.run([CLI, *args], capture_output=True, text=True)
    return proc.returncode, proc.stdout


def load_program(path):
    with open(path) as fh:
        return json.load(fh)["program"]


def solve(prog):
    n = prog["num_vars"]
    x = cp.Variable(n)
    cons = []
    for r in prog["rows"]:
        lhs = np.asarray(r["coeffs"]) @ x
        if r["sense"] == "eq":
            cons.append(lhs == r["rhs"])
        elif r["sense"] == "le":
            cons.append(lhs <= r["rhs"])
        else:
            cons.append(lhs >= r["rhs"])
    for b in prog["lmis"]:
        d = b["dim"]
        expr = np.asarray(b["constant"]).reshape(d, d)
        for t in b["terms"]:
            expr = expr + x[t["var"]] * np.asarray(t["matrix"]).reshape(d, d)
        cons.append(0.5 * (expr + expr.T) >> 0)
    problem = cp.Problem(cp.Minimize(np.asarray(prog["objective"]) @ x), cons)
    problem.solve(solver=cp.CLARABEL)
    return problem


@pytest.mark.parametrize(
    "method,mu,eps,eta",
    [("ef", "0.5", "0.25", "auto"), ("ef21", "0.5", "0.25", "auto"), ("ef", "0.1", "0.6", "0.3"),
     ("ef21", "0.2", "0.4", "0.9"), ("cgd", "0.3", "0.5", "0.5")],
)
def test_worst_case_matches(tmp_path, method, mu, eps, eta):
    dump = tmp_path / "p.json"
    code, out = run(["pep", "--method", method, "--mu", mu, "--eps", eps, "--eta", eta, "--dump-program", str(dump)])
    assert code in (0, 1)
    ours = json.loads(out)["value"]
    problem = solve(load_program(dump))
    assert problem.status == "optimal"
    assert -problem.value == pytest.approx(ours, abs=1e-5)


def test_search_probe_verdicts(tmp_path):
    for rho, feasible in (("0.7", True), ("0.6", False)):
        dump = tmp_path / f"s{rho}.json"
        code, out = run(["search", "--method", "ef", "--mu", "0.5", "--eps", "0.25", "--eta", "auto",
                         "--rho", rho, "--dump-program", str(dump)])
        assert (code == 0) == feasible
        problem = solve(load_program(dump))
        if feasible:
            assert problem.status in ("optimal", "optimal_inaccurate")
        else:
            assert problem.status in ("infeasible", "infeasible_inaccurate")
