"""Solve the level-1 and level-2 moment problems, optionally cross-checking with cvxpy."""
import argparse
import time

from contextual_key import npa
from contextual_key.sdpsolver import validate


def cvxpy_value(problem):
    import cvxpy as cp

    sdp = problem.to_sdp()
    x = cp.Variable((sdp.order, sdp.order), symmetric=True)
    cons = [x >> 0] + [cp.trace(a @ x) == b for a, b in sdp.constraints]
    prob = cp.Problem(cp.Maximize(cp.trace(sdp.objective @ x)), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cvxpy", action="store_true", help="cross-check with cvxpy/Clarabel")
    ap.add_argument("--dump", help="write the level-2 problem JSON here")
    args = ap.parse_args()
    for level in (1, 2):
        prob = npa.build_problem(level)
        if args.dump and level == 2:
            prob.dump(args.dump)
        t0 = time.perf_counter()
        res = npa.solve_bound(prob)
        dt = time.perf_counter() - t0
        rep = validate(prob.to_sdp(), res)
        line = (f"level {level}: {prob.size} words, {len(prob.equal_classes)} equal classes, "
                f"bound {res.dual_value:.9f} ({res.status}, {res.iterations} it, {dt:.2f} s, "
                f"validated {rep.ok})")
        if args.cvxpy:
            line += f", cvxpy {cvxpy_value(prob):.9f}"
        print(line)


if __name__ == "__main__":
    main()
