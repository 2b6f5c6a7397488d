#!/usr/bin/env python3
"""External MIP backend using HiGHS (pip install highspy).

Configure with
  "solver": {"backend": "external",
             "external_command": "python3 tools/highs_bridge.py {input} {output} {gap} {timelimit} {threads}"}

Reads an MPS file and writes the solution file format the library expects:
  objective <value>
  bound <value>
  <column name> <value>   (one line per column)
or the single word "infeasible".
"""

import argparse
import sys

import highspy


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("mps")
    ap.add_argument("solution")
    ap.add_argument("gap", type=float)
    ap.add_argument("timelimit", type=float)
    ap.add_argument("threads", type=int, nargs="?", default=1)
    args = ap.parse_args()

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", args.gap)
    if args.timelimit > 0:
        h.setOptionValue("time_limit", args.timelimit)
    h.setOptionValue("threads", max(1, args.threads))
    if h.readModel(args.mps) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.mps}", file=sys.stderr)
        return 1
    h.run()

    status = h.getModelStatus()
    with open(args.solution, "w") as out:
        if status == highspy.HighsModelStatus.kInfeasible:
            out.write("infeasible\n")
            return 0
        info = h.getInfo()
        if info.primal_solution_status == 0:
            print(f"no solution: {h.modelStatusToString(status)}", file=sys.stderr)
            return 1
        out.write(f"objective {info.objective_function_value!r}\n")
        out.write(f"bound {info.mip_dual_bound!r}\n")
        lp = h.getLp()
        for name, value in zip(lp.col_names_, h.getSolution().col_value):
            out.write(f"{name} {value!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
