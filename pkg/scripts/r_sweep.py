"""Sweep the oscillator amplitude and tabulate how E^z approaches Q_theta.

    python scripts/r_sweep.py --state '{"type":"fock","n":1}' --r-list 1,2,4,8,16 > sweep.csv
"""

import argparse
import sys

from homodyne_limit.cli import fmt, parse_list
from homodyne_limit.convergence import bounded_function_diagnostic, cdf_interval_diagnostic, ks_distance
from homodyne_limit.homodyne import homodyne_distribution
from homodyne_limit.moments import empirical_moment
from homodyne_limit.quadrature import quadrature_law, quadrature_moment
from homodyne_limit.states import load_state


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--state", default='{"type":"coherent","beta":[1,0]}')
    p.add_argument("--r-list", type=parse_list, default=[1, 2, 4, 8, 16])
    p.add_argument("--theta", type=float, default=0.0)
    args = p.parse_args(argv)

    state = load_state(args.state)
    law = quadrature_law(state, args.theta)
    m2 = quadrature_moment(state, args.theta, 2)
    out = sys.stdout
    out.write("r,ks,interval_max,function_max,second_moment_gap,deficit\n")
    for r in args.r_list:
        dist = homodyne_distribution(state, r, args.theta)
        ks = ks_distance(state, args.theta, r, law, dist)
        ints = cdf_interval_diagnostic(state, args.theta, r, law=law, dist=dist).max()
        fns = max(bounded_function_diagnostic(state, args.theta, r, law=law, dist=dist).values())
        gap = abs(empirical_moment(dist, 2) - m2)
        out.write(",".join(fmt(v) for v in (r, ks, ints, fns, gap, dist.deficit)) + "\n")


if __name__ == "__main__":
    main()
