"""Certify solver failures on non-CMFP instances against the exact oracle.

For each non-CMFP instance of the criterion-3 corpus on which ``solve`` raises
``WeightLpAnomaly``, ask ``tests/oracles.other_stable_point`` whether any stable
fractional matching other than the integral one exists. ``unique`` means the
instance is a counterexample to the uniqueness characterisation; ``missed`` means
the solver failed although a non-integral stable matching exists.

    python3 scripts/certify_uniqueness.py [--count 500] [--max-residual 6]
"""
from __future__ import annotations

import argparse
import itertools
import json
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "tests"))

from oracles import other_stable_point  # noqa: E402
from stablefrac.cmfp import Classification, classify, cmfp_matching  # noqa: E402
from stablefrac.errors import WeightLpAnomaly  # noqa: E402
from stablefrac.instance import Side, generate  # noqa: E402
from stablefrac.integral import gale_shapley  # noqa: E402
from stablefrac.solver import solve  # noqa: E402

MODES = ("uniform", "no-mfp")


def corpus(count: int):
    # same corpus as the criterion-3 acceptance test
    found = 0
    for k in itertools.count():
        inst = generate(2 + k % 7, 2 * 10**6 + k, MODES[k % 2])
        if classify(inst) is Classification.NOT_IN_CMFP:
            yield k, inst
            found += 1
            if found == count:
                return


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--max-residual", type=int, default=6, help="skip the oracle above this residual size")
    args = p.parse_args(argv)
    tally = {"unique": 0, "missed": 0, "skipped": 0}
    for k, inst in corpus(args.count):
        try:
            solve(inst)
            continue
        except WeightLpAnomaly:
            pass
        res = cmfp_matching(inst).residual
        row = {"k": k, "n": inst.n, "residual": res.n}
        if res.n > args.max_residual:
            row["verdict"] = "skipped"
        else:
            t0 = time.perf_counter()
            other = other_stable_point(res, gale_shapley(res, Side.MEN))
            row["verdict"] = "unique" if other is None else "missed"
            row["seconds"] = round(time.perf_counter() - t0, 2)
        tally[row["verdict"]] += 1
        print(json.dumps(row), flush=True)
    print(json.dumps({"tally": tally}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
