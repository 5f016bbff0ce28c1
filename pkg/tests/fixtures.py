"""Frozen instances. Hand-written ones come from their defining value tables; the
F_* ones were located by scripts/find_fixtures.py and pasted here verbatim."""
from __future__ import annotations

from fractions import Fraction

from stablefrac.instance import MatchingInstance
from stablefrac.integral import IntegralMatching

# mutual first preferences on the diagonal
I_SOUL = MatchingInstance.from_lists([[2, 1], [1, 2]], [[2, 1], [1, 2]])

# men want the diagonal, women the anti-diagonal; two stable matchings
I_CONFLICT = MatchingInstance.from_lists([[2, 1], [1, 2]], [[1, 2], [2, 1]])

# the swap matching is blocked by (m0, w0)
I_BLOCK = MatchingInstance.from_lists([[2, 1], [2, 1]], [[2, 2], [1, 1]])

# every man ranks w0 > w1 > w2, every woman ranks m0 > m1 > m2
I_POP = MatchingInstance.from_lists([[3, 2, 1]] * 3, [[3, 3, 3], [2, 2, 2], [1, 1, 1]])

IDENTITY2 = IntegralMatching((0, 1))
SWAP2 = IntegralMatching((1, 0))

# two stable matchings whose 9/16-mix is blocked by (m0, w2)
F_BLOCKED_MIX = MatchingInstance.from_lists(
    [[5, 1, 4], [2, 6, 5], [1, 5, 2]],
    [[5, 6, 2], [6, 3, 1], [1, 4, 3]],
)
F_BLOCKED_MIX_A = IntegralMatching((0, 2, 1))
F_BLOCKED_MIX_B = IntegralMatching((1, 0, 2))
F_BLOCKED_MIX_ALPHA = Fraction(9, 16)
F_BLOCKED_MIX_BLOCKING = (0, 2)

# generate(3, 1, "no-mfp"): one stable integral matching, yet a non-integral stable one exists
F_FRAC_ONLY = MatchingInstance.from_lists(
    [[13, 5, 18], [1, 6, 13], [28, 30, 14]],
    [[14, 30, 11], [8, 8, 9], [10, 24, 25]],
)

# one stable integral matching; 1/6, 1/3, 1/2 mix of three unstable matchings is stable
F_UNSTABLE_SUPPORT = MatchingInstance.from_lists(
    [[4, 2, 3], [4, 3, 5], [5, 3, 1]],
    [[4, 1, 1], [5, 4, 3], [3, 2, 4]],
)
F_UNSTABLE_SUPPORT_COMPONENTS = (
    (Fraction(1, 6), IntegralMatching((2, 0, 1))),
    (Fraction(1, 3), IntegralMatching((1, 0, 2))),
    (Fraction(1, 2), IntegralMatching((1, 2, 0))),
)

# generate(3, 17, "no-mfp"): no mutual firsts, both envy graphs acyclic under men-proposing GS
F_PATH = MatchingInstance.from_lists(
    [[22, 2, 3], [6, 14, 27], [28, 7, 11]],
    [[1, 3, 9], [15, 18, 1], [9, 16, 21]],
)

# exactly the stable matchings {(0,1),(1,0),(2,2)} and {(0,0),(1,1),(2,2)}; every mix stable
F_MANIP = MatchingInstance.from_lists(
    [[5, 4, 1], [4, 5, 3], [2, 5, 4]],
    [[3, 5, 2], [4, 3, 5], [1, 2, 3]],
)
F_MANIP_STABLE = (IntegralMatching((0, 1, 2)), IntegralMatching((1, 0, 2)))

# generate(3, 2, "uniform"): not CMFP, yet its only stable fractional matching is integral
F_COUNTER = MatchingInstance.from_lists(
    [[25, 24, 30], [15, 11, 30], [13, 26, 9]],
    [[14, 6, 18], [16, 26, 11], [5, 18, 19]],
)
F_COUNTER_STABLE = IntegralMatching((2, 0, 1))
