"""Resource bounds.

All limits can be tightened or relaxed per call; the environment variable
EPPA_MAX_POINTS overrides the default input-structure bound process-wide,
EPPA_MAX_VALUED_POINTS the bound on the valuation extension size.
"""

from __future__ import annotations

import os

DEFAULT_MAX_POINTS = 12
DEFAULT_MAX_VALUED_POINTS = 20000
DEFAULT_AUT_DEGREE_BOUND = 10

# minimal-extension search budget inside base_eppa
SEARCH_MAX_SIZE = 5          # run the search only for inputs this small
SEARCH_TARGET_SIZE = 6       # never propose extensions beyond this many points
SEARCH_MAX_PART = 400        # skip the search when Part(A) is larger


def max_points() -> int:
    return int(os.environ.get("EPPA_MAX_POINTS", DEFAULT_MAX_POINTS))


def max_valued_points() -> int:
    return int(os.environ.get("EPPA_MAX_VALUED_POINTS", DEFAULT_MAX_VALUED_POINTS))
