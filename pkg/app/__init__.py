"""Acoustic COVID-19 screening benchmark: corpus, features, baselines, scoring and leaderboard."""

import sys
import warnings


__version__ = "0.1.0"

# tomllib needs 3.11; the pinned numpy/scipy wheels stop at 3.13
if sys.version_info[:2] < (3, 11) or sys.version_info[:2] > (3, 13):
    warnings.warn(
        "dicova-bench {version} is tested on Python 3.11-3.13, running {ver}".format(
            version=__version__, ver=".".join(map(str, sys.version_info[:3]))
        ),
        RuntimeWarning,
        stacklevel=2,
    )
