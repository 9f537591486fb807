# -*- coding: utf-8 -*-
"""Shared configuration, logging, errors and instrumentation"""

import os
import sys
import time as time_
import logging
import contextlib
from functools import wraps
from concurrent import futures

from . import __version__

# Output profiling information to the log
# CAREFUL! This floods the debug log. Use sparingly.
TIMINGS = bool(os.getenv("SYL_TIMINGS"))

# Cap on worker threads for shooting trials and grid scans
THREADS = max(1, int(os.getenv("SYL_THREADS") or os.cpu_count() or 1))

# Expose snake_case aliases next to the camelCase originals
ENABLE_PEP8 = True

self = sys.modules[__name__]
log = logging.getLogger("sylab")

# Accessible via `sylab.common.ShootCount` etc.
Stats = self
Stats.ShootCount = 0
Stats.InnerSolveCount = 0
Stats.ExpMapCount = 0
Stats.LastTiming = None


class SylabError(RuntimeError):
    """Numerical failure carrying a machine-readable code

    Example:
        >>> err = NoBracketError("nothing found")
        >>> err.code
        'NO_BRACKET'
        >>> isinstance(err, SylabError)
        True

    """

    code = "NUMERICAL_FAILURE"

    def dump(self):
        return {"error": self.code, "message": str(self)}


NoBracketError = type("NoBracketError", (SylabError,), {"code": "NO_BRACKET"})
NotConvergedError = type("NotConvergedError", (SylabError,),
                         {"code": "NOT_CONVERGED"})
SaddleEscapeError = type("SaddleEscapeError", (SylabError,),
                         {"code": "SADDLE_ESCAPE_FAILED"})
NoSignChangeError = type("NoSignChangeError", (SylabError,),
                         {"code": "NO_SIGN_CHANGE"})
IntegrationError = type("IntegrationError", (SylabError,),
                        {"code": "INTEGRATION_FAILED"})
DecayError = type("DecayError", (SylabError,), {"code": "INSUFFICIENT_DECAY"})
ChartError = type("ChartError", (SylabError,), {"code": "CHART_INVALID"})


def withTiming(text="{func}() {time:.2f} ms"):
    """Append timing information to a function

    Example:
        >>> @withTiming()
        ... def function():
        ...     return 5
        >>> function()
        5

    """

    perf_counter = time_.perf_counter

    def timings_decorator(func):
        if not TIMINGS:
            # Do not wrap the function.
            # This yields zero cost to runtime performance
            return func

        @wraps(func)
        def func_wrapper(*args, **kwargs):
            t0 = perf_counter()

            try:
                return func(*args, **kwargs)
            finally:
                t1 = perf_counter()
                duration = (t1 - t0) * 10 ** 3  # milliseconds

                Stats.LastTiming = duration

                log.debug(
                    text.format(func=func.__name__,
                                time=duration)
                )

        return func_wrapper

    return timings_decorator


@contextlib.contextmanager
def workers(count=None):
    """Thread pool capped by SYL_THREADS

    Results of `pool.map` come back in submission order, which keeps
    reductions over them deterministic.

    Example:
        >>> with workers(2) as pool:
        ...     list(pool.map(abs, [-1, -2, 3]))
        [1, 2, 3]

    """

    count = min(count or THREADS, THREADS)
    with futures.ThreadPoolExecutor(max_workers=max(1, count)) as pool:
        yield pool


def checkExponent(p):
    """Reject exponents outside the subcritical range (2, 4)

    Example:
        >>> checkExponent(3)
        3.0

    """

    p = float(p)
    if not 2.0 < p < 4.0:
        raise ValueError("p must lie in (2, 4), got %s" % p)
    return p


def nonlinearity(s, p):
    """f(s) = s^(p-2), the power nonlinearity

    Example:
        >>> nonlinearity(2.0, 3)
        2.0

    """

    return s ** (p - 2.0)


def primitive(s, p):
    """F(s) = s^p / p, so that F'(s) = f(s) s

    Example:
        >>> primitive(3.0, 3)
        9.0

    """

    return s ** p / p


def version():
    """Package version, as recorded in run manifests"""
    return __version__


if ENABLE_PEP8:
    check_exponent = checkExponent
