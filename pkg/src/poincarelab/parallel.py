"""Order-preserving work distribution.

Results are always merged in submission order, so numerical output is
independent of the worker count; numpy releases the GIL on large kernels,
which is where threads pay off.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def ordered_map(fn, items, jobs: int = 1) -> list:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
