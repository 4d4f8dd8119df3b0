"""Time the compiled kernels against the numpy fallback on the same inputs.

Run from the repository root:  python3 benchmarks/bench_kernels.py [--repeat N]
Both backends are imported directly, so one process measures both and checks
that they return identical arrays.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from hyperstab import _pykernels as py
from hyperstab.catalog import dihedral, heisenberg, symmetric
from hyperstab.groups import conjugacy_partition

try:
    from hyperstab import _ckernels as c
except ImportError:
    c = None


def cases():
    for name, group in (("S4", symmetric(4)), ("D64", dihedral(64)), ("Heis(7)", heisenberg(7, dense=True))):
        part = conjugacy_partition(group)
        rep = part.representatives[min(2, part.size - 1)]
        row = group.mul(rep, np.arange(group.order))
        yield name, "conjugacy_class_labels", (group.table, group.inverse)
        yield name, "pair_class_histogram", (row, part.class_of, part.size)
    from hyperstab.catalog import get_group

    table = get_group("heisenberg7").table
    ptr, idx = table.support_csr
    seed = np.zeros(table.size, dtype=np.uint8)
    seed[[1, table.size - 1]] = 1
    yield "Conj(Heis(7))", "support_closure", (ptr, idx, table.involution, seed)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"{'input':<16}{'kernel':<26}{'python ms':>12}{'compiled ms':>14}{'speedup':>10}")
    for name, kernel, inputs in cases():
        fallback = getattr(py, kernel)
        t_py = min(timeit.repeat(lambda: fallback(*inputs), number=1, repeat=args.repeat)) * 1e3
        if c is None:
            print(f"{name:<16}{kernel:<26}{t_py:>12.3f}{'n/a':>14}{'':>10}")
            continue
        compiled = getattr(c, kernel)
        if not np.array_equal(np.asarray(fallback(*inputs)), np.asarray(compiled(*inputs))):
            raise SystemExit(f"backends disagree on {kernel} for {name}")
        t_c = min(timeit.repeat(lambda: compiled(*inputs), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<16}{kernel:<26}{t_py:>12.3f}{t_c:>14.3f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
