#!/usr/bin/env python3
"""Measure the fold-count speedup of the product-space CV engine.

The naive baseline materializes every training partition and recomputes its
preprocessed cross products from rows, so its cost grows linearly with the
number of folds P. The fast engine pays one pass over the data and then
assembles each training fold's products from per-fold contributions, so its
cost is flat in P.

Example:

    python3 scripts/bench_speedup.py --n 5000 --k 100 --m 1 --p 2,10,100
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fastpls import (
    Dataset,
    PreprocessSpec,
    make_folds,
    naive_training_products,
    precompute,
    training_products,
)


def synthetic(n: int, k: int, m: int, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, k))
    y = x @ rng.standard_normal((k, m)) + 0.1 * rng.standard_normal((n, m))
    return Dataset(x=x, y=y)


def time_fast(data: Dataset, n_folds: int, spec: PreprocessSpec, seed: int) -> float:
    folds = make_folds(data.n_rows, n_folds, seed=seed)
    t0 = time.perf_counter()
    products = precompute(data, folds)
    for fold in range(n_folds):
        training_products(products, fold, spec)
    return time.perf_counter() - t0


def time_naive(data: Dataset, n_folds: int, spec: PreprocessSpec, seed: int) -> float:
    folds = make_folds(data.n_rows, n_folds, seed=seed)
    t0 = time.perf_counter()
    for fold in range(n_folds):
        naive_training_products(data, folds, fold, spec)
    return time.perf_counter() - t0


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=5000, help="rows")
    parser.add_argument("--k", type=int, default=100, help="predictor columns")
    parser.add_argument("--m", type=int, default=1, help="response columns")
    parser.add_argument("--p", default="2,10,100", help="comma list of fold counts")
    parser.add_argument("--flags", default="cx,cy", help="centering/scaling flags")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--skip-naive", action="store_true", help="measure the fast path only"
    )
    args = parser.parse_args()

    p_values = [int(tok) for tok in args.p.split(",")]
    spec = PreprocessSpec.from_flags(args.flags)
    data = synthetic(args.n, args.k, args.m, args.seed)

    print(f"n={args.n} k={args.k} m={args.m} flags={spec.to_flags()}")
    header = f"{'P':>6} {'fast [s]':>10}"
    if not args.skip_naive:
        header += f" {'naive [s]':>10} {'ratio':>8}"
    print(header)
    rows = []
    for p in p_values:
        fast = time_fast(data, p, spec, args.seed)
        if args.skip_naive:
            print(f"{p:>6} {fast:>10.3f}")
            rows.append((p, fast, None))
        else:
            naive = time_naive(data, p, spec, args.seed)
            print(f"{p:>6} {fast:>10.3f} {naive:>10.3f} {naive / fast:>8.1f}x")
            rows.append((p, fast, naive))

    if len(rows) >= 2 and not args.skip_naive:
        first, last = rows[0], rows[-1]
        print(
            f"\nfold growth {first[0]} -> {last[0]}: "
            f"fast x{last[1] / first[1]:.2f}, naive x{last[2] / first[2]:.2f}"
        )


if __name__ == "__main__":
    main()
