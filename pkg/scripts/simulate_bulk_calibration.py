#!/usr/bin/env python3
"""Demonstrate the subsample-vs-bulk-mean calibration discrepancy.

A model scored on individual subsamples can be perfectly calibrated (its
best-fit line of references on predictions is the identity) while the
*means* of its predictions per bulk are not: if low-reference bulks are
systematically overestimated and high-reference bulks underestimated, the
bulk-mean best-fit line has slope above one and a negative offset, and a
bias/scale correction fitted on bulk means repairs it.

The simulation draws per-bulk prediction clouds with controlled spreads,
re-centers them so the pooled subsample line is exactly the identity, then
compares the subsample-level and bulk-mean-level fits.
"""

from __future__ import annotations

import argparse

import numpy as np

from fastpls import apply_calibration, fit_bias_scale, rmse


def build_instance(rng: np.random.Generator, n_bulks: int, per_bulk: int, shrink: float):
    """References, subsample predictions, and bulk ids for one instance.

    ``shrink < 1`` pulls each bulk's predicted mean toward the grand mean,
    producing the over/under-estimation pattern.
    """
    refs = np.linspace(10.0, 14.0, n_bulks)
    grand = refs.mean()
    pred_means = grand + shrink * (refs - grand)
    preds = []
    bulk_ids = []
    for b, mean in enumerate(pred_means):
        cloud = rng.normal(0.0, 1.0, size=per_bulk)
        cloud -= cloud.mean()
        preds.append(mean + cloud)
        bulk_ids.append(np.full(per_bulk, b))
    predictions = np.concatenate(preds)
    references = np.repeat(refs, per_bulk)

    # Re-center the pooled cloud so the subsample-level line is exactly the
    # identity: rescale deviations so cov(pred, ref) equals var(pred), then
    # shift to equal means.
    line = fit_bias_scale(predictions, references)
    predictions = (predictions - predictions.mean()) * line.scale + references.mean()
    return references, predictions, np.concatenate(bulk_ids), refs


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--bulks", type=int, default=2)
    parser.add_argument("--per-bulk", type=int, default=4)
    parser.add_argument("--shrink", type=float, default=0.5,
                        help="bulk-mean shrink factor toward the grand mean (<1)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    references, predictions, bulk_ids, bulk_refs = build_instance(
        rng, args.bulks, args.per_bulk, args.shrink
    )

    sub_line = fit_bias_scale(predictions, references)
    print(f"subsample-level fit: scale {sub_line.scale:+.6f}, bias {sub_line.bias:+.6f}")

    bulk_pred = np.array(
        [predictions[bulk_ids == b].mean() for b in range(args.bulks)]
    )
    print("\nbulk    reference    mean prediction")
    for b, (ref, pred) in enumerate(zip(bulk_refs, bulk_pred)):
        tag = "over" if pred > ref else "under"
        print(f"{b:>4} {ref:>12.3f} {pred:>18.3f}  ({tag}estimated)")

    if args.bulks >= 3:
        bulk_line = fit_bias_scale(bulk_pred, bulk_refs)
    else:
        # Two points define the line exactly.
        scale = (bulk_refs[1] - bulk_refs[0]) / (bulk_pred[1] - bulk_pred[0])
        bulk_line = type(sub_line)(scale=scale, bias=bulk_refs[0] - scale * bulk_pred[0])
    print(
        f"\nbulk-mean fit:       scale {bulk_line.scale:+.6f}, "
        f"bias {bulk_line.bias:+.6f}"
    )

    corrected = apply_calibration(bulk_line, bulk_pred)
    print(
        f"bulk-mean error:     before {rmse(bulk_pred, bulk_refs):.4f}, "
        f"after correction {rmse(corrected, bulk_refs):.4f}"
    )


if __name__ == "__main__":
    main()
