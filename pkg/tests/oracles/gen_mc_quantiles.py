"""Regenerate the frozen Monte Carlo quantile oracle table.

Draws 1e7 samples per distribution shape and freezes the empirical upper
quantiles into mc_quantiles.json next to this script. The table covers the
studentized range for k in {2, 5, 10, 30} crossed with error degrees of
freedom {10, 60, 1490, inf}, and the F distribution for the matching
(k-1, df) pairs, each at upper tail levels {0.01, 0.05, 0.1}.

The standard error of an empirical quantile at this draw count is a few
1e-4, far under the 0.02 agreement tolerance the tests assert. Run as:

    python3 tests/oracles/gen_mc_quantiles.py

Takes a few minutes; the output is committed so the test suite never pays
that cost.
"""

from __future__ import annotations

import json
import pathlib
import time

import numpy as np

SEED = 20260815
DRAWS = 10_000_000
BLOCK = 500_000
ALPHAS = (0.01, 0.05, 0.1)
KS = (2, 5, 10, 30)
DFS = (10, 60, 1490, None)  # None encodes the infinite-df limit
EXTRA_SR = ((3, 10),)  # spot-check shapes outside the main grid


def _rng(tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([SEED, tag], dtype=np.uint64)))


def studentized_range_draws(k: int, df: int | None, tag: int) -> np.ndarray:
    rng = _rng(tag)
    out = np.empty(DRAWS)
    for start in range(0, DRAWS, BLOCK):
        z = rng.standard_normal((BLOCK, k))
        r = z.max(axis=1) - z.min(axis=1)
        if df is not None:
            r = r / np.sqrt(rng.chisquare(df, BLOCK) / df)
        out[start:start + BLOCK] = r
    return out


def f_draws(df1: int, df2: int | None, tag: int) -> np.ndarray:
    rng = _rng(tag)
    out = np.empty(DRAWS)
    for start in range(0, DRAWS, BLOCK):
        num = rng.chisquare(df1, BLOCK) / df1
        if df2 is None:
            den = 1.0
        else:
            den = rng.chisquare(df2, BLOCK) / df2
        out[start:start + BLOCK] = num / den
    return out


def main() -> None:
    t0 = time.time()
    sr_rows = []
    f_rows = []
    tag = 1
    sr_cells = [(k, df) for k in KS for df in DFS] + list(EXTRA_SR)
    for k, df in sr_cells:
        draws = studentized_range_draws(k, df, tag)
        tag += 1
        for alpha in ALPHAS:
            sr_rows.append(
                {
                    "k": k,
                    "df": df if df is not None else "inf",
                    "alpha": alpha,
                    "q_mc": float(np.quantile(draws, 1.0 - alpha)),
                }
            )
        print(f"studentized range k={k} df={df}: done ({time.time() - t0:.0f}s)")
    for k in KS:
        for df in DFS:
            draws = f_draws(k - 1, df, tag)
            tag += 1
            for alpha in ALPHAS:
                f_rows.append(
                    {
                        "df1": k - 1,
                        "df2": df if df is not None else "inf",
                        "alpha": alpha,
                        "q_mc": float(np.quantile(draws, 1.0 - alpha)),
                    }
                )
            print(f"F df1={k - 1} df2={df}: done ({time.time() - t0:.0f}s)")

    doc = {
        "seed": SEED,
        "draws": DRAWS,
        "studentized_range": sr_rows,
        "f": f_rows,
    }
    out = pathlib.Path(__file__).with_name("mc_quantiles.json")
    out.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {out} ({time.time() - t0:.0f}s total)")


if __name__ == "__main__":
    main()
