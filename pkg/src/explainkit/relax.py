"""Relaxed predictions: conditional score estimates over hybrid rows.

The relaxed prediction of an observation, given a set of pinned features,
is the mean model score over "hybrid" rows: every training row with the
pinned coordinates overwritten by the explained observation's values.
Pinning everything reproduces the model prediction; pinning nothing gives
the mean score over the training set. All estimates here enumerate the
full training set unless an explicit subsample is requested.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, SchemaError
from .predict import Predictor
from .tabular import NUMERIC, Cell, Dataset

IndexSet = frozenset[int]

DOWN = "down"
UP = "up"


def _validate(predictor: Predictor, dataset: Dataset, x_new: Sequence[Cell]):
    schema = dataset.schema()
    if schema != predictor.schema:
        raise SchemaError("predictor schema does not match the dataset's feature columns")
    return schema.validate_observation(x_new)


def _feature_set(dataset: Dataset, fixed: Iterable[int]) -> IndexSet:
    fs = frozenset(int(j) for j in fixed)
    p = dataset.n_features
    for j in fs:
        if not (0 <= j < p):
            raise SchemaError(f"feature index {j} out of range for {p} features")
    return fs


def hybrid_scores(
    predictor: Predictor,
    dataset: Dataset,
    x_new: Sequence[Cell],
    fixed: Iterable[int],
    subsample: int | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Scores of all hybrid rows: training rows with `fixed` pinned to x_new."""
    x_new = _validate(predictor, dataset, x_new)
    fs = _feature_set(dataset, fixed)
    cols = [c.values for c in dataset.feature_columns()]
    kinds = dataset.schema().kinds
    n = dataset.n_rows
    if subsample is not None and subsample < n:
        if subsample < 1:
            raise DataError("subsample must be at least 1")
        if rng is None:
            raise DataError("subsample requires a random generator")
        keep = np.sort(rng.choice(n, size=subsample, replace=False))
        cols = [c[keep] for c in cols]
        n = subsample
    hybrid = []
    for j, col in enumerate(cols):
        if j in fs:
            if kinds[j] == NUMERIC:
                hybrid.append(np.full(n, float(x_new[j]), dtype=float))
            else:
                hybrid.append(np.full(n, x_new[j], dtype=object))
        else:
            hybrid.append(col)
    return predictor.score_columns(hybrid)


def relaxed_prediction(
    predictor: Predictor,
    dataset: Dataset,
    x_new: Sequence[Cell],
    fixed: Iterable[int],
    subsample: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Mean hybrid-row score with `fixed` coordinates pinned to x_new.

    `fixed` holds the pinned feature indices; its complement follows the
    empirical distribution row by row. The full-population mean is exact;
    pass `subsample` (with an rng) to average over a uniform row subset
    instead, an explicit approximation for large n.
    """
    return float(np.mean(hybrid_scores(predictor, dataset, x_new, fixed, subsample, rng)))


def relaxed_distance(
    predictor: Predictor,
    dataset: Dataset,
    x_new: Sequence[Cell],
    fixed: Iterable[int],
) -> float:
    """|relaxed prediction - model prediction| for the pinned set."""
    rp = relaxed_prediction(predictor, dataset, x_new, fixed)
    return abs(rp - predictor.score_one(x_new))


def added_contribution(
    predictor: Predictor,
    dataset: Dataset,
    x_new: Sequence[Cell],
    fixed: Iterable[int],
    j: int,
) -> float:
    """Signed change in relaxed prediction from additionally pinning feature j."""
    fs = _feature_set(dataset, fixed)
    j = int(j)
    if j in fs:
        raise SchemaError(f"feature {j} is already pinned")
    with_j = relaxed_prediction(predictor, dataset, x_new, fs | {j})
    without = relaxed_prediction(predictor, dataset, x_new, fs)
    return with_j - without


@dataclass(frozen=True, eq=False)
class TraceStep:
    """One relaxation step: the pinned set, the feature changed to reach it,
    and the full conditional score distribution over hybrid rows."""

    fixed: IndexSet
    relaxed_feature: int | None
    scores: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.scores))


@dataclass(frozen=True, eq=False)
class RelaxationTrace:
    direction: str
    feature_names: tuple[str, ...]
    steps: tuple[TraceStep, ...]

    def to_json_dict(self) -> dict:
        return {
            "direction": self.direction,
            "steps": [
                {
                    "fixed": sorted(step.fixed),
                    "relaxed_feature": step.relaxed_feature,
                    "scores": [float(s) for s in step.scores],
                    "mean": step.mean,
                }
                for step in self.steps
            ],
        }


def relaxation_trace(
    predictor: Predictor,
    dataset: Dataset,
    x_new: Sequence[Cell],
    order: Sequence[int],
    direction: str = DOWN,
) -> RelaxationTrace:
    """Walk the pinned set along `order`, recording every conditional
    score distribution.

    Down starts fully pinned and releases features in `order` until none are
    pinned; Up starts unpinned and pins them instead. Either way the trace
    has len(order) + 1 steps and consecutive pinned sets differ by exactly
    one feature. `order` must be a permutation of the feature indices.
    """
    p = dataset.n_features
    if sorted(order) != list(range(p)):
        raise SchemaError("order must be a permutation of all feature indices")
    if direction not in (DOWN, UP):
        raise SchemaError(f"unknown direction {direction!r}")

    if direction == DOWN:
        fixed = frozenset(range(p))
    else:
        fixed = frozenset()
    steps = [
        TraceStep(
            fixed=fixed,
            relaxed_feature=None,
            scores=hybrid_scores(predictor, dataset, x_new, fixed),
        )
    ]
    for j in order:
        fixed = fixed - {j} if direction == DOWN else fixed | {j}
        steps.append(
            TraceStep(
                fixed=fixed,
                relaxed_feature=int(j),
                scores=hybrid_scores(predictor, dataset, x_new, fixed),
            )
        )
    return RelaxationTrace(
        direction=direction,
        feature_names=dataset.feature_names,
        steps=tuple(steps),
    )
