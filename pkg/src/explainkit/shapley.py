"""Shapley attributions over the same hybrid-row conditioning as the greedy
breakdown, so differences between the two methods reflect aggregation
strategy only.

Exact mode enumerates all pinned subsets (cost 2^p relaxed predictions,
capped); sampled mode averages marginal contributions over random feature
permutations and reports per-feature standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .breakdown import (
    BASELINE_ZERO,
    Attribution,
    AttributionEntry,
    _by_importance,
    _finalize_entries,
)
from .errors import ModelError
from .predict import Predictor
from .relax import hybrid_scores
from .tabular import Cell, Dataset

SHAPLEY_EXACT = "shapley-exact"
SHAPLEY_SAMPLED = "shapley-sampled"

EXACT_FEATURE_CAP = 15


@dataclass(frozen=True, eq=False)
class ShapleyEstimate:
    """Shapley attribution plus sampling diagnostics.

    For sampled estimates, `std_errors` holds one standard error per feature
    (schema order), `unadjusted` the raw permutation means before the small
    residual correction that restores exact-sum consistency.
    """

    attribution: Attribution
    std_errors: np.ndarray | None = None
    n_permutations: int | None = None
    unadjusted: np.ndarray | None = None

    def to_json_dict(self) -> dict:
        out = self.attribution.to_json_dict()
        if self.std_errors is not None:
            out["std_errors"] = [float(s) for s in self.std_errors]
        if self.n_permutations is not None:
            out["n_permutations"] = self.n_permutations
        if self.unadjusted is not None:
            out["unadjusted_contributions"] = [float(v) for v in self.unadjusted]
        return out


class _SubsetValues:
    """Caches relaxed predictions keyed by pinned-set bitmask."""

    def __init__(self, predictor: Predictor, dataset: Dataset, x_new: Sequence[Cell]):
        self.predictor = predictor
        self.dataset = dataset
        self.x_new = x_new
        self.cache: dict[int, float] = {}

    def value(self, mask: int, p: int) -> float:
        if mask not in self.cache:
            fixed = frozenset(j for j in range(p) if mask >> j & 1)
            scores = hybrid_scores(self.predictor, self.dataset, self.x_new, fixed)
            self.cache[mask] = float(np.mean(scores))
        return self.cache[mask]


def _attribution_from_phis(
    schema_names: Sequence[str],
    x_new: Sequence[Cell],
    phis: np.ndarray,
    mean_score: float,
    final: float,
    baseline_mode: str,
    method: str,
) -> Attribution:
    entries = [
        AttributionEntry(name, x_new[j], float(phis[j]))
        for j, name in enumerate(schema_names)
    ]
    return _finalize_entries(
        _by_importance(entries), baseline_mode, mean_score, final, method
    )


def shapley_exact(
    predictor: Predictor,
    dataset: Dataset,
    x_new: Sequence[Cell],
    baseline_mode: str = BASELINE_ZERO,
    feature_cap: int = EXACT_FEATURE_CAP,
) -> ShapleyEstimate:
    """Exact Shapley values by subset enumeration.

    phi_j averages the marginal change in relaxed prediction from pinning j,
    weighted over all pinned subsets not containing j by |S|!(p-|S|-1)!/p!.
    The weights use log-factorials so p near the cap stays stable.
    """
    schema = dataset.schema()
    x_new = schema.validate_observation(x_new)
    p = schema.n_features
    if p > feature_cap:
        raise ModelError(
            f"exact Shapley enumerates 2^p subsets; p={p} exceeds the cap of {feature_cap}"
        )
    values = _SubsetValues(predictor, dataset, x_new)
    log_fact = [math.lgamma(i + 1) for i in range(p + 1)]
    weight_by_size = [
        math.exp(log_fact[s] + log_fact[p - s - 1] - log_fact[p]) for s in range(p)
    ]
    phis = np.zeros(p)
    # fixed accumulation order: masks ascending, then feature index
    for mask in range(1 << p):
        size = mask.bit_count()
        if size == p:
            continue
        v_s = values.value(mask, p)
        w = weight_by_size[size]
        for j in range(p):
            if mask >> j & 1:
                continue
            v_sj = values.value(mask | (1 << j), p)
            phis[j] += w * (v_sj - v_s)
    mean_score = values.value(0, p)
    final = predictor.score_one(x_new)
    attribution = _attribution_from_phis(
        schema.names, x_new, phis, mean_score, final, baseline_mode, SHAPLEY_EXACT
    )
    return ShapleyEstimate(attribution=attribution)


def shapley_sampled(
    predictor: Predictor,
    dataset: Dataset,
    x_new: Sequence[Cell],
    n_permutations: int,
    rng: np.random.Generator,
    baseline_mode: str = BASELINE_ZERO,
) -> ShapleyEstimate:
    """Permutation-sampling Shapley estimate.

    Each drawn permutation contributes one marginal value per feature;
    per-feature standard errors are sample std / sqrt(n_permutations).
    The means are then nudged to exact-sum consistency by spreading the
    residual f(x_new) - mean_score - sum(phi) proportionally to |phi|;
    the pre-adjustment means are reported alongside.
    """
    if n_permutations < 2:
        raise ModelError("need at least 2 permutations")
    schema = dataset.schema()
    x_new = schema.validate_observation(x_new)
    p = schema.n_features
    values = _SubsetValues(predictor, dataset, x_new)
    marginals = np.zeros((n_permutations, p))
    for t in range(n_permutations):
        order = rng.permutation(p)
        mask = 0
        prev = values.value(0, p)
        for j in order:
            mask |= 1 << int(j)
            cur = values.value(mask, p)
            marginals[t, j] = cur - prev
            prev = cur
    phis = marginals.mean(axis=0)
    std_errors = marginals.std(axis=0, ddof=1) / math.sqrt(n_permutations)
    mean_score = values.value(0, p)
    final = predictor.score_one(x_new)
    residual = (final - mean_score) - float(phis.sum())
    adjusted = phis.copy()
    total_abs = float(np.abs(phis).sum())
    if total_abs > 0.0:
        adjusted += residual * np.abs(phis) / total_abs
    elif p:
        adjusted += residual / p
    attribution = _attribution_from_phis(
        schema.names, x_new, adjusted, mean_score, final, baseline_mode, SHAPLEY_SAMPLED
    )
    return ShapleyEstimate(
        attribution=attribution,
        std_errors=std_errors,
        n_permutations=n_permutations,
        unadjusted=phis,
    )
