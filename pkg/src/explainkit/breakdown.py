"""Additive attributions of single predictions.

Two routes: a closed-form decomposition for linear models (mean-centered
per-feature terms) and a greedy model-agnostic search that walks the pinned
feature set one step at a time, in either direction, using relaxed
predictions. Both produce the same Attribution record, which always
telescopes: baseline plus the contributions equals the model prediction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SchemaError
from .predict import LinearModel, Predictor
from .relax import DOWN, UP, hybrid_scores
from .tabular import Cell, Dataset

LM_BREAK = "lm-break"
AG_BREAK_UP = "ag-break-up"
AG_BREAK_DOWN = "ag-break-down"

BASELINE_ZERO = "zero"
BASELINE_INTERCEPT = "intercept"

INTERCEPT_ENTRY = "(intercept)"

UP_DISTANCE_TO_BASELINE = "to-baseline"
UP_DISTANCE_TO_FNEW = "to-fnew"


@dataclass(frozen=True)
class AttributionEntry:
    feature: str
    value: Cell | None
    contribution: float


@dataclass(frozen=True)
class Attribution:
    """Decomposition of one prediction into per-feature contributions.

    baseline + sum(contributions) equals final_prediction (up to float
    noise). With the zero baseline, the mean-score mass is carried by an
    explicit "(intercept)" entry rather than the baseline itself.
    """

    method: str
    baseline_mode: str
    baseline: float
    entries: tuple[AttributionEntry, ...]
    final_prediction: float

    def __post_init__(self):
        names = [e.feature for e in self.entries]
        if len(set(names)) != len(names):
            raise SchemaError("attribution entries repeat a feature")

    def contribution_of(self, feature: str) -> float:
        for e in self.entries:
            if e.feature == feature:
                return e.contribution
        raise KeyError(feature)

    def feature_entries(self) -> tuple[AttributionEntry, ...]:
        """Entries excluding the synthetic intercept row, if any."""
        return tuple(e for e in self.entries if e.feature != INTERCEPT_ENTRY)

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "baseline_mode": self.baseline_mode,
            "baseline": self.baseline,
            "entries": [
                {"feature": e.feature, "value": e.value, "contribution": e.contribution}
                for e in self.entries
            ],
            "final_prediction": self.final_prediction,
        }


def _finalize_entries(
    feature_entries: list[AttributionEntry],
    baseline_mode: str,
    mean_score: float,
    final_prediction: float,
    method: str,
) -> Attribution:
    if baseline_mode == BASELINE_INTERCEPT:
        baseline = mean_score
        entries = tuple(feature_entries)
    elif baseline_mode == BASELINE_ZERO:
        baseline = 0.0
        entries = (AttributionEntry(INTERCEPT_ENTRY, None, mean_score), *feature_entries)
    else:
        raise SchemaError(f"unknown baseline mode {baseline_mode!r}")
    return Attribution(
        method=method,
        baseline_mode=baseline_mode,
        baseline=baseline,
        entries=entries,
        final_prediction=final_prediction,
    )


def _by_importance(entries: list[AttributionEntry]) -> list[AttributionEntry]:
    # stable sort: ties keep schema order
    return sorted(entries, key=lambda e: -abs(e.contribution))


def lm_break(
    model: LinearModel,
    x_new: Sequence[Cell],
    baseline_mode: str = BASELINE_ZERO,
) -> Attribution:
    """Closed-form attribution for a linear model.

    Each feature contributes its mean-centered additive term; for
    categorical features the one-hot terms are folded into a single entry.
    Entries are ordered by decreasing |contribution|.
    """
    x_new = model.schema.validate_observation(x_new)
    encoded = model.encoder.encode_observation(x_new)
    per_encoded = (encoded - model.feature_means) * model.coefficients
    contributions = np.zeros(model.schema.n_features)
    for k, owner in enumerate(model.encoder.feature_of_encoded):
        contributions[owner] += per_encoded[k]
    mean_score = model.intercept + float(model.feature_means @ model.coefficients)
    final = model.score_one(x_new)
    entries = [
        AttributionEntry(name, x_new[j], float(contributions[j]))
        for j, name in enumerate(model.schema.names)
    ]
    return _finalize_entries(
        _by_importance(entries), baseline_mode, mean_score, final, LM_BREAK
    )


def ag_break(
    predictor: Predictor,
    dataset: Dataset,
    x_new: Sequence[Cell],
    direction: str = UP,
    baseline_mode: str = BASELINE_ZERO,
    up_distance: str = UP_DISTANCE_TO_BASELINE,
) -> Attribution:
    """Greedy model-agnostic attribution over relaxed predictions.

    Down starts with every feature pinned and repeatedly releases the
    feature whose release moves the relaxed prediction least away from the
    model prediction; the recorded contribution of that feature is the drop
    it caused. Up starts with nothing pinned and repeatedly pins the feature
    that moves the relaxed prediction furthest from the mean score (or from
    the model prediction, with up_distance="to-fnew").

    Entries are listed most-important-first: selection order for Up,
    reverse removal order for Down. Ties always break toward the lowest
    feature index, so results are deterministic.
    """
    schema = dataset.schema()
    x_new = schema.validate_observation(x_new)
    p = schema.n_features
    f_new = predictor.score_one(x_new)

    def rp(fixed: frozenset[int]) -> float:
        return float(np.mean(hybrid_scores(predictor, dataset, x_new, fixed)))

    entries: list[AttributionEntry] = []
    if direction == DOWN:
        fixed = frozenset(range(p))
        current = rp(fixed)
        removal: list[AttributionEntry] = []
        for _ in range(p):
            best_j, best_dist, best_value = -1, np.inf, 0.0
            for j in sorted(fixed):
                candidate = rp(fixed - {j})
                dist = abs(candidate - f_new)
                if dist < best_dist:
                    best_j, best_dist, best_value = j, dist, candidate
            removal.append(
                AttributionEntry(
                    schema.names[best_j], x_new[best_j], current - best_value
                )
            )
            fixed = fixed - {best_j}
            current = best_value
        mean_score = current  # empty pinned set: mean model score
        entries = list(reversed(removal))
    elif direction == UP:
        mean_score = rp(frozenset())
        reference = mean_score if up_distance == UP_DISTANCE_TO_BASELINE else f_new
        if up_distance not in (UP_DISTANCE_TO_BASELINE, UP_DISTANCE_TO_FNEW):
            raise SchemaError(f"unknown up_distance {up_distance!r}")
        fixed: frozenset[int] = frozenset()
        current = mean_score
        for _ in range(p):
            best_j, best_dist, best_value = -1, -np.inf, 0.0
            for j in range(p):
                if j in fixed:
                    continue
                candidate = rp(fixed | {j})
                dist = abs(candidate - reference)
                if dist > best_dist:
                    best_j, best_dist, best_value = j, dist, candidate
            entries.append(
                AttributionEntry(
                    schema.names[best_j], x_new[best_j], best_value - current
                )
            )
            fixed = fixed | {best_j}
            current = best_value
    else:
        raise SchemaError(f"unknown direction {direction!r}")

    method = AG_BREAK_DOWN if direction == DOWN else AG_BREAK_UP
    return _finalize_entries(entries, baseline_mode, mean_score, f_new, method)


def _format_value(v: Cell | None) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    f = round(float(v), 10)
    return repr(int(f)) if f.is_integer() and abs(f) < 1e16 else repr(f)


def attribution_text(attribution: Attribution) -> str:
    """Fixed-width text layout: one row per entry, signed contributions
    right-aligned, a baseline row on top and a final_prognosis row at the
    bottom."""
    rows: list[tuple[str, float]] = [("baseline", attribution.baseline)]
    for e in attribution.entries:
        label = f"+ {e.feature}" if e.value is None else f"+ {e.feature} = {_format_value(e.value)}"
        rows.append((label, e.contribution))
    rows.append(("final_prognosis", attribution.final_prediction))

    label_width = max(len(label) for label, _ in rows)
    number_width = max(len(f"{v:.3f}") for _, v in rows)
    number_width = max(number_width, len("contribution"))
    lines = [f"{'':<{label_width}} {'contribution':>{number_width}}"]
    for label, v in rows:
        number = f"{v:.3f}"
        if number == "-0.000":
            number = "0.000"
        lines.append(f"{label:<{label_width}} {number:>{number_width}}")
    return "\n".join(lines) + "\n"
