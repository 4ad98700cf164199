"""Local surrogate pipeline: neighborhood simulation, black-box scoring,
and white-box fitting.

The neighborhood is built by duplicating the explained observation and
changing at most one feature per copy, drawing replacements from the
feature's empirical distribution. All generated rows count as equally
similar (identity kernel), so the surrogate fit is plain least squares, or
an L1-penalized fit when sparsity is wanted.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DataError, ModelError, SchemaError
from .predict import Encoder, LinearModel, Predictor, fit_ols
from .tabular import (
    CATEGORICAL,
    NUMERIC,
    Cell,
    Column,
    Dataset,
    FeatureSchema,
    empirical_draw,
)


@dataclass(frozen=True, eq=False)
class LocalDataset:
    """Simulated rows around one explained observation.

    Every row differs from `origin` in at most one feature. `response` is
    None until predictions are attached.
    """

    schema: FeatureSchema
    feature_values: tuple[np.ndarray, ...]
    origin: tuple[Cell, ...]
    response_name: str
    seed: int
    response: np.ndarray | None = None

    @property
    def n_rows(self) -> int:
        return len(self.feature_values[0]) if self.feature_values else 0

    def row(self, i: int) -> tuple[Cell, ...]:
        out = []
        for kind, col in zip(self.schema.kinds, self.feature_values):
            v = col[i]
            out.append(float(v) if kind == NUMERIC else str(v))
        return tuple(out)

    def to_dataset(self) -> Dataset:
        """Materialize as a Dataset (response appended when present)."""
        cols = [
            Column(name, kind, vals, levels)
            for name, kind, vals, levels in zip(
                self.schema.names, self.schema.kinds, self.feature_values, self.schema.levels
            )
        ]
        response_index = None
        if self.response is not None:
            cols.append(Column(self.response_name, NUMERIC, self.response))
            response_index = len(cols) - 1
        return Dataset(columns=tuple(cols), response_index=response_index)

    def to_csv(self, delimiter: str = ",") -> str:
        return self.to_dataset().to_csv(delimiter)


@dataclass(frozen=True, eq=False)
class SurrogateFit:
    """White-box model fitted to a local dataset."""

    model: LinearModel
    lambda_: float
    selected_features: tuple[str, ...]
    r2: float


def sample_locally(
    dataset: Dataset,
    x_new: Sequence[Cell],
    response: str,
    size: int,
    seed: int,
) -> LocalDataset:
    """Simulate `size` rows around x_new, one perturbed feature per row.

    With p features and p <= size, row i (i < p) perturbs feature i and the
    remaining rows perturb one uniformly chosen feature each. With p > size,
    a uniform subset of `size` features is drawn first and each row perturbs
    one uniformly chosen feature from that subset. Replacement values come
    from the feature's empirical distribution, so a draw may coincide with
    the original value. Deterministic per seed.
    """
    if size < 0:
        raise DataError("size must be nonnegative")
    names = [c.name for c in dataset.columns]
    if response not in names:
        raise DataError(f"response column {response!r} not found")
    if dataset.response_index is not None and names[dataset.response_index] != response:
        raise DataError("response argument disagrees with the dataset's response column")
    base = (
        dataset
        if dataset.response_index is not None
        else Dataset(dataset.columns, names.index(response))
    )
    schema = base.schema()
    x_new = schema.validate_observation(x_new)
    p = schema.n_features
    rng = np.random.Generator(np.random.PCG64(seed))

    cols: list[np.ndarray] = []
    for kind, v in zip(schema.kinds, x_new):
        if kind == NUMERIC:
            cols.append(np.full(size, float(v), dtype=float))
        else:
            cols.append(np.full(size, v, dtype=object))

    feature_col_index = list(base.feature_indices)

    def perturb(row: int, feature: int) -> None:
        cols[feature][row] = empirical_draw(base, feature_col_index[feature], rng)

    if p <= size:
        for i in range(p):
            perturb(i, i)
        for i in range(p, size):
            perturb(i, int(rng.integers(0, p)))
    else:
        chosen = np.sort(rng.choice(p, size=size, replace=False))
        for i in range(size):
            perturb(i, int(chosen[rng.integers(0, size)]))

    return LocalDataset(
        schema=schema,
        feature_values=tuple(cols),
        origin=tuple(x_new),
        response_name=response,
        seed=seed,
    )


def add_predictions(local: LocalDataset, predictor: Predictor) -> LocalDataset:
    """Attach black-box scores of the simulated rows as the response."""
    if local.response is not None:
        raise DataError("local dataset already carries predictions")
    if predictor.schema != local.schema:
        raise SchemaError("predictor schema does not match the local dataset")
    if local.n_rows == 0:
        scores = np.empty(0, dtype=float)
    else:
        scores = predictor.score_columns(list(local.feature_values))
        if not np.all(np.isfinite(scores)):
            raise ModelError("predictor produced non-finite scores")
    return replace(local, response=np.asarray(scores, dtype=float))


@dataclass(frozen=True, eq=False)
class LassoResult:
    coefficients: np.ndarray
    n_sweeps: int
    objectives: tuple[float, ...]


def _lasso_objective(x: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    r = y - x @ beta
    n = len(y)
    return float(r @ r) / (2.0 * n) + lam * float(np.abs(beta).sum())


def _soft_threshold(z: float, lam: float) -> float:
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


def lasso_coordinate_descent(
    x: np.ndarray,
    y: np.ndarray,
    lambda_: float,
    tol: float = 1e-9,
    max_sweeps: int = 10_000,
) -> LassoResult:
    """Cyclic coordinate descent for min (1/2n)||y - X b||^2 + lambda ||b||_1.

    Expects standardized columns (mean 0, variance 1); the intercept is
    handled by the caller through centering. Stops when the largest
    coefficient change in a sweep falls below `tol`. The penalized objective
    is tracked per sweep and must never increase.
    """
    if lambda_ < 0:
        raise ModelError("lambda must be nonnegative")
    n, k = x.shape
    col_sq = (x * x).sum(axis=0) / n
    beta = np.zeros(k)
    residual = y.astype(float).copy()
    objectives = [_lasso_objective(x, y, beta, lambda_)]
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(k):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            rho = (x[:, j] @ residual) / n + col_sq[j] * old
            new = _soft_threshold(rho, lambda_) / col_sq[j]
            if new != old:
                residual += x[:, j] * (old - new)
                beta[j] = new
            max_delta = max(max_delta, abs(new - old))
        obj = _lasso_objective(x, y, beta, lambda_)
        if obj > objectives[-1] + 1e-12 * max(1.0, abs(objectives[-1])):
            raise ModelError(
                f"penalized objective increased in sweep {sweep}: "
                f"{objectives[-1]!r} -> {obj!r}"
            )
        objectives.append(obj)
        if max_delta < tol:
            return LassoResult(beta, sweep, tuple(objectives))
    raise ConvergenceError(
        f"coordinate descent did not converge in {max_sweeps} sweeps",
        last_delta=max_delta,
    )


def _lambda_grid(lambda_max: float, points: int = 50) -> np.ndarray:
    return np.geomspace(lambda_max, 1e-4 * lambda_max, points)


def _cross_validate_lambda(x: np.ndarray, y: np.ndarray, folds: int = 5) -> float:
    """Pick lambda by k-fold CV over a log grid from lambda_max down.

    Fold assignment is row index modulo `folds` (deterministic). Ties in
    validation error prefer the larger lambda.
    """
    n = len(y)
    lambda_max = float(np.max(np.abs(x.T @ (y - y.mean())))) / n
    if lambda_max == 0.0:
        return 0.0
    grid = _lambda_grid(lambda_max)
    fold_of = np.arange(n) % folds
    best_lam, best_err = None, np.inf
    for lam in grid:
        err = 0.0
        for f in range(folds):
            train = fold_of != f
            val = ~train
            if not val.any() or not train.any():
                continue
            xt, yt = x[train], y[train]
            mu = yt.mean()
            fit = lasso_coordinate_descent(xt, yt - mu, float(lam))
            pred = mu + x[val] @ fit.coefficients
            err += float(np.sum((y[val] - pred) ** 2))
        if err < best_err - 1e-12:
            best_err, best_lam = err, float(lam)
    return best_lam if best_lam is not None else 0.0


def fit_explanation(
    local: LocalDataset,
    white_box: str = "ols",
    lambda_: float | None = None,
) -> SurrogateFit:
    """Fit the white-box model to the simulated rows and their scores.

    All rows carry weight 1. "ols" is unweighted least squares; "lasso"
    solves the L1-penalized problem on standardized features with an
    unpenalized intercept, reporting coefficients on the original scale.
    When lambda is unset for lasso, it is chosen by 5-fold cross-validation.
    Categorical features are one-hot encoded against the explained
    observation's own level.
    """
    if local.response is None:
        raise DataError("attach predictions before fitting an explanation")
    reference = {
        name: str(v)
        for name, kind, v in zip(local.schema.names, local.schema.kinds, local.origin)
        if kind == CATEGORICAL
    }
    dataset = local.to_dataset()

    if white_box == "ols":
        try:
            model = fit_ols_local(dataset, reference)
        except ModelError as exc:
            raise ModelError(
                f"{exc} (local dataset may be degenerate; increase size)"
            ) from exc
        r2 = _r_squared(model, local)
        selected = _nonzero_features(model)
        return SurrogateFit(model=model, lambda_=0.0, selected_features=selected, r2=r2)

    if white_box != "lasso":
        raise ModelError(f"unknown white box {white_box!r}")
    if lambda_ is not None and lambda_ < 0:
        raise ModelError("lambda must be nonnegative")

    encoder = Encoder.for_schema(local.schema, reference)
    encoded = encoder.encode_columns(list(local.feature_values))
    y = local.response
    n = len(y)
    if n < 2:
        raise ModelError("need at least 2 rows to fit a lasso surrogate")
    means = encoded.mean(axis=0)
    scales = encoded.std(axis=0)
    usable = scales > 0
    z = np.zeros_like(encoded)
    z[:, usable] = (encoded[:, usable] - means[usable]) / scales[usable]
    y_mean = float(y.mean())
    if lambda_ is None:
        lambda_ = _cross_validate_lambda(z[:, usable], y)
    fit = lasso_coordinate_descent(z[:, usable], y - y_mean, float(lambda_))
    beta = np.zeros(encoder.n_encoded)
    beta[usable] = fit.coefficients / scales[usable]
    intercept = y_mean - float(means @ beta)
    model = LinearModel(
        schema=local.schema,
        encoder=encoder,
        intercept=intercept,
        coefficients=beta,
        feature_means=means,
        std_errors=None,
        intercept_std_error=None,
        residual_variance=None,
    )
    r2 = _r_squared(model, local)
    selected = _nonzero_features(model)
    return SurrogateFit(
        model=model, lambda_=float(lambda_), selected_features=selected, r2=r2
    )


def fit_ols_local(dataset: Dataset, reference: dict[str, str]) -> LinearModel:
    """Least squares over a local dataset with explicit reference levels."""
    return fit_ols(dataset, dataset.response_index, reference_levels=reference)


def _r_squared(model: LinearModel, local: LocalDataset) -> float:
    y = local.response
    if len(y) == 0:
        raise ModelError("cannot score an empty local dataset")
    pred = model.score_columns(list(local.feature_values))
    rss = float(np.sum((y - pred) ** 2))
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0.0:
        return 1.0 if rss <= 1e-24 else 0.0
    return max(0.0, min(1.0, 1.0 - rss / tss))


def _nonzero_features(model: LinearModel) -> tuple[str, ...]:
    selected = []
    for j, name in enumerate(model.schema.names):
        owned = [
            k for k, owner in enumerate(model.encoder.feature_of_encoded) if owner == j
        ]
        if any(model.coefficients[k] != 0.0 for k in owned):
            selected.append(name)
    return tuple(selected)
