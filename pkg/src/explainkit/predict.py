"""Scoring-function abstraction plus self-contained trainers.

Every predictor scores batches given as feature columns (one array per
feature) so the relaxation machinery can swap whole columns cheaply. Row
oriented entry points are thin wrappers over the column path.

Built-in kinds: ordinary least squares (with standard errors), RBF kernel
ridge, constant, and an external subprocess scorer speaking a CSV
stdin/stdout protocol.
"""

from __future__ import annotations

import csv
import io
import subprocess
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ModelError, SchemaError, ScorerError
from .tabular import NUMERIC, Cell, Dataset, FeatureSchema


def _columns_from_rows(schema: FeatureSchema, rows: Sequence[Sequence[Cell]]) -> list[np.ndarray]:
    normalized = [schema.validate_observation(r) for r in rows]
    cols: list[np.ndarray] = []
    for j, kind in enumerate(schema.kinds):
        cells = [r[j] for r in normalized]
        if kind == NUMERIC:
            cols.append(np.array(cells, dtype=float))
        else:
            cols.append(np.array(cells, dtype=object))
    return cols


class Predictor:
    """Base class: a deterministic scoring function over feature rows."""

    schema: FeatureSchema

    def score_columns(self, columns: Sequence[np.ndarray]) -> np.ndarray:
        raise NotImplementedError

    def score_rows(self, rows: Sequence[Sequence[Cell]]) -> np.ndarray:
        """Score a batch of observations; empty batches yield an empty array."""
        if len(rows) == 0:
            return np.empty(0, dtype=float)
        scores = self.score_columns(_columns_from_rows(self.schema, rows))
        if not np.all(np.isfinite(scores)):
            raise ModelError("predictor produced non-finite scores")
        return scores

    def score_one(self, obs: Sequence[Cell]) -> float:
        return float(self.score_rows([obs])[0])

    def _check_columns(self, columns: Sequence[np.ndarray]) -> int:
        if len(columns) != self.schema.n_features:
            raise SchemaError(
                f"batch has {len(columns)} columns, schema expects {self.schema.n_features}"
            )
        lengths = {len(c) for c in columns}
        if len(lengths) > 1:
            raise SchemaError(f"batch columns have differing lengths: {sorted(lengths)}")
        return lengths.pop() if lengths else 0


def score(predictor: Predictor, rows: Sequence[Sequence[Cell]]) -> list[float]:
    """Score observations; one finite real per row, order preserved."""
    return [float(v) for v in predictor.score_rows(rows)]


# ---------------------------------------------------------------------------
# encoding


@dataclass(frozen=True)
class Encoder:
    """Maps feature cells to a real design vector.

    Numeric features pass through; each categorical feature becomes
    level-indicator columns with one reference level dropped to keep the
    design full rank.
    """

    schema: FeatureSchema
    reference_levels: tuple[str | None, ...]
    encoded_names: tuple[str, ...]
    feature_of_encoded: tuple[int, ...]

    @classmethod
    def for_schema(
        cls, schema: FeatureSchema, reference: dict[str, str] | None = None
    ) -> "Encoder":
        reference = reference or {}
        refs: list[str | None] = []
        names: list[str] = []
        owners: list[int] = []
        for j, (name, kind, levels) in enumerate(
            zip(schema.names, schema.kinds, schema.levels)
        ):
            if kind == NUMERIC:
                refs.append(None)
                names.append(name)
                owners.append(j)
            else:
                ref = reference.get(name, levels[0])
                if ref not in levels:
                    raise SchemaError(
                        f"reference level {ref!r} not among levels of {name!r}"
                    )
                refs.append(ref)
                for lv in levels:
                    if lv == ref:
                        continue
                    names.append(f"{name}={lv}")
                    owners.append(j)
        return cls(schema, tuple(refs), tuple(names), tuple(owners))

    @property
    def n_encoded(self) -> int:
        return len(self.encoded_names)

    def encode_columns(self, columns: Sequence[np.ndarray]) -> np.ndarray:
        n = len(columns[0]) if columns else 0
        out = np.empty((n, self.n_encoded), dtype=float)
        k = 0
        for j, (kind, levels, ref) in enumerate(
            zip(self.schema.kinds, self.schema.levels, self.reference_levels)
        ):
            if kind == NUMERIC:
                out[:, k] = np.asarray(columns[j], dtype=float)
                k += 1
            else:
                col = columns[j]
                for lv in levels:
                    if lv == ref:
                        continue
                    out[:, k] = np.fromiter(
                        (1.0 if c == lv else 0.0 for c in col), dtype=float, count=n
                    )
                    k += 1
        return out

    def encode_observation(self, obs: Sequence[Cell]) -> np.ndarray:
        obs = self.schema.validate_observation(obs)
        cols = [
            np.array([v], dtype=float if kind == NUMERIC else object)
            for v, kind in zip(obs, self.schema.kinds)
        ]
        return self.encode_columns(cols)[0]


# ---------------------------------------------------------------------------
# linear model


@dataclass(frozen=True, eq=False)
class LinearModel(Predictor):
    """Additive model: score = intercept + coefficients . encoded(features).

    `feature_means` are the training means of the encoded design columns;
    they anchor the mean-centered attribution of additive scores. Standard
    errors (one per slope coefficient) are present for least-squares fits
    and None for penalized fits.
    """

    schema: FeatureSchema
    encoder: Encoder
    intercept: float
    coefficients: np.ndarray
    feature_means: np.ndarray
    std_errors: np.ndarray | None = None
    intercept_std_error: float | None = None
    residual_variance: float | None = None

    def __post_init__(self):
        k = len(self.coefficients)
        if len(self.feature_means) != k:
            raise ModelError("coefficient and mean vectors differ in length")
        if self.std_errors is not None:
            if len(self.std_errors) != k:
                raise ModelError("coefficient and standard-error vectors differ in length")
            if np.any(np.asarray(self.std_errors) < 0):
                raise ModelError("standard errors must be nonnegative")

    def score_columns(self, columns: Sequence[np.ndarray]) -> np.ndarray:
        self._check_columns(columns)
        design = self.encoder.encode_columns(columns)
        return self.intercept + design @ self.coefficients


def _qr_least_squares(design: np.ndarray, y: np.ndarray, names: Sequence[str]):
    """Solve min ||y - design b|| via Householder QR; detects rank deficiency.

    Returns (beta, stderr, residual_variance). Normal equations are never
    formed; the covariance uses the triangular factor directly.
    """
    n, k = design.shape
    q, r = np.linalg.qr(design, mode="reduced")
    diag = np.abs(np.diag(r))
    tol = max(n, k) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    deficient = np.nonzero(diag <= tol)[0]
    if deficient.size:
        raise ModelError(
            f"design matrix is rank deficient at column {names[deficient[0]]!r}"
        )
    beta = np.linalg.solve(r, q.T @ y)
    residuals = y - design @ beta
    df = n - k
    sigma2 = float(residuals @ residuals) / df if df > 0 else 0.0
    rinv = np.linalg.solve(r, np.eye(k))
    cov = sigma2 * (rinv @ rinv.T)
    stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return beta, stderr, sigma2


def fit_ols(
    dataset: Dataset,
    response: int,
    reference_levels: dict[str, str] | None = None,
) -> LinearModel:
    """Least-squares linear model of the response on all feature columns.

    Categorical features are one-hot encoded against `reference_levels`
    (first observed level by default). Standard errors use the unbiased
    residual variance. Raises ModelError when rows are too few or the
    encoded design is rank deficient (the offending column is named).
    """
    if dataset.response_index is not None and response != dataset.response_index:
        raise ModelError("response argument disagrees with the dataset's response column")
    resp_col = dataset.columns[response]
    if resp_col.kind != NUMERIC:
        raise ModelError(f"response column {resp_col.name!r} must be numeric")
    schema = (
        dataset.schema()
        if dataset.response_index == response
        else Dataset(dataset.columns, response).schema()
    )
    encoder = Encoder.for_schema(schema, reference_levels)
    feature_cols = [
        dataset.columns[i].values
        for i in range(len(dataset.columns))
        if i != response
    ]
    encoded = encoder.encode_columns(feature_cols)
    n, k = encoded.shape
    if n <= k + 1:
        raise ModelError(f"need more than {k + 1} rows to fit {k} encoded features, got {n}")
    design = np.hstack([np.ones((n, 1)), encoded])
    y = resp_col.values
    beta, stderr, sigma2 = _qr_least_squares(
        design, y, ["(intercept)", *encoder.encoded_names]
    )
    return LinearModel(
        schema=schema,
        encoder=encoder,
        intercept=float(beta[0]),
        coefficients=beta[1:],
        feature_means=encoded.mean(axis=0),
        std_errors=stderr[1:],
        intercept_std_error=float(stderr[0]),
        residual_variance=sigma2,
    )


# ---------------------------------------------------------------------------
# kernel ridge


@dataclass(frozen=True, eq=False)
class KernelRidgePredictor(Predictor):
    """RBF kernel ridge regressor with frozen training statistics.

    Features are standardized by the stored training means and standard
    deviations; responses are centered so predictions shrink toward the
    training mean as the ridge grows.
    """

    schema: FeatureSchema
    train_standardized: np.ndarray
    feature_means: np.ndarray
    feature_scales: np.ndarray
    dual_weights: np.ndarray
    response_mean: float
    gamma: float
    ridge: float

    def score_columns(self, columns: Sequence[np.ndarray]) -> np.ndarray:
        self._check_columns(columns)
        x = np.column_stack([np.asarray(c, dtype=float) for c in columns])
        z = (x - self.feature_means) / self.feature_scales
        sq = (
            np.sum(z * z, axis=1)[:, None]
            + np.sum(self.train_standardized * self.train_standardized, axis=1)[None, :]
            - 2.0 * z @ self.train_standardized.T
        )
        k = np.exp(-self.gamma * np.maximum(sq, 0.0))
        return self.response_mean + k @ self.dual_weights


def fit_kernel_ridge(
    dataset: Dataset, response: int, gamma: float, ridge: float
) -> KernelRidgePredictor:
    """Fit dual weights (K + ridge I)^-1 (y - mean y) with an RBF kernel."""
    if gamma <= 0 or ridge <= 0:
        raise ModelError("gamma and ridge must be positive")
    resp_col = dataset.columns[response]
    if resp_col.kind != NUMERIC:
        raise ModelError(f"response column {resp_col.name!r} must be numeric")
    feature_cols = []
    names = []
    for i in range(len(dataset.columns)):
        if i == response:
            continue
        col = dataset.columns[i]
        if col.kind != NUMERIC:
            raise ModelError(f"kernel ridge requires numeric features, {col.name!r} is categorical")
        feature_cols.append(col.values)
        names.append(col.name)
    schema = (
        dataset.schema()
        if dataset.response_index == response
        else Dataset(dataset.columns, response).schema()
    )
    x = np.column_stack(feature_cols)
    means = x.mean(axis=0)
    scales = x.std(axis=0)
    scales = np.where(scales == 0.0, 1.0, scales)
    z = (x - means) / scales
    sq = (
        np.sum(z * z, axis=1)[:, None]
        + np.sum(z * z, axis=1)[None, :]
        - 2.0 * z @ z.T
    )
    kmat = np.exp(-gamma * np.maximum(sq, 0.0))
    y = resp_col.values
    y_mean = float(y.mean())
    try:
        alpha = np.linalg.solve(kmat + ridge * np.eye(len(y)), y - y_mean)
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"kernel system could not be solved: {exc}") from exc
    return KernelRidgePredictor(
        schema=schema,
        train_standardized=z,
        feature_means=means,
        feature_scales=scales,
        dual_weights=alpha,
        response_mean=y_mean,
        gamma=gamma,
        ridge=ridge,
    )


# ---------------------------------------------------------------------------
# constant


@dataclass(frozen=True, eq=False)
class ConstantPredictor(Predictor):
    schema: FeatureSchema
    value: float

    def score_columns(self, columns: Sequence[np.ndarray]) -> np.ndarray:
        n = self._check_columns(columns)
        return np.full(n, self.value, dtype=float)


# ---------------------------------------------------------------------------
# external subprocess scorer


def _format_cell(v: Cell) -> str:
    if isinstance(v, str):
        return v
    f = float(v)
    return repr(int(f)) if f.is_integer() and abs(f) < 1e16 else repr(f)


@dataclass(frozen=True, eq=False)
class ExternalPredictor(Predictor):
    """Scores rows by spawning a command once per batch.

    Wire protocol: the command receives a header line of feature names
    joined by commas, then one CSV row per observation (decimal-point
    numerics, unquoted; labels quoted only when necessary), with a trailing
    newline. It must print one decimal score per line on stdout, in row
    order, and exit 0.
    """

    schema: FeatureSchema
    command: tuple[str, ...]

    def score_columns(self, columns: Sequence[np.ndarray]) -> np.ndarray:
        n = self._check_columns(columns)
        if n == 0:
            return np.empty(0, dtype=float)
        buf = io.StringIO()
        writer = csv.writer(buf, delimiter=",", lineterminator="\n")
        writer.writerow(self.schema.names)
        for i in range(n):
            writer.writerow([_format_cell(col[i]) for col in columns])
        try:
            proc = subprocess.run(
                list(self.command),
                input=buf.getvalue(),
                capture_output=True,
                text=True,
            )
        except OSError as exc:
            raise ScorerError(f"cannot spawn {self.command[0]!r}: {exc}") from exc
        if proc.returncode != 0:
            raise ScorerError(
                f"scorer {self.command[0]!r} failed",
                exit_status=proc.returncode,
                stderr_text=proc.stderr,
            )
        lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
        if len(lines) != n:
            raise ScorerError(
                f"scorer returned {len(lines)} scores for {n} rows",
                exit_status=proc.returncode,
                stderr_text=proc.stderr,
            )
        out = np.empty(n, dtype=float)
        for i, ln in enumerate(lines):
            try:
                out[i] = float(ln)
            except ValueError:
                raise ScorerError(
                    f"unparsable score line {ln!r}",
                    exit_status=proc.returncode,
                    stderr_text=proc.stderr,
                )
        if not np.all(np.isfinite(out)):
            raise ScorerError("scorer produced non-finite scores")
        return out


def external_scorer(command: Sequence[str], schema: FeatureSchema) -> ExternalPredictor:
    """Wrap an executable (plus args) as a Predictor over the given schema."""
    if not command:
        raise ScorerError("external scorer command is empty")
    return ExternalPredictor(schema=schema, command=tuple(command))
