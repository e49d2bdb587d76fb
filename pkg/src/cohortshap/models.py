"""Prediction model adapters and a reference logistic-regression fitter.

The external-command protocol is line-oriented and order-preserving: the
query points go to the child's standard input as CSV rows of d decimal
fields, EOF closes the stream, and the child answers with one decimal per
line. A nonzero exit status, a short/garbled reply or a non-finite value is
a model failure.
"""

from __future__ import annotations

import subprocess
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset


class ModelError(RuntimeError):
    """Prediction backend failed or produced unusable output."""


class ConvergenceError(ModelError):
    """Iterative fit did not converge within the iteration cap."""


class PerfectSeparationError(ModelError):
    """Logistic likelihood is unbounded; coefficients diverge."""


@dataclass(frozen=True)
class LinearModel:
    coefficients: tuple[float, ...]
    intercept: float = 0.0


@dataclass(frozen=True)
class LogisticModel:
    coefficients: tuple[float, ...]
    intercept: float = 0.0


@dataclass(frozen=True)
class ExternalCommand:
    command: tuple[str, ...]


ModelAdapter = LinearModel | LogisticModel | ExternalCommand


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _points_csv(points: np.ndarray) -> str:
    lines = [",".join(repr(float(v)) for v in row) for row in points]
    return "\n".join(lines) + "\n"


def _run_external(model: ExternalCommand, points: np.ndarray) -> np.ndarray:
    proc = subprocess.run(
        list(model.command),
        input=_points_csv(points),
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise ModelError(
            f"external model exited {proc.returncode}: {proc.stderr.strip()[:200]}"
        )
    lines = proc.stdout.split()
    if len(lines) != len(points):
        raise ModelError(
            f"external model returned {len(lines)} predictions for {len(points)} points"
        )
    try:
        preds = np.array([float(s) for s in lines])
    except ValueError as exc:
        raise ModelError(f"garbled external model output: {exc}") from None
    return preds


def predict(model: ModelAdapter, points) -> np.ndarray:
    """One prediction per row of ``points``; order-preserving."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(model, (LinearModel, LogisticModel)):
        coef = np.asarray(model.coefficients, dtype=float)
        if points.shape[1] != len(coef):
            raise ModelError(
                f"points have {points.shape[1]} columns, model expects {len(coef)}"
            )
        eta = points @ coef + model.intercept
        preds = _sigmoid(eta) if isinstance(model, LogisticModel) else eta
    else:
        preds = _run_external(model, points)
    if not np.isfinite(preds).all():
        raise ModelError("model produced a non-finite prediction")
    return preds


def fit_logistic(
    ds: Dataset,
    labels,
    iterations: int = 100,
    tolerance: float = 1e-8,
) -> LogisticModel:
    """Maximum-likelihood logistic regression via iteratively reweighted
    least squares on the dataset's value matrix (categorical codes included).
    """
    y = np.asarray(labels, dtype=float)
    if y.shape != (ds.n,):
        raise ModelError(f"labels length {y.shape} incompatible with n={ds.n}")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ModelError("labels must be 0/1")
    if y.min() == y.max():
        raise ModelError("labels are constant; intercept diverges")

    Xa = np.column_stack([ds.X, np.ones(ds.n)])
    beta = np.zeros(ds.d + 1)
    for _ in range(iterations):
        eta = Xa @ beta
        p = _sigmoid(eta)
        w = p * (1.0 - p)
        misclassified = (p >= 0.5) != (y == 1.0)
        if w.max() < 1e-10 and not misclassified.any():
            raise PerfectSeparationError(
                "data are perfectly separated; coefficients diverge"
            )
        w = np.maximum(w, 1e-10)
        hess = Xa.T @ (Xa * w[:, None])
        grad = Xa.T @ (y - p)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        beta = beta + step
        if np.max(np.abs(step)) < tolerance:
            return LogisticModel(tuple(beta[:-1]), float(beta[-1]))
    raise ConvergenceError(f"IRLS did not converge in {iterations} iterations")
