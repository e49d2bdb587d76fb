"""The seven coalition value functions.

Cohort games (cs, cs2, var) read only observed predictions through cohort
means; baseline-style games (bs, bs2, abs, abs2) query a model at hybrid
points. Every game maps a feature-subset bitmask to a real value with
value(empty) = 0, caches what it has evaluated, and batches model calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, DatasetError
from .models import ModelAdapter, predict
from .similarity import (
    SimilarityMatrix,
    cohort_means_table,
    cohort_table_chunks,
    resolve_rules,
    similarity_row,
    subset_int,
)

# Above this dimension a full 2^d table is not materialized and cohort games
# fall back to filtering match patterns per requested subset.
TABLE_D_CAP = 20

# Batched model evaluations are chunked to roughly this many points.
POINT_CHUNK = 1 << 22


class Game:
    """A coalition value function over subsets of 1..d features."""

    def __init__(self, d: int, method: str, target: int | None = None):
        if d < 1:
            raise ValueError("games need at least one feature")
        self.d = d
        self.method = method
        self.target = target
        self._memo: dict[int, float] = {0: 0.0}
        self._table: np.ndarray | None = None

    # subclasses implement batch evaluation of integer subset masks
    def _evaluate_many(self, masks: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def full_mask(self) -> int:
        return (1 << self.d) - 1

    def value(self, u) -> float:
        return float(self.values([subset_int(u, self.d)])[0])

    def values(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        if self._table is not None:
            return self._table[masks]
        missing = [int(m) for m in np.unique(masks) if int(m) not in self._memo]
        if missing:
            got = self._evaluate_many(np.array(missing, dtype=np.int64))
            self._memo.update(zip(missing, map(float, got)))
        return np.array([self._memo[int(m)] for m in masks])

    def value_table(self) -> np.ndarray:
        """Values of every subset, indexed by bitmask. Requires d <= TABLE_D_CAP."""
        if self._table is None:
            if self.d > TABLE_D_CAP:
                raise ValueError(
                    f"d={self.d} is too large for a full 2^d value table"
                )
            self._table = self.values(np.arange(1 << self.d))
        return self._table

    @property
    def total(self) -> float:
        return self.value(self.full_mask)


class TableGame(Game):
    """Game backed by an explicit 2^d value array (entry 0 must be 0)."""

    def __init__(self, table: np.ndarray, method: str, target: int | None = None):
        table = np.array(table, dtype=float)
        d = int(table.size).bit_length() - 1
        if 1 << d != table.size:
            raise ValueError(f"table size {table.size} is not a power of two")
        super().__init__(d, method, target)
        table[0] = 0.0
        self._table = table


class _CohortGame(Game):
    def __init__(self, ds: Dataset, Z: SimilarityMatrix, t: int, squared: bool):
        method = "cs2" if squared else "cs"
        super().__init__(Z.d, method, t)
        self.squared = squared
        if self.d <= TABLE_D_CAP:
            means = cohort_means_table(Z, ds.y)
            table = means - means[0]
            if squared:
                table = table * table
            table[0] = 0.0
            self._table = table
        else:
            self._codes = Z.patterns()
            self._y = ds.y
            self._grand = float(ds.y.mean())

    def _evaluate_many(self, masks: np.ndarray) -> np.ndarray:
        out = np.empty(len(masks))
        for k, m in enumerate(masks):
            sel = (self._codes & m) == m
            v = float(self._y[sel].mean()) - self._grand
            out[k] = v * v if self.squared else v
        return out


def make_cs_game(ds: Dataset, Z: SimilarityMatrix, t: int) -> Game:
    """Cohort refinement values: mean prediction of C_{t,u} minus the grand mean."""
    if ds.predictions is None:
        raise DatasetError("cohort games need predictions attached")
    return _CohortGame(ds, Z, t, squared=False)


def make_cs2_game(ds: Dataset, Z: SimilarityMatrix, t: int) -> Game:
    """Squared cohort refinement values, the per-subject share of variance."""
    if ds.predictions is None:
        raise DatasetError("cohort games need predictions attached")
    return _CohortGame(ds, Z, t, squared=True)


@dataclass(frozen=True)
class BaselinePoint:
    """A d-vector of baseline predictor levels; need not be an observed row
    (the mean of a binary column lands strictly between its levels)."""

    values: tuple[float, ...]

    @classmethod
    def mean_of(cls, ds: Dataset) -> "BaselinePoint":
        return cls(tuple(float(v) for v in ds.X.mean(axis=0)))

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def _baseline_array(baseline, ds: Dataset) -> np.ndarray:
    if isinstance(baseline, BaselinePoint):
        arr = baseline.array()
    elif isinstance(baseline, str) and baseline == "mean":
        arr = BaselinePoint.mean_of(ds).array()
    else:
        arr = np.asarray(baseline, dtype=float)
    if arr.shape != (ds.d,):
        raise DatasetError(f"baseline has shape {arr.shape}, want ({ds.d},)")
    return arr


def _take_matrix(masks: np.ndarray, d: int) -> np.ndarray:
    return (masks[:, None] >> np.arange(d, dtype=np.int64)[None, :] & 1).astype(bool)


class _BaselineGame(Game):
    def __init__(self, ds, t, baseline, model, squared):
        super().__init__(ds.d, "bs2" if squared else "bs", t)
        self.squared = squared
        self.model = model
        self.x_t = ds.X[t].copy()
        self.x_b = _baseline_array(baseline, ds)
        self.f_b = float(predict(model, self.x_b[None, :])[0])

    def hybrid_points(self, masks: np.ndarray) -> np.ndarray:
        take = _take_matrix(np.asarray(masks, dtype=np.int64), self.d)
        return np.where(take, self.x_t[None, :], self.x_b[None, :])

    def _evaluate_many(self, masks: np.ndarray) -> np.ndarray:
        diff = predict(self.model, self.hybrid_points(masks)) - self.f_b
        return diff * diff if self.squared else diff


def make_bs_game(ds: Dataset, t: int, baseline, model: ModelAdapter) -> Game:
    """Baseline values: model output at the target/baseline hybrid minus the
    baseline prediction; one model call per coalition."""
    return _BaselineGame(ds, t, baseline, model, squared=False)


def make_bs2_game(ds: Dataset, t: int, baseline, model: ModelAdapter) -> Game:
    """Squared per-coalition baseline differences."""
    return _BaselineGame(ds, t, baseline, model, squared=True)


class _AllBaselineGame(Game):
    def __init__(self, ds, t, model, squared):
        super().__init__(ds.d, "abs2" if squared else "abs", t)
        self.squared = squared
        self.model = model
        self.X = ds.X
        self.x_t = ds.X[t].copy()
        self.y_base = predict(model, ds.X)

    def hybrid_points(self, masks: np.ndarray) -> np.ndarray:
        """Hybrids of the target with every row as baseline: (len(masks), n, d)."""
        take = _take_matrix(np.asarray(masks, dtype=np.int64), self.d)
        return np.where(take[:, None, :], self.x_t[None, None, :], self.X[None, :, :])

    def _evaluate_many(self, masks: np.ndarray) -> np.ndarray:
        n = self.X.shape[0]
        chunk = max(1, POINT_CHUNK // (n * self.d))
        out = np.empty(len(masks))
        for s in range(0, len(masks), chunk):
            block = masks[s : s + chunk]
            pts = self.hybrid_points(block).reshape(-1, self.d)
            diff = predict(self.model, pts).reshape(len(block), n) - self.y_base
            if self.squared:
                diff = diff * diff
            out[s : s + len(block)] = diff.mean(axis=1)
        return out


def make_abs_game(ds: Dataset, t: int, model: ModelAdapter) -> Game:
    """Baseline values averaged over every observed row as the baseline."""
    return _AllBaselineGame(ds, t, model, squared=False)


def make_abs2_game(ds: Dataset, t: int, model: ModelAdapter) -> Game:
    """Mean squared per-baseline differences over every observed row."""
    return _AllBaselineGame(ds, t, model, squared=True)


def make_var_game(ds: Dataset, rules) -> Game:
    """Explained-variance values: the subject average of squared cohort values."""
    if ds.predictions is None:
        raise DatasetError("the variance game needs predictions attached")
    resolved = resolve_rules(rules, ds)
    if ds.d <= TABLE_D_CAP:
        table = np.zeros(1 << ds.d)
        for _, tables in cohort_table_chunks(
            ds, resolved, np.arange(ds.n), squared=True
        ):
            table += tables.sum(axis=0)
        table /= ds.n
        return TableGame(table, "var")
    return _LazyVarGame(ds, resolved)


class _LazyVarGame(Game):
    def __init__(self, ds, resolved):
        super().__init__(ds.d, "var")
        self.ds = ds
        self.resolved = resolved

    def _evaluate_many(self, masks: np.ndarray) -> np.ndarray:
        out = np.empty(len(masks))
        y = self.ds.y
        grand = float(y.mean())
        for k, m in enumerate(masks):
            acc = 0.0
            for t in range(self.ds.n):
                Z = similarity_row(self.resolved, self.ds, t)
                sel = (Z.patterns() & m) == m
                dev = float(y[sel].mean()) - grand
                acc += dev * dev
            out[k] = acc / self.ds.n
        return out
