"""Shared fixtures: the T8 toy, random datasets, and the optional real-data
files under data/ (large public tables are not committed; tests that need
them are skipped when the files are absent)."""

import csv
import itertools
from pathlib import Path

import numpy as np
import pytest

from cohortshap import ColumnSchema, Dataset, attach_predictions

REPO = Path(__file__).resolve().parent.parent
DATA = REPO / "data"

TITANIC_PREDICTORS = ["pclass", "sex", "age", "sibsp", "parch", "fare"]
TITANIC_KINDS = ["categorical", "binary", "numeric", "categorical", "categorical", "numeric"]
BOSTON_PREDICTORS = [
    "crim", "zn", "indus", "chas", "nox", "rm", "age",
    "dis", "rad", "tax", "ptratio", "b", "lstat",
]


def t8_dataset() -> Dataset:
    X = np.array(list(itertools.product([0, 1], repeat=3)), dtype=float)[:, ::-1]
    y = 2.0 * X[:, 0] + X[:, 1]
    schema = tuple(ColumnSchema(f"x{j + 1}", "binary") for j in range(3))
    return attach_predictions(Dataset(schema=schema, X=X), y)


def t8_target(ds: Dataset) -> int:
    return int(np.where((ds.X == 1).all(axis=1))[0][0])


@pytest.fixture
def t8():
    return t8_dataset()


def random_dataset(n: int, d: int, seed: int, n_binary: int = 0) -> Dataset:
    """Numeric columns from a correlated Gaussian, optional binary columns."""
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(n, 1))
    X = 0.6 * base + rng.normal(size=(n, d))
    kinds = ["numeric"] * d
    for j in range(n_binary):
        X[:, j] = (X[:, j] > 0).astype(float)
        kinds[j] = "binary"
    schema = tuple(ColumnSchema(f"c{j}", kinds[j]) for j in range(d))
    y = rng.normal(size=n) + X @ rng.normal(size=d)
    return attach_predictions(Dataset(schema=schema, X=X), y)


def _read_raw(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader)]
        return header, list(reader)


def load_titanic():
    """The 1045 complete passenger records, or None when data/titanic3.csv
    is absent. Returns (dataset-with-model-free-columns, survived labels)."""
    path = DATA / "titanic3.csv"
    if not path.exists():
        return None
    header, rows = _read_raw(path)
    cols = TITANIC_PREDICTORS + ["survived"]
    idx = [header.index(c) for c in cols]
    complete = [
        [row[i].strip() for i in idx]
        for row in rows
        if all(row[i].strip() != "" for i in idx)
    ]
    raw = np.empty((len(complete), len(cols)))
    sex_codes = {"male": 0.0, "female": 1.0}
    for r, row in enumerate(complete):
        for c, cell in enumerate(row):
            if cols[c] == "sex" and cell in sex_codes:
                raw[r, c] = sex_codes[cell]
            else:
                raw[r, c] = float(cell)
    schema = tuple(
        ColumnSchema(name, kind)
        for name, kind in zip(TITANIC_PREDICTORS, TITANIC_KINDS)
    )
    ds = Dataset(schema=schema, X=raw[:, :-1].copy())
    return ds, raw[:, -1].copy()


def load_boston():
    """The 506-row housing table, or None when data/boston.csv is absent.
    Returns (dataset, response medv)."""
    path = DATA / "boston.csv"
    if not path.exists():
        return None
    header, rows = _read_raw(path)
    alias = {"black": "b", "lstat": "lstat", "medv": "medv"}
    header = [alias.get(h, h) for h in header]
    cols = BOSTON_PREDICTORS + ["medv"]
    idx = [header.index(c) for c in cols]
    raw = np.array([[float(row[i]) for i in idx] for row in rows])
    schema = tuple(ColumnSchema(name, "numeric") for name in BOSTON_PREDICTORS)
    ds = Dataset(schema=schema, X=raw[:, :-1].copy())
    return ds, raw[:, -1].copy()


def titanic_shaped_surrogate(seed: int = 7):
    """A synthetic table with the Titanic's exact shape (1045 rows, four
    discrete predictors, two continuous) for scale-dependent checks that do
    not assert real-data numbers."""
    rng = np.random.default_rng(seed)
    n = 1045
    pclass = rng.choice([1.0, 2.0, 3.0], size=n, p=[0.25, 0.25, 0.5])
    sex = rng.choice([0.0, 1.0], size=n, p=[0.64, 0.36])
    age = np.clip(rng.normal(30, 13, size=n), 0.2, 80).round(1)
    sibsp = rng.choice(np.arange(6.0), size=n, p=[0.68, 0.22, 0.05, 0.02, 0.02, 0.01])
    parch = rng.choice(np.arange(6.0), size=n, p=[0.76, 0.12, 0.08, 0.02, 0.01, 0.01])
    fare = np.round(np.exp(rng.normal(2.9, 0.9, size=n)) * (4 - pclass), 4)
    X = np.column_stack([pclass, sex, age, sibsp, parch, fare])
    schema = tuple(
        ColumnSchema(name, kind)
        for name, kind in zip(TITANIC_PREDICTORS, TITANIC_KINDS)
    )
    eta = -1.2 + 1.9 * sex - 0.9 * (pclass - 2) - 0.02 * (age - 30) + 0.004 * fare
    y = 1.0 / (1.0 + np.exp(-eta))
    labels = (rng.random(n) < y).astype(float)
    return attach_predictions(Dataset(schema=schema, X=X), y), labels
