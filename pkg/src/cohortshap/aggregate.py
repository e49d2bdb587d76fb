"""Global sensitivity: variance Shapley, its per-subject disaggregation, and
panel exports of per-subject attributions ordered by prediction.

The all-targets cohort sweep is the hot path: per chunk of targets it builds
match-pattern histograms against every subject, superset-sums them into
cohort count/sum tables and contracts the value tables straight into Shapley
vectors, so no subset is ever rescanned row by row.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, DatasetError
from .games import (
    TABLE_D_CAP,
    make_abs2_game,
    make_abs_game,
    make_bs2_game,
    make_bs_game,
    make_var_game,
)
from .shapley import _phi_from_tables, shapley_exact, shapley_permutation
from .similarity import cohort_table_chunks, resolve_rules

TARGET_CHUNK = 256


@dataclass(frozen=True)
class GlobalAttribution:
    """Shapley split of the explained variance over features, optionally with
    the per-subject squared-cohort rows it averages."""

    phi_var: np.ndarray
    total_variance: float
    method: str
    per_subject: np.ndarray | None = None


@dataclass(frozen=True)
class Panel:
    """Per-subject attribution bars with the prediction-sorted ordering."""

    ordering: np.ndarray
    bars: np.ndarray
    overlay: np.ndarray
    method: str
    feature_names: tuple[str, ...]


def cohort_value_sweep(ds: Dataset, rules, targets=None, squared: bool = False):
    """Cohort value tables (targets x 2^d) for many targets at once."""
    if ds.d > TABLE_D_CAP:
        raise DatasetError(f"d={ds.d} too large for the dense cohort sweep")
    resolved = resolve_rules(rules, ds)
    if targets is None:
        targets = np.arange(ds.n)
    targets = np.asarray(targets, dtype=np.intp)
    out = np.empty((len(targets), 1 << ds.d))
    for s, tables in cohort_table_chunks(
        ds, resolved, targets, squared, chunk_size=TARGET_CHUNK
    ):
        out[s : s + len(tables)] = tables
    return out


def cs_attribution_sweep(ds: Dataset, rules, targets=None, squared: bool = False):
    """Exact cohort-Shapley rows for many targets: (phi matrix, totals)."""
    tables = cohort_value_sweep(ds, rules, targets, squared=squared)
    phi = _phi_from_tables(tables, ds.d)
    return phi, tables[:, -1].copy()


def variance_shapley(
    ds: Dataset,
    rules,
    engine: str = "exact",
    permutations: int = 1000,
    seed: int = 0,
) -> GlobalAttribution:
    """Shapley split of the variance explained by refining on each feature."""
    game = make_var_game(ds, rules)
    if engine == "exact":
        att = shapley_exact(game)
    elif engine == "mc":
        att = shapley_permutation(game, permutations, seed)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return GlobalAttribution(phi_var=att.phi, total_variance=att.total, method="var")


def aggregate_squared_cs(ds: Dataset, rules) -> GlobalAttribution:
    """Average the squared cohort rows of every subject; by additivity this
    reproduces the variance Shapley feature by feature."""
    phi, totals = cs_attribution_sweep(ds, rules, squared=True)
    return GlobalAttribution(
        phi_var=phi.mean(axis=0),
        total_variance=float(totals.mean()),
        method="cs2-aggregate",
        per_subject=phi,
    )


def export_panel(
    ds: Dataset,
    rules=None,
    method: str = "cs",
    model=None,
    baseline="mean",
    engine: str = "exact",
    permutations: int = 1000,
    seed: int = 0,
) -> Panel:
    """Per-subject attributions for one method, ordered by prediction.

    The overlay is each subject's prediction minus the grand mean, the
    quantity the cohort rows decompose when the full cohort is a singleton.
    """
    if method in ("cs", "cs2"):
        if rules is None:
            raise DatasetError("cohort methods need similarity rules")
        bars, _ = cs_attribution_sweep(ds, rules, squared=method == "cs2")
    elif method in ("bs", "bs2", "abs", "abs2"):
        if model is None:
            raise DatasetError(f"method {method!r} needs a model")
        maker = {
            "bs": lambda t: make_bs_game(ds, t, baseline, model),
            "bs2": lambda t: make_bs2_game(ds, t, baseline, model),
            "abs": lambda t: make_abs_game(ds, t, model),
            "abs2": lambda t: make_abs2_game(ds, t, model),
        }[method]
        rows = []
        for t in range(ds.n):
            game = maker(t)
            att = (
                shapley_exact(game)
                if engine == "exact"
                else shapley_permutation(game, permutations, seed)
            )
            rows.append(att.phi)
        bars = np.array(rows)
    else:
        raise DatasetError(f"method {method!r} has no per-subject panel")
    y = ds.y
    overlay = y - y.mean()
    ordering = np.argsort(y, kind="stable")
    return Panel(
        ordering=ordering,
        bars=bars,
        overlay=overlay,
        method=method,
        feature_names=tuple(ds.names),
    )


def write_panel_csv(panel: Panel, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "subject", *panel.feature_names, "overlay"])
        for rank, subject in enumerate(panel.ordering):
            writer.writerow(
                [
                    rank,
                    int(subject),
                    *(repr(float(v)) for v in panel.bars[subject]),
                    repr(float(panel.overlay[subject])),
                ]
            )
