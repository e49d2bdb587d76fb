"""Run configuration: one JSON file, flag overrides win.

Validation happens before any data is loaded or any model process is
spawned, so a bad config never reaches computation.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .dataset import schema_from_json
from .models import ExternalCommand, LinearModel, LogisticModel
from .shapley import EXACT_CAP
from .similarity import (
    AbsoluteThreshold,
    Identity,
    RangeFraction,
    RelativeThreshold,
)

METHODS = ("cs", "cs2", "bs", "bs2", "abs", "abs2", "var")
MODEL_METHODS = ("bs", "bs2", "abs", "abs2")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def rule_from_json(obj):
    if obj is None:
        return Identity()
    kind = obj.get("kind")
    if kind == "identity":
        return Identity()
    if kind == "abs":
        return AbsoluteThreshold(float(obj["delta"]))
    if kind == "range_fraction":
        return RangeFraction(
            float(obj["frac"]),
            float(obj.get("lo_q", 0.0)),
            float(obj.get("hi_q", 1.0)),
        )
    if kind == "relative":
        return RelativeThreshold(float(obj["delta"]))
    raise ConfigError(f"unknown similarity kind {kind!r}")


def rule_to_json(rule) -> dict:
    if isinstance(rule, Identity):
        return {"kind": "identity"}
    if isinstance(rule, AbsoluteThreshold):
        return {"kind": "abs", "delta": rule.delta}
    if isinstance(rule, RangeFraction):
        return {
            "kind": "range_fraction",
            "frac": rule.frac,
            "lo_q": rule.lo_q,
            "hi_q": rule.hi_q,
        }
    if isinstance(rule, RelativeThreshold):
        return {"kind": "relative", "delta": rule.delta}
    raise ConfigError(f"unserializable rule {rule!r}")


def model_from_json(obj):
    """Builtin model specs; returns None for the predictions-file spec."""
    kind = obj.get("kind")
    if kind == "linear":
        return LinearModel(tuple(float(c) for c in obj["coefficients"]),
                           float(obj.get("intercept", 0.0)))
    if kind == "logistic":
        return LogisticModel(tuple(float(c) for c in obj["coefficients"]),
                             float(obj.get("intercept", 0.0)))
    if kind == "external":
        cmd = obj["command"]
        if isinstance(cmd, str):
            raise ConfigError("external command must be an argv list")
        return ExternalCommand(tuple(str(a) for a in cmd))
    if kind == "predictions":
        return None
    raise ConfigError(f"unknown model kind {kind!r}")


@dataclass
class RunConfig:
    data: str | None = None
    schema: object = None  # raw JSON form; parsed on demand
    prediction_column: str | None = None
    similarity: dict = field(default_factory=dict)
    method: str = "cs"
    targets: object = "all"
    engine: str = "exact"
    permutations: int = 1000
    seed: int = 0
    model: dict | None = None
    baseline: object = "mean"
    audit: dict = field(default_factory=dict)
    cube_values: object = None
    out: str = "out"
    threads: int | None = None

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "RunConfig":
        raw = {}
        if path is not None:
            if not os.path.exists(path):
                raise ConfigError(f"config file {path!r} does not exist")
            with open(path, encoding="utf-8") as fh:
                try:
                    raw = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"config {path!r} is not valid JSON: {exc}")
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**raw)

    def parsed_schema(self):
        if self.schema is None:
            raise ConfigError("no schema configured")
        return schema_from_json(self.schema)

    def parsed_targets(self) -> object:
        if self.targets == "all":
            return "all"
        if isinstance(self.targets, str):
            try:
                return [int(t) for t in self.targets.split(",") if t.strip()]
            except ValueError:
                raise ConfigError(f"bad target list {self.targets!r}") from None
        return [int(t) for t in self.targets]

    def rules_for(self, schema) -> list:
        default = self.similarity.get("default")
        rules = []
        for col in schema:
            spec = self.similarity.get(col.name, default)
            if spec is None and col.kind != "numeric":
                rules.append(Identity())
            elif spec is None:
                rules.append(Identity())
            else:
                rules.append(rule_from_json(spec))
        return rules

    def parsed_model(self):
        if self.model is None:
            return None
        return model_from_json(self.model)

    def predictions_path(self) -> str | None:
        if self.model is not None and self.model.get("kind") == "predictions":
            return self.model["path"]
        return None

    def validate(self, command: str) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; one of {METHODS}")
        if self.engine not in ("exact", "mc"):
            raise ConfigError(f"unknown engine {self.engine!r}; exact or mc")
        if self.engine == "mc" and self.permutations < 2:
            raise ConfigError("mc engine needs at least 2 permutations")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if command == "cube":
            if self.cube_values is None:
                raise ConfigError("cube command needs cube_values")
            return
        if self.data is None:
            raise ConfigError("no data file configured")
        if self.schema is None:
            raise ConfigError("no schema configured")
        d = len(self.parsed_schema())
        if self.engine == "exact" and d > EXACT_CAP:
            raise ConfigError(
                f"exact engine capped at d={EXACT_CAP}, got d={d}; use engine=mc"
            )
        needs_model = self.method in MODEL_METHODS or (
            command == "audit" and self.model is not None
        )
        if self.method in MODEL_METHODS:
            if self.model is None or self.model.get("kind") == "predictions":
                raise ConfigError(f"method {self.method!r} needs a predicting model")
        has_predictions = (
            self.prediction_column is not None
            or self.model is not None
        )
        if self.method in ("cs", "cs2", "var") and not has_predictions:
            raise ConfigError(
                f"method {self.method!r} needs predictions: a prediction_column, "
                "a predictions file, or a model to evaluate"
            )
        if needs_model and self.model is not None and self.model.get("kind") != "predictions":
            model_from_json(self.model)  # raise early on malformed spec
        self.parsed_targets()
