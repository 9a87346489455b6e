"""Accuracy metrics, training scenarios, ablations and cross-node transfer."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

from .calibration import (
    CalibrationConfig, calibrate_all, decide_tech_parameters, fit_scaling_baseline,
)
from .dataio import FAMILIES, TrainingSample, family_of, write_text_atomic
from .hardware import COMPONENTS, ComponentId
from .model import estimate_core
from .params import Level, ParameterSet, Provenance, clamp
from .reference import base_estimate_core
from .tech import SURROGATE_40NM, TechCharacterization, TechProfile


def mape(predictions: Sequence[float], labels: Sequence[float]) -> float:
    """Mean absolute percentage error in percent."""
    p = np.asarray(predictions, dtype=float)
    y = np.asarray(labels, dtype=float)
    if p.shape != y.shape or p.ndim != 1:
        raise ValueError(f"length mismatch: {p.shape} predictions vs {y.shape} labels")
    if p.size == 0:
        raise ValueError("mape needs at least one point")
    if not np.all(y > 0):
        raise ValueError("labels must be > 0")
    return float(np.mean(100.0 * np.abs(p - y) / y))


def pearson_r(predictions: Sequence[float], labels: Sequence[float]) -> float:
    p = np.asarray(predictions, dtype=float)
    y = np.asarray(labels, dtype=float)
    if p.shape != y.shape or p.ndim != 1:
        raise ValueError(f"length mismatch: {p.shape} predictions vs {y.shape} labels")
    if p.size < 2:
        raise ValueError("pearson_r needs at least two points")
    dp = p - p.mean()
    dy = y - y.mean()
    sp = math.fsum(dp * dp)
    sy = math.fsum(dy * dy)
    if sp == 0 or sy == 0:
        raise ValueError("pearson_r is undefined for a constant vector")
    r = math.fsum(dp * dy) / math.sqrt(sp * sy)
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class Metrics:
    mape: float
    pearson_r: float
    n_points: int

    @classmethod
    def of(cls, predictions, labels) -> "Metrics":
        r = pearson_r(predictions, labels) if len(labels) >= 2 else float("nan")
        return cls(mape(predictions, labels), r, len(labels))


class ScenarioKind(str, Enum):
    BALANCE = "Balance"
    SMALL = "Small"
    LARGE = "Large"

    @classmethod
    def parse(cls, text: str) -> "ScenarioKind":
        for k in cls:
            if text.strip().lower() == k.value.lower():
                return k
        raise ValueError(f"unknown scenario {text!r}; expected balance, small or large")


@dataclass(frozen=True)
class Scenario:
    family: str
    kind: ScenarioKind
    train_config_ids: tuple[str, ...]
    test_config_ids: tuple[str, ...]

    def __post_init__(self):
        if set(self.train_config_ids) & set(self.test_config_ids):
            raise ValueError("train and test configurations overlap")


def split_scenario(family: str, kind) -> Scenario:
    """Three training configurations; the rest of the family is the test split.

    Families are listed smallest to largest, so Small and Large take the ends
    and Balance takes both ends plus the middle.
    """
    fam = family_of(family)
    kind = kind if isinstance(kind, ScenarioKind) else ScenarioKind.parse(kind)
    train, test = split_config_ids(FAMILIES[fam], kind)
    return Scenario(fam, kind, train, test)


def split_config_ids(ids: Sequence[str], kind: ScenarioKind) -> tuple[tuple[str, ...], ...]:
    """(train, test) over an ordered list of at least four distinct ids."""
    ids = tuple(ids)
    if len(set(ids)) != len(ids) or len(ids) < 4:
        raise ValueError("need at least four distinct configuration ids")
    if kind is ScenarioKind.BALANCE:
        train = (ids[0], ids[len(ids) // 2], ids[-1])
    elif kind is ScenarioKind.SMALL:
        train = ids[:3]
    else:
        train = ids[-3:]
    return train, tuple(i for i in ids if i not in train)


class Variant(str, Enum):
    FULL = "full"
    WO_ARCH = "wo-arch"
    WO_IMPL = "wo-impl"
    WO_TECH = "wo-tech"

    @classmethod
    def parse(cls, text: str) -> "Variant":
        key = text.strip().lower().replace("w/o", "wo")
        for v in cls:
            if key == v.value:
                return v
        raise ValueError(f"unknown variant {text!r}; expected full, wo-arch, wo-impl or wo-tech")

    @property
    def levels(self) -> tuple[Level, ...]:
        dropped = {Variant.WO_ARCH: Level.ARCHITECTURE, Variant.WO_IMPL: Level.IMPLEMENTATION,
                   Variant.WO_TECH: Level.TECHNOLOGY}.get(self)
        return tuple(lvl for lvl in Level if lvl is not dropped)


@dataclass(frozen=True)
class PointPrediction:
    config_id: str
    workload: str
    prediction_w: float
    label_w: float


@dataclass(frozen=True)
class EvaluationResult:
    family: str
    scenario: ScenarioKind
    variant: str
    method: str
    metrics: Metrics
    points: tuple[PointPrediction, ...]
    params: ParameterSet | None = None
    scale: float | None = None


def split_samples(scenario: Scenario, samples: Sequence[TrainingSample]):
    train = [s for s in samples if s.config_id in scenario.train_config_ids]
    test = [s for s in samples if s.config_id in scenario.test_config_ids]
    missing = set(scenario.train_config_ids) - {s.config_id for s in train}
    if missing:
        raise ValueError(f"no samples for training configurations {sorted(missing)}")
    if not test:
        raise ValueError("no samples in the test split")
    return train, test


def predict_totals(params: ParameterSet, samples: Sequence[TrainingSample],
                   tech: TechProfile = SURROGATE_40NM, use_sample_arch: bool = True) -> np.ndarray:
    """Total power per sample; each design's own architecture values win if requested."""
    out = np.empty(len(samples))
    for i, s in enumerate(samples):
        p = params.with_values(s.arch_params) if use_sample_arch and s.arch_params else params
        out[i] = estimate_core(s.hw, s.events, p, tech).total_power
    return out


def component_metrics(params: ParameterSet, samples: Sequence[TrainingSample],
                      tech: TechProfile = SURROGATE_40NM) -> dict[ComponentId, Metrics]:
    preds = {c: [] for c in COMPONENTS}
    for s in samples:
        p = params.with_values(s.arch_params) if s.arch_params else params
        for comp in estimate_core(s.hw, s.events, p, tech).components:
            preds[comp.component_id].append(comp.total)
    return {c: Metrics.of(preds[c], [s.component_labels[c] for s in samples]) for c in COMPONENTS}


def _points(samples, preds) -> tuple[PointPrediction, ...]:
    return tuple(PointPrediction(s.config_id, s.workload, float(p), s.total_label)
                 for s, p in zip(samples, preds))


def evaluate_variant(variant, scenario: Scenario, samples: Sequence[TrainingSample],
                     config: CalibrationConfig | None = None,
                     tech_char: TechCharacterization | None = None,
                     tech: TechProfile = SURROGATE_40NM,
                     arch_params: Mapping[str, Any] | None = None) -> EvaluationResult:
    """Calibrate with one level pinned to defaults (or none) and score the test split."""
    variant = variant if isinstance(variant, Variant) else Variant.parse(variant)
    train, test = split_samples(scenario, samples)
    params = calibrate_all(train, arch_params, tech_char, config, tech, levels=variant.levels)
    preds = predict_totals(params, test, tech,
                           use_sample_arch=Level.ARCHITECTURE in variant.levels)
    labels = [s.total_label for s in test]
    return EvaluationResult(scenario.family, scenario.kind, variant.value, "injected",
                            Metrics.of(preds, labels), _points(test, preds), params=params)


def run_ablation(variant, scenario: Scenario, samples: Sequence[TrainingSample],
                 config: CalibrationConfig | None = None,
                 tech_char: TechCharacterization | None = None,
                 tech: TechProfile = SURROGATE_40NM) -> Metrics:
    return evaluate_variant(variant, scenario, samples, config, tech_char, tech).metrics


def evaluate_baseline(method: str, scenario: Scenario, samples: Sequence[TrainingSample],
                      tech: TechProfile = SURROGATE_40NM) -> EvaluationResult:
    """Uncalibrated analytical model, or the same model times one fitted scale factor."""
    train, test = split_samples(scenario, samples)
    base = np.array([base_estimate_core(s.hw, s.events, tech).total_power for s in test])
    if method == "analytical":
        scale = None
        preds = base
    elif method == "analytical-scaled":
        scale = fit_scaling_baseline(train, tech)
        preds = base * scale
    else:
        raise ValueError(f"unknown baseline {method!r}")
    labels = [s.total_label for s in test]
    return EvaluationResult(scenario.family, scenario.kind, "-", method,
                            Metrics.of(preds, labels), _points(test, preds), scale=scale)


def transfer_tech(calibrated: ParameterSet, target_char: TechCharacterization,
                  tech: TechProfile = SURROGATE_40NM) -> ParameterSet:
    """Re-decide only the two technology factors for a new library."""
    if calibrated.provenance[Level.IMPLEMENTATION] is not Provenance.CALIBRATED:
        raise ValueError("implementation-level parameters are not calibrated; nothing to transfer")
    factors = decide_tech_parameters(target_char, tech)
    return clamp(calibrated.with_values(factors)).with_provenance(
        Level.TECHNOLOGY, Provenance.CALIBRATED)


# ---------------------------------------------------------------------------
# CSV reports

METRICS_COLUMNS = ("family", "scenario", "variant", "method", "mape", "pearson_r", "n_points")
POINTS_COLUMNS = ("config_id", "workload", "prediction_w", "label_w")


def metrics_csv(results: Sequence[EvaluationResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_COLUMNS)
    for r in results:
        w.writerow([r.family, r.scenario.value, r.variant, r.method, repr(r.metrics.mape),
                    repr(r.metrics.pearson_r), r.metrics.n_points])
    return buf.getvalue()


def points_csv(points: Sequence[PointPrediction]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(POINTS_COLUMNS)
    for p in points:
        w.writerow([p.config_id, p.workload, repr(p.prediction_w), repr(p.label_w)])
    return buf.getvalue()


def read_metrics_csv(text: str) -> list[dict[str, Any]]:
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        row["mape"] = float(row["mape"])
        row["pearson_r"] = float(row["pearson_r"])
        row["n_points"] = int(row["n_points"])
        rows.append(row)
    return rows


def write_metrics_csv(path, results: Sequence[EvaluationResult]) -> None:
    write_text_atomic(path, metrics_csv(results))


def write_points_csv(path, points: Sequence[PointPrediction]) -> None:
    write_text_atomic(path, points_csv(points))
