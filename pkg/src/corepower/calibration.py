"""Parameter decision: architecture from the user, technology from library
characterization, implementation by finite-difference gradient descent.

Decisions run in that order; technology factors are frozen before any
implementation-level parameter is fitted, and every component's
implementation parameters are fitted independently against its own labels.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .dataio import TrainingSample
from .hardware import COMPONENTS, ComponentId
from .model import ArrayGeometry, array_op_energy, estimate_component_batch
from .params import (
    REGISTRY, Level, ParameterSet, Provenance, ValueType, clamp, clamp_value,
    component_parameters, default_parameter_set, names_at,
)
from .reference import base_estimate_core
from .tech import REFERENCE_FREQUENCY, SURROGATE_40NM, TechCharacterization, TechProfile

log = logging.getLogger(__name__)


class CalibrationDivergence(RuntimeError):
    """Loss grew beyond the divergence guard during gradient descent."""


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationConfig:
    learning_rate: float = 1e-3
    delta: float | Mapping[str, float] | None = None
    max_iterations: int = 500
    early_stop_patience: int = 20
    early_stop_rel_tol: float = 1e-6
    rng_seed: int = 0
    # Bold-driver step control: grow lr after an improving step, halve and
    # reject on a worsening one. Off gives the plain fixed-lr update.
    adaptive_lr: bool = True
    lr_growth: float = 1.2
    divergence_factor: float = 1e6
    polish_floats: bool = True

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.max_iterations < 1 or self.early_stop_patience < 1:
            raise ValueError("max_iterations and early_stop_patience must be >= 1")
        if not self.early_stop_rel_tol > 0:
            raise ValueError("early_stop_rel_tol must be > 0")
        deltas = self.delta.items() if isinstance(self.delta, Mapping) else (
            [] if self.delta is None else [(n, self.delta) for n in names_at(Level.IMPLEMENTATION)])
        for name, d in deltas:
            if not d > 0:
                raise ValueError(f"delta for {name} must be > 0")
            if not d < REGISTRY[name].width:
                raise ValueError(f"delta for {name} must be smaller than its range width")

    def delta_for(self, name: str) -> float:
        if isinstance(self.delta, Mapping) and name in self.delta:
            return float(self.delta[name])
        if isinstance(self.delta, (int, float)):
            return float(self.delta)
        return default_delta(name)


# Secants of linear parameters are exact for any step, and a long step keeps
# float cancellation out of the slope; nonlinear ones need a short step.
LINEAR_DELTA_FRACTION = 0.25


def default_delta(name: str) -> float:
    s = REGISTRY[name]
    if s.linear:
        return LINEAR_DELTA_FRACTION * s.width
    return max(1e-3 * s.width, 1e-6)


# ---------------------------------------------------------------------------
# Technology level


def _probe(char: TechCharacterization) -> ArrayGeometry:
    return ArrayGeometry(rows=char.sram_rows, width=char.sram_width)


def decide_tech_array_factor(char: TechCharacterization, tech: TechProfile) -> float:
    """Mean of measured/model read and write energy ratios of the probe SRAM."""
    probe = _probe(char)
    model_read = array_op_energy(probe, "read", tech, 1.0)
    model_write = array_op_energy(probe, "write", tech, 1.0)
    if model_read == 0 or model_write == 0:
        raise CalibrationError("model probe energy is zero")
    factor = (char.sram_read_energy / model_read + char.sram_write_energy / model_write) / 2
    if not factor > 0:
        raise CalibrationError("tech array factor must be positive")
    return factor


def decide_tech_logic_factor(char: TechCharacterization, tech: TechProfile) -> float:
    """Measured worst-case DFF power over the model's, both at the model reference frequency."""
    if char.dff_reference_freq is None:
        raise CalibrationError(
            f"{char.node_name}: DFF power has no reference frequency; cannot normalize")
    measured = char.dff_worst_case_power * (REFERENCE_FREQUENCY / char.dff_reference_freq)
    factor = measured / tech.dff_clock_toggle_power
    if not factor > 0:
        raise CalibrationError("tech logic factor must be positive")
    return factor


def decide_tech_parameters(char: TechCharacterization, tech: TechProfile) -> dict[str, float]:
    return {
        "tech_logic_factor": decide_tech_logic_factor(char, tech),
        "tech_array_factor": decide_tech_array_factor(char, tech),
    }


# ---------------------------------------------------------------------------
# Implementation level


def finite_diff_gradient(predict: Callable[[ParameterSet], Any], pset: ParameterSet,
                         param_name: str, delta: float, base=None):
    """Secant slope of ``predict`` in one parameter.

    Steps forward by ``delta``; steps backward when the forward point would
    leave the parameter range. ``predict`` may return a scalar or an array.
    ``base`` reuses an already computed ``predict(pset)``.
    """
    if delta == 0:
        raise ValueError("delta must be non-zero")
    s = REGISTRY[param_name]
    if not s.is_numeric:
        raise ValueError(f"{param_name} is not numeric")
    p = pset[param_name]
    step = abs(delta)
    if p + step > s.high:
        step = -step
    f0 = predict(pset) if base is None else base
    f1 = predict(pset.with_values({param_name: p + step}))
    return (f1 - f0) / step


@dataclass
class ComponentFit:
    component: ComponentId
    values: dict[str, Any]
    initial_loss: float
    final_loss: float
    iterations: int
    history: list[float] = field(default_factory=list)


def _group_samples(samples: Sequence[TrainingSample]):
    hws = [s.hw for s in samples]
    events = [s.events for s in samples]
    return hws, events


class _ComponentProblem:
    """Loss and gradients of one component's labels over a fixed sample set."""

    def __init__(self, cid: ComponentId, samples: Sequence[TrainingSample],
                 params: ParameterSet, tech: TechProfile, config: CalibrationConfig):
        self.cid = cid
        self.base = params
        self.tech = tech
        self.config = config
        self.names = component_parameters(cid.value)
        self.hws, self.events = _group_samples(samples)
        self.labels_mw = np.array([s.component_labels[cid] for s in samples]) * 1e3
        self.linear = [n for n in self.names if REGISTRY[n].linear]
        self.nonlinear = [n for n in self.names if not REGISTRY[n].linear]
        self._slope_cache: dict[tuple, np.ndarray] = {}
        self.evaluations = 0

    def pset(self, values: Mapping[str, float]) -> ParameterSet:
        return self.base.with_values(values)

    def predict(self, pset: ParameterSet) -> np.ndarray:
        self.evaluations += 1
        dyn, leak = estimate_component_batch(self.cid, self.hws, self.events, pset, self.tech)
        return dyn + leak

    def loss(self, pred_w: np.ndarray) -> float:
        err = pred_w * 1e3 - self.labels_mw
        return float(np.mean(err * err))

    def gradient(self, values: dict[str, float], pred_w: np.ndarray,
                 active: Sequence[str]) -> dict[str, float]:
        pset = self.pset(values)
        resid_mw = pred_w * 1e3 - self.labels_mw
        key = tuple(values[n] for n in self.nonlinear)
        grads = {}
        for name in active:
            if name in self.linear:
                # slope of a linear parameter depends only on the nonlinear state
                slope = self._slope_cache.get((name,) + key)
                if slope is None:
                    slope = finite_diff_gradient(self.predict, pset, name,
                                                 self.config.delta_for(name), base=pred_w)
                    self._slope_cache[(name,) + key] = slope
            else:
                slope = finite_diff_gradient(self.predict, pset, name,
                                             self.config.delta_for(name), base=pred_w)
            grads[name] = float(np.mean(2.0 * resid_mw * (slope * 1e3)))
        return grads


def _descend(problem: _ComponentProblem, values: dict[str, float], active: Sequence[str],
             config: CalibrationConfig, initial_loss: float, history: list[float]):
    """Gradient descent over ``active`` parameters; returns (best values, best loss, iters)."""
    pred = problem.predict(problem.pset(values))
    loss = problem.loss(pred)
    best_values, best_loss = dict(values), loss
    lr = config.learning_rate
    stall = 0
    it = 0
    widths = {n: REGISTRY[n].width for n in active}
    guard = config.divergence_factor * max(initial_loss, 1e-300)
    for it in range(1, config.max_iterations + 1):
        if loss == 0.0:
            break
        grads = problem.gradient(values, pred, active)
        trial = dict(values)
        for name in active:
            step = lr * widths[name] ** 2 * grads[name]
            trial[name] = clamp_value(REGISTRY[name], float(values[name]) - step)
        if trial == values:
            stall += 1
            if config.adaptive_lr:
                lr *= 0.5
            if stall >= config.early_stop_patience:
                break
            continue
        trial_pred = problem.predict(problem.pset(trial))
        trial_loss = problem.loss(trial_pred)
        if not np.isfinite(trial_loss):
            trial_loss = float("inf")
        if config.adaptive_lr and trial_loss > loss:
            lr *= 0.5
            improvement = 0.0
        else:
            improvement = (loss - trial_loss) / loss if loss > 0 else 0.0
            values, pred, loss = trial, trial_pred, trial_loss
            if config.adaptive_lr:
                lr *= config.lr_growth
        history.append(loss)
        if loss > guard:
            raise CalibrationDivergence(
                f"{problem.cid.value}: loss {loss:.3g} mW^2 exceeds {config.divergence_factor:g}x "
                f"the initial loss {initial_loss:.3g} at iteration {it}; lower the learning rate")
        if loss < best_loss:
            best_values, best_loss = dict(values), loss
        stall = stall + 1 if improvement < config.early_stop_rel_tol else 0
        if stall >= config.early_stop_patience:
            break
    return best_values, best_loss, it


def _integer_repair(problem: _ComponentProblem, values: dict[str, float]):
    ints = [n for n in problem.names if REGISTRY[n].value_type is ValueType.INT]
    current = dict(values)
    for n in ints:
        current[n] = int(clamp_value(REGISTRY[n], int(round(current[n]))))
    loss = problem.loss(problem.predict(problem.pset(current)))
    improved = True
    while improved and ints:
        improved = False
        for n in ints:
            for cand in (current[n] - 1, current[n] + 1):
                if not REGISTRY[n].contains(cand):
                    continue
                trial = dict(current)
                trial[n] = cand
                trial_loss = problem.loss(problem.predict(problem.pset(trial)))
                if trial_loss < loss:
                    current, loss, improved = trial, trial_loss, True
    return current, loss


def calibrate_component(component_id, samples: Sequence[TrainingSample],
                        config: CalibrationConfig | None = None,
                        params: ParameterSet | None = None,
                        tech: TechProfile = SURROGATE_40NM,
                        start: Mapping[str, Any] | None = None) -> ComponentFit:
    """Fit one component's implementation-level parameters to its labels.

    ``params`` carries the already decided architecture and technology values;
    its implementation values (or ``start``) are the descent starting point.
    """
    config = config or CalibrationConfig()
    cid = ComponentId(component_id)
    if not samples:
        raise CalibrationError("no training samples")
    for s in samples:
        if not s.component_labels.get(cid, 0) > 0:
            raise CalibrationError(f"{s.config_id}/{s.workload}: label for {cid.value} must be > 0")
    params = params or default_parameter_set()
    problem = _ComponentProblem(cid, samples, params, tech, config)
    names = problem.names
    values = {n: params[n] for n in names}
    if start:
        values.update({n: start[n] for n in names if n in start})
    values = {n: clamp_value(REGISTRY[n], v) for n, v in values.items()}
    init_values = dict(values)
    initial_loss = problem.loss(problem.predict(problem.pset(values)))
    history = [initial_loss]

    best, best_loss, iters = _descend(problem, {n: float(v) if REGISTRY[n].value_type is
                                                ValueType.FLOAT else v for n, v in values.items()},
                                      names, config, initial_loss, history)
    final, final_loss = _integer_repair(problem, best)
    floats = [n for n in names if REGISTRY[n].value_type is ValueType.FLOAT]
    has_ints = len(floats) < len(names)
    if config.polish_floats and has_ints and floats and final_loss > 0:
        # re-fit continuous parameters around the rounded integers
        polished, polished_loss, more = _descend(problem, final, floats, config, initial_loss,
                                                 history)
        iters += more
        if polished_loss < final_loss:
            final, final_loss = polished, polished_loss
    if final_loss > initial_loss:
        final, final_loss = init_values, initial_loss
    final = {n: (int(v) if REGISTRY[n].value_type is ValueType.INT else float(v))
             for n, v in final.items()}
    log.debug("%s: loss %.4g -> %.4g mW^2 in %d iterations (%d model evaluations)",
              cid.value, initial_loss, final_loss, iters, problem.evaluations)
    return ComponentFit(cid, final, initial_loss, final_loss, iters, history)


def _resolve_arch(samples: Sequence[TrainingSample], arch_params: Mapping[str, Any] | None):
    arch_names = names_at(Level.ARCHITECTURE)
    if arch_params is not None:
        defaults = default_parameter_set()
        return {n: arch_params.get(n, defaults[n]) for n in arch_names}
    first = {n: samples[0].arch_params[n] for n in arch_names}
    for s in samples[1:]:
        if any(s.arch_params[n] != first[n] for n in arch_names):
            raise CalibrationError("training samples disagree on architecture-level parameters")
    return first


def calibrate_all(samples: Sequence[TrainingSample],
                  arch_params: Mapping[str, Any] | None = None,
                  tech_char: TechCharacterization | None = None,
                  config: CalibrationConfig | None = None,
                  tech: TechProfile = SURROGATE_40NM,
                  levels: Sequence[Level] = tuple(Level),
                  fits: dict[ComponentId, ComponentFit] | None = None) -> ParameterSet:
    """Decide parameters in the order architecture, technology, implementation.

    Levels missing from ``levels`` stay at their defaults; this builds the
    ablation variants. Per-component fits are stored into ``fits`` if given.
    """
    if not samples:
        raise CalibrationError("no training samples")
    config = config or CalibrationConfig()
    pset = default_parameter_set()
    if Level.ARCHITECTURE in levels:
        pset = pset.with_values(_resolve_arch(samples, arch_params)).with_provenance(
            Level.ARCHITECTURE, Provenance.USER)
    if Level.TECHNOLOGY in levels and tech_char is not None:
        pset = pset.with_values(decide_tech_parameters(tech_char, tech)).with_provenance(
            Level.TECHNOLOGY, Provenance.CALIBRATED)
    if Level.IMPLEMENTATION in levels:
        decided = {}
        for cid in COMPONENTS:
            fit = calibrate_component(cid, samples, config, pset, tech)
            decided.update(fit.values)
            if fits is not None:
                fits[cid] = fit
        pset = pset.with_values(decided).with_provenance(Level.IMPLEMENTATION,
                                                          Provenance.CALIBRATED)
    return clamp(pset)


# ---------------------------------------------------------------------------
# Uniform-scaling baseline


def fit_scaling_baseline(samples: Sequence[TrainingSample],
                         tech: TechProfile = SURROGATE_40NM) -> float:
    """Mean ratio of measured total power to the uncalibrated model's total."""
    if not samples:
        raise CalibrationError("no training samples")
    ratios = []
    for s in samples:
        pred = base_estimate_core(s.hw, s.events, tech).total_power
        if not pred > 0:
            raise CalibrationError(f"{s.config_id}/{s.workload}: base prediction is not positive")
        ratios.append(s.total_label / pred)
    return float(np.mean(ratios))
