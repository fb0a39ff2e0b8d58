"""Enforcement-overhead benchmark: per-action median timings over
repeated scenario executions with and without the proactive modules.

Each repetition uses a fresh world and a fresh enforcer so no state
carries over; timing covers scenario execution only, never report
serialization.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Iterable, Optional

from .dsl import PolicyDoc
from .enforcer import PolicyEnforcer
from .sim import ScenarioScript, run_scenario

DEFAULT_REPETITIONS = 50
DEFAULT_ACTION_WORK_S = 0.001


def overhead_percent(median_with_ms: float, median_without_ms: float) -> float:
    """100 * (with - without) / without, rounded to two decimals."""
    return round(100.0 * (median_with_ms - median_without_ms)
                 / median_without_ms, 2)


@dataclass(frozen=True)
class ActionTiming:
    index: int
    label: str
    median_with_ms: float
    median_without_ms: float
    overhead_percent: float
    interventions: int


@dataclass(frozen=True)
class BenchResult:
    actions: tuple[ActionTiming, ...]
    repetitions: int

    def highest_overhead(self) -> Optional[ActionTiming]:
        if not self.actions:
            return None
        return max(self.actions, key=lambda a: a.overhead_percent)


def _fresh_enforcer(policies: Iterable[PolicyDoc]) -> PolicyEnforcer:
    enforcer = PolicyEnforcer()
    for policy in policies:
        enforcer.deploy(policy)
    return enforcer


def run_benchmark(script: ScenarioScript, policies: list[PolicyDoc],
                  repetitions: int = DEFAULT_REPETITIONS,
                  action_work_s: float = DEFAULT_ACTION_WORK_S) -> BenchResult:
    """Median per-action execution time with and without enforcement."""
    if repetitions < 3:
        raise ValueError("benchmark needs at least 3 repetitions")

    # One instrumented pass to attribute interventions to actions.
    probe = run_scenario(script, _fresh_enforcer(policies))
    per_action_interventions = probe.interventions_per_step()

    with_times: list[list[float]] = [[] for _ in script.steps]
    without_times: list[list[float]] = [[] for _ in script.steps]
    for _ in range(repetitions):
        enforced = run_scenario(script, _fresh_enforcer(policies),
                                action_work_s=action_work_s)
        for i, t in enumerate(enforced.step_times):
            with_times[i].append(t)
        plain = run_scenario(script, None, action_work_s=action_work_s)
        for i, t in enumerate(plain.step_times):
            without_times[i].append(t)

    actions = []
    for i, step in enumerate(script.steps):
        median_with = statistics.median(with_times[i]) * 1000.0
        median_without = statistics.median(without_times[i]) * 1000.0
        actions.append(ActionTiming(
            index=i, label=step.label(),
            median_with_ms=median_with,
            median_without_ms=median_without,
            overhead_percent=overhead_percent(median_with, median_without),
            interventions=per_action_interventions[i]))
    return BenchResult(actions=tuple(actions), repetitions=repetitions)
