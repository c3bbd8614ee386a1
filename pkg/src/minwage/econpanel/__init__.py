"""Event detection, stacking and fixed-effects estimation for minimum wage events."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import pandas as pd

from .events import Detection, EventRules, detect_events
from .fe import EstimateReport, FitSpec, fit_fe, implied_elasticity
from .io import read_deflator, read_mw_panel, read_outcomes, write_inputs
from .stack import StackedPanel, build_stack
from .synth import SynthConfig, step_effect, synth_panel

__all__ = ["Detection", "EventRules", "detect_events", "EstimateReport", "FitSpec", "fit_fe",
           "implied_elasticity", "read_deflator", "read_mw_panel", "read_outcomes", "write_inputs",
           "StackedPanel", "build_stack", "SynthConfig", "step_effect", "synth_panel",
           "PipelineResult", "run_pipeline"]


@dataclass
class PipelineResult:
    detection: Detection
    stack: StackedPanel
    reports: dict


def run_pipeline(panel: pd.DataFrame, deflator: pd.Series, outcomes: pd.DataFrame,
                 rules: EventRules = EventRules(), specs: dict | None = None,
                 jobs: int = 1) -> PipelineResult:
    """Detect events, stack, and fit every named specification.

    Fits are independent and run on ``jobs`` threads; results are keyed by
    name, so they do not depend on ``jobs``.
    """
    det = detect_events(panel, deflator, rules)
    stack = build_stack(outcomes, det, rules.window)
    specs = specs or {"event_study": FitSpec(kind="event_study"), "did": FitSpec(kind="did")}
    names = list(specs)
    if jobs > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            fits = list(ex.map(lambda n: fit_fe(stack, specs[n]), names))
    else:
        fits = [fit_fe(stack, specs[n]) for n in names]
    return PipelineResult(det, stack, dict(zip(names, fits)))
