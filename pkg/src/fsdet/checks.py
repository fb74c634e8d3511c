"""Published worked examples, compared at their printed precision."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .determinacy import (
    benchmark_loading,
    compensation,
    determinacy_closed,
    determinacy_with_group,
)


@dataclass(frozen=True)
class Comparison:
    quantity: str
    computed: float
    expected: float
    decimals: int

    @property
    def passed(self) -> bool:
        return round(self.computed, self.decimals) == round(self.expected, self.decimals)


@dataclass(frozen=True)
class CheckResult:
    name: str
    description: str
    comparisons: tuple[Comparison, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "passed": self.passed,
            "comparisons": [
                {**c.__dict__, "passed": c.passed} for c in self.comparisons
            ],
        }


def _benchmark(target: float, printed: float):
    worst = max(
        range(1, 31),
        key=lambda p: abs(
            determinacy_closed(p, math.sqrt(benchmark_loading(p, target))).rho_sq - target
        ),
    )
    rho_sq = determinacy_closed(worst, math.sqrt(benchmark_loading(worst, target))).rho_sq
    return (Comparison(f"rho_sq (worst p={worst})", rho_sq, printed, 2),)


def _compensation_example(expected):
    plan = compensation(5, 0.60, 0.81)
    return (
        Comparison("k", plan.k, expected["k"], 2),
        Comparison("p_plus_exact", plan.p_plus_exact, expected["p_plus_exact"], 1),
        Comparison("p_plus_rounded", plan.p_plus_rounded, expected["p_plus_rounded"], 0),
    )


#: name -> (description, printed values)
EXPECTED = {
    "benchmark_50": ("lambda^2 = 1/(p+1) gives rho^2 = .50, p = 1..30", {"rho_sq": 0.50}),
    "benchmark_80": ("lambda^2 = 4/(p+4) gives rho^2 = .80, p = 1..30", {"rho_sq": 0.80}),
    "moderate_d": ("p=10, lambda=.60, d=.50 gives rho^2 = .88", {"rho_sq": 0.88}),
    "no_group_difference": ("p=10, lambda=.60, d=0 gives rho^2 = .85", {"rho_sq": 0.85}),
    "compensation": (
        "p=5, lambda=.60, d=.81 gives k = 1.78, p+ = 3.9, 4 items",
        {"k": 1.78, "p_plus_exact": 3.9, "p_plus_rounded": 4},
    ),
}


def run_checks(perturb: dict[str, float] | None = None) -> list[CheckResult]:
    """Evaluate every worked example.

    ``perturb`` maps ``"check"`` or ``"check.quantity"`` to an offset added to
    the expected value, used to confirm a wrong expectation is caught.
    """
    perturb = dict(perturb or {})
    unknown = {k.split(".")[0] for k in perturb} - set(EXPECTED)
    if unknown:
        raise KeyError(f"unknown check(s): {sorted(unknown)}")

    def expected(name):
        values = dict(EXPECTED[name][1])
        for key in values:
            values[key] += perturb.get(name, 0.0) + perturb.get(f"{name}.{key}", 0.0)
        return values

    comparisons = {
        "benchmark_50": _benchmark(0.50, expected("benchmark_50")["rho_sq"]),
        "benchmark_80": _benchmark(0.80, expected("benchmark_80")["rho_sq"]),
        "moderate_d": (
            Comparison("rho_sq", determinacy_with_group(10, 0.60, 0.50).rho_sq,
                       expected("moderate_d")["rho_sq"], 2),
        ),
        "no_group_difference": (
            Comparison("rho_sq", determinacy_closed(10, 0.60).rho_sq,
                       expected("no_group_difference")["rho_sq"], 2),
        ),
        "compensation": _compensation_example(expected("compensation")),
    }
    return [
        CheckResult(name, EXPECTED[name][0], comparisons[name]) for name in EXPECTED
    ]
