"""Format, length, and API-content checks over generation records, plus
pass-rate curves across content thresholds.

A record is accepted iff all three checks pass. The content check counts
how many of the prompt's required APIs the solution actually calls and
compares that count against N*T; `at_least` (>=) is the default because a
strict > makes T=1.0 unsatisfiable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import tokenize
from .extractor import extract_api_usages, syntax_check
from .genclient import STATUS_OK, GenerationRecord

DEFAULT_THRESHOLDS = (0.2, 0.4, 0.6, 0.8, 1.0)
COMPARISON_AT_LEAST = "at_least"
COMPARISON_STRICT = "strict_greater"
_EPS = 1e-9  # guards N*T float noise so 3 >= 5*0.6 holds


@dataclass
class ValidatorConfig:
    min_tokens: int = 32
    max_tokens: int = 4096
    threshold_t: float = 0.6
    comparison: str = COMPARISON_AT_LEAST
    joint_length: bool = True  # bound problem+solution jointly, not separately

    def __post_init__(self) -> None:
        if not 0 < self.threshold_t <= 1:
            raise ValueError(f"threshold_t must be in (0, 1], got {self.threshold_t}")
        if self.min_tokens >= self.max_tokens:
            raise ValueError("min_tokens must be below max_tokens")
        if self.comparison not in (COMPARISON_AT_LEAST, COMPARISON_STRICT):
            raise ValueError(f"unknown comparison {self.comparison!r}")


@dataclass
class RecordReport:
    id: str
    checks: dict[str, bool]
    detected_apis: list[str]
    accepted: bool


@dataclass
class ValidationReport:
    per_record: list[RecordReport]
    pass_rate_by_threshold: dict[float, float] = field(default_factory=dict)

    def accepted_count(self) -> int:
        return sum(1 for r in self.per_record if r.accepted)


@dataclass
class _Evaluated:
    """Threshold-independent facts about one record."""

    fmt: bool
    length: bool
    code_parses: bool
    detected: list[str]
    n_required: int

    def content_at(self, threshold: float, comparison: str) -> bool:
        if not self.code_parses:
            return False
        bar = self.n_required * threshold
        if comparison == COMPARISON_STRICT:
            return len(self.detected) > bar + _EPS
        return len(self.detected) >= bar - _EPS


def _evaluate(record: GenerationRecord, required: list[str], config: ValidatorConfig) -> _Evaluated:
    fmt = record.status == STATUS_OK and bool(record.problem) and bool(record.solution_code)

    problem_tokens = len(tokenize(record.problem))
    solution_tokens = len(tokenize(record.solution_code))
    if config.joint_length:
        total = problem_tokens + solution_tokens
        length = config.min_tokens <= total <= config.max_tokens
    else:
        length = (
            config.min_tokens <= problem_tokens <= config.max_tokens
            and config.min_tokens <= solution_tokens <= config.max_tokens
        )

    code_parses = bool(record.solution_code) and syntax_check(record.solution_code)
    detected = sorted(extract_api_usages(record.solution_code) & set(required)) if code_parses else []
    return _Evaluated(fmt, length, code_parses, detected, len(required))


def validate(
    records: list[GenerationRecord],
    required_apis_per_record: list[list[str]],
    config: ValidatorConfig | None = None,
) -> ValidationReport:
    """Run all checks per record plus the pass-rate curve over the default
    thresholds. Failures are data, never exceptions."""
    config = config or ValidatorConfig()
    if len(records) != len(required_apis_per_record):
        raise ValueError("records and required API lists must align by position")
    evaluated = [
        _evaluate(record, required, config)
        for record, required in zip(records, required_apis_per_record)
    ]
    per_record = []
    for record, ev in zip(records, evaluated):
        checks = {
            "format": ev.fmt,
            "length": ev.length,
            "content": ev.content_at(config.threshold_t, config.comparison),
        }
        per_record.append(
            RecordReport(
                id=record.prompt_ref,
                checks=checks,
                detected_apis=ev.detected,
                accepted=all(checks.values()),
            )
        )

    curve = {}
    if records:
        for threshold in DEFAULT_THRESHOLDS:
            accepted = sum(
                1
                for ev in evaluated
                if ev.fmt and ev.length and ev.content_at(threshold, config.comparison)
            )
            curve[threshold] = accepted / len(records)
    return ValidationReport(per_record=per_record, pass_rate_by_threshold=curve)


def pass_rate_curve(
    records: list[GenerationRecord],
    required_apis_per_record: list[list[str]],
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS,
    config: ValidatorConfig | None = None,
) -> dict[float, float]:
    """Fraction of records accepted at each threshold, format and length
    checks held fixed. Empty input gives an empty map."""
    if not records:
        return {}
    if list(thresholds) != sorted(thresholds):
        raise ValueError("thresholds must be ascending")
    config = config or ValidatorConfig()
    evaluated = [
        _evaluate(record, required, config)
        for record, required in zip(records, required_apis_per_record)
    ]
    curve = {}
    for threshold in thresholds:
        accepted = sum(
            1
            for ev in evaluated
            if ev.fmt and ev.length and ev.content_at(threshold, config.comparison)
        )
        curve[threshold] = accepted / len(records)
    return curve


def report_to_dict(report: ValidationReport) -> dict:
    return {
        "per_record": [
            {
                "id": r.id,
                "checks": r.checks,
                "detected_apis": r.detected_apis,
                "accepted": r.accepted,
            }
            for r in report.per_record
        ],
        "pass_rate_by_threshold": {str(k): v for k, v in report.pass_rate_by_threshold.items()},
    }


def export_accepted(
    report: ValidationReport,
    records: list[GenerationRecord],
    path: str | Path,
) -> int:
    """Write accepted pairs as SFT-ready corpus JSONL; returns the count."""
    count = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec_report, record in zip(report.per_record, records):
            if not rec_report.accepted:
                continue
            fh.write(
                json.dumps(
                    {
                        "id": record.prompt_ref,
                        "instruction": record.problem,
                        "code": record.solution_code,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
            count += 1
    return count
