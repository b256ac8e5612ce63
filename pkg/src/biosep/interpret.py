"""Prompt construction and diagnostic-term mapping.

format_prompt renders a FeatureVector into a fixed text template (the
deterministic feature-to-text step); interpret sends that prompt to a
backend and parses the reply back into the closed diagnostic term set.
Two backends exist: a deterministic rule mock that needs no network,
and a remote HTTP endpoint speaking a minimal JSON contract.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass

import requests

from .errors import BackendUnreachableError
from .features import NUMERIC_FIELDS, FeatureVector

TEMPLATE_VERSION = "1"
UNRECOGNIZED = "unrecognized"
TOKEN_ENV_VAR = "BIOSEP_LLM_TOKEN"

DEFAULT_TERMS = (
    "wheezing",
    "airway obstruction",
    "atrial fibrillation",
    "rhythm disorder",
    "normal",
)


@dataclass(frozen=True)
class LabelSet:
    terms: tuple[str, ...] = DEFAULT_TERMS

    def __post_init__(self) -> None:
        terms = tuple(t.lower() for t in self.terms)
        if not terms or any(not t for t in terms):
            raise ValueError("label set must be non-empty strings")
        if len(set(terms)) != len(terms):
            raise ValueError("label set terms must be unique")
        object.__setattr__(self, "terms", terms)


@dataclass(frozen=True)
class Prompt:
    text: str
    feature_snapshot: FeatureVector
    template_version: str = TEMPLATE_VERSION


@dataclass(frozen=True)
class DiagnosticReport:
    source_label: str
    prediction: str
    scores: dict[str, float] | None
    raw_response: str
    backend: str
    template_version: str = TEMPLATE_VERSION

    def __post_init__(self) -> None:
        if self.scores is not None:
            values = list(self.scores.values())
            if any(not 0.0 <= v <= 1.0 for v in values):
                raise ValueError("scores must lie in [0, 1]")
            if sum(values) > 1.0 + 1e-9:
                raise ValueError("scores must sum to at most 1")

    def to_json_dict(self) -> dict:
        return {
            "source": self.source_label,
            "prediction": self.prediction,
            "scores": self.scores,
            "backend": self.backend,
            "prompt_template_version": self.template_version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def _format_value(v: float) -> str:
    # 4 significant digits, trailing zeros kept: 0.374 -> "0.3740"
    return format(float(v), "#.4g")


def format_prompt(f: FeatureVector, labels: LabelSet | None = None) -> Prompt:
    """Render the deterministic feature-to-text prompt."""
    if labels is None:
        labels = LabelSet()
    lines = [
        "You are given acoustic features of one separated source from a",
        "chest recording.",
        f"source={f.source_label}",
    ]
    lines += [
        f"{name}={_format_value(getattr(f, name))}" for name in NUMERIC_FIELDS
    ]
    terms = ", ".join(labels.terms)
    lines.append(f"Answer with exactly one term from this list: {terms}.")
    return Prompt("\n".join(lines) + "\n", f, TEMPLATE_VERSION)


@dataclass(frozen=True)
class MockRuleConfig:
    """Calibration constants for the rule-based mock.

    These are artifact thresholds, not clinical claims; they are chosen
    so the synthetic fixtures land on the intended terms.
    """

    periodic_min_strength: float = 0.25
    irregular_rr_cv: float = 0.15
    mild_rr_cv: float = 0.05
    wheeze_min_burst_rate: float = 0.5
    wheeze_max_dominant_hz: float = 300.0
    obstruction_max_centroid_hz: float = 200.0
    obstruction_min_rms: float = 0.02


def mock_rules(
    f: FeatureVector,
    labels: LabelSet | None = None,
    config: MockRuleConfig | None = None,
) -> tuple[str, dict[str, float] | None]:
    """Ordered diagnostic rules; first match wins.

    Winner gets score 0.8; the remaining 0.2 is spread uniformly over
    the other terms. Scores are omitted when the winning term is not in
    the label set (only possible with a non-default set).
    """
    if labels is None:
        labels = LabelSet()
    if config is None:
        config = MockRuleConfig()
    periodic = f.periodicity_strength >= config.periodic_min_strength
    if periodic and f.rr_cv > config.irregular_rr_cv:
        term = "atrial fibrillation"
    elif periodic and f.rr_cv > config.mild_rr_cv:
        term = "rhythm disorder"
    elif (
        not periodic
        and f.burst_rate_per_s > config.wheeze_min_burst_rate
        and f.dominant_freq_hz < config.wheeze_max_dominant_hz
    ):
        term = "wheezing"
    elif (
        not periodic
        and f.spectral_centroid_hz < config.obstruction_max_centroid_hz
        and f.rms_level >= config.obstruction_min_rms
    ):
        term = "airway obstruction"
    else:
        term = "normal"
    if term not in labels.terms:
        return term, None
    others = [t for t in labels.terms if t != term]
    scores = {term: 0.8}
    for t in others:
        scores[t] = 0.2 / len(others)
    return term, scores


class MockBackend:
    """Deterministic offline backend driven by mock_rules."""

    name = "mock"

    def __init__(
        self,
        labels: LabelSet | None = None,
        rules: MockRuleConfig | None = None,
    ) -> None:
        self.labels = labels if labels is not None else LabelSet()
        self.rules = rules if rules is not None else MockRuleConfig()

    def complete(self, prompt: Prompt) -> tuple[str, dict[str, float] | None]:
        return mock_rules(prompt.feature_snapshot, self.labels, self.rules)


class RemoteBackend:
    """HTTP backend: POST {"prompt", "max_tokens"}, expect {"text"}.

    A bearer token is read from the BIOSEP_LLM_TOKEN environment
    variable when present. Network failures, timeouts, and HTTP error
    statuses raise BackendUnreachable; malformed reply bodies never
    raise (the raw body is kept and matching decides the prediction).
    """

    name = "remote"

    def __init__(
        self, url: str, timeout_s: float = 30.0, max_tokens: int = 64
    ) -> None:
        self.url = url
        self.timeout_s = timeout_s
        self.max_tokens = max_tokens

    def complete(self, prompt: Prompt) -> tuple[str, dict[str, float] | None]:
        headers = {}
        token = os.environ.get(TOKEN_ENV_VAR)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        try:
            resp = requests.post(
                self.url,
                json={"prompt": prompt.text, "max_tokens": self.max_tokens},
                headers=headers,
                timeout=self.timeout_s,
            )
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise BackendUnreachableError(str(exc)) from exc
        try:
            doc = resp.json()
            text = doc["text"]
            if not isinstance(text, str):
                raise TypeError
        except (ValueError, KeyError, TypeError):
            text = resp.text
        return text, None


def match_term(reply: str, labels: LabelSet) -> str:
    """Case-insensitive longest-match lookup of a term in free text."""
    lowered = reply.lower()
    best = UNRECOGNIZED
    best_len = 0
    for term in labels.terms:
        if term in lowered and len(term) > best_len:
            best = term
            best_len = len(term)
    return best


_SCORE_ENTRY = re.compile(r"^\s*(.+?)\s*:\s*([0-9.eE+-]+)\s*$")


def parse_score_list(reply: str, labels: LabelSet) -> dict[str, float] | None:
    """Parse a reply of `term: score` entries, or None if not well-formed.

    Well-formed means: every comma/newline-separated entry is a known
    term with a score in [0, 1], and the scores sum to at most 1.
    """
    entries = [e for e in re.split(r"[,\n]", reply) if e.strip()]
    if not entries:
        return None
    scores: dict[str, float] = {}
    for entry in entries:
        m = _SCORE_ENTRY.match(entry)
        if not m:
            return None
        term = m.group(1).lower()
        if term not in labels.terms or term in scores:
            return None
        try:
            value = float(m.group(2))
        except ValueError:
            return None
        if not 0.0 <= value <= 1.0:
            return None
        scores[term] = value
    if sum(scores.values()) > 1.0 + 1e-9:
        return None
    return scores


def interpret(
    p: Prompt, backend, labels: LabelSet | None = None
) -> DiagnosticReport:
    """Send a prompt to a backend and map its reply into the term set.

    The prediction is always a term from the label set or
    "unrecognized"; reply content can never raise.
    """
    if labels is None:
        labels = LabelSet()
    raw, scores = backend.complete(p)
    if scores is None:
        scores = parse_score_list(raw, labels)
    return DiagnosticReport(
        source_label=p.feature_snapshot.source_label,
        prediction=match_term(raw, labels),
        scores=scores,
        raw_response=raw,
        backend=backend.name,
        template_version=p.template_version,
    )
