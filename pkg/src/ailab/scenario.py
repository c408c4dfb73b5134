"""Scenario file parsing, validation, and serialization.

Every scenario is a JSON document with the envelope
``{"kind": ..., "version": "1", "body": {...}}`` where ``kind`` is one of
``search``, ``deck``, ``grid``, or ``map``. Probabilities are exact rational
strings like ``"2/6"`` and are normalized to lowest terms on parse. Envelope
version "1" also fixes the random-stream algorithm (splitmix64, see
:mod:`ailab.rng`); unknown versions are rejected rather than guessed.

Parsing is pure: the returned document owns an immutable domain object and
round-trips through :func:`serialize_scenario` structurally unchanged.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import hmm, qmaze, rbj, search
from .errors import ScenarioSyntaxError, ValidationError
from .rng import dice_expressible

KINDS = ("search", "deck", "grid", "map")
CURRENT_VERSION = "1"

#: Which session activity each scenario kind feeds.
KIND_FOR_ACTIVITY = {
    "search": "search",
    "rbj": "deck",
    "qmaze": "grid",
    "twospies": "map",
}

_PROBABILITY_RE = re.compile(r"^\s*(\d+)\s*(?:/\s*(\d+)\s*)?$")

_FROM_BODY = {
    "search": search.graph_from_body,
    "deck": rbj.deck_from_body,
    "grid": qmaze.grid_from_body,
    "map": hmm.map_from_body,
}

_TO_BODY = {
    "search": search.graph_to_body,
    "deck": rbj.deck_to_body,
    "grid": qmaze.grid_to_body,
    "map": hmm.map_to_body,
}


@dataclass(frozen=True)
class ScenarioDocument:
    kind: str
    version: str
    spec: object  # StateSpaceGraph | DeckConfig | GridSpec | MapSpec


def parse_probability(text) -> Fraction:
    """Parse a ``"k/d"`` (or bare ``"k"``) probability string to lowest terms."""
    if isinstance(text, Fraction):
        value = text
    else:
        if not isinstance(text, str):
            raise ValidationError(
                f"probabilities must be rational strings like '2/6', got {text!r}"
            )
        m = _PROBABILITY_RE.match(text)
        if not m:
            raise ValidationError(f"malformed probability {text!r}")
        num = int(m.group(1))
        den = int(m.group(2)) if m.group(2) else 1
        if den == 0:
            raise ValidationError(f"probability {text!r} has denominator 0")
        value = Fraction(num, den)
    if not 0 <= value <= 1:
        raise ValidationError(f"probability {text!r} is outside [0, 1]")
    return value


def format_probability(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def require_keys(body: dict, required: set, optional: set = frozenset()) -> None:
    if not isinstance(body, dict):
        raise ValidationError("scenario body must be an object")
    missing = required - set(body)
    if missing:
        raise ValidationError(f"body is missing required keys {sorted(missing)}")
    unknown = set(body) - required - set(optional)
    if unknown:
        raise ValidationError(f"body has unknown keys {sorted(unknown)}")


def body_field(body: dict, key: str, expected: type):
    value = body.get(key)
    if not isinstance(value, expected):
        raise ValidationError(f"body field {key!r} must be a {expected.__name__}")
    return value


def parse_scenario(text: str, kind: str | None = None) -> ScenarioDocument:
    """Parse and fully validate one scenario document.

    ``kind``, when given, must match the envelope. All cross-references are
    resolved and all probability rows are checked during domain construction.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(
            f"malformed JSON: {exc.msg}", line=exc.lineno, column=exc.colno
        ) from exc
    if not isinstance(raw, dict):
        raise ValidationError("scenario must be a JSON object")
    doc_kind = raw.get("kind")
    if doc_kind not in KINDS:
        raise ValidationError(f"unknown scenario kind {doc_kind!r}")
    if kind is not None and doc_kind != kind:
        raise ValidationError(f"expected a {kind!r} scenario, found {doc_kind!r}")
    version = raw.get("version")
    if version != CURRENT_VERSION:
        raise ValidationError(
            f"unsupported scenario version {version!r} (this build reads version "
            f"{CURRENT_VERSION!r})"
        )
    body = raw.get("body")
    if not isinstance(body, dict):
        raise ValidationError("scenario body must be an object")
    spec = _FROM_BODY[doc_kind](body)
    doc = ScenarioDocument(kind=doc_kind, version=version, spec=spec)
    _check_dice_expressible(doc)
    return doc


def serialize_scenario(doc: ScenarioDocument) -> str:
    body = _TO_BODY[doc.kind](doc.spec)
    envelope = {"kind": doc.kind, "version": doc.version, "body": body}
    return json.dumps(envelope, indent=2, sort_keys=True) + "\n"


_SPEC_TYPES = {
    "search": search.StateSpaceGraph,
    "deck": rbj.DeckConfig,
    "grid": qmaze.GridSpec,
    "map": hmm.MapSpec,
}


def document_for(spec: object) -> ScenarioDocument:
    """Wrap a domain object in a current-version envelope."""
    for kind, expected in _SPEC_TYPES.items():
        if isinstance(spec, expected):
            return ScenarioDocument(kind=kind, version=CURRENT_VERSION, spec=spec)
    raise ValidationError(f"no scenario kind for {type(spec).__name__}")


def _distribution_rows(doc: ScenarioDocument):
    if doc.kind == "map":
        spec = doc.spec
        for city, row in spec.transition.items():
            yield f"transition row for {city!r}", row.values()
        for city, row in spec.observation.items():
            yield f"observation row for {city!r}", row.values()
    elif doc.kind == "grid" and doc.spec.slip:
        yield "slip probability", (doc.spec.slip, 1 - doc.spec.slip)


def _check_dice_expressible(doc: ScenarioDocument) -> None:
    from math import lcm

    for label, probabilities in _distribution_rows(doc):
        denominator = lcm(*(p.denominator for p in probabilities))
        if not dice_expressible(denominator):
            raise ValidationError(
                f"{label} needs denominator {denominator}, which no supported die "
                "can express"
            )


def scenario_warnings(doc: ScenarioDocument) -> list[str]:
    """Non-fatal authoring issues, e.g. an inadmissible search heuristic."""
    if doc.kind == "search":
        return search.heuristic_warnings(doc.spec)
    return []


def load_scenario_path(path: str | Path, kind: str | None = None) -> ScenarioDocument:
    return parse_scenario(Path(path).read_text(encoding="utf-8"), kind=kind)


def bundled_scenario_names() -> list[str]:
    root = resources.files("ailab") / "scenarios"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(name: str, kind: str | None = None) -> ScenarioDocument:
    root = resources.files("ailab") / "scenarios"
    for candidate in (name, f"{name}.json"):
        entry = root / candidate
        if entry.is_file():
            return parse_scenario(entry.read_text(encoding="utf-8"), kind=kind)
    raise ValidationError(f"no bundled scenario named {name!r}")


def resolve_scenario(
    ref: str, kind: str | None = None, scenario_dir: str | Path | None = None
) -> ScenarioDocument:
    """Resolve a CLI/service scenario reference: a path if it exists, then a
    file under ``scenario_dir``, then a bundled name."""
    path = Path(ref)
    if path.is_file():
        return load_scenario_path(path, kind=kind)
    if scenario_dir is not None:
        for candidate in (Path(scenario_dir) / ref, Path(scenario_dir) / f"{ref}.json"):
            if candidate.is_file():
                return load_scenario_path(candidate, kind=kind)
    return load_bundled(ref, kind=kind)
